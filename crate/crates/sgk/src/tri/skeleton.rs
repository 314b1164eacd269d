//! The identified cell structure of a triangulation: vertex, edge, and
//! triangle classes, with orientation data per member and boundary flags.
//!
//! Class indices are deterministic: classes are numbered by their smallest
//! member in (tet, index) order. Each edge class carries a reference
//! direction, the lo-to-hi direction of its smallest member; `edge_aligned`
//! records whether each member agrees with it. Triangle classes likewise
//! carry a reference orientation from their smallest member.

use super::perm::{edge_index, face_verts, EDGE_VERTS};
use super::{TriError, Triangulation};

/// Union-find where every element carries a parity bit relative to its
/// parent; merging two elements already in one class with a contradictory
/// parity is reported as an error.
struct ParityUf {
    parent: Vec<usize>,
    parity: Vec<u8>,
}

impl ParityUf {
    fn new(n: usize) -> ParityUf {
        ParityUf {
            parent: (0..n).collect(),
            parity: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> (usize, u8) {
        if self.parent[x] == x {
            return (x, 0);
        }
        let (root, p) = self.find(self.parent[x]);
        self.parent[x] = root;
        self.parity[x] ^= p;
        (root, self.parity[x])
    }

    /// Unites a and b with relative parity `rel`; Err on parity conflict.
    fn union(&mut self, a: usize, b: usize, rel: u8) -> Result<(), ()> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            if pa ^ pb != rel {
                return Err(());
            }
            return Ok(());
        }
        self.parent[rb] = ra;
        self.parity[rb] = pa ^ pb ^ rel;
        Ok(())
    }

    fn parity_of(&mut self, x: usize) -> u8 {
        self.find(x).1
    }
}

#[derive(Clone, Debug)]
pub struct Skeleton {
    /// Vertex class of each (tet, corner).
    pub vertex_class: Vec<[usize; 4]>,
    /// Members of each vertex class, sorted.
    pub vertex_members: Vec<Vec<(usize, u8)>>,
    pub vertex_boundary: Vec<bool>,

    /// Edge class of each (tet, edge index).
    pub edge_class: Vec<[usize; 6]>,
    /// Whether the member's lo-to-hi direction agrees with its class rep.
    pub edge_aligned: Vec<[bool; 6]>,
    pub edge_members: Vec<Vec<(usize, u8)>>,
    pub edge_boundary: Vec<bool>,

    /// Triangle class of each (tet, face).
    pub tri_class: Vec<[usize; 4]>,
    /// Member orientation relative to its class rep: +1 or -1.
    pub tri_or: Vec<[i8; 4]>,
    pub tri_members: Vec<Vec<(usize, u8)>>,
    pub tri_boundary: Vec<bool>,
}

impl Skeleton {
    pub fn build(t: &Triangulation) -> Result<Skeleton, TriError> {
        let n = t.tet_count();
        let mut vuf = ParityUf::new(4 * n);
        let mut euf = ParityUf::new(6 * n);
        let mut fuf = ParityUf::new(4 * n);

        for tet in 0..n {
            for face in 0..4u8 {
                let Some(g) = t.gluing(tet, face) else {
                    continue;
                };
                let vs = face_verts(face);
                for &v in &vs {
                    let w = g.perm.apply(v);
                    vuf.union(4 * tet + v as usize, 4 * g.tet + w as usize, 0)
                        .expect("vertex classes carry no parity");
                }
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let (a, b) = (vs[i], vs[j]);
                        let (ia, ib) = (g.perm.apply(a), g.perm.apply(b));
                        let rel = u8::from(ia > ib);
                        euf.union(
                            6 * tet + edge_index(a, b) as usize,
                            6 * g.tet + edge_index(ia, ib) as usize,
                            rel,
                        )
                        .map_err(|()| {
                            TriError::ReversedEdge(format!(
                                "tet {tet} edge {}{} via face {face}",
                                a.min(b),
                                a.max(b)
                            ))
                        })?;
                    }
                }
                // Relative orientation of the two triangle members: parity of
                // the correspondence between their sorted vertex triples.
                let images = [g.perm.apply(vs[0]), g.perm.apply(vs[1]), g.perm.apply(vs[2])];
                let mut inv = 0;
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        if images[i] > images[j] {
                            inv += 1;
                        }
                    }
                }
                fuf.union(
                    4 * tet + face as usize,
                    4 * g.tet + g.face as usize,
                    inv % 2,
                )
                .expect("each face has a single gluing, so no parity cycle");
            }
        }

        // Number classes by smallest member and collect membership.
        let number = |uf: &mut ParityUf, count: usize, per: usize| {
            let mut class_of_root = std::collections::BTreeMap::new();
            let mut classes: Vec<Vec<(usize, u8)>> = Vec::new();
            let mut class_ids = vec![0usize; count];
            for x in 0..count {
                let (root, _) = uf.find(x);
                let id = *class_of_root.entry(root).or_insert_with(|| {
                    classes.push(Vec::new());
                    classes.len() - 1
                });
                class_ids[x] = id;
                classes[id].push((x / per, (x % per) as u8));
            }
            (class_ids, classes)
        };

        let (vc, vmembers) = number(&mut vuf, 4 * n, 4);
        let (ec, emembers) = number(&mut euf, 6 * n, 6);
        let (fc, fmembers) = number(&mut fuf, 4 * n, 4);

        let vertex_class: Vec<[usize; 4]> = (0..n)
            .map(|t| [vc[4 * t], vc[4 * t + 1], vc[4 * t + 2], vc[4 * t + 3]])
            .collect();
        let edge_class: Vec<[usize; 6]> = (0..n)
            .map(|t| {
                [
                    ec[6 * t],
                    ec[6 * t + 1],
                    ec[6 * t + 2],
                    ec[6 * t + 3],
                    ec[6 * t + 4],
                    ec[6 * t + 5],
                ]
            })
            .collect();
        let tri_class: Vec<[usize; 4]> = (0..n)
            .map(|t| [fc[4 * t], fc[4 * t + 1], fc[4 * t + 2], fc[4 * t + 3]])
            .collect();

        // Alignment relative to each class rep (the smallest member).
        let mut edge_aligned = vec![[true; 6]; n];
        for members in &emembers {
            let (rt, re) = members[0];
            let rep_parity = euf.parity_of(6 * rt + re as usize);
            for &(mt, me) in members {
                edge_aligned[mt][me as usize] =
                    euf.parity_of(6 * mt + me as usize) == rep_parity;
            }
        }
        let mut tri_or = vec![[1i8; 4]; n];
        for members in &fmembers {
            let (rt, rf) = members[0];
            let rep_parity = fuf.parity_of(4 * rt + rf as usize);
            for &(mt, mf) in members {
                tri_or[mt][mf as usize] =
                    if fuf.parity_of(4 * mt + mf as usize) == rep_parity {
                        1
                    } else {
                        -1
                    };
            }
        }

        let tri_boundary: Vec<bool> = fmembers
            .iter()
            .map(|ms| {
                let (t0, f0) = ms[0];
                t.is_boundary_face(t0, f0)
            })
            .collect();
        let mut edge_boundary = vec![false; emembers.len()];
        let mut vertex_boundary = vec![false; vmembers.len()];
        for tet in 0..n {
            for face in 0..4u8 {
                if !t.is_boundary_face(tet, face) {
                    continue;
                }
                let vs = face_verts(face);
                for &v in &vs {
                    vertex_boundary[vertex_class[tet][v as usize]] = true;
                }
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let e = edge_index(vs[i], vs[j]);
                        edge_boundary[edge_class[tet][e as usize]] = true;
                    }
                }
            }
        }

        Ok(Skeleton {
            vertex_class,
            vertex_members: vmembers,
            vertex_boundary,
            edge_class,
            edge_aligned,
            edge_members: emembers,
            edge_boundary,
            tri_class,
            tri_or,
            tri_members: fmembers,
            tri_boundary,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_members.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_members.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.tri_members.len()
    }

    /// Number of (tet, edge) incidences of the class.
    pub fn edge_degree(&self, class: usize) -> usize {
        self.edge_members[class].len()
    }

    /// Tail and head vertex classes per the class reference direction.
    pub fn edge_endpoints(&self, class: usize) -> (usize, usize) {
        let (t, e) = self.edge_members[class][0];
        let (a, b) = EDGE_VERTS[e as usize];
        (
            self.vertex_class[t][a as usize],
            self.vertex_class[t][b as usize],
        )
    }

    /// Vertex classes of a triangle class, in the rep's increasing-label
    /// order.
    pub fn triangle_corners(&self, class: usize) -> [usize; 3] {
        let (t, f) = self.tri_members[class][0];
        let vs = face_verts(f);
        [
            self.vertex_class[t][vs[0] as usize],
            self.vertex_class[t][vs[1] as usize],
            self.vertex_class[t][vs[2] as usize],
        ]
    }

    /// Euler characteristic of the identified complex, V - E + F - T.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
            - self.vertex_class.len() as i64
    }

    /// Checks that every vertex link is a sphere (interior) or disc
    /// (boundary), by Euler characteristic of the link surface.
    pub fn check_vertex_links(&self) -> Result<(), TriError> {
        let classes = self.vertex_count();
        // Link faces: tet corners. Link edges: triangle-class corners.
        // Link vertices: edge-class endpoints.
        let mut link_e = vec![0i64; classes];
        for c in 0..self.triangle_count() {
            for corner in self.triangle_corners(c) {
                link_e[corner] += 1;
            }
        }
        let mut link_v = vec![0i64; classes];
        for c in 0..self.edge_count() {
            let (a, b) = self.edge_endpoints(c);
            link_v[a] += 1;
            link_v[b] += 1;
        }
        for c in 0..classes {
            let link_f = self.vertex_members[c].len() as i64;
            let chi = link_v[c] - link_e[c] + link_f;
            let want = if self.vertex_boundary[c] { 1 } else { 2 };
            if chi != want {
                return Err(TriError::BadVertexLink(c, chi));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{free_tet, one_tet_solid_torus, snapped_ball, two_tet_sphere};

    #[test]
    fn free_tet_counts() {
        let t = free_tet();
        let s = t.skeleton().unwrap();
        assert_eq!(s.vertex_count(), 4);
        assert_eq!(s.edge_count(), 6);
        assert_eq!(s.triangle_count(), 4);
        assert_eq!(s.euler_characteristic(), 1);
        assert!(s.vertex_boundary.iter().all(|&b| b));
        assert!(s.edge_boundary.iter().all(|&b| b));
        assert!(s.tri_boundary.iter().all(|&b| b));
        s.check_vertex_links().unwrap();
    }

    #[test]
    fn sphere_counts() {
        let t = two_tet_sphere();
        let s = t.skeleton().unwrap();
        assert_eq!(s.vertex_count(), 4);
        assert_eq!(s.edge_count(), 6);
        assert_eq!(s.triangle_count(), 4);
        assert_eq!(s.euler_characteristic(), 0);
        assert!(s.vertex_boundary.iter().all(|&b| !b));
        assert!(s.tri_members.iter().all(|m| m.len() == 2));
        s.check_vertex_links().unwrap();
    }

    #[test]
    fn snapped_ball_counts() {
        let t = snapped_ball();
        let s = t.skeleton().unwrap();
        assert_eq!(s.vertex_count(), 3);
        assert_eq!(s.edge_count(), 4);
        assert_eq!(s.triangle_count(), 3);
        assert_eq!(s.euler_characteristic(), 1);
        s.check_vertex_links().unwrap();
        // Boundary is the two unglued faces.
        assert_eq!(
            s.tri_boundary.iter().filter(|&&b| b).count(),
            2
        );
    }

    #[test]
    fn solid_torus_counts() {
        let t = one_tet_solid_torus();
        let s = t.skeleton().unwrap();
        assert_eq!(s.vertex_count(), 1);
        assert_eq!(s.edge_count(), 3);
        assert_eq!(s.triangle_count(), 3);
        assert_eq!(s.euler_characteristic(), 0);
        s.check_vertex_links().unwrap();
    }

    #[test]
    fn edge_alignment_is_rep_relative() {
        let t = two_tet_sphere();
        let s = t.skeleton().unwrap();
        for class in 0..s.edge_count() {
            let (rt, re) = s.edge_members[class][0];
            assert!(s.edge_aligned[rt][re as usize]);
        }
    }
}
