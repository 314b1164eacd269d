//! The boundary surface of a triangulation: one triangle per unglued face,
//! with adjacency obtained by rotating around edges through the interior.

use super::perm::face_verts;
use super::{TriError, Triangulation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceComponent {
    pub triangle_count: usize,
    pub euler: i64,
    pub orientable: bool,
    /// Genus for orientable components, cross-cap count otherwise.
    pub genus: i64,
}

#[derive(Clone, Debug)]
pub struct BoundarySurface {
    /// Surface triangle i corresponds to this (tet, face) of the manifold.
    pub triangles: Vec<(usize, u8)>,
    pub component_of: Vec<usize>,
    pub components: Vec<SurfaceComponent>,
}

impl BoundarySurface {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Sorted (euler, orientable) pairs, one per component.
    pub fn component_profile(&self) -> Vec<(i64, bool)> {
        let mut v: Vec<(i64, bool)> = self
            .components
            .iter()
            .map(|c| (c.euler, c.orientable))
            .collect();
        v.sort();
        v
    }
}

/// Starting on boundary face `f` of tet `t`, pivots around the directed
/// edge (a, b) through interior gluings until the opposite boundary face
/// is reached. Returns that face slot and the edge's image there.
pub fn pivot_to_boundary(
    t: &Triangulation,
    tet: usize,
    face: u8,
    a: u8,
    b: u8,
) -> (usize, u8, u8, u8) {
    let (mut tet, mut face, mut a, mut b) = (tet, face, a, b);
    loop {
        // The two faces of a tet containing edge {a,b} are those opposite
        // the other two vertices.
        let other = (0..4u8)
            .find(|&x| x != a && x != b && x != face)
            .expect("two faces contain any edge");
        match t.gluing(tet, other) {
            None => return (tet, other, a, b),
            Some(g) => {
                let (na, nb) = (g.perm.apply(a), g.perm.apply(b));
                tet = g.tet;
                face = g.face;
                a = na;
                b = nb;
            }
        }
    }
}

/// Direction of edge (a, b) in the positive cycle of the sorted triple
/// of face `f`: +1 if (a, b) follows the cycle, -1 otherwise.
fn cycle_dir(f: u8, a: u8, b: u8) -> i8 {
    let vs = face_verts(f);
    let cyc = [(vs[0], vs[1]), (vs[1], vs[2]), (vs[2], vs[0])];
    if cyc.contains(&(a, b)) {
        1
    } else {
        -1
    }
}

pub fn boundary_surface(t: &Triangulation) -> Result<BoundarySurface, TriError> {
    let skel = t.skeleton()?;
    let mut triangles = Vec::new();
    let mut index = std::collections::BTreeMap::new();
    for tet in 0..t.tet_count() {
        for face in 0..4u8 {
            if t.is_boundary_face(tet, face) {
                index.insert((tet, face), triangles.len());
                triangles.push((tet, face));
            }
        }
    }

    let n = triangles.len();
    // Adjacency across each of the three edges of every boundary triangle,
    // with the relative orientation sign for coherence propagation.
    let mut adj: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for (i, &(tet, face)) in triangles.iter().enumerate() {
        let vs = face_verts(face);
        for k in 0..3 {
            let (a, b) = (vs[k], vs[(k + 1) % 3]);
            let (pt, pf, pa, pb) = pivot_to_boundary(t, tet, face, a, b);
            let j = index[&(pt, pf)];
            let da = cycle_dir(face, a, b);
            let db = cycle_dir(pf, pa, pb);
            // Coherent orientations give the shared edge opposite directions.
            adj[i].push((j, -da * db));
        }
    }

    // Components and orientability by sign propagation.
    let mut comp = vec![usize::MAX; n];
    let mut sign = vec![0i8; n];
    let mut components = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut orientable = true;
        let mut faces = Vec::new();
        comp[start] = id;
        sign[start] = 1;
        let mut queue = vec![start];
        while let Some(x) = queue.pop() {
            faces.push(x);
            for &(y, rel) in &adj[x] {
                let want = sign[x] * rel;
                if comp[y] == usize::MAX {
                    comp[y] = id;
                    sign[y] = want;
                    queue.push(y);
                } else if sign[y] != want {
                    orientable = false;
                }
            }
        }

        // Euler characteristic from distinct boundary classes. Validity
        // gives each boundary vertex class one surface vertex and each
        // boundary edge class one surface edge.
        let mut vclasses = std::collections::BTreeSet::new();
        let mut eclasses = std::collections::BTreeSet::new();
        for &x in &faces {
            let (tet, face) = triangles[x];
            let vs = face_verts(face);
            for &v in &vs {
                vclasses.insert(skel.vertex_class[tet][v as usize]);
            }
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let e = super::perm::edge_index(vs[i], vs[j]);
                    eclasses.insert(skel.edge_class[tet][e as usize]);
                }
            }
        }
        let euler = vclasses.len() as i64 - eclasses.len() as i64 + faces.len() as i64;
        let genus = if orientable {
            (2 - euler) / 2
        } else {
            2 - euler
        };
        components.push(SurfaceComponent {
            triangle_count: faces.len(),
            euler,
            orientable,
            genus,
        });
    }

    Ok(BoundarySurface {
        triangles,
        component_of: comp,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{free_tet, one_tet_solid_torus, snapped_ball, two_tet_sphere};
    use super::*;

    #[test]
    fn closed_manifold_has_empty_boundary() {
        let b = two_tet_sphere().boundary_surface().unwrap();
        assert!(b.is_empty());
        assert!(b.components.is_empty());
    }

    #[test]
    fn ball_boundaries_are_spheres() {
        let b = free_tet().boundary_surface().unwrap();
        assert_eq!(b.components.len(), 1);
        assert_eq!(
            b.components[0],
            SurfaceComponent {
                triangle_count: 4,
                euler: 2,
                orientable: true,
                genus: 0
            }
        );

        let b = snapped_ball().boundary_surface().unwrap();
        assert_eq!(b.components.len(), 1);
        assert_eq!(b.components[0].euler, 2);
        assert_eq!(b.components[0].triangle_count, 2);
    }

    #[test]
    fn solid_torus_boundary_is_a_torus() {
        let b = one_tet_solid_torus().boundary_surface().unwrap();
        assert_eq!(b.components.len(), 1);
        assert_eq!(
            b.components[0],
            SurfaceComponent {
                triangle_count: 2,
                euler: 0,
                orientable: true,
                genus: 1
            }
        );
    }

    #[test]
    fn correspondence_points_at_boundary_faces() {
        let t = free_tet();
        let b = t.boundary_surface().unwrap();
        assert_eq!(b.triangles.len(), 4);
        for &(tet, face) in &b.triangles {
            assert!(t.is_boundary_face(tet, face));
        }
    }
}
