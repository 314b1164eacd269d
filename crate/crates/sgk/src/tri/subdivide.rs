//! Barycentric subdivision with tracking of a marked 1-subcomplex.
//!
//! Each tetrahedron splits into 24, one per flag (vertex, edge, face, tet):
//! the flag permutation sigma yields the subtetrahedron with corners
//! [sigma0, midpoint of (sigma0,sigma1), center of face opposite sigma3,
//! tet center]. All subdivision gluings are identity permutations, and the
//! subtetrahedron inherits sign(parent) * sign(sigma).

use super::perm::{Perm4, EDGE_VERTS};
use super::{Gluing, TriError, Triangulation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A marked 1-subcomplex: named vertices at vertex classes and named edge
/// paths along edge classes. Paths are embedded, end at marked vertices,
/// and distinct paths share only marked vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubComplex {
    pub marked_vertices: BTreeMap<String, usize>,
    /// Each step is (edge class, forward): forward means traversal agrees
    /// with the class reference direction.
    pub edge_paths: BTreeMap<String, Vec<(usize, bool)>>,
}

impl SubComplex {
    pub fn empty() -> SubComplex {
        SubComplex::default()
    }

    /// All edge classes used by some path.
    pub fn path_edge_classes(&self) -> BTreeSet<usize> {
        self.edge_paths
            .values()
            .flat_map(|p| p.iter().map(|&(c, _)| c))
            .collect()
    }

    /// All vertex classes on the subcomplex: marked vertices plus every
    /// path vertex.
    pub fn vertex_classes(&self, t: &Triangulation) -> Result<BTreeSet<usize>, TriError> {
        let skel = t.skeleton()?;
        let mut out: BTreeSet<usize> = self.marked_vertices.values().copied().collect();
        for path in self.edge_paths.values() {
            for &(c, _) in path {
                let (a, b) = skel.edge_endpoints(c);
                out.insert(a);
                out.insert(b);
            }
        }
        Ok(out)
    }

    pub fn validate(&self, t: &Triangulation) -> Result<(), TriError> {
        let skel = t.skeleton()?;
        let nv = skel.vertex_count();
        let ne = skel.edge_count();
        let marked: BTreeSet<usize> = self.marked_vertices.values().copied().collect();
        if marked.len() != self.marked_vertices.len() {
            return Err(TriError::BadSubComplex(
                "two marked vertices share a vertex class".into(),
            ));
        }
        for &c in &marked {
            if c >= nv {
                return Err(TriError::BadSubComplex(format!(
                    "marked vertex class {c} out of range"
                )));
            }
        }

        let mut used_edges = BTreeSet::new();
        let mut interior_vertices = BTreeSet::new();
        for (id, path) in &self.edge_paths {
            if path.is_empty() {
                return Err(TriError::BadSubComplex(format!("path {id} is empty")));
            }
            let mut prev_head: Option<usize> = None;
            for (k, &(c, fwd)) in path.iter().enumerate() {
                if c >= ne {
                    return Err(TriError::BadSubComplex(format!(
                        "path {id} uses edge class {c} out of range"
                    )));
                }
                if !used_edges.insert(c) {
                    return Err(TriError::BadSubComplex(format!(
                        "edge class {c} is used twice (path {id})"
                    )));
                }
                let (t0, t1) = skel.edge_endpoints(c);
                let (tail, head) = if fwd { (t0, t1) } else { (t1, t0) };
                if let Some(p) = prev_head {
                    if p != tail {
                        return Err(TriError::BadSubComplex(format!(
                            "path {id} breaks at step {k}"
                        )));
                    }
                }
                if k > 0 {
                    // Interior vertex of the path.
                    let v = tail;
                    if marked.contains(&v) {
                        return Err(TriError::BadSubComplex(format!(
                            "path {id} passes through marked vertex class {v}"
                        )));
                    }
                    if !interior_vertices.insert(v) {
                        return Err(TriError::BadSubComplex(format!(
                            "paths cross at unmarked vertex class {v}"
                        )));
                    }
                }
                prev_head = Some(head);
            }
            let (first, _) = path[0];
            let (t0, t1) = skel.edge_endpoints(first);
            let start = if path[0].1 { t0 } else { t1 };
            let end = prev_head.expect("nonempty path");
            for v in [start, end] {
                if !marked.contains(&v) {
                    return Err(TriError::BadSubComplex(format!(
                        "path {id} ends at unmarked vertex class {v}"
                    )));
                }
            }
            // A closed path revisits its start; otherwise the endpoints are
            // distinct marked vertices. Either way interior vertices may not
            // repeat, which the checks above enforce.
        }
        Ok(())
    }
}

/// The flag of sub-tetrahedron conventions: position of a sub-tet among the
/// 24 children of its parent.
fn sub_index(parent: usize, sigma: Perm4) -> usize {
    parent * 24 + sigma.0 as usize
}

pub fn barycentric_subdivide(
    t: &Triangulation,
    tracked: &SubComplex,
) -> Result<(Triangulation, SubComplex), TriError> {
    let skel = t.skeleton()?;
    let n = t.tet_count();
    let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; 24 * n];

    for parent in 0..n {
        for sigma in Perm4::all() {
            let me = sub_index(parent, sigma);
            let im = sigma.images();
            // Faces 0,1,2: within the parent, swapping one flag letter.
            for (face, swap) in [(0u8, (0u8, 1u8)), (1, (1, 2)), (2, (2, 3))] {
                let tau = sigma.after(Perm4::transposition(swap.0, swap.1));
                table[me][face as usize] = Some(Gluing {
                    tet: sub_index(parent, tau),
                    face,
                    perm: Perm4::IDENTITY,
                });
            }
            // Face 3 lies on the parent face opposite sigma3.
            let pf = im[3];
            match t.gluing(parent, pf) {
                None => {}
                Some(g) => {
                    let tau = Perm4::from_images([
                        g.perm.apply(im[0]),
                        g.perm.apply(im[1]),
                        g.perm.apply(im[2]),
                        g.perm.apply(im[3]),
                    ]);
                    table[me][3] = Some(Gluing {
                        tet: sub_index(g.tet, tau),
                        face: 3,
                        perm: Perm4::IDENTITY,
                    });
                }
            }
        }
    }

    let mut out = Triangulation::new(table)?;
    if let Some(signs) = t.orientation() {
        let mut sub_signs = vec![0i8; 24 * n];
        for parent in 0..n {
            for sigma in Perm4::all() {
                sub_signs[sub_index(parent, sigma)] = signs[parent] * sigma.sign();
            }
        }
        out.orient_with(sub_signs)?;
    } else {
        out.skeleton()?.check_vertex_links()?;
    }

    // Remap the marked subcomplex. A parent vertex class survives as the
    // class of corner 0 of any flag starting at one of its members; a parent
    // edge splits into its two halves through the midpoint.
    let sub_skel = out.skeleton()?;
    let sigma_starting = |v: u8, w: u8| -> Perm4 {
        let mut rest: Vec<u8> = (0..4u8).filter(|&x| x != v && x != w).collect();
        rest.sort_unstable();
        Perm4::from_images([v, w, rest[0], rest[1]])
    };

    let map_vertex = |class: usize| -> usize {
        let (tet, corner) = skel.vertex_members[class][0];
        let w = (0..4u8).find(|&x| x != corner).expect("four corners");
        let sub = sub_index(tet, sigma_starting(corner, w));
        sub_skel.vertex_class[sub][0]
    };

    let mut marked_vertices = BTreeMap::new();
    for (name, &class) in &tracked.marked_vertices {
        marked_vertices.insert(name.clone(), map_vertex(class));
    }

    let mut edge_paths = BTreeMap::new();
    for (name, path) in &tracked.edge_paths {
        let mut steps = Vec::with_capacity(path.len() * 2);
        for &(class, fwd) in path {
            let (tet, eidx) = skel.edge_members[class][0];
            let (lo, hi) = EDGE_VERTS[eidx as usize];
            // The reference direction is the rep's lo-to-hi; orient the
            // traversal accordingly.
            let (x, y) = if fwd { (lo, hi) } else { (hi, lo) };
            let first = sub_index(tet, sigma_starting(x, y));
            let second = sub_index(tet, sigma_starting(y, x));
            // Edge (0,1) of each flag tet runs corner0 to midpoint.
            let c1 = sub_skel.edge_class[first][0];
            let a1 = sub_skel.edge_aligned[first][0];
            let c2 = sub_skel.edge_class[second][0];
            let a2 = sub_skel.edge_aligned[second][0];
            steps.push((c1, a1));
            steps.push((c2, !a2));
        }
        edge_paths.insert(name.clone(), steps);
    }

    let sub = SubComplex {
        marked_vertices,
        edge_paths,
    };
    Ok((out, sub))
}
