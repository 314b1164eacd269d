//! Building gluing tables from labeled tetrahedra: each tetrahedron is a
//! 4-tuple of distinct vertex labels, and two faces are glued exactly when
//! they carry the same 3 labels. This suits geometric constructions where
//! every simplex is embedded and named by its corners; complexes with two
//! distinct triangles on one label triple cannot be expressed this way.

use super::{Gluing, Perm4, TriError, Triangulation};
use std::collections::BTreeMap;

/// Builds the triangulation and returns it with the label-to-vertex-class
/// mapping of its skeleton.
pub fn from_labeled_tets(
    tets: &[[u64; 4]],
) -> Result<(Triangulation, BTreeMap<u64, usize>), TriError> {
    for (i, labels) in tets.iter().enumerate() {
        let mut sorted = *labels;
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(TriError::BadGluing(format!(
                "tet {i} has repeated labels {labels:?}"
            )));
        }
    }

    let mut by_triple: BTreeMap<[u64; 3], Vec<(usize, u8)>> = BTreeMap::new();
    for (i, labels) in tets.iter().enumerate() {
        for f in 0..4u8 {
            let mut triple: Vec<u64> = (0..4)
                .filter(|&v| v != f as usize)
                .map(|v| labels[v])
                .collect();
            triple.sort_unstable();
            by_triple
                .entry([triple[0], triple[1], triple[2]])
                .or_default()
                .push((i, f));
        }
    }

    let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; tets.len()];
    for (triple, slots) in &by_triple {
        match slots.as_slice() {
            [_] => {}
            [(t0, f0), (t1, f1)] => {
                if t0 == t1 && f0 == f1 {
                    unreachable!("a slot is enumerated once");
                }
                let mut images = [0u8; 4];
                for v in 0..4u8 {
                    if v == *f0 {
                        images[v as usize] = *f1;
                    } else {
                        let label = tets[*t0][v as usize];
                        let w = (0..4u8)
                            .find(|&w| tets[*t1][w as usize] == label)
                            .expect("matched triples share labels");
                        images[v as usize] = w;
                    }
                }
                let perm = Perm4::from_images(images);
                table[*t0][*f0 as usize] = Some(Gluing {
                    tet: *t1,
                    face: *f1,
                    perm,
                });
                table[*t1][*f1 as usize] = Some(Gluing {
                    tet: *t0,
                    face: *f0,
                    perm: perm.inverse(),
                });
            }
            many => {
                return Err(TriError::BadGluing(format!(
                    "label triple {triple:?} appears on {} faces",
                    many.len()
                )));
            }
        }
    }

    let t = Triangulation::new(table)?;
    let skel = t.skeleton()?;
    let mut label_class = BTreeMap::new();
    for (i, labels) in tets.iter().enumerate() {
        for v in 0..4 {
            label_class
                .entry(labels[v])
                .or_insert(skel.vertex_class[i][v]);
        }
    }
    Ok((t, label_class))
}

/// Splits the prism over triangle (a, b, c), with vertex layers given by
/// `layer`, into three tetrahedra. Sorting by label makes quad diagonals
/// agree between prisms that share a rectangular side.
pub fn split_prism(
    out: &mut Vec<[u64; 4]>,
    a: u64,
    b: u64,
    c: u64,
    layer: impl Fn(u64, u64) -> u64,
) {
    let mut v = [a, b, c];
    v.sort_unstable();
    let [a, b, c] = v;
    out.push([layer(a, 0), layer(b, 0), layer(c, 0), layer(c, 1)]);
    out.push([layer(a, 0), layer(b, 0), layer(b, 1), layer(c, 1)]);
    out.push([layer(a, 0), layer(a, 1), layer(b, 1), layer(c, 1)]);
}

/// A strip of three squares closed up with a flip, thickened: the twisted
/// interval bundle over the Moebius band. Valid but nonorientable, with a
/// Klein bottle boundary. Left unvalidated so callers can watch
/// `validate_and_orient` reject it.
pub fn solid_klein_bottle() -> Triangulation {
    // Strip vertices v(x, j) = 2j + x for x in {0,1}, j in {0,1,2}; the far
    // end attaches by (x, 3) = (1-x, 0).
    let v = |x: u64, j: u64| -> u64 {
        if j == 3 {
            1 - x
        } else {
            2 * j + x
        }
    };
    let mut tets = Vec::new();
    for j in 0..3u64 {
        let (p, q, r, s) = (v(0, j), v(1, j), v(0, j + 1), v(1, j + 1));
        split_prism(&mut tets, p, q, r, |m, z| 2 * m + z);
        split_prism(&mut tets, q, r, s, |m, z| 2 * m + z);
    }
    let (t, _) = from_labeled_tets(&tets).expect("klein fixture");
    t
}

#[cfg(test)]
mod tests {
    use super::super::homology::AbelianGroup;
    use super::super::TriError;
    use super::*;

    #[test]
    fn two_tets_share_a_face() {
        let (t, labels) = from_labeled_tets(&[[0, 1, 2, 3], [1, 2, 3, 4]]).unwrap();
        assert_eq!(t.tet_count(), 2);
        assert_eq!(t.boundary_face_count(), 6);
        assert_eq!(labels.len(), 5);
        let g = t.gluing(0, 0).unwrap();
        assert_eq!(g.tet, 1);
        // Shared face {1,2,3} sits opposite label 4 in the second tet.
        assert_eq!(g.face, 3);
    }

    #[test]
    fn triple_use_of_a_face_is_rejected() {
        let r = from_labeled_tets(&[[0, 1, 2, 3], [1, 2, 3, 4], [1, 2, 3, 5]]);
        assert!(matches!(r, Err(TriError::BadGluing(_))));
    }

    #[test]
    fn thickened_annulus_is_a_solid_torus() {
        // Same strip as the Klein fixture but closed without the flip.
        let v = |x: u64, j: u64| -> u64 { if j == 3 { x } else { 2 * j + x } };
        let mut tets = Vec::new();
        for j in 0..3u64 {
            let (p, q, r, s) = (v(0, j), v(1, j), v(0, j + 1), v(1, j + 1));
            split_prism(&mut tets, p, q, r, |m, z| 2 * m + z);
            split_prism(&mut tets, q, r, s, |m, z| 2 * m + z);
        }
        let (mut t, _) = from_labeled_tets(&tets).unwrap();
        t.validate_and_orient().unwrap();
        let h = t.homology(false).unwrap();
        assert_eq!(
            h.h,
            [
                AbelianGroup {
                    rank: 1,
                    torsion: vec![]
                },
                AbelianGroup {
                    rank: 1,
                    torsion: vec![]
                },
                AbelianGroup {
                    rank: 0,
                    torsion: vec![]
                }
            ]
        );
        let b = t.boundary_surface().unwrap();
        assert_eq!(b.component_profile(), vec![(0, true)]);
    }

    #[test]
    fn klein_fixture_is_valid_but_nonorientable() {
        let mut t = solid_klein_bottle();
        assert_eq!(t.tet_count(), 18);
        // The skeleton itself is fine: edges and vertex links check out.
        let s = t.skeleton().unwrap();
        s.check_vertex_links().unwrap();
        assert!(matches!(
            t.validate_and_orient(),
            Err(TriError::NonOrientable)
        ));
        let b = t.boundary_surface().unwrap();
        assert_eq!(b.component_profile(), vec![(0, false)]);
    }
}
