//! Triangulations of compact 3-manifolds as face gluing tables.
//!
//! A triangulation is a list of abstract tetrahedra with vertices labeled
//! 0..3. Face `f` of a tetrahedron is the triangle opposite vertex `f`.
//! Each face is either boundary or glued to a face of some tetrahedron
//! (possibly the same one) by an affine identification, recorded as the
//! permutation sending local vertex labels to neighbor vertex labels.
//!
//! Validity here means the identified complex has no edge glued to itself
//! in reverse and every vertex link is a sphere or disc. [`validate_and_orient`]
//! additionally proves global orientability and fixes the orientation
//! convention: the lowest-index tetrahedron of each connected component is
//! positive, and signs alternate across gluings by permutation parity.

pub mod build;
pub mod format;
pub mod homology;
pub mod moves;
pub mod perm;
pub mod signature;
pub mod skeleton;
pub mod subdivide;
pub mod surface;

pub use build::{from_labeled_tets, split_prism};
pub use format::{parse_tri, render_tri};
pub use homology::HomologyProfile;
pub use moves::{pachner_condense, pachner_simplify, pachner_simplify_tracked};
pub use perm::{edge_index, face_verts, Perm4, EDGE_VERTS};
pub use signature::iso_signature;
pub use skeleton::Skeleton;
pub use subdivide::{barycentric_subdivide, SubComplex};
pub use surface::BoundarySurface;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TriError {
    #[error("gluing table is malformed: {0}")]
    BadGluing(String),
    #[error("edge would be identified with itself in reverse ({0})")]
    ReversedEdge(String),
    #[error("link of vertex class {0} is not a sphere or disc (euler characteristic {1})")]
    BadVertexLink(usize, i64),
    #[error("triangulation is not orientable")]
    NonOrientable,
    #[error("move is not applicable: {0}")]
    MoveBlocked(String),
    #[error("text form is malformed at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("marked subcomplex is invalid: {0}")]
    BadSubComplex(String),
}

/// One face gluing: my face maps onto `face` of `tet`, with `perm` sending
/// my vertex labels to the neighbor's (so `perm` carries my face index to
/// `face`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gluing {
    pub tet: usize,
    pub face: u8,
    pub perm: Perm4,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangulation {
    tets: Vec<[Option<Gluing>; 4]>,
    /// Per-tet signs, set by [`validate_and_orient`].
    orientation: Option<Vec<i8>>,
}

impl Triangulation {
    /// Builds a triangulation and checks the table is structurally sound:
    /// indices in range, gluings involutive, no face glued to itself.
    pub fn new(tets: Vec<[Option<Gluing>; 4]>) -> Result<Triangulation, TriError> {
        let n = tets.len();
        for (t, faces) in tets.iter().enumerate() {
            for (f, g) in faces.iter().enumerate() {
                let Some(g) = g else { continue };
                if g.tet >= n {
                    return Err(TriError::BadGluing(format!(
                        "tet {t} face {f} refers to missing tet {}",
                        g.tet
                    )));
                }
                if g.perm.apply(f as u8) != g.face {
                    return Err(TriError::BadGluing(format!(
                        "tet {t} face {f}: permutation does not carry face index to {}",
                        g.face
                    )));
                }
                if g.tet == t && g.face == f as u8 {
                    return Err(TriError::BadGluing(format!(
                        "tet {t} face {f} is glued to itself"
                    )));
                }
                let back = tets[g.tet][g.face as usize];
                let want = Gluing {
                    tet: t,
                    face: f as u8,
                    perm: g.perm.inverse(),
                };
                if back != Some(want) {
                    return Err(TriError::BadGluing(format!(
                        "tet {t} face {f}: reverse gluing of tet {} face {} does not match",
                        g.tet, g.face
                    )));
                }
            }
        }
        Ok(Triangulation {
            tets,
            orientation: None,
        })
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn gluing(&self, tet: usize, face: u8) -> Option<Gluing> {
        self.tets[tet][face as usize]
    }

    pub fn gluings(&self) -> &[[Option<Gluing>; 4]] {
        &self.tets
    }

    pub fn is_boundary_face(&self, tet: usize, face: u8) -> bool {
        self.tets[tet][face as usize].is_none()
    }

    pub fn is_closed(&self) -> bool {
        self.tets
            .iter()
            .all(|faces| faces.iter().all(|g| g.is_some()))
    }

    pub fn boundary_face_count(&self) -> usize {
        self.tets
            .iter()
            .map(|faces| faces.iter().filter(|g| g.is_none()).count())
            .sum()
    }

    /// Per-tet orientation signs; present only after [`validate_and_orient`].
    pub fn orientation(&self) -> Option<&[i8]> {
        self.orientation.as_deref()
    }

    /// Validates as in [`validate_and_orient`] but installs the given signs
    /// instead of the lowest-tet-positive convention. Geometric builders use
    /// this to keep an ambient orientation.
    pub fn orient_with(&mut self, signs: Vec<i8>) -> Result<(), TriError> {
        let skel = skeleton::Skeleton::build(self)?;
        skel.check_vertex_links()?;
        if signs.len() != self.tets.len() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(TriError::BadGluing(
                "orientation signs must be one of +1/-1 per tet".into(),
            ));
        }
        for t in 0..self.tets.len() {
            for f in 0..4 {
                let Some(g) = self.tets[t][f] else { continue };
                if signs[g.tet] != -signs[t] * g.perm.sign() {
                    return Err(TriError::NonOrientable);
                }
            }
        }
        self.orientation = Some(signs);
        Ok(())
    }

    /// Connected components of the dual graph, one sorted tet list each.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.tets.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = vec![start];
            while let Some(t) = queue.pop() {
                for f in 0..4 {
                    if let Some(g) = self.tets[t][f] {
                        if !seen[g.tet] {
                            seen[g.tet] = true;
                            comp.push(g.tet);
                            queue.push(g.tet);
                        }
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Checks edge and vertex link validity, proves orientability, and
    /// stores the orientation (lowest tet of each component positive).
    pub fn validate_and_orient(&mut self) -> Result<(), TriError> {
        let skel = skeleton::Skeleton::build(self)?;
        skel.check_vertex_links()?;

        let n = self.tets.len();
        let mut sign = vec![0i8; n];
        for comp in self.components() {
            let start = comp[0];
            sign[start] = 1;
            let mut queue = vec![start];
            while let Some(t) = queue.pop() {
                for f in 0..4 {
                    let Some(g) = self.tets[t][f] else { continue };
                    // Coherent orientation: signs satisfy s(t')·s(t) = -sign(perm).
                    let want = -sign[t] * g.perm.sign();
                    if sign[g.tet] == 0 {
                        sign[g.tet] = want;
                        queue.push(g.tet);
                    } else if sign[g.tet] != want {
                        return Err(TriError::NonOrientable);
                    }
                }
            }
        }
        self.orientation = Some(sign);
        Ok(())
    }

    /// The identified cell structure: vertex, edge, and triangle classes.
    /// Fails if some edge is glued to itself in reverse.
    pub fn skeleton(&self) -> Result<Skeleton, TriError> {
        Skeleton::build(self)
    }

    pub fn homology(&self, rel_boundary: bool) -> Result<HomologyProfile, TriError> {
        homology::homology(self, rel_boundary)
    }

    pub fn boundary_surface(&self) -> Result<BoundarySurface, TriError> {
        surface::boundary_surface(self)
    }
}

/// Splits a triangulation into its connected parts. Each part keeps its
/// orientation signs (when the input is oriented) and remembers which
/// original tetrahedra it contains, in increasing order.
pub fn split_components(t: &Triangulation) -> Vec<(Triangulation, Vec<usize>)> {
    let mut parts = Vec::new();
    for old in t.components() {
        let mut idx = std::collections::BTreeMap::new();
        for (l, &o) in old.iter().enumerate() {
            idx.insert(o, l);
        }
        let mut table = vec![[None; 4]; old.len()];
        for (l, &o) in old.iter().enumerate() {
            for f in 0..4 {
                if let Some(g) = t.gluing(o, f as u8) {
                    table[l][f] = Some(Gluing {
                        tet: idx[&g.tet],
                        face: g.face,
                        perm: g.perm,
                    });
                }
            }
        }
        let mut part = Triangulation::new(table).expect("component of a valid table");
        if let Some(or) = t.orientation() {
            let signs: Vec<i8> = old.iter().map(|&o| or[o]).collect();
            part.orient_with(signs).expect("component orientation");
        }
        parts.push((part, old));
    }
    parts
}

/// Two tetrahedra glued along all four faces by the identity; a 3-sphere.
pub fn two_tet_sphere() -> Triangulation {
    let mut tets = vec![[None; 4], [None; 4]];
    for f in 0..4u8 {
        tets[0][f as usize] = Some(Gluing {
            tet: 1,
            face: f,
            perm: Perm4::IDENTITY,
        });
        tets[1][f as usize] = Some(Gluing {
            tet: 0,
            face: f,
            perm: Perm4::IDENTITY,
        });
    }
    let mut t = Triangulation::new(tets).expect("sphere fixture");
    t.validate_and_orient().expect("sphere fixture");
    t
}

/// A single tetrahedron with four boundary faces; a 3-ball.
pub fn free_tet() -> Triangulation {
    let mut t = Triangulation::new(vec![[None; 4]]).expect("tet fixture");
    t.validate_and_orient().expect("tet fixture");
    t
}

/// One tetrahedron with face 3 glued to face 2 by the odd permutation 0132,
/// which folds the two faces together; a 3-ball whose boundary sphere has
/// two triangles.
pub fn snapped_ball() -> Triangulation {
    let p = Perm4::from_images([0, 1, 3, 2]);
    let tets = vec![[
        None,
        None,
        Some(Gluing {
            tet: 0,
            face: 3,
            perm: p,
        }),
        Some(Gluing {
            tet: 0,
            face: 2,
            perm: p,
        }),
    ]];
    let mut t = Triangulation::new(tets).expect("snapped ball fixture");
    t.validate_and_orient().expect("snapped ball fixture");
    t
}

/// One tetrahedron with face 3 glued to face 2 by the odd permutation 1302,
/// winding around a single vertex; a solid torus.
pub fn one_tet_solid_torus() -> Triangulation {
    let p = Perm4::from_images([1, 3, 0, 2]);
    let tets = vec![[
        None,
        None,
        Some(Gluing {
            tet: 0,
            face: 3,
            perm: p.inverse(),
        }),
        Some(Gluing {
            tet: 0,
            face: 2,
            perm: p,
        }),
    ]];
    let mut t = Triangulation::new(tets).expect("solid torus fixture");
    t.validate_and_orient().expect("solid torus fixture");
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_tables() {
        // Out-of-range neighbor.
        let bad = Triangulation::new(vec![[
            Some(Gluing {
                tet: 3,
                face: 0,
                perm: Perm4::IDENTITY,
            }),
            None,
            None,
            None,
        ]]);
        assert!(matches!(bad, Err(TriError::BadGluing(_))));

        // Non-involutive: tet 0 points at tet 1 but not back.
        let bad = Triangulation::new(vec![
            [
                Some(Gluing {
                    tet: 1,
                    face: 0,
                    perm: Perm4::IDENTITY,
                }),
                None,
                None,
                None,
            ],
            [None; 4],
        ]);
        assert!(matches!(bad, Err(TriError::BadGluing(_))));

        // Permutation does not carry the face index across.
        let bad = Triangulation::new(vec![
            [
                Some(Gluing {
                    tet: 1,
                    face: 2,
                    perm: Perm4::IDENTITY,
                }),
                None,
                None,
                None,
            ],
            [
                None,
                None,
                Some(Gluing {
                    tet: 0,
                    face: 0,
                    perm: Perm4::IDENTITY,
                }),
                None,
            ],
        ]);
        assert!(matches!(bad, Err(TriError::BadGluing(_))));
    }

    #[test]
    fn sphere_fixture_is_closed_and_oriented() {
        let t = two_tet_sphere();
        assert!(t.is_closed());
        assert_eq!(t.tet_count(), 2);
        let or = t.orientation().unwrap();
        assert_eq!(or[0], 1);
        // Identity gluings are even, so the signs alternate.
        assert_eq!(or[1], -1);
    }

    #[test]
    fn free_tet_is_a_ball() {
        let t = free_tet();
        assert!(!t.is_closed());
        assert_eq!(t.boundary_face_count(), 4);
        assert_eq!(t.orientation().unwrap(), &[1]);
    }

    #[test]
    fn pinched_vertex_is_rejected() {
        // Face 3 to face 2 by 0312: edges identify consistently but the
        // link of vertex 0 becomes a Moebius band, so the complex is not
        // a manifold triangulation.
        let p = Perm4::from_images([0, 3, 1, 2]);
        let tets = vec![[
            None,
            None,
            Some(Gluing {
                tet: 0,
                face: 3,
                perm: p.inverse(),
            }),
            Some(Gluing {
                tet: 0,
                face: 2,
                perm: p,
            }),
        ]];
        let mut t = Triangulation::new(tets).unwrap();
        assert!(matches!(
            t.validate_and_orient(),
            Err(TriError::BadVertexLink(_, 0))
        ));
    }

    #[test]
    fn reversed_edge_is_rejected() {
        // Two tets glued along face 0 twice: once by the identity and once
        // by the transposition of 2 and 3, which drags edge 23 backwards.
        let id = Perm4::IDENTITY;
        let sw = Perm4::from_images([0, 1, 3, 2]);
        let tets = vec![
            [
                Some(Gluing {
                    tet: 1,
                    face: 0,
                    perm: id,
                }),
                Some(Gluing {
                    tet: 1,
                    face: 1,
                    perm: sw,
                }),
                None,
                None,
            ],
            [
                Some(Gluing {
                    tet: 0,
                    face: 0,
                    perm: id,
                }),
                Some(Gluing {
                    tet: 0,
                    face: 1,
                    perm: sw,
                }),
                None,
                None,
            ],
        ];
        let mut t = Triangulation::new(tets).unwrap();
        assert!(matches!(
            t.validate_and_orient(),
            Err(TriError::ReversedEdge(_))
        ));
    }

    #[test]
    fn components_are_reported() {
        let sphere = two_tet_sphere();
        let mut tets = sphere.gluings().to_vec();
        tets.push([None; 4]);
        let t = Triangulation::new(tets).unwrap();
        assert_eq!(t.components(), vec![vec![0, 1], vec![2]]);
    }
}
