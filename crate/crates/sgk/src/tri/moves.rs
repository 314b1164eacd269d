//! Local moves on triangulations: 2-3, 3-2, 2-0, and edge collapse, plus a
//! budgeted simplification driver that can carry a marked subcomplex along.
//!
//! Every move is expressed as a surgery: a set of removed tetrahedra, new
//! tetrahedra with internal gluings, and either redirects (removed face slot
//! taken over by a new tetrahedron) or transits (two removed slots flattened
//! onto each other). Faces of surviving tetrahedra are rewired by following
//! redirects and transit chains. The rebuilt table is validated from
//! scratch, so a move that would produce a pinched or nonorientable complex
//! is reported as blocked rather than applied.

use super::perm::{edge_index, Perm4, EDGE_VERTS};
use super::skeleton::Skeleton;
use super::subdivide::SubComplex;
use super::{Gluing, TriError, Triangulation};
use std::collections::{BTreeMap, BTreeSet};

/// Where simplices of a removed tetrahedron can still be found afterwards:
/// `map` carries old vertex labels to labels of `new_tet`, valid only on
/// corners with `valid` set.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub old_tet: usize,
    pub new_tet: usize,
    pub map: Perm4,
    pub valid: [bool; 4],
}

#[derive(Clone, Debug)]
pub struct MoveOutcome {
    /// The rebuilt triangulation, not yet validated or oriented.
    pub t: Triangulation,
    /// Old tet index to new index; None for removed tets.
    pub tet_map: Vec<Option<usize>>,
    pub embeddings: Vec<Embedding>,
}

struct Surgery {
    removed: Vec<usize>,
    added: usize,
    /// (new a, face, new b, face, perm a-labels to b-labels)
    internal: Vec<(usize, u8, usize, u8, Perm4)>,
    /// Removed slot taken over by (new tet local index, perm removed to new).
    redirect: BTreeMap<(usize, u8), (usize, Perm4)>,
    /// Removed slot flattened onto another removed slot.
    transit: BTreeMap<(usize, u8), (usize, u8, Perm4)>,
    embeddings: Vec<Embedding>,
}

impl Surgery {
    fn apply(self, t: &Triangulation) -> Result<MoveOutcome, TriError> {
        let n = t.tet_count();
        let removed: BTreeSet<usize> = self.removed.iter().copied().collect();
        // A flattening whose star is a whole component would delete that
        // component outright; the link conditions do not see this case.
        if self.added == 0 {
            let comp = t
                .components()
                .into_iter()
                .find(|c| c.contains(&self.removed[0]))
                .expect("removed tet exists");
            if comp.iter().all(|tet| removed.contains(tet)) {
                return Err(TriError::MoveBlocked(
                    "move would delete a whole component".into(),
                ));
            }
        }
        let mut tet_map: Vec<Option<usize>> = Vec::with_capacity(n);
        let mut survivors = 0;
        for tet in 0..n {
            if removed.contains(&tet) {
                tet_map.push(None);
            } else {
                tet_map.push(Some(survivors));
                survivors += 1;
            }
        }
        let base = survivors;
        let total = base + self.added;
        let mut table: Vec<[Option<Gluing>; 4]> = vec![[None; 4]; total];

        // Follows redirects and transit chains from a removed slot. `acc`
        // maps some fixed source labels to the current removed tet's labels.
        // Returns the final target, or None when the chain exits through an
        // unglued face.
        let resolve = |start: (usize, u8), acc0: Perm4| -> Result<Option<Gluing>, TriError> {
            let mut cur = start;
            let mut acc = acc0;
            let mut steps = 0usize;
            loop {
                if let Some(&(local, m)) = self.redirect.get(&cur) {
                    return Ok(Some(Gluing {
                        tet: base + local,
                        face: m.apply(cur.1),
                        perm: m.after(acc),
                    }));
                }
                let &(rt, rf, w) = self.transit.get(&cur).ok_or_else(|| {
                    TriError::MoveBlocked(format!(
                        "no continuation through removed slot ({}, {})",
                        cur.0, cur.1
                    ))
                })?;
                acc = w.after(acc);
                match t.gluing(rt, rf) {
                    None => return Ok(None),
                    Some(g) => {
                        if let Some(new) = tet_map[g.tet] {
                            return Ok(Some(Gluing {
                                tet: new,
                                face: g.face,
                                perm: g.perm.after(acc),
                            }));
                        }
                        cur = (g.tet, g.face);
                        acc = g.perm.after(acc);
                        steps += 1;
                        if steps > 4 * self.removed.len() + 4 {
                            return Err(TriError::MoveBlocked(
                                "flattening chain does not reach the rest of the complex".into(),
                            ));
                        }
                    }
                }
            }
        };

        // Surviving tets keep their faces, rewired through the surgery.
        for tet in 0..n {
            let Some(new) = tet_map[tet] else { continue };
            for f in 0..4u8 {
                match t.gluing(tet, f) {
                    None => {}
                    Some(g) => {
                        if let Some(nt) = tet_map[g.tet] {
                            table[new][f as usize] = Some(Gluing {
                                tet: nt,
                                face: g.face,
                                perm: g.perm,
                            });
                        } else {
                            table[new][f as usize] = resolve((g.tet, g.face), g.perm)?;
                        }
                    }
                }
            }
        }

        // New tets: internal gluings first, then faces inherited through
        // redirect entries.
        for &(a, fa, b, fb, p) in &self.internal {
            table[base + a][fa as usize] = Some(Gluing {
                tet: base + b,
                face: fb,
                perm: p,
            });
            table[base + b][fb as usize] = Some(Gluing {
                tet: base + a,
                face: fa,
                perm: p.inverse(),
            });
        }
        for (&(ot, of), &(local, m)) in &self.redirect {
            let face_new = m.apply(of);
            match t.gluing(ot, of) {
                None => {}
                Some(g) => {
                    let entry = if let Some(nt) = tet_map[g.tet] {
                        Some(Gluing {
                            tet: nt,
                            face: g.face,
                            perm: g.perm.after(m.inverse()),
                        })
                    } else {
                        resolve((g.tet, g.face), g.perm.after(m.inverse()))?
                    };
                    table[base + local][face_new as usize] = entry;
                }
            }
        }

        let t2 = Triangulation::new(table).map_err(|e| {
            TriError::MoveBlocked(format!("rebuilt table is inconsistent: {e}"))
        })?;
        let mut embeddings = self.embeddings;
        for e in &mut embeddings {
            e.new_tet += base;
        }
        Ok(MoveOutcome {
            t: t2,
            tet_map,
            embeddings,
        })
    }
}

fn others3(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Replaces two tetrahedra sharing the given face by three around a new
/// central edge.
pub fn two_three(t: &Triangulation, tet: usize, face: u8) -> Result<MoveOutcome, TriError> {
    let g = t
        .gluing(tet, face)
        .ok_or_else(|| TriError::MoveBlocked("2-3 needs an interior face".into()))?;
    if g.tet == tet {
        return Err(TriError::MoveBlocked(
            "2-3 needs two distinct tetrahedra".into(),
        ));
    }
    let (a, b, p, fa, fb) = (tet, g.tet, g.perm, face, g.face);
    let us = super::perm::face_verts(fa);

    // New tet k has corners [apex of A, apex of B, u_i, u_j] with
    // {i,j} = {0,1,2} minus {k}.
    let pos_in = |k: usize, m: usize| -> u8 {
        let (i, _) = others3(k);
        if m == i {
            2
        } else {
            3
        }
    };
    let m_a = |k: usize| -> Perm4 {
        let (i, j) = others3(k);
        let mut im = [0u8; 4];
        im[fa as usize] = 0;
        im[us[k] as usize] = 1;
        im[us[i] as usize] = 2;
        im[us[j] as usize] = 3;
        Perm4::from_images(im)
    };
    let m_b = |k: usize| -> Perm4 {
        let (i, j) = others3(k);
        let mut im = [0u8; 4];
        im[fb as usize] = 1;
        im[p.apply(us[k]) as usize] = 0;
        im[p.apply(us[i]) as usize] = 2;
        im[p.apply(us[j]) as usize] = 3;
        Perm4::from_images(im)
    };

    let mut internal = Vec::new();
    for k in 0..3usize {
        for l in (k + 1)..3 {
            let m = 3 - k - l;
            let fk = pos_in(k, l);
            let fl = pos_in(l, k);
            let mut im = [0u8; 4];
            im[0] = 0;
            im[1] = 1;
            im[pos_in(k, m) as usize] = pos_in(l, m);
            im[pos_in(k, l) as usize] = pos_in(l, k);
            internal.push((k, fk, l, fl, Perm4::from_images(im)));
        }
    }

    let mut redirect = BTreeMap::new();
    let mut embeddings = Vec::new();
    for k in 0..3usize {
        redirect.insert((a, us[k]), (k, m_a(k)));
        redirect.insert((b, p.apply(us[k])), (k, m_b(k)));
        let mut va = [true; 4];
        va[us[k] as usize] = false;
        embeddings.push(Embedding {
            old_tet: a,
            new_tet: k,
            map: m_a(k),
            valid: va,
        });
        let mut vb = [true; 4];
        vb[p.apply(us[k]) as usize] = false;
        embeddings.push(Embedding {
            old_tet: b,
            new_tet: k,
            map: m_b(k),
            valid: vb,
        });
    }

    Surgery {
        removed: vec![a, b],
        added: 3,
        internal,
        redirect,
        transit: BTreeMap::new(),
        embeddings,
    }
    .apply(t)
}

/// One step of the fan walk around an edge.
#[derive(Clone, Copy, Debug)]
struct FanStep {
    tet: usize,
    /// Edge labels in this tet.
    a: u8,
    b: u8,
    /// Ring vertex left behind and ring vertex carried forward.
    behind: u8,
    ahead: u8,
}

/// Walks around edge `eidx` of `tet`. Returns the closed fan, or None if
/// the walk reaches a boundary face (the edge is a boundary edge).
fn fan_around(t: &Triangulation, tet: usize, eidx: u8) -> Option<Vec<FanStep>> {
    let (a0, b0) = EDGE_VERTS[eidx as usize];
    let others: Vec<u8> = (0..4u8).filter(|&x| x != a0 && x != b0).collect();
    let mut steps = Vec::new();
    let (mut cur, mut a, mut b, mut behind, mut ahead) = (tet, a0, b0, others[0], others[1]);
    loop {
        steps.push(FanStep {
            tet: cur,
            a,
            b,
            behind,
            ahead,
        });
        let g = t.gluing(cur, behind)?;
        let (na, nb, ncarried) = (g.perm.apply(a), g.perm.apply(b), g.perm.apply(ahead));
        let fresh = (0..4u8)
            .find(|&x| x != na && x != nb && x != ncarried)
            .expect("fourth corner");
        if g.tet == tet && na == a0 && nb == b0 && ncarried == others[0] {
            return Some(steps);
        }
        cur = g.tet;
        a = na;
        b = nb;
        behind = ncarried;
        ahead = fresh;
        if steps.len() > 4 * t.tet_count() {
            unreachable!("fan walk does not terminate");
        }
    }
}

/// Walks the open fan of a boundary edge from one boundary face to the
/// other. The caller must already know the edge is a boundary edge
/// (`fan_around` returned None), so both directions terminate.
fn fan_open(t: &Triangulation, tet: usize, eidx: u8) -> Vec<FanStep> {
    let (a0, b0) = EDGE_VERTS[eidx as usize];
    let others: Vec<u8> = (0..4u8).filter(|&x| x != a0 && x != b0).collect();
    // Rewind against the walk direction until the back face is boundary.
    let (mut cur, mut a, mut b, mut behind, mut ahead) = (tet, a0, b0, others[0], others[1]);
    let mut guard = 0usize;
    while let Some(g) = t.gluing(cur, ahead) {
        let nahead = g.perm.apply(behind);
        (cur, a, b) = (g.tet, g.perm.apply(a), g.perm.apply(b));
        (behind, ahead) = (g.face, nahead);
        guard += 1;
        assert!(guard <= 4 * t.tet_count(), "open fan rewind does not terminate");
    }
    let mut steps = Vec::new();
    loop {
        steps.push(FanStep {
            tet: cur,
            a,
            b,
            behind,
            ahead,
        });
        match t.gluing(cur, behind) {
            None => return steps,
            Some(g) => {
                let nbehind = g.perm.apply(ahead);
                (cur, a, b) = (g.tet, g.perm.apply(a), g.perm.apply(b));
                (behind, ahead) = (nbehind, g.face);
            }
        }
        assert!(
            steps.len() <= 4 * t.tet_count(),
            "open fan walk does not terminate"
        );
    }
}

/// Replaces the three tetrahedra around an interior degree-3 edge by two.
pub fn three_two(t: &Triangulation, tet: usize, eidx: u8) -> Result<MoveOutcome, TriError> {
    let fan = fan_around(t, tet, eidx)
        .ok_or_else(|| TriError::MoveBlocked("3-2 needs an interior edge".into()))?;
    if fan.len() != 3 {
        return Err(TriError::MoveBlocked(format!(
            "3-2 needs edge degree 3, found {}",
            fan.len()
        )));
    }
    let tets: BTreeSet<usize> = fan.iter().map(|s| s.tet).collect();
    if tets.len() != 3 {
        return Err(TriError::MoveBlocked(
            "3-2 needs three distinct tetrahedra".into(),
        ));
    }

    // New tets: local 0 holds the ring and the edge tail A at corner 3,
    // local 1 the ring and head B at corner 3; ring vertex U_k sits at
    // corner k of both.
    let mut redirect = BTreeMap::new();
    let mut embeddings = Vec::new();
    for (k, step) in fan.iter().enumerate() {
        let k3 = (k + 1) % 3;
        let missing = [0usize, 1, 2]
            .into_iter()
            .find(|&x| x != k && x != k3)
            .expect("third ring index");

        let mut ima = [0u8; 4];
        ima[step.a as usize] = 3;
        ima[step.b as usize] = missing as u8;
        ima[step.behind as usize] = k as u8;
        ima[step.ahead as usize] = k3 as u8;
        let map_a = Perm4::from_images(ima);

        let mut imb = [0u8; 4];
        imb[step.b as usize] = 3;
        imb[step.a as usize] = missing as u8;
        imb[step.behind as usize] = k as u8;
        imb[step.ahead as usize] = k3 as u8;
        let map_b = Perm4::from_images(imb);

        // Face opposite a (containing b and the ring pair) joins the new
        // tet around B; face opposite b joins the one around A.
        redirect.insert((step.tet, step.a), (1, map_b));
        redirect.insert((step.tet, step.b), (0, map_a));

        let mut va = [true; 4];
        va[step.b as usize] = false;
        embeddings.push(Embedding {
            old_tet: step.tet,
            new_tet: 0,
            map: map_a,
            valid: va,
        });
        let mut vb = [true; 4];
        vb[step.a as usize] = false;
        embeddings.push(Embedding {
            old_tet: step.tet,
            new_tet: 1,
            map: map_b,
            valid: vb,
        });
    }

    Surgery {
        removed: fan.iter().map(|s| s.tet).collect(),
        added: 2,
        internal: vec![(0, 3, 1, 3, Perm4::IDENTITY)],
        redirect,
        transit: BTreeMap::new(),
        embeddings,
    }
    .apply(t)
}

/// Every (tet, edge labels) incidence of the edge at `eidx` of `tet`,
/// together with whether the edge lies in the boundary. Unlike
/// `fan_around` this also walks open fans.
fn edge_incidences(t: &Triangulation, tet: usize, eidx: u8) -> (Vec<(usize, u8, u8)>, bool) {
    let (a0, b0) = EDGE_VERTS[eidx as usize];
    let others: Vec<u8> = (0..4u8).filter(|&x| x != a0 && x != b0).collect();
    let mut inc = vec![(tet, a0, b0)];
    let (mut cur, mut a, mut b, mut behind) = (tet, a0, b0, others[0]);
    let mut ahead = others[1];
    let boundary = loop {
        match t.gluing(cur, behind) {
            None => break true,
            Some(g) => {
                let (na, nb, ncarried) = (g.perm.apply(a), g.perm.apply(b), g.perm.apply(ahead));
                let fresh = (0..4u8)
                    .find(|&x| x != na && x != nb && x != ncarried)
                    .expect("fourth corner");
                if g.tet == tet && na == a0 && nb == b0 && ncarried == others[0] {
                    break false;
                }
                inc.push((g.tet, na, nb));
                cur = g.tet;
                a = na;
                b = nb;
                behind = ncarried;
                ahead = fresh;
            }
        }
        assert!(inc.len() <= 4 * t.tet_count(), "edge walk does not terminate");
    };
    if !boundary {
        return (inc, false);
    }
    // Open fan: also walk from the start in the other direction.
    let (mut cur, mut a, mut b, mut behind) = (tet, a0, b0, others[1]);
    loop {
        match t.gluing(cur, behind) {
            None => break,
            Some(g) => {
                let (na, nb) = (g.perm.apply(a), g.perm.apply(b));
                let fresh = (0..4u8)
                    .find(|&x| x != na && x != nb && x != g.face)
                    .expect("fourth corner");
                inc.push((g.tet, na, nb));
                cur = g.tet;
                a = na;
                b = nb;
                behind = fresh;
            }
        }
        assert!(inc.len() <= 4 * t.tet_count(), "edge walk does not terminate");
    }
    (inc, true)
}

/// Flattens the pillow formed by the two tetrahedra around an interior
/// degree-2 edge. With `allow_boundary` false the pillow must be buried in
/// the interior with its four outer faces glued to outside tetrahedra.
pub fn two_zero(
    t: &Triangulation,
    tet: usize,
    eidx: u8,
    allow_boundary: bool,
) -> Result<MoveOutcome, TriError> {
    let fan = fan_around(t, tet, eidx)
        .ok_or_else(|| TriError::MoveBlocked("2-0 needs an interior edge".into()))?;
    if fan.len() != 2 {
        return Err(TriError::MoveBlocked(format!(
            "2-0 needs edge degree 2, found {}",
            fan.len()
        )));
    }
    let (s0, s1) = (fan[0], fan[1]);
    if s0.tet == s1.tet {
        return Err(TriError::MoveBlocked(
            "2-0 needs two distinct tetrahedra".into(),
        ));
    }
    let q = t
        .gluing(s0.tet, s0.behind)
        .expect("interior fan crossing")
        .perm;
    // For a degree-2 edge the second crossing must close the pillow with
    // the same label correspondence.
    let back = t.gluing(s0.tet, s0.ahead);
    let expected = Gluing {
        tet: s1.tet,
        face: q.apply(s0.ahead),
        perm: q,
    };
    if back != Some(expected) {
        return Err(TriError::MoveBlocked(
            "the two tetrahedra do not close up into a pillow".into(),
        ));
    }

    // Flattening maps the equatorial edge of one tetrahedron onto that of
    // the other. If they are already the same edge the move would glue
    // that edge to itself, which pinches or disconnects the complex; if
    // both lie in the boundary the merged edge would be shared by four
    // boundary faces.
    let ring0 = edge_index(s0.behind, s0.ahead);
    let ring1 = edge_index(s1.behind, s1.ahead);
    let (inc, ring0_bd) = edge_incidences(t, s0.tet, ring0);
    if inc
        .iter()
        .any(|&(tt, x, y)| tt == s1.tet && edge_index(x, y) == ring1)
    {
        return Err(TriError::MoveBlocked(
            "2-0 would glue the equatorial edge to itself".into(),
        ));
    }
    if ring0_bd && edge_incidences(t, s1.tet, ring1).1 {
        return Err(TriError::MoveBlocked(
            "2-0 would pinch two boundary edges together".into(),
        ));
    }

    let pillow: BTreeSet<usize> = [s0.tet, s1.tet].into_iter().collect();
    let outer = [
        (s0.tet, s0.a),
        (s0.tet, s0.b),
        (s1.tet, q.apply(s0.a)),
        (s1.tet, q.apply(s0.b)),
    ];
    for &(ot, of) in &outer {
        match t.gluing(ot, of) {
            None => {
                if !allow_boundary {
                    return Err(TriError::MoveBlocked(
                        "2-0 would modify the boundary".into(),
                    ));
                }
            }
            Some(g) => {
                if pillow.contains(&g.tet) {
                    return Err(TriError::MoveBlocked(
                        "pillow is glued to itself".into(),
                    ));
                }
            }
        }
    }
    // A face may never end up glued to itself: the two sides of each
    // flattened pair must be distinct slots.
    for (x, y) in [(outer[0], outer[2]), (outer[1], outer[3])] {
        let gx = t.gluing(x.0, x.1);
        let gy = t.gluing(y.0, y.1);
        if let (Some(gx), Some(gy)) = (gx, gy) {
            if gx.tet == gy.tet && gx.face == gy.face {
                return Err(TriError::MoveBlocked(
                    "flattening would glue a face to itself".into(),
                ));
            }
        }
    }

    let mut transit = BTreeMap::new();
    transit.insert((s0.tet, s0.a), (s1.tet, q.apply(s0.a), q));
    transit.insert((s0.tet, s0.b), (s1.tet, q.apply(s0.b), q));
    transit.insert((s1.tet, q.apply(s0.a)), (s0.tet, s0.a, q.inverse()));
    transit.insert((s1.tet, q.apply(s0.b)), (s0.tet, s0.b, q.inverse()));

    Surgery {
        removed: vec![s0.tet, s1.tet],
        added: 0,
        internal: Vec::new(),
        redirect: BTreeMap::new(),
        transit,
        embeddings: Vec::new(),
    }
    .apply(t)
}

/// Collapses an interior edge with distinct endpoints, deleting its fan of
/// tetrahedra and identifying the two endpoint vertices. The standard link
/// conditions are checked first; the rebuilt complex is still validated by
/// the caller, which catches anything the quick checks miss.
pub fn collapse_edge(
    t: &Triangulation,
    skel: &Skeleton,
    tet: usize,
    eidx: u8,
    allow_boundary: bool,
) -> Result<MoveOutcome, TriError> {
    let class = skel.edge_class[tet][eidx as usize];
    let (va, vb) = skel.edge_endpoints(class);
    if va == vb {
        return Err(TriError::MoveBlocked("cannot collapse a loop edge".into()));
    }
    let (fan, open) = match fan_around(t, tet, eidx) {
        Some(f) => (f, false),
        None => {
            if !allow_boundary {
                return Err(TriError::MoveBlocked(
                    "cannot collapse a boundary edge here".into(),
                ));
            }
            (fan_open(t, tet, eidx), true)
        }
    };
    let tets: BTreeSet<usize> = fan.iter().map(|s| s.tet).collect();
    if tets.len() != fan.len() {
        return Err(TriError::MoveBlocked(
            "edge fan visits a tetrahedron twice".into(),
        ));
    }
    // The squeeze identifies each fan tet's two side faces. A boundary face
    // there would be glued onto whatever sits on the matching side, changing
    // the manifold, so the sides must stay interior; only the two walk faces
    // at the ends of an open fan may touch the boundary.
    for s in &fan {
        if t.gluing(s.tet, s.a).is_none() || t.gluing(s.tet, s.b).is_none() {
            return Err(TriError::MoveBlocked(
                "collapse would fold a boundary face".into(),
            ));
        }
    }
    // An interior edge joining two boundary vertices cannot collapse either:
    // merging them would glue two separate boundary discs together.
    if !open {
        let mut bverts = BTreeSet::new();
        for bt in 0..t.tet_count() {
            for f in 0..4u8 {
                if t.gluing(bt, f).is_none() {
                    for v in super::perm::face_verts(f) {
                        bverts.insert(skel.vertex_class[bt][v as usize]);
                    }
                }
            }
        }
        if bverts.contains(&va) && bverts.contains(&vb) {
            return Err(TriError::MoveBlocked(
                "interior edge joins two boundary vertices".into(),
            ));
        }
    }

    // Which endpoint class sits at the `a` label of the reference step: the
    // fan steps keep a consistent (a, b) orientation around the edge.
    let mut ring: BTreeSet<usize> = fan
        .iter()
        .map(|s| skel.vertex_class[s.tet][s.behind as usize])
        .collect();
    let ring_target = if open {
        let last = fan.last().expect("nonempty fan");
        ring.insert(skel.vertex_class[last.tet][last.ahead as usize]);
        fan.len() + 1
    } else {
        fan.len()
    };
    let ring = ring;

    // Vertex link condition: common neighbors of the endpoints are exactly
    // the ring.
    let (mut na, mut nb) = (BTreeSet::new(), BTreeSet::new());
    for c in 0..skel.edge_count() {
        if c == class {
            continue;
        }
        let (x, y) = skel.edge_endpoints(c);
        for (p, q) in [(x, y), (y, x)] {
            if p == va {
                na.insert(q);
            }
            if p == vb {
                nb.insert(q);
            }
        }
    }
    let common: BTreeSet<usize> = na.intersection(&nb).copied().collect();
    if common != ring {
        return Err(TriError::MoveBlocked(
            "endpoint links meet outside the edge link".into(),
        ));
    }

    // Edge link condition: edges opposite the endpoints in their triangles
    // may only meet at ring edges.
    let ring_edges: BTreeSet<usize> = fan
        .iter()
        .map(|s| skel.edge_class[s.tet][edge_index(s.behind, s.ahead) as usize])
        .collect();
    let (mut ea, mut eb) = (BTreeSet::new(), BTreeSet::new());
    for c in 0..skel.triangle_count() {
        let (rt, rf) = skel.tri_members[c][0];
        let vs = super::perm::face_verts(rf);
        for i in 0..3 {
            let corner = skel.vertex_class[rt][vs[i] as usize];
            let (x, y) = (vs[(i + 1) % 3], vs[(i + 2) % 3]);
            let opp = skel.edge_class[rt][edge_index(x, y) as usize];
            if corner == va {
                ea.insert(opp);
            }
            if corner == vb {
                eb.insert(opp);
            }
        }
    }
    let ecommon: BTreeSet<usize> = ea.intersection(&eb).copied().collect();
    if ecommon != ring_edges {
        return Err(TriError::MoveBlocked(
            "endpoint links share edges outside the edge link".into(),
        ));
    }

    // Triangle link condition: the edge link is a circle, so the endpoint
    // links may not share any triangle. With a fan of length 3 they can
    // while still passing the two checks above (a pillow over the ring),
    // and collapsing would then pinch the manifold.
    let (mut ta, mut tb) = (BTreeSet::new(), BTreeSet::new());
    for tet in 0..t.tet_count() {
        for corner in 0..4u8 {
            let v = skel.vertex_class[tet][corner as usize];
            if v == va {
                ta.insert(skel.tri_class[tet][corner as usize]);
            }
            if v == vb {
                tb.insert(skel.tri_class[tet][corner as usize]);
            }
        }
    }
    if ta.intersection(&tb).next().is_some() {
        return Err(TriError::MoveBlocked(
            "endpoint links share a triangle".into(),
        ));
    }

    // Vertex classes can repeat across a tetrahedron, so class-level link
    // tests alone are leaky: the closed star of the edge is an embedded
    // ball only if the ring is a simple circle disjoint from the
    // endpoints, no second edge joins the endpoints, and no tetrahedron
    // off the fan contains them both. Anything else would pinch rather
    // than collapse.
    if ring.len() != ring_target
        || ring_edges.len() != fan.len()
        || ring.contains(&va)
        || ring.contains(&vb)
    {
        return Err(TriError::MoveBlocked(
            "edge link is not a simple circle".into(),
        ));
    }
    for c in 0..skel.edge_count() {
        if c == class {
            continue;
        }
        let (x, y) = skel.edge_endpoints(c);
        if (x, y) == (va, vb) || (x, y) == (vb, va) {
            return Err(TriError::MoveBlocked(
                "a second edge joins the endpoints".into(),
            ));
        }
    }
    for tet2 in 0..t.tet_count() {
        let vc = skel.vertex_class[tet2];
        if vc.contains(&va) && vc.contains(&vb) && !tets.contains(&tet2) {
            return Err(TriError::MoveBlocked(
                "a tetrahedron joins the endpoints outside the fan".into(),
            ));
        }
    }

    // Collapsing a boundary edge also collapses it inside the boundary
    // surface, where the same condition applies one dimension down: the
    // endpoints may share no boundary-surface neighbors besides the two
    // ends of the fan arc.
    if open {
        let mut bedges = BTreeSet::new();
        for bt in 0..t.tet_count() {
            for f in 0..4u8 {
                if t.gluing(bt, f).is_none() {
                    let vs = super::perm::face_verts(f);
                    for i in 0..3 {
                        let e = edge_index(vs[i], vs[(i + 1) % 3]);
                        bedges.insert(skel.edge_class[bt][e as usize]);
                    }
                }
            }
        }
        let (mut sna, mut snb) = (BTreeSet::new(), BTreeSet::new());
        for &c in &bedges {
            if c == class {
                continue;
            }
            let (x, y) = skel.edge_endpoints(c);
            for (p, q) in [(x, y), (y, x)] {
                if p == va {
                    sna.insert(q);
                }
                if p == vb {
                    snb.insert(q);
                }
            }
        }
        let scommon: BTreeSet<usize> = sna.intersection(&snb).copied().collect();
        let first = skel.vertex_class[fan[0].tet][fan[0].behind as usize];
        let last_step = fan.last().expect("nonempty fan");
        let last = skel.vertex_class[last_step.tet][last_step.ahead as usize];
        let ends: BTreeSet<usize> = [first, last].into_iter().collect();
        if scommon != ends {
            return Err(TriError::MoveBlocked(
                "boundary links meet outside the edge link".into(),
            ));
        }
    }

    let mut transit = BTreeMap::new();
    for s in &fan {
        let sw = Perm4::transposition(s.a, s.b);
        transit.insert((s.tet, s.a), (s.tet, s.b, sw));
        transit.insert((s.tet, s.b), (s.tet, s.a, sw));
    }

    Surgery {
        removed: fan.iter().map(|s| s.tet).collect(),
        added: 0,
        internal: Vec::new(),
        redirect: BTreeMap::new(),
        transit,
        embeddings: Vec::new(),
    }
    .apply(t)
}

/// Removes a tetrahedron that meets the boundary in one, two, or three
/// faces. The union of its interior faces is the disc the rest of the
/// complex is attached along; removal is a homeomorphism when that disc
/// embeds, which the vertex distinctness conditions guarantee. Validity of
/// the remaining complex is checked by the rebuild.
pub fn shell_tet(t: &Triangulation, skel: &Skeleton, tet: usize) -> Result<MoveOutcome, TriError> {
    let bd: Vec<u8> = (0..4u8).filter(|&f| t.gluing(tet, f).is_none()).collect();
    if bd.is_empty() || bd.len() == 4 {
        return Err(TriError::MoveBlocked(
            "shelling needs one, two, or three boundary faces".into(),
        ));
    }
    let vc = skel.vertex_class[tet];
    let distinct = |vs: &[u8]| {
        let set: BTreeSet<usize> = vs.iter().map(|&v| vc[v as usize]).collect();
        set.len() == vs.len()
    };
    let ok = if bd.len() == 3 {
        let interior = (0..4u8).find(|f| !bd.contains(f)).expect("interior face");
        distinct(&super::perm::face_verts(interior))
    } else {
        distinct(&[0, 1, 2, 3])
    };
    if !ok {
        return Err(TriError::MoveBlocked(
            "attaching disc of the shell is not embedded".into(),
        ));
    }

    // Routing any neighbor gluing through an unglued face of the removed
    // tetrahedron turns that neighbor face into boundary.
    let mut transit = BTreeMap::new();
    for f in 0..4u8 {
        if !bd.contains(&f) {
            transit.insert((tet, f), (tet, bd[0], Perm4::IDENTITY));
        }
    }
    Surgery {
        removed: vec![tet],
        added: 0,
        internal: Vec::new(),
        redirect: BTreeMap::new(),
        transit,
        embeddings: Vec::new(),
    }
    .apply(t)
}

/// Folds the two boundary faces adjacent across a boundary edge onto each
/// other, closing the book whose spine is that edge. The tetrahedron count
/// is unchanged; the boundary loses two faces and the spine edge becomes
/// interior. Sound when the book (two triangles on four distinct vertex
/// classes) is embedded; the rebuild validates the rest.
pub fn close_book(
    t: &Triangulation,
    skel: &Skeleton,
    tet: usize,
    eidx: u8,
) -> Result<MoveOutcome, TriError> {
    let class = skel.edge_class[tet][eidx as usize];
    if !skel.edge_boundary[class] {
        return Err(TriError::MoveBlocked("spine must be a boundary edge".into()));
    }
    // The two boundary face slots whose triangle contains the spine,
    // counted with multiplicity.
    let mut pages: Vec<(usize, u8, u8)> = Vec::new();
    for bt in 0..t.tet_count() {
        for f in 0..4u8 {
            if t.gluing(bt, f).is_some() {
                continue;
            }
            let vs = super::perm::face_verts(f);
            for i in 0..3 {
                let e = edge_index(vs[i], vs[(i + 1) % 3]);
                if skel.edge_class[bt][e as usize] == class {
                    pages.push((bt, f, e));
                }
            }
        }
    }
    if pages.len() != 2 || (pages[0].0, pages[0].1) == (pages[1].0, pages[1].1) {
        return Err(TriError::MoveBlocked(
            "spine does not border two distinct boundary faces".into(),
        ));
    }
    let (ca, cb) = skel.edge_endpoints(class);
    if ca == cb {
        return Err(TriError::MoveBlocked("spine is a loop edge".into()));
    }
    // Local labels on each page: spine endpoints matched by vertex class,
    // plus the page apex.
    let label = |(pt, pf, pe): (usize, u8, u8)| -> Result<(u8, u8, u8), TriError> {
        let (x, y) = EDGE_VERTS[pe as usize];
        let (lx, ly) = if skel.vertex_class[pt][x as usize] == ca {
            (x, y)
        } else {
            (y, x)
        };
        let apex = super::perm::face_verts(pf)
            .into_iter()
            .find(|&v| v != x && v != y)
            .expect("page apex");
        if skel.vertex_class[pt][lx as usize] != ca || skel.vertex_class[pt][ly as usize] != cb {
            return Err(TriError::MoveBlocked(
                "spine endpoints are not distinct on the page".into(),
            ));
        }
        Ok((lx, ly, apex))
    };
    let (t1, f1, _) = pages[0];
    let (t2, f2, _) = pages[1];
    let (x1, y1, p1) = label(pages[0])?;
    let (x2, y2, p2) = label(pages[1])?;
    let quad: BTreeSet<usize> = [
        ca,
        cb,
        skel.vertex_class[t1][p1 as usize],
        skel.vertex_class[t2][p2 as usize],
    ]
    .into_iter()
    .collect();
    if quad.len() != 4 {
        return Err(TriError::MoveBlocked("book is not embedded".into()));
    }

    let mut images = [0u8; 4];
    images[x1 as usize] = x2;
    images[y1 as usize] = y2;
    images[p1 as usize] = p2;
    images[f1 as usize] = f2;
    let fold = Perm4::from_images(images);

    let n = t.tet_count();
    let mut table: Vec<[Option<Gluing>; 4]> = (0..n)
        .map(|tt| std::array::from_fn(|f| t.gluing(tt, f as u8)))
        .collect();
    table[t1][f1 as usize] = Some(Gluing {
        tet: t2,
        face: f2,
        perm: fold,
    });
    table[t2][f2 as usize] = Some(Gluing {
        tet: t1,
        face: f1,
        perm: fold.inverse(),
    });
    let t2new = Triangulation::new(table)
        .map_err(|e| TriError::MoveBlocked(format!("rebuilt table is inconsistent: {e}")))?;
    Ok(MoveOutcome {
        t: t2new,
        tet_map: (0..n).map(Some).collect(),
        embeddings: Vec::new(),
    })
}

/// Maps a vertex member through a move.
fn map_vertex_member(outcome: &MoveOutcome, tet: usize, corner: u8) -> Option<(usize, u8)> {
    if let Some(nt) = outcome.tet_map[tet] {
        return Some((nt, corner));
    }
    for e in &outcome.embeddings {
        if e.old_tet == tet && e.valid[corner as usize] {
            return Some((e.new_tet, e.map.apply(corner)));
        }
    }
    None
}

/// Maps an edge member through a move; the flag reports whether the
/// lo-to-hi sense flipped.
fn map_edge_member(outcome: &MoveOutcome, tet: usize, eidx: u8) -> Option<(usize, u8, bool)> {
    if let Some(nt) = outcome.tet_map[tet] {
        return Some((nt, eidx, false));
    }
    let (v, w) = EDGE_VERTS[eidx as usize];
    for e in &outcome.embeddings {
        if e.old_tet == tet && e.valid[v as usize] && e.valid[w as usize] {
            let (mv, mw) = (e.map.apply(v), e.map.apply(w));
            return Some((e.new_tet, edge_index(mv, mw), mv > mw));
        }
    }
    None
}

/// Carries a marked subcomplex through a move. None when some marked class
/// loses every member, except that a path step whose edge class is
/// `dropped` is removed from its path instead: a collapse of that edge
/// merges the step's endpoints, so the path stays continuous one step
/// shorter. A path may not lose its last step.
pub fn remap_subcomplex(
    old_skel: &Skeleton,
    sub: &SubComplex,
    outcome: &MoveOutcome,
    new_skel: &Skeleton,
    dropped: Option<usize>,
) -> Option<SubComplex> {
    let mut marked_vertices = BTreeMap::new();
    for (name, &class) in &sub.marked_vertices {
        let mapped = old_skel.vertex_members[class]
            .iter()
            .find_map(|&(t, c)| map_vertex_member(outcome, t, c))?;
        marked_vertices.insert(name.clone(), new_skel.vertex_class[mapped.0][mapped.1 as usize]);
    }
    let mut edge_paths = BTreeMap::new();
    for (name, path) in &sub.edge_paths {
        let mut steps = Vec::with_capacity(path.len());
        for &(class, fwd) in path {
            let mut found = None;
            for &(t, e) in &old_skel.edge_members[class] {
                if let Some((nt, ne, flip)) = map_edge_member(outcome, t, e) {
                    let lohi_old = fwd == old_skel.edge_aligned[t][e as usize];
                    let lohi_new = lohi_old != flip;
                    let nclass = new_skel.edge_class[nt][ne as usize];
                    let nfwd = lohi_new == new_skel.edge_aligned[nt][ne as usize];
                    found = Some((nclass, nfwd));
                    break;
                }
            }
            match found {
                Some(step) => steps.push(step),
                None if dropped == Some(class) => {}
                None => return None,
            }
        }
        if steps.is_empty() {
            return None;
        }
        edge_paths.insert(name.clone(), steps);
    }
    Some(SubComplex {
        marked_vertices,
        edge_paths,
    })
}

/// Validates a move outcome and carries the subcomplex across. Returns the
/// oriented triangulation and remapped subcomplex, or None if anything
/// fails; the input is untouched either way.
///
/// The caller's orientation is transported, not recomputed: surviving tets
/// keep their sign and a new tet inherits the sign of an embedded old one
/// times the parity of the embedding map. Coherence of the transported
/// signs is then checked from scratch.
fn adopt(
    cur: &Triangulation,
    old_skel: &Skeleton,
    sub: &SubComplex,
    outcome: MoveOutcome,
    dropped: Option<usize>,
) -> Option<(Triangulation, SubComplex)> {
    let or_old = cur.orientation()?;
    let mut t2 = outcome.t.clone();
    let mut signs = vec![0i8; t2.tet_count()];
    for (old, m) in outcome.tet_map.iter().enumerate() {
        if let Some(new) = m {
            signs[*new] = or_old[old];
        }
    }
    for e in &outcome.embeddings {
        let s = or_old[e.old_tet] * e.map.sign();
        if signs[e.new_tet] == 0 {
            signs[e.new_tet] = s;
        } else if signs[e.new_tet] != s {
            return None;
        }
    }
    if signs.iter().any(|&s| s == 0) {
        return None;
    }
    t2.orient_with(signs).ok()?;
    let new_skel = t2.skeleton().ok()?;
    let sub2 = remap_subcomplex(old_skel, sub, &outcome, &new_skel, dropped)?;
    sub2.validate(&t2).ok()?;
    Some((t2, sub2))
}

const MAX_PLATEAU: usize = 5;

/// Greedily shrinks a triangulation with 3-2, 2-0, and collapse moves,
/// escaping plateaus with deterministic 2-3 moves, while carrying the
/// marked subcomplex. Marked simplices are never destroyed: a move that
/// would lose or merge them is skipped. With `allow_boundary` false all
/// moves keep the boundary triangulation untouched.
///
/// Returns the best triangulation found, its subcomplex, and the number of
/// attempted move applications.
pub fn pachner_simplify_tracked(
    t: &Triangulation,
    sub: &SubComplex,
    budget: u64,
    allow_boundary: bool,
) -> Result<(Triangulation, SubComplex, u64), TriError> {
    simplify_impl(t, sub, budget, allow_boundary, false)
}

/// Like `pachner_simplify_tracked`, but marked edge paths are allowed to
/// shorten: collapsing a path step merges its endpoints and drops the step,
/// which keeps the embedded curve but not its step count. Every path keeps
/// at least one step, and distinct marked vertices are never merged.
pub fn pachner_condense(
    t: &Triangulation,
    sub: &SubComplex,
    budget: u64,
    allow_boundary: bool,
) -> Result<(Triangulation, SubComplex, u64), TriError> {
    simplify_impl(t, sub, budget, allow_boundary, true)
}

fn simplify_impl(
    t: &Triangulation,
    sub: &SubComplex,
    budget: u64,
    allow_boundary: bool,
    shorten: bool,
) -> Result<(Triangulation, SubComplex, u64), TriError> {
    let mut cur = t.clone();
    if cur.orientation().is_none() {
        cur.validate_and_orient()?;
    }
    sub.validate(&cur)?;
    let mut cur_sub = sub.clone();
    let mut best = (cur.clone(), cur_sub.clone());
    let mut used = 0u64;
    let mut plateau = 0usize;
    let mut round = 0usize;

    let path_classes = |s: &SubComplex| s.path_edge_classes();

    'outer: loop {
        // Greedy shrinking sweep.
        'sweep: loop {
            if used >= budget {
                break 'outer;
            }
            let skel = cur.skeleton()?;
            let preserved_e = path_classes(&cur_sub);
            let marked_v: BTreeSet<usize> = cur_sub.marked_vertices.values().copied().collect();
            for class in 0..skel.edge_count() {
                if used >= budget {
                    break 'outer;
                }
                let (mt, me) = skel.edge_members[class][0];
                let boundary = skel.edge_boundary[class];
                let (va, vb) = skel.edge_endpoints(class);
                let endpoints_free = va != vb && !(marked_v.contains(&va) && marked_v.contains(&vb));
                if preserved_e.contains(&class) {
                    // A marked path step may only go away by shortening: the
                    // collapse merges its endpoints, and the step is dropped
                    // from its path. Single-step paths must survive.
                    if !shorten || (boundary && !allow_boundary) || !endpoints_free {
                        continue;
                    }
                    let long_enough = cur_sub
                        .edge_paths
                        .values()
                        .find(|p| p.iter().any(|&(c, _)| c == class))
                        .is_some_and(|p| p.len() >= 2);
                    if !long_enough {
                        continue;
                    }
                    used += 1;
                    if let Ok(out) = collapse_edge(&cur, &skel, mt, me, allow_boundary) {
                        if let Some((t2, s2)) = adopt(&cur, &skel, &cur_sub, out, Some(class)) {
                            debug_assert_eq!(
                                t2.components().len(),
                                cur.components().len(),
                                "shortening collapse disconnected"
                            );
                            cur = t2;
                            cur_sub = s2;
                            continue 'sweep;
                        }
                    }
                    continue;
                }
                let deg = skel.edge_degree(class);
                if boundary && !allow_boundary {
                    continue;
                }
                if !boundary && deg == 3 {
                    used += 1;
                    if let Ok(out) = three_two(&cur, mt, me) {
                        if let Some((t2, s2)) = adopt(&cur, &skel, &cur_sub, out, None) {
                            debug_assert_eq!(
                                t2.components().len(),
                                cur.components().len(),
                                "3-2 disconnected"
                            );
                            cur = t2;
                            cur_sub = s2;
                            continue 'sweep;
                        }
                    }
                } else if !boundary && deg == 2 {
                    used += 1;
                    if let Ok(out) = two_zero(&cur, mt, me, allow_boundary) {
                        if let Some((t2, s2)) = adopt(&cur, &skel, &cur_sub, out, None) {
                            debug_assert_eq!(
                                t2.components().len(),
                                cur.components().len(),
                                "2-0 disconnected"
                            );
                            cur = t2;
                            cur_sub = s2;
                            continue 'sweep;
                        }
                    }
                }
                if endpoints_free {
                    used += 1;
                    if let Ok(out) = collapse_edge(&cur, &skel, mt, me, allow_boundary) {
                        if let Some((t2, s2)) = adopt(&cur, &skel, &cur_sub, out, None) {
                            debug_assert_eq!(
                                t2.components().len(),
                                cur.components().len(),
                                "collapse disconnected"
                            );
                            cur = t2;
                            cur_sub = s2;
                            continue 'sweep;
                        }
                    }
                }
            }
            break;
        }

        if cur.tet_count() < best.0.tet_count() {
            best = (cur.clone(), cur_sub.clone());
            plateau = 0;
        } else {
            plateau += 1;
        }
        if plateau > MAX_PLATEAU || used >= budget || cur.tet_count() <= 1 {
            break;
        }

        // Plateau escape: a few deterministic 2-3 moves at rotating spots.
        let mut spots: Vec<(usize, u8)> = Vec::new();
        for tet in 0..cur.tet_count() {
            for f in 0..4u8 {
                if let Some(g) = cur.gluing(tet, f) {
                    if g.tet > tet {
                        spots.push((tet, f));
                    }
                }
            }
        }
        if spots.is_empty() {
            break;
        }
        for j in 0..plateau {
            if used >= budget {
                break 'outer;
            }
            let idx = ((round + 1) * 7919 + j * 104_729) % spots.len();
            let (tet, f) = spots[idx];
            used += 1;
            let skel = cur.skeleton()?;
            if let Ok(out) = two_three(&cur, tet, f) {
                if let Some((t2, s2)) = adopt(&cur, &skel, &cur_sub, out, None) {
                    cur = t2;
                    cur_sub = s2;
                }
            }
            // Indices shift after a successful move; recompute the spots.
            spots.clear();
            for tet in 0..cur.tet_count() {
                for f in 0..4u8 {
                    if let Some(g) = cur.gluing(tet, f) {
                        if g.tet > tet {
                            spots.push((tet, f));
                        }
                    }
                }
            }
            if spots.is_empty() {
                break;
            }
        }
        round += 1;
    }

    if cur.tet_count() < best.0.tet_count() {
        best = (cur, cur_sub);
    }
    Ok((best.0, best.1, used))
}

/// Simplification without a named subcomplex: the given vertex and edge
/// classes are preserved, all moves stay interior, and only the resulting
/// triangulation is returned.
pub fn pachner_simplify(
    t: &Triangulation,
    preserved_vertices: &BTreeSet<usize>,
    preserved_edges: &BTreeSet<usize>,
    budget: u64,
) -> Result<Triangulation, TriError> {
    // Express the preserved classes as a nameless subcomplex: vertices are
    // marked directly; edges become single-step paths, so their endpoint
    // classes are marked too.
    let skel = t.skeleton()?;
    let mut sub = SubComplex::empty();
    for (i, &v) in preserved_vertices.iter().enumerate() {
        sub.marked_vertices.insert(format!("v{i}"), v);
    }
    for (i, &e) in preserved_edges.iter().enumerate() {
        let (a, b) = skel.edge_endpoints(e);
        for v in [a, b] {
            if !sub.marked_vertices.values().any(|&c| c == v) {
                let k = sub.marked_vertices.len();
                sub.marked_vertices.insert(format!("p{k}"), v);
            }
        }
        sub.edge_paths.insert(format!("e{i}"), vec![(e, true)]);
    }
    sub.validate(t)?;
    let (out, _, _) = pachner_simplify_tracked(t, &sub, budget, false)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::subdivide::barycentric_subdivide;
    use super::super::{free_tet, one_tet_solid_torus, two_tet_sphere};
    use super::*;

    fn groups(t: &Triangulation) -> Vec<(usize, Vec<u64>)> {
        let h = t.homology(false).unwrap();
        h.h.iter().map(|g| (g.rank, g.torsion.clone())).collect()
    }

    #[test]
    fn two_three_then_three_two_round_trips() {
        let t = two_tet_sphere();
        let out = two_three(&t, 0, 0).unwrap();
        let mut t3 = out.t;
        t3.validate_and_orient().unwrap();
        assert_eq!(t3.tet_count(), 3);
        assert!(t3.is_closed());
        assert_eq!(groups(&t3), groups(&t));

        // The new central edge has degree 3; collapsing it back via 3-2
        // returns to two tets.
        let skel = t3.skeleton().unwrap();
        let central = (0..skel.edge_count())
            .find(|&c| skel.edge_degree(c) == 3 && !skel.edge_boundary[c])
            .expect("central edge");
        let (mt, me) = skel.edge_members[central][0];
        let out = three_two(&t3, mt, me).unwrap();
        let mut t2 = out.t;
        t2.validate_and_orient().unwrap();
        assert_eq!(t2.tet_count(), 2);
        assert_eq!(groups(&t2), groups(&t));
    }

    #[test]
    fn moves_preserve_homology_and_validity() {
        // A deterministic orbit of 2-3 moves on a subdivided solid torus,
        // checking invariants at every step. The unsubdivided fixture has
        // only self-gluings, which 2-3 cannot use.
        let (mut t, _) =
            barycentric_subdivide(&one_tet_solid_torus(), &SubComplex::empty()).unwrap();
        let reference = groups(&t);
        for i in 0..6usize {
            let mut spots = Vec::new();
            for tet in 0..t.tet_count() {
                for f in 0..4u8 {
                    if let Some(g) = t.gluing(tet, f) {
                        if g.tet != tet {
                            spots.push((tet, f));
                        }
                    }
                }
            }
            if spots.is_empty() {
                break;
            }
            let (tet, f) = spots[(i * 13 + 5) % spots.len()];
            let out = match two_three(&t, tet, f) {
                Ok(o) => o,
                Err(_) => continue,
            };
            let mut t2 = out.t;
            t2.validate_and_orient().unwrap();
            assert_eq!(groups(&t2), reference, "homology changed at step {i}");
            assert_eq!(
                t2.boundary_face_count(),
                t.boundary_face_count(),
                "boundary changed at step {i}"
            );
            t = t2;
        }
        assert!(t.tet_count() > 1);
    }

    #[test]
    fn simplify_shrinks_subdivided_sphere() {
        let t = two_tet_sphere();
        let (big, _) = barycentric_subdivide(&t, &SubComplex::empty()).unwrap();
        assert_eq!(big.tet_count(), 48);
        let (small, _, used) =
            pachner_simplify_tracked(&big, &SubComplex::empty(), 10_000, false).unwrap();
        assert!(used > 0);
        assert!(small.tet_count() <= 4, "got {} tets", small.tet_count());
        assert!(small.is_closed());
        assert_eq!(groups(&small), groups(&t));
    }

    #[test]
    fn simplify_shrinks_subdivided_solid_torus_and_keeps_boundary() {
        let t = one_tet_solid_torus();
        let (big, _) = barycentric_subdivide(&t, &SubComplex::empty()).unwrap();
        let (small, _, _) =
            pachner_simplify_tracked(&big, &SubComplex::empty(), 20_000, false).unwrap();
        assert!(small.tet_count() < big.tet_count());
        assert_eq!(groups(&small), groups(&t));
        let b = small.boundary_surface().unwrap();
        assert_eq!(b.component_profile(), vec![(0, true)]);
        // Strictly interior moves keep the boundary triangulation size.
        assert_eq!(small.boundary_face_count(), big.boundary_face_count());
    }

    #[test]
    fn tracked_simplification_keeps_marked_path() {
        let t = free_tet();
        let skel = t.skeleton().unwrap();
        let mut sub = SubComplex::empty();
        sub.marked_vertices
            .insert("a".into(), skel.vertex_class[0][0]);
        sub.marked_vertices
            .insert("b".into(), skel.vertex_class[0][1]);
        sub.edge_paths
            .insert("e".into(), vec![(skel.edge_class[0][0], true)]);

        let (t1, sub1) = barycentric_subdivide(&t, &sub).unwrap();
        let (t2, sub2) = barycentric_subdivide(&t1, &sub1).unwrap();
        assert_eq!(t2.tet_count(), 24 * 24);
        assert_eq!(sub2.edge_paths["e"].len(), 4);

        let (small, ssub, _) = pachner_simplify_tracked(&t2, &sub2, 50_000, false).unwrap();
        ssub.validate(&small).unwrap();
        assert!(small.tet_count() < t2.tet_count());
        assert_eq!(groups(&small), groups(&t));
        assert_eq!(ssub.marked_vertices.len(), 2);
        assert_ne!(ssub.marked_vertices["a"], ssub.marked_vertices["b"]);
    }

    /// Step along `class` leaving `from`, encoded as (class, forward).
    fn step_from(skel: &Skeleton, class: usize, from: usize) -> (usize, bool) {
        let (tail, head) = skel.edge_endpoints(class);
        assert!(tail == from || head == from);
        (class, tail == from)
    }

    #[test]
    fn condense_shortens_open_path_to_one_step() {
        let t = two_tet_sphere();
        let skel = t.skeleton().unwrap();
        let v = |c: u8| skel.vertex_class[0][c as usize];
        let e = |a: u8, b: u8| skel.edge_class[0][edge_index(a, b) as usize];
        let mut sub = SubComplex::empty();
        sub.marked_vertices.insert("a".into(), v(0));
        sub.marked_vertices.insert("b".into(), v(2));
        sub.edge_paths.insert(
            "p".into(),
            vec![step_from(&skel, e(0, 1), v(0)), step_from(&skel, e(1, 2), v(1))],
        );
        sub.validate(&t).unwrap();

        let (big, bsub) = barycentric_subdivide(&t, &sub).unwrap();
        assert_eq!(bsub.edge_paths["p"].len(), 4);

        // Without shortening every step is pinned.
        let (_, kept, _) = pachner_simplify_tracked(&big, &bsub, 50_000, false).unwrap();
        assert_eq!(kept.edge_paths["p"].len(), 4);

        let (small, csub, _) = pachner_condense(&big, &bsub, 50_000, false).unwrap();
        csub.validate(&small).unwrap();
        assert_eq!(csub.edge_paths["p"].len(), 1);
        assert_eq!(csub.marked_vertices.len(), 2);
        assert_ne!(csub.marked_vertices["a"], csub.marked_vertices["b"]);
        assert!(small.is_closed());
        assert_eq!(groups(&small), groups(&t));
        assert!(small.tet_count() <= 8, "got {} tets", small.tet_count());
    }

    #[test]
    fn condense_keeps_at_least_one_step_on_a_closed_loop() {
        let t = two_tet_sphere();
        let skel = t.skeleton().unwrap();
        let v = |c: u8| skel.vertex_class[0][c as usize];
        let e = |a: u8, b: u8| skel.edge_class[0][edge_index(a, b) as usize];
        let mut sub = SubComplex::empty();
        sub.marked_vertices.insert("o".into(), v(0));
        sub.edge_paths.insert(
            "loop".into(),
            vec![
                step_from(&skel, e(0, 1), v(0)),
                step_from(&skel, e(1, 2), v(1)),
                step_from(&skel, e(0, 2), v(2)),
            ],
        );
        sub.validate(&t).unwrap();

        let (big, bsub) = barycentric_subdivide(&t, &sub).unwrap();
        assert_eq!(bsub.edge_paths["loop"].len(), 6);

        let (small, csub, _) = pachner_condense(&big, &bsub, 50_000, false).unwrap();
        csub.validate(&small).unwrap();
        let steps = &csub.edge_paths["loop"];
        assert!(!steps.is_empty() && steps.len() <= 3, "kept {}", steps.len());
        assert_eq!(csub.marked_vertices.len(), 1);
        assert!(small.is_closed());
        assert!(small.tet_count() <= 16, "got {} tets", small.tet_count());
        assert_eq!(groups(&small), groups(&t));
    }

    #[test]
    fn condense_never_shortens_boundary_steps() {
        let t = free_tet();
        let skel = t.skeleton().unwrap();
        let mut sub = SubComplex::empty();
        sub.marked_vertices
            .insert("a".into(), skel.vertex_class[0][0]);
        sub.marked_vertices
            .insert("b".into(), skel.vertex_class[0][1]);
        sub.edge_paths
            .insert("e".into(), vec![(skel.edge_class[0][0], true)]);
        let (big, bsub) = barycentric_subdivide(&t, &sub).unwrap();
        // Every step runs along the boundary, so condensing may move
        // nothing: step count and boundary size are both pinned.
        let (small, csub, _) = pachner_condense(&big, &bsub, 20_000, false).unwrap();
        csub.validate(&small).unwrap();
        assert_eq!(csub.edge_paths["e"].len(), bsub.edge_paths["e"].len());
        assert_eq!(small.boundary_face_count(), big.boundary_face_count());
    }

    #[test]
    fn collapse_rejects_loops_and_merged_marks() {
        let t = one_tet_solid_torus();
        let skel = t.skeleton().unwrap();
        // Every edge of this triangulation is a loop at the single vertex.
        for class in 0..skel.edge_count() {
            let (mt, me) = skel.edge_members[class][0];
            assert!(matches!(
                collapse_edge(&t, &skel, mt, me, false),
                Err(TriError::MoveBlocked(_))
            ));
        }
    }

    #[test]
    fn scratch_debug_torus_boundary() {
        let t = one_tet_solid_torus();
        let (big, _) = barycentric_subdivide(&t, &SubComplex::empty()).unwrap();
        let skel = big.skeleton().unwrap();
        for class in 0..skel.edge_count() {
            if !skel.edge_boundary[class] {
                continue;
            }
            let (mt, me) = skel.edge_members[class][0];
            let (va, vb) = skel.edge_endpoints(class);
            match collapse_edge(&big, &skel, mt, me, true) {
                Ok(_) => println!("class {class} ({va},{vb}): OK"),
                Err(e) => println!("class {class} ({va},{vb}): {e}"),
            }
        }
    }

    #[test]
    fn boundary_condense_shrinks_a_subdivided_ball() {
        let t = free_tet();
        let (big, bsub) = barycentric_subdivide(&t, &SubComplex::empty()).unwrap();
        assert_eq!(big.tet_count(), 24);

        // Interior moves alone cannot touch the boundary of a ball.
        let (fixed, _, _) = pachner_condense(&big, &bsub, 20_000, false).unwrap();
        assert_eq!(fixed.boundary_face_count(), big.boundary_face_count());

        let (small, _, _) = pachner_condense(&big, &bsub, 20_000, true).unwrap();
        assert!(small.tet_count() <= 4, "got {} tets", small.tet_count());
        assert!(small.boundary_face_count() < big.boundary_face_count());
        assert_eq!(groups(&small), groups(&t));
        let b = small.boundary_surface().unwrap();
        assert_eq!(b.component_profile(), vec![(2, true)]);
    }

    #[test]
    fn boundary_condense_preserves_solid_torus() {
        let t = one_tet_solid_torus();
        let (big, bsub) = barycentric_subdivide(&t, &SubComplex::empty()).unwrap();
        let (small, _, _) = pachner_condense(&big, &bsub, 50_000, true).unwrap();
        assert!(small.tet_count() < big.tet_count());
        assert!(small.boundary_face_count() < big.boundary_face_count());
        assert_eq!(groups(&small), groups(&t));
        let b = small.boundary_surface().unwrap();
        assert_eq!(b.component_profile(), vec![(0, true)]);
    }

    #[test]
    fn boundary_condense_keeps_tracked_boundary_cycle() {
        let t = free_tet();
        let skel = t.skeleton().unwrap();
        let v = |c: u8| skel.vertex_class[0][c as usize];
        let e = |a: u8, b: u8| skel.edge_class[0][edge_index(a, b) as usize];
        let mut sub = SubComplex::empty();
        sub.edge_paths.insert(
            "ring".into(),
            vec![
                step_from(&skel, e(0, 1), v(0)),
                step_from(&skel, e(1, 2), v(1)),
                step_from(&skel, e(0, 2), v(2)),
            ],
        );
        sub.validate(&t).unwrap();
        let (big, bsub) = barycentric_subdivide(&t, &sub).unwrap();
        assert_eq!(bsub.edge_paths["ring"].len(), 6);

        let (small, csub, _) = pachner_condense(&big, &bsub, 50_000, true).unwrap();
        csub.validate(&small).unwrap();
        let steps = &csub.edge_paths["ring"];
        assert!(!steps.is_empty(), "cycle vanished");
        assert_eq!(groups(&small), groups(&t));
        assert!(small.tet_count() < big.tet_count(), "nothing condensed");
        // Pattern steps must stay on the boundary surface.
        let sskel = small.skeleton().unwrap();
        for &(class, _) in steps {
            assert!(sskel.edge_boundary[class]);
        }
        let b = small.boundary_surface().unwrap();
        assert_eq!(b.component_profile(), vec![(2, true)]);
    }
}
