//! Marked exteriors: the complement of a regular neighborhood of a spatial
//! graph in its ambient sphere, with the boundary surface decomposed into
//! labeled regions.
//!
//! [`build_exterior`] condenses the ambient sphere, subdivides it
//! barycentrically (twice by default), and discards every tetrahedron that
//! touches the graph subcomplex. What remains is a manifold with boundary;
//! each boundary triangle faces exactly one discarded neighborhood and is
//! labeled by it: a *vertex region* collects the triangles facing the star
//! of one graph vertex, an *edge region* those facing the star of one edge
//! path. Regions meet along circles of boundary edges, the *junctures*,
//! each separating one vertex region from one edge region. Junctures are
//! stored as directed cycles, traversed as the boundary of the vertex
//! region they bound, so the ambient orientation is visible in the data.
//!
//! For directed graphs each edge region records which of its two junctures
//! sits at the edge's target end. Every structural property the rest of
//! the pipeline relies on (regions partition the boundary, Euler
//! characteristics match vertex degrees, juncture counts, one boundary
//! component per graph component) is checked during construction and
//! reported as [`ExtError::Malformed`] rather than assumed.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graphs::DecoratedGraph;
use crate::tri::{
    barycentric_subdivide, edge_index, face_verts, pachner_condense, Gluing, Skeleton, SubComplex,
    TriError, Triangulation,
};

pub mod pattern;

pub use pattern::{flatten_pattern, recover_marking, FlattenedPattern, Recovered};

#[derive(Debug, Error)]
pub enum ExtError {
    /// The inputs do not describe a decorated graph subcomplex of a closed
    /// oriented triangulation.
    #[error("exterior input: {0}")]
    BadInput(String),
    /// A structural self-check of the carved complement failed.
    #[error("exterior structure: {0}")]
    Malformed(String),
    /// The requested surgery is not available on this input.
    #[error("exterior surgery: {0}")]
    Refused(String),
    #[error(transparent)]
    Tri(#[from] TriError),
}

/// What a boundary region is the frontier of.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// Frontier of the neighborhood of one graph vertex.
    Vertex { vertex: String, color: Option<u32> },
    /// Frontier of the neighborhood of one graph edge. `positive_end` is
    /// the juncture at the edge's target end; `None` on undirected graphs.
    Edge {
        edge: String,
        color: Option<u32>,
        positive_end: Option<usize>,
    },
}

impl RegionKind {
    pub fn is_vertex(&self) -> bool {
        matches!(self, RegionKind::Vertex { .. })
    }
}

/// One boundary region of a marked exterior.
#[derive(Clone, Debug)]
pub struct Region {
    pub kind: RegionKind,
    /// Boundary faces (tet, face) of the exterior lying in this region.
    pub faces: Vec<(usize, u8)>,
    /// Euler characteristic of the region as a closed subsurface.
    pub chi: i64,
    /// Junctures bounding this region.
    pub junctures: Vec<usize>,
    /// Boundary component carrying the region.
    pub component: usize,
}

/// A circle where a vertex region meets an edge region, directed as part
/// of the boundary of the vertex region.
#[derive(Clone, Debug)]
pub struct Juncture {
    pub vertex_region: usize,
    pub edge_region: usize,
    /// Boundary edge classes in traversal order.
    pub edges: Vec<usize>,
    /// Vertex classes in traversal order; `edges[i]` joins `verts[i]` to
    /// `verts[(i + 1) % n]`.
    pub verts: Vec<usize>,
}

/// The exterior of a spatial graph with its labeled boundary.
#[derive(Clone, Debug)]
pub struct MarkedExterior {
    /// Oriented triangulation of the complement, with the ambient
    /// orientation restricted to it.
    pub manifold: Triangulation,
    pub regions: Vec<Region>,
    /// Region of every boundary face.
    pub region_of: BTreeMap<(usize, u8), usize>,
    pub junctures: Vec<Juncture>,
    pub boundary_components: usize,
}

/// Carves the exterior of the marked subcomplex out of the sphere.
///
/// The sphere is first condensed (tracked simplification that may shorten
/// edge paths), then barycentrically subdivided `depth` times; `depth` is
/// 2 or 3. Two rounds already separate the neighborhoods of distinct
/// vertices and edges, so depth 3 exists to cross-check that results do
/// not depend on the neighborhood: both depths must produce exteriors
/// with equal region summaries and homology.
pub fn build_exterior(
    sphere: &Triangulation,
    sub: &SubComplex,
    graph: &DecoratedGraph,
    depth: u32,
) -> Result<MarkedExterior, ExtError> {
    if !(2..=3).contains(&depth) {
        return Err(ExtError::BadInput(format!(
            "neighborhood depth {depth} not supported; use 2 or 3"
        )));
    }
    if !sphere.is_closed() {
        return Err(ExtError::BadInput(
            "ambient triangulation has boundary".into(),
        ));
    }
    if sphere.orientation().is_none() {
        return Err(ExtError::BadInput(
            "ambient triangulation is not oriented".into(),
        ));
    }
    sub.validate(sphere)?;
    check_graph_matches(sphere, sub, graph)?;

    let budget = 400 * sphere.tet_count() as u64 + 20_000;
    let (mut k, mut marks, _) = pachner_condense(sphere, sub, budget, false)?;
    for _ in 0..depth {
        let (k2, m2) = barycentric_subdivide(&k, &marks)?;
        k = k2;
        marks = m2;
    }
    carve(&k, &marks, graph)
}

/// Checks that the subcomplex names exactly the graph's vertices and
/// edges and that each edge path runs from its source to its target.
fn check_graph_matches(
    sphere: &Triangulation,
    sub: &SubComplex,
    graph: &DecoratedGraph,
) -> Result<(), ExtError> {
    let gv: BTreeSet<&String> = graph.vertices().collect();
    let sv: BTreeSet<&String> = sub.marked_vertices.keys().collect();
    if gv != sv {
        return Err(ExtError::BadInput(
            "marked vertices do not match the graph's vertex set".into(),
        ));
    }
    let ge: BTreeSet<&String> = graph.edge_ids().collect();
    let se: BTreeSet<&String> = sub.edge_paths.keys().collect();
    if ge != se {
        return Err(ExtError::BadInput(
            "edge paths do not match the graph's edge set".into(),
        ));
    }
    let skel = sphere.skeleton()?;
    for (name, steps) in &sub.edge_paths {
        let (s, t) = graph
            .endpoints(name)
            .expect("edge id sets were checked equal");
        let walk = walk_vertices(&skel, steps);
        if walk.first() != Some(&sub.marked_vertices[s])
            || walk.last() != Some(&sub.marked_vertices[t])
        {
            return Err(ExtError::BadInput(format!(
                "path of edge {name} does not run from {s} to {t}"
            )));
        }
    }
    Ok(())
}

/// Vertex classes visited by a path, in order (length = steps + 1).
fn walk_vertices(skel: &Skeleton, steps: &[(usize, bool)]) -> Vec<usize> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    for (i, &(class, fwd)) in steps.iter().enumerate() {
        let (tail, head) = skel.edge_endpoints(class);
        let (a, b) = if fwd { (tail, head) } else { (head, tail) };
        if i == 0 {
            out.push(a);
        }
        out.push(b);
    }
    out
}

/// Boundary faces of an oriented triangulation with their vertex classes
/// listed in the orientation induced from the tetrahedra, and the edge
/// class under each directed pair of the triple.
pub(crate) struct BoundaryView {
    pub faces: Vec<(usize, u8)>,
    pub index: BTreeMap<(usize, u8), usize>,
    /// Directed vertex-class triple of each face.
    pub triple: Vec<[usize; 3]>,
    /// `cyc_class[i][j]` is the edge class under `(triple[i][j],
    /// triple[i][(j + 1) % 3])`.
    pub cyc_class: Vec<[usize; 3]>,
}

pub(crate) fn boundary_view(
    t: &Triangulation,
    skel: &Skeleton,
) -> Result<BoundaryView, ExtError> {
    let Some(signs) = t.orientation() else {
        return Err(ExtError::BadInput("triangulation is not oriented".into()));
    };
    let mut bv = BoundaryView {
        faces: Vec::new(),
        index: BTreeMap::new(),
        triple: Vec::new(),
        cyc_class: Vec::new(),
    };
    for tet in 0..t.tet_count() {
        for f in 0..4u8 {
            if t.gluing(tet, f).is_some() {
                continue;
            }
            let vs = face_verts(f);
            let positive = signs[tet] * (if f % 2 == 0 { 1 } else { -1 });
            let order = if positive > 0 {
                vs
            } else {
                [vs[0], vs[2], vs[1]]
            };
            let triple = order.map(|c| skel.vertex_class[tet][c as usize]);
            if triple[0] == triple[1] || triple[0] == triple[2] || triple[1] == triple[2] {
                return Err(ExtError::Malformed(
                    "boundary triangle with repeated vertex class".into(),
                ));
            }
            let cyc = [0, 1, 2].map(|j| {
                let e = edge_index(order[j], order[(j + 1) % 3]);
                skel.edge_class[tet][e as usize]
            });
            bv.index.insert((tet, f), bv.faces.len());
            bv.faces.push((tet, f));
            bv.triple.push(triple);
            bv.cyc_class.push(cyc);
        }
    }
    Ok(bv)
}

/// Map from directed boundary edges to the face containing them. On the
/// coherently oriented boundary each directed pair occurs exactly once.
pub(crate) fn directed_edge_map(
    bv: &BoundaryView,
) -> Result<BTreeMap<(usize, usize), usize>, ExtError> {
    let mut dir = BTreeMap::new();
    for (i, tri) in bv.triple.iter().enumerate() {
        for j in 0..3 {
            let key = (tri[j], tri[(j + 1) % 3]);
            if dir.insert(key, i).is_some() {
                return Err(ExtError::Malformed(
                    "directed boundary edge shared by two triangles".into(),
                ));
            }
        }
    }
    Ok(dir)
}

/// Which discarded neighborhood a tetrahedron of the subdivided sphere
/// belongs to, if any.
enum Owner<'a> {
    Kept,
    Vert(usize),
    Edge(&'a String, usize),
}

fn carve(
    k: &Triangulation,
    marks: &SubComplex,
    graph: &DecoratedGraph,
) -> Result<MarkedExterior, ExtError> {
    let skel = k.skeleton()?;
    let signs = k
        .orientation()
        .expect("condense and subdivision preserve orientation");

    let marked: BTreeMap<usize, &String> = marks
        .marked_vertices
        .iter()
        .map(|(name, &c)| (c, name))
        .collect();
    // Interior path vertices with their walk position, used both to
    // classify tetrahedra and to tell an edge's two ends apart.
    let mut interior: BTreeMap<usize, (&String, usize)> = BTreeMap::new();
    for (name, steps) in &marks.edge_paths {
        let walk = walk_vertices(&skel, steps);
        for (i, &v) in walk.iter().enumerate() {
            if marked.contains_key(&v) {
                continue;
            }
            if interior.insert(v, (name, i)).is_some() {
                return Err(ExtError::Malformed(
                    "path interior vertex reached twice".into(),
                ));
            }
        }
    }

    let n = k.tet_count();
    let mut owner: Vec<Owner> = Vec::with_capacity(n);
    for tet in 0..n {
        let mut vert: Option<usize> = None;
        let mut contact: Option<(&String, usize)> = None;
        for corner in skel.vertex_class[tet] {
            if let Some(&name) = marked.get(&corner) {
                match vert {
                    Some(prev) if prev != corner => {
                        return Err(ExtError::Malformed(format!(
                            "tetrahedron touches two marked vertices {} and {name}",
                            marked[&prev]
                        )))
                    }
                    _ => vert = Some(corner),
                }
            } else if let Some(&(name, pos)) = interior.get(&corner) {
                match contact {
                    Some((prev, _)) if prev != name => {
                        return Err(ExtError::Malformed(format!(
                            "tetrahedron touches two edge paths {prev} and {name}"
                        )))
                    }
                    Some((_, p)) => contact = Some((name, p.min(pos))),
                    None => contact = Some((name, pos)),
                }
            }
        }
        owner.push(match (vert, contact) {
            (Some(c), _) => Owner::Vert(c),
            (None, Some((name, pos))) => Owner::Edge(name, pos),
            (None, None) => Owner::Kept,
        });
    }

    // Extract the kept tetrahedra as a triangulation of their own.
    let mut back: Vec<Option<usize>> = vec![None; n];
    let mut kept: Vec<usize> = Vec::new();
    for (tet, o) in owner.iter().enumerate() {
        if matches!(o, Owner::Kept) {
            back[tet] = Some(kept.len());
            kept.push(tet);
        }
    }
    if kept.is_empty() {
        return Err(ExtError::Malformed("exterior has no tetrahedra".into()));
    }
    let tets: Vec<[Option<Gluing>; 4]> = kept
        .iter()
        .map(|&old| {
            let mut row = [None; 4];
            for f in 0..4u8 {
                let Some(g) = k.gluing(old, f) else {
                    unreachable!("the ambient triangulation is closed")
                };
                if let Some(new) = back[g.tet] {
                    row[f as usize] = Some(Gluing {
                        tet: new,
                        face: g.face,
                        perm: g.perm,
                    });
                }
            }
            row
        })
        .collect();
    let mut x = Triangulation::new(tets)?;
    x.orient_with(kept.iter().map(|&old| signs[old]).collect())?;
    if x.components().len() != 1 {
        return Err(ExtError::Malformed(
            "exterior of a graph in the sphere must be connected".into(),
        ));
    }

    // One region per graph vertex, then one per graph edge, in name order.
    let mut regions: Vec<Region> = Vec::new();
    let mut rid_of_vertex: BTreeMap<&String, usize> = BTreeMap::new();
    let mut rid_of_edge: BTreeMap<&String, usize> = BTreeMap::new();
    for v in graph.vertices() {
        rid_of_vertex.insert(v, regions.len());
        regions.push(Region {
            kind: RegionKind::Vertex {
                vertex: v.clone(),
                color: graph.vertex_color(v),
            },
            faces: Vec::new(),
            chi: 0,
            junctures: Vec::new(),
            component: 0,
        });
    }
    for e in graph.edge_ids() {
        rid_of_edge.insert(e, regions.len());
        regions.push(Region {
            kind: RegionKind::Edge {
                edge: e.clone(),
                color: graph.edge_color(e),
                positive_end: None,
            },
            faces: Vec::new(),
            chi: 0,
            junctures: Vec::new(),
            component: 0,
        });
    }

    // Label every boundary face by the neighborhood it faces.
    let mut region_of: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    let mut face_coord: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    for (new, &old) in kept.iter().enumerate() {
        for f in 0..4u8 {
            if x.gluing(new, f).is_some() {
                continue;
            }
            let g = k.gluing(old, f).expect("closed ambient triangulation");
            let rid = match owner[g.tet] {
                Owner::Kept => unreachable!("face is boundary only against a discarded tet"),
                Owner::Vert(c) => rid_of_vertex[marked[&c]],
                Owner::Edge(name, pos) => {
                    face_coord.insert((new, f), pos);
                    rid_of_edge[name]
                }
            };
            region_of.insert((new, f), rid);
            regions[rid].faces.push((new, f));
        }
    }
    for r in &regions {
        if r.faces.is_empty() {
            return Err(ExtError::Malformed(format!(
                "a graph element produced no boundary region: {:?}",
                r.kind
            )));
        }
    }

    let xs = x.skeleton()?;
    let bv = boundary_view(&x, &xs)?;
    if bv.faces.len() != region_of.len() {
        return Err(ExtError::Malformed(
            "boundary faces and region labels disagree".into(),
        ));
    }
    let fregion: Vec<usize> = bv.faces.iter().map(|key| region_of[key]).collect();

    // Each boundary edge class lies under exactly two boundary faces.
    let mut efaces: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, cyc) in bv.cyc_class.iter().enumerate() {
        for &c in cyc {
            efaces.entry(c).or_default().push(i);
        }
    }
    for (c, fs) in &efaces {
        if fs.len() != 2 {
            return Err(ExtError::Malformed(format!(
                "boundary edge class {c} lies under {} faces",
                fs.len()
            )));
        }
    }

    // Boundary components, and connectivity of each region.
    let mut comp_uf = UnionFind::new(bv.faces.len());
    let mut region_uf = UnionFind::new(bv.faces.len());
    for fs in efaces.values() {
        comp_uf.union(fs[0], fs[1]);
        if fregion[fs[0]] == fregion[fs[1]] {
            region_uf.union(fs[0], fs[1]);
        }
    }
    let mut comp_ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut component: Vec<usize> = vec![0; bv.faces.len()];
    for i in 0..bv.faces.len() {
        let root = comp_uf.find(i);
        let next = comp_ids.len();
        component[i] = *comp_ids.entry(root).or_insert(next);
    }
    let boundary_components = comp_ids.len();
    for (rid, r) in regions.iter_mut().enumerate() {
        let idxs: Vec<usize> = r.faces.iter().map(|key| bv.index[key]).collect();
        let root = region_uf.find(idxs[0]);
        if idxs.iter().any(|&i| region_uf.find(i) != root) {
            return Err(ExtError::Malformed(format!(
                "region {rid} is not connected"
            )));
        }
        r.component = component[idxs[0]];
        // Euler characteristic of the closed subsurface: distinct vertex
        // and edge classes incident to the region's faces.
        let mut vset = BTreeSet::new();
        let mut eset = BTreeSet::new();
        for &i in &idxs {
            vset.extend(bv.triple[i]);
            eset.extend(bv.cyc_class[i]);
        }
        r.chi = vset.len() as i64 - eset.len() as i64 + idxs.len() as i64;
    }

    // Junctures: boundary edges whose two faces lie in different regions.
    let mut jedges: BTreeMap<usize, usize> = BTreeMap::new(); // class -> vertex-side face
    for (&c, fs) in &efaces {
        let (r0, r1) = (fregion[fs[0]], fregion[fs[1]]);
        if r0 == r1 {
            continue;
        }
        match (regions[r0].kind.is_vertex(), regions[r1].kind.is_vertex()) {
            (true, false) => jedges.insert(c, fs[0]),
            (false, true) => jedges.insert(c, fs[1]),
            _ => {
                return Err(ExtError::Malformed(
                    "two regions of the same kind meet along a boundary edge".into(),
                ))
            }
        };
    }

    let dir = directed_edge_map(&bv)?;
    let mut junctures: Vec<Juncture> = Vec::new();
    let mut consumed: BTreeSet<usize> = BTreeSet::new();
    for (&c0, &vf0) in &jedges {
        if consumed.contains(&c0) {
            continue;
        }
        let j0 = (0..3)
            .find(|&j| bv.cyc_class[vf0][j] == c0)
            .expect("the class was read off this face");
        let start = (c0, bv.triple[vf0][j0], bv.triple[vf0][(j0 + 1) % 3]);
        let vreg = fregion[vf0];
        let other = efaces[&c0].iter().find(|&&f| f != vf0).copied();
        let ereg = fregion[other.expect("juncture edges lie under two faces")];

        let (mut c, mut u, mut w) = start;
        let mut fv = vf0;
        let mut verts = Vec::new();
        let mut edges = Vec::new();
        loop {
            if !consumed.insert(c) {
                return Err(ExtError::Malformed(
                    "juncture trace revisited a boundary edge".into(),
                ));
            }
            verts.push(u);
            edges.push(c);
            // Rotate around w through the vertex region to the next
            // juncture edge; its vertex-side face is the last one seen.
            let mut guard = 0usize;
            let next = loop {
                guard += 1;
                if guard > 3 * bv.faces.len() {
                    return Err(ExtError::Malformed(
                        "juncture trace did not close".into(),
                    ));
                }
                let tri = bv.triple[fv];
                let j = (0..3)
                    .find(|&j| tri[j] == w)
                    .expect("the rotation stays on faces containing w");
                let z = tri[(j + 1) % 3];
                let czw = bv.cyc_class[fv][j];
                let g = dir[&(z, w)];
                if fregion[g] == fregion[fv] {
                    fv = g;
                    continue;
                }
                if fregion[fv] != vreg || fregion[g] != ereg {
                    return Err(ExtError::Malformed(
                        "juncture does not separate one vertex region from one edge region"
                            .into(),
                    ));
                }
                break (czw, w, z);
            };
            if next == start {
                break;
            }
            (c, u, w) = next;
        }
        let id = junctures.len();
        regions[vreg].junctures.push(id);
        regions[ereg].junctures.push(id);
        junctures.push(Juncture {
            vertex_region: vreg,
            edge_region: ereg,
            edges,
            verts,
        });
    }
    if consumed.len() != jedges.len() {
        return Err(ExtError::Malformed(
            "juncture traces did not cover all region interfaces".into(),
        ));
    }
    // Junctures are links of disjoint graph pieces, so they are simple
    // and pairwise disjoint; the pattern layout depends on this.
    let mut jverts: BTreeSet<usize> = BTreeSet::new();
    for j in &junctures {
        for &v in &j.verts {
            if !jverts.insert(v) {
                return Err(ExtError::Malformed(
                    "junctures are not disjoint simple circles".into(),
                ));
            }
        }
    }

    // Structural checks against the graph.
    for r in &regions {
        match &r.kind {
            RegionKind::Vertex { vertex, .. } => {
                let deg = graph.degree(vertex) as i64;
                if r.junctures.len() as i64 != deg {
                    return Err(ExtError::Malformed(format!(
                        "vertex region {vertex} has {} junctures, degree is {deg}",
                        r.junctures.len()
                    )));
                }
                if r.chi != 2 - deg {
                    return Err(ExtError::Malformed(format!(
                        "vertex region {vertex} has Euler characteristic {}, expected {}",
                        r.chi,
                        2 - deg
                    )));
                }
            }
            RegionKind::Edge { edge, .. } => {
                if r.junctures.len() != 2 {
                    return Err(ExtError::Malformed(format!(
                        "edge region {edge} has {} junctures, expected 2",
                        r.junctures.len()
                    )));
                }
                if r.chi != 0 {
                    return Err(ExtError::Malformed(format!(
                        "edge region {edge} is not an annulus (Euler characteristic {})",
                        r.chi
                    )));
                }
            }
        }
    }

    // The two ends of a directed edge are told apart by how far along the
    // path the discarded tetrahedra behind the adjacent faces sit.
    if graph.directed() {
        for rid in 0..regions.len() {
            let RegionKind::Edge { ref edge, .. } = regions[rid].kind else {
                continue;
            };
            let edge = edge.clone();
            let js = regions[rid].junctures.clone();
            let min_coord = |jid: usize| -> Option<usize> {
                let jset: BTreeSet<usize> = junctures[jid].edges.iter().copied().collect();
                regions[rid]
                    .faces
                    .iter()
                    .filter(|key| {
                        bv.cyc_class[bv.index[*key]]
                            .iter()
                            .any(|c| jset.contains(c))
                    })
                    .map(|key| face_coord[key])
                    .min()
            };
            let (a, b) = (min_coord(js[0]), min_coord(js[1]));
            let (Some(a), Some(b)) = (a, b) else {
                return Err(ExtError::Malformed(format!(
                    "edge region {edge} has a juncture without adjacent faces"
                )));
            };
            if a == b {
                return Err(ExtError::Malformed(format!(
                    "cannot tell the two ends of edge {edge} apart"
                )));
            }
            let positive = if a > b { js[0] } else { js[1] };
            if let RegionKind::Edge {
                ref mut positive_end,
                ..
            } = regions[rid].kind
            {
                *positive_end = Some(positive);
            }
        }
    }

    // Region Euler characteristics must add up to the boundary's: each
    // juncture circle is counted by both of its regions and contributes 0.
    let mut comp_chi: Vec<i64> = vec![0; boundary_components];
    {
        let mut cv: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); boundary_components];
        let mut ce: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); boundary_components];
        let mut cf: Vec<i64> = vec![0; boundary_components];
        for i in 0..bv.faces.len() {
            let c = component[i];
            cv[c].extend(bv.triple[i]);
            ce[c].extend(bv.cyc_class[i]);
            cf[c] += 1;
        }
        for c in 0..boundary_components {
            comp_chi[c] = cv[c].len() as i64 - ce[c].len() as i64 + cf[c];
        }
    }
    let total: i64 = regions.iter().map(|r| r.chi).sum();
    if total != comp_chi.iter().sum::<i64>() {
        return Err(ExtError::Malformed(
            "region Euler characteristics do not add up to the boundary's".into(),
        ));
    }

    // One boundary component per graph component, with the genus the
    // graph's first Betti number dictates.
    let gcomps = graph.components();
    if gcomps.len() != boundary_components {
        return Err(ExtError::Malformed(format!(
            "{} graph components but {boundary_components} boundary components",
            gcomps.len()
        )));
    }
    for gc in &gcomps {
        let vcount = gc.len() as i64;
        let ecount = graph
            .edge_ids()
            .filter(|e| {
                let (s, _) = graph.endpoints(e).expect("edge listed by the graph");
                gc.contains(s)
            })
            .count() as i64;
        let first = gc.iter().next().expect("graph components are non-empty");
        let cid = regions[rid_of_vertex[first]].component;
        let on_comp = |name: &String, map: &BTreeMap<&String, usize>| {
            regions[map[name]].component == cid
        };
        if !gc.iter().all(|v| on_comp(v, &rid_of_vertex)) {
            return Err(ExtError::Malformed(
                "a graph component spread over several boundary components".into(),
            ));
        }
        if comp_chi[cid] != 2 * (vcount - ecount) {
            return Err(ExtError::Malformed(format!(
                "boundary component has Euler characteristic {}, graph component demands {}",
                comp_chi[cid],
                2 * (vcount - ecount)
            )));
        }
        if vcount == 1 && ecount == 0 {
            let alone = regions
                .iter()
                .filter(|r| r.component == cid)
                .count();
            if alone != 1 {
                return Err(ExtError::Malformed(
                    "an isolated vertex must own its whole boundary sphere".into(),
                ));
            }
        }
    }

    Ok(MarkedExterior {
        manifold: x,
        regions,
        region_of,
        junctures,
        boundary_components,
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[rb] = ra;
        }
    }
}

/// One region in a [`RegionSummary`], stripped of identity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RegionEntry {
    Vertex {
        color: Option<u32>,
        chi: i64,
        junctures: usize,
        /// Per juncture: color of the edge region across it, and whether
        /// the juncture is the positive end of that edge.
        ends: Vec<(Option<u32>, bool)>,
    },
    Edge {
        color: Option<u32>,
        /// Per juncture: color and Euler characteristic of the vertex
        /// region across it, and whether this is the positive end.
        ends: Vec<(Option<u32>, i64, bool)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ComponentSummary {
    pub euler: i64,
    pub regions: Vec<RegionEntry>,
}

/// Canonical description of a marked exterior's boundary: one entry per
/// boundary component, each a sorted list of region descriptors. Two
/// exteriors that differ only by relabeling regions, junctures, or
/// tetrahedra get equal summaries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RegionSummary {
    pub components: Vec<ComponentSummary>,
}

impl MarkedExterior {
    pub fn region_summary(&self) -> RegionSummary {
        let positive_at = |rid: usize, jid: usize| -> bool {
            match &self.regions[rid].kind {
                RegionKind::Edge { positive_end, .. } => *positive_end == Some(jid),
                RegionKind::Vertex { .. } => false,
            }
        };
        let mut comps: Vec<ComponentSummary> = (0..self.boundary_components)
            .map(|_| ComponentSummary {
                euler: 0,
                regions: Vec::new(),
            })
            .collect();
        for (rid, r) in self.regions.iter().enumerate() {
            let entry = match &r.kind {
                RegionKind::Vertex { color, .. } => {
                    let mut ends: Vec<(Option<u32>, bool)> = r
                        .junctures
                        .iter()
                        .map(|&j| {
                            let er = self.junctures[j].edge_region;
                            let RegionKind::Edge { color, .. } = &self.regions[er].kind else {
                                unreachable!("junctures bound one edge region")
                            };
                            (*color, positive_at(er, j))
                        })
                        .collect();
                    ends.sort();
                    RegionEntry::Vertex {
                        color: *color,
                        chi: r.chi,
                        junctures: r.junctures.len(),
                        ends,
                    }
                }
                RegionKind::Edge { color, .. } => {
                    let mut ends: Vec<(Option<u32>, i64, bool)> = r
                        .junctures
                        .iter()
                        .map(|&j| {
                            let vr = self.junctures[j].vertex_region;
                            let RegionKind::Vertex { color, .. } = &self.regions[vr].kind
                            else {
                                unreachable!("junctures bound one vertex region")
                            };
                            (*color, self.regions[vr].chi, positive_at(rid, j))
                        })
                        .collect();
                    ends.sort();
                    RegionEntry::Edge {
                        color: *color,
                        ends,
                    }
                }
            };
            comps[r.component].euler += r.chi;
            comps[r.component].regions.push(entry);
        }
        for c in &mut comps {
            c.regions.sort();
        }
        comps.sort();
        RegionSummary { components: comps }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_to_sphere;
    use crate::diagram::Diagram;

    fn exterior_of(text: &str, depth: u32) -> MarkedExterior {
        let d = Diagram::parse(text).expect("test diagram parses");
        let c = compile_to_sphere(&d).expect("test diagram compiles");
        build_exterior(&c.sphere, &c.sub, &c.graph, depth).expect("exterior builds")
    }

    fn corpus(name: &str) -> String {
        let path: std::path::PathBuf = [env!("CARGO_MANIFEST_DIR"), "corpus", name]
            .iter()
            .collect();
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"))
    }

    fn ranks(me: &MarkedExterior) -> [usize; 3] {
        let h = me.manifold.homology(false).expect("homology computes");
        assert!(
            h.h.iter().all(|g| g.torsion.is_empty()),
            "graph exteriors in the sphere have torsion-free homology"
        );
        [h.h[0].rank, h.h[1].rank, h.h[2].rank]
    }

    #[test]
    fn empty_graph_exterior_is_the_whole_sphere() {
        let me = exterior_of(&corpus("empty.sgd"), 2);
        assert!(me.manifold.is_closed());
        assert_eq!(ranks(&me), [1, 0, 0]);
        assert!(me.regions.is_empty());
        assert!(me.junctures.is_empty());
        assert_eq!(me.boundary_components, 0);
        assert!(me.region_summary().components.is_empty());
    }

    #[test]
    fn one_point_exterior_is_a_ball_with_one_sphere_region() {
        let me = exterior_of(&corpus("point-colored.sgd"), 2);
        assert_eq!(me.boundary_components, 1);
        assert_eq!(ranks(&me), [1, 0, 0]);
        assert_eq!(me.regions.len(), 1);
        let r = &me.regions[0];
        assert_eq!(
            r.kind,
            RegionKind::Vertex {
                vertex: "p".into(),
                color: Some(1)
            }
        );
        assert_eq!(r.chi, 2);
        assert!(r.junctures.is_empty());
        assert_eq!(r.faces.len(), me.region_of.len());
        assert_eq!(me.manifold.boundary_face_count(), me.region_of.len());
    }

    #[test]
    fn one_edge_exterior_is_a_ball_with_disc_annulus_disc() {
        let me = exterior_of(&corpus("one-edge.sgd"), 2);
        assert_eq!(me.boundary_components, 1);
        assert_eq!(ranks(&me), [1, 0, 0]);
        assert_eq!(me.junctures.len(), 2);
        let summary = me.region_summary();
        assert_eq!(summary.components.len(), 1);
        let comp = &summary.components[0];
        assert_eq!(comp.euler, 2);
        assert_eq!(
            comp.regions,
            vec![
                RegionEntry::Vertex {
                    color: None,
                    chi: 1,
                    junctures: 1,
                    ends: vec![(None, false)],
                },
                RegionEntry::Vertex {
                    color: None,
                    chi: 1,
                    junctures: 1,
                    ends: vec![(None, false)],
                },
                RegionEntry::Edge {
                    color: None,
                    ends: vec![(None, 1, false), (None, 1, false)],
                },
            ]
        );
    }

    #[test]
    fn unknot_loop_exterior_is_a_solid_torus() {
        let me = exterior_of(&corpus("unknot-loop.sgd"), 2);
        assert_eq!(me.boundary_components, 1);
        assert_eq!(ranks(&me), [1, 1, 0]);
        assert_eq!(me.regions.len(), 2);
        assert_eq!(me.junctures.len(), 2);
        for r in &me.regions {
            assert_eq!(r.chi, 0, "both regions of a loop exterior are annuli");
            assert_eq!(r.junctures.len(), 2);
        }
        // Undirected graph: no positive ends anywhere.
        let summary = me.region_summary();
        assert_eq!(summary.components[0].euler, 0);
        assert_eq!(
            summary.components[0].regions,
            vec![
                RegionEntry::Vertex {
                    color: None,
                    chi: 0,
                    junctures: 2,
                    ends: vec![(None, false), (None, false)],
                },
                RegionEntry::Edge {
                    color: None,
                    ends: vec![(None, 0, false), (None, 0, false)],
                },
            ]
        );
    }

    #[test]
    fn junctures_are_simple_directed_cycles() {
        let me = exterior_of(&corpus("unknot-loop.sgd"), 2);
        for j in &me.junctures {
            assert_eq!(j.edges.len(), j.verts.len());
            let distinct: BTreeSet<usize> = j.verts.iter().copied().collect();
            assert_eq!(distinct.len(), j.verts.len(), "juncture visits a vertex twice");
            assert!(j.regions_differ(&me));
        }
    }

    impl Juncture {
        fn regions_differ(&self, me: &MarkedExterior) -> bool {
            me.regions[self.vertex_region].kind.is_vertex()
                && !me.regions[self.edge_region].kind.is_vertex()
        }
    }

    #[test]
    fn directed_loop_marks_exactly_one_positive_end() {
        let me = exterior_of(&corpus("directed-loop.sgd"), 2);
        let edge = me
            .regions
            .iter()
            .find(|r| !r.kind.is_vertex())
            .expect("the loop has an edge region");
        let RegionKind::Edge { positive_end, .. } = &edge.kind else {
            unreachable!()
        };
        let positive = positive_end.expect("directed edges mark a positive end");
        assert!(edge.junctures.contains(&positive));
        let summary = me.region_summary();
        let flags: Vec<bool> = summary.components[0]
            .regions
            .iter()
            .filter_map(|r| match r {
                RegionEntry::Edge { ends, .. } => {
                    Some(ends.iter().map(|&(_, _, m)| m).collect::<Vec<_>>())
                }
                RegionEntry::Vertex { .. } => None,
            })
            .next()
            .expect("summary lists the edge region");
        assert_eq!(flags, vec![false, true]);
    }

    #[test]
    fn path_exterior_with_colors_keeps_them_on_regions() {
        let me = exterior_of(&corpus("colored-path.sgd"), 2);
        assert_eq!(ranks(&me), [1, 0, 0]);
        let summary = me.region_summary();
        assert_eq!(summary.components.len(), 1);
        let colors: Vec<Option<u32>> = summary.components[0]
            .regions
            .iter()
            .map(|r| match r {
                RegionEntry::Vertex { color, .. } | RegionEntry::Edge { color, .. } => *color,
            })
            .collect();
        assert_eq!(
            colors,
            vec![Some(0), Some(0), Some(1), Some(5), Some(7)],
            "vertex colors 0,0,1 and edge colors 5,7 survive into the summary"
        );
    }

    #[test]
    fn split_union_exterior_has_two_boundary_components() {
        let me = exterior_of(&corpus("split-union.sgd"), 2);
        assert_eq!(me.boundary_components, 2);
        let summary = me.region_summary();
        assert_eq!(summary.components.len(), 2);
    }

    #[test]
    fn depth_three_matches_depth_two() {
        for name in ["point-colored.sgd", "one-edge.sgd"] {
            let text = corpus(name);
            let d2 = exterior_of(&text, 2);
            let d3 = exterior_of(&text, 3);
            assert_eq!(
                d2.region_summary(),
                d3.region_summary(),
                "{name}: summaries differ between depths"
            );
            assert_eq!(
                d2.manifold.homology(false).unwrap(),
                d3.manifold.homology(false).unwrap(),
                "{name}: homology differs between depths"
            );
            assert_eq!(
                d2.manifold.homology(true).unwrap(),
                d3.manifold.homology(true).unwrap(),
                "{name}: relative homology differs between depths"
            );
        }
    }

    #[test]
    fn depth_must_be_two_or_three() {
        let d = Diagram::parse(&corpus("point.sgd")).unwrap();
        let c = compile_to_sphere(&d).unwrap();
        for depth in [0, 1, 4] {
            assert!(matches!(
                build_exterior(&c.sphere, &c.sub, &c.graph, depth),
                Err(ExtError::BadInput(_))
            ));
        }
    }

    #[test]
    fn mismatched_graph_is_rejected() {
        let d = Diagram::parse(&corpus("one-edge.sgd")).unwrap();
        let c = compile_to_sphere(&d).unwrap();
        let other = DecoratedGraph::one_point("u", None);
        assert!(matches!(
            build_exterior(&c.sphere, &c.sub, &other, 2),
            Err(ExtError::BadInput(_))
        ));
    }

    #[test]
    fn summaries_tell_the_examples_apart() {
        let summaries: Vec<RegionSummary> = [
            "empty.sgd",
            "point.sgd",
            "point-colored.sgd",
            "one-edge.sgd",
            "unknot-loop.sgd",
            "colored-path.sgd",
        ]
        .iter()
        .map(|n| exterior_of(&corpus(n), 2).region_summary())
        .collect();
        for i in 0..summaries.len() {
            for j in (i + 1)..summaries.len() {
                assert_ne!(summaries[i], summaries[j]);
            }
        }
    }
}
