//! Plane-map scaffolding for layout: the diagram's rotation system is
//! enriched, without changing the embedded graph it presents, until it is a
//! simple maximal planar map. Arcs are subdivided twice so every original
//! site keeps its rotation; connector edges chain split components into one;
//! chord paths through fresh nodes remove repeated corners from face walks;
//! finally every face receives a hub joined to each corner. The result can
//! be drawn by the shift algorithm, and the diagram is the subgraph of
//! non-scaffold nodes.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagram::{Diagram, SiteRef};

use super::CompileError;

/// What a map node stands for in the diagram, if anything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum NodeTag {
    /// A graph vertex or a crossing.
    Site(SiteRef),
    /// The subdivision point of an arc nearer its tail (0) or head (1).
    ArcDummy(String, u8),
    /// Connector, chord, pad, or hub node; scaffolding only.
    Scaffold,
}

/// A connected plane map with explicit darts. `rot[u]` lists the darts
/// leaving `u` in counterclockwise order; darts pair up via `twin`.
pub(crate) struct PlaneMap {
    pub tags: Vec<NodeTag>,
    pub rot: Vec<Vec<usize>>,
    pub dart_node: Vec<usize>,
    pub dart_twin: Vec<usize>,
}

impl PlaneMap {
    fn add_node(&mut self, tag: NodeTag) -> usize {
        self.tags.push(tag);
        self.rot.push(Vec::new());
        self.tags.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.tags.len()
    }

    pub fn head(&self, d: usize) -> usize {
        self.dart_node[self.dart_twin[d]]
    }

    /// Adds the edge u-v, inserting the new darts at the given rotation
    /// positions (append when `None`). Returns the dart u->v.
    fn add_edge(&mut self, u: usize, pos_u: Option<usize>, v: usize, pos_v: Option<usize>) -> usize {
        let d_uv = self.dart_node.len();
        let d_vu = d_uv + 1;
        self.dart_node.push(u);
        self.dart_node.push(v);
        self.dart_twin.push(d_vu);
        self.dart_twin.push(d_uv);
        match pos_u {
            Some(i) => self.rot[u].insert(i, d_uv),
            None => self.rot[u].push(d_uv),
        }
        match pos_v {
            Some(i) => self.rot[v].insert(i, d_vu),
            None => self.rot[v].push(d_vu),
        }
        d_uv
    }

    fn pos_in_rot(&self, d: usize) -> usize {
        let u = self.dart_node[d];
        self.rot[u]
            .iter()
            .position(|&x| x == d)
            .expect("dart listed in its node rotation")
    }

    /// Face orbits: each face is the list of its darts; the corner after
    /// dart d sits at head(d). Successor: arrive at the head, turn one slot
    /// clockwise, leave along that dart.
    pub fn trace_faces(&self) -> Vec<Vec<usize>> {
        let next = |d: usize| -> usize {
            let t = self.dart_twin[d];
            let u = self.dart_node[t];
            let i = self.pos_in_rot(t);
            let len = self.rot[u].len();
            self.rot[u][(i + len - 1) % len]
        };
        let mut face_of = vec![usize::MAX; self.dart_node.len()];
        let mut faces = Vec::new();
        for d0 in 0..self.dart_node.len() {
            if face_of[d0] != usize::MAX {
                continue;
            }
            let fid = faces.len();
            let mut walk = Vec::new();
            let mut d = d0;
            while face_of[d] == usize::MAX {
                face_of[d] = fid;
                walk.push(d);
                d = next(d);
            }
            faces.push(walk);
        }
        faces
    }

    /// Adjacency sets (by node), ignoring rotation order.
    pub fn adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.node_count()];
        for d in 0..self.dart_node.len() {
            adj[self.dart_node[d]].insert(self.head(d));
        }
        adj
    }

    fn check_connected_euler(&self) -> Result<(), CompileError> {
        let v = self.node_count() as i64;
        let e = (self.dart_node.len() / 2) as i64;
        let f = self.trace_faces().len() as i64;
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(CompileError::Layout("map is not connected".into()));
        }
        if v - e + f != 2 {
            return Err(CompileError::Layout(format!(
                "map fails the sphere face count: V={v} E={e} F={f}"
            )));
        }
        Ok(())
    }

    /// Inserts the chord path head(d1)-z-head(d2) through a fresh node, at
    /// the face corners following d1 and d2.
    fn add_chord_path(&mut self, d1: usize, d2: usize) {
        let u = self.head(d1);
        let w = self.head(d2);
        let z = self.add_node(NodeTag::Scaffold);
        // The corner after dart d lies just clockwise of twin(d), so the
        // chord dart is inserted at twin(d)'s position.
        let pu = self.pos_in_rot(self.dart_twin[d1]);
        self.add_edge(u, Some(pu), z, None);
        let pw = self.pos_in_rot(self.dart_twin[d2]);
        self.add_edge(w, Some(pw), z, None);
    }

    /// Splits face walks until every face has at least 3 corners, all at
    /// distinct nodes. Preserves the embedding of the original subgraph.
    fn biconnect(&mut self) -> Result<(), CompileError> {
        let cap = 8 * self.dart_node.len() + 64;
        for _ in 0..cap {
            let faces = self.trace_faces();
            let mut fixed_one = false;
            for walk in &faces {
                if walk.len() == 1 {
                    return Err(CompileError::Layout(
                        "face walk of length 1; loops should have been subdivided".into(),
                    ));
                }
                if walk.len() == 2 {
                    self.add_chord_path(walk[0], walk[1]);
                    fixed_one = true;
                    break;
                }
                // A node occurring at two corners of one walk: connect the
                // two successor corners, provided they are distinct.
                let mut occ: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for (i, &d) in walk.iter().enumerate() {
                    occ.entry(self.head(d)).or_default().push(i);
                }
                let mut pick = None;
                'outer: for (_, positions) in occ.iter().filter(|(_, p)| p.len() > 1) {
                    for (a, b) in positions
                        .iter()
                        .flat_map(|&a| positions.iter().map(move |&b| (a, b)))
                        .filter(|(a, b)| a < b)
                    {
                        let s1 = walk[(a + 1) % walk.len()];
                        let s2 = walk[(b + 1) % walk.len()];
                        if self.head(s1) != self.head(s2) {
                            pick = Some((s1, s2));
                            break 'outer;
                        }
                    }
                }
                if let Some((s1, s2)) = pick {
                    self.add_chord_path(s1, s2);
                    fixed_one = true;
                    break;
                }
                if occ.values().any(|p| p.len() > 1) {
                    return Err(CompileError::Layout(
                        "face walk repeats a node with no splittable corner pair".into(),
                    ));
                }
            }
            if !fixed_one {
                return Ok(());
            }
        }
        Err(CompileError::Layout(
            "face splitting did not converge".into(),
        ))
    }

    /// Adds one hub per face, joined to every corner, then checks that all
    /// faces of the result are triangles with distinct corners.
    fn hub_faces(&mut self) -> Result<(), CompileError> {
        let faces = self.trace_faces();
        for walk in &faces {
            let hub = self.add_node(NodeTag::Scaffold);
            for &d in walk {
                let u = self.head(d);
                let pu = self.pos_in_rot(self.dart_twin[d]);
                self.add_edge(u, Some(pu), hub, None);
            }
        }
        for walk in self.trace_faces() {
            let corners: BTreeSet<usize> = walk.iter().map(|&d| self.head(d)).collect();
            if walk.len() != 3 || corners.len() != 3 {
                return Err(CompileError::Layout(format!(
                    "hubbed face is not a triangle: {} corners, {} distinct",
                    walk.len(),
                    corners.len()
                )));
            }
        }
        Ok(())
    }
}

/// Arc-end bookkeeping: for each (site, slot) the arc occupying it and
/// whether this is the arc's head end.
fn slot_table(d: &Diagram) -> BTreeMap<(SiteRef, usize), (String, u8)> {
    let mut table = BTreeMap::new();
    for e in d.edge_ids() {
        for step in d.walk(e).expect("edge listed by the diagram") {
            table.insert(
                (step.tail.site.clone(), step.tail.slot),
                (step.arc.clone(), 0u8),
            );
            table.insert(
                (step.head.site.clone(), step.head.slot),
                (step.arc.clone(), 1u8),
            );
        }
    }
    table
}

/// Builds the augmented map of a diagram. Empty diagrams are rejected here;
/// the caller special-cases them.
pub(crate) fn augment(d: &Diagram) -> Result<PlaneMap, CompileError> {
    let mut m = PlaneMap {
        tags: Vec::new(),
        rot: Vec::new(),
        dart_node: Vec::new(),
        dart_twin: Vec::new(),
    };

    // Sites in a fixed order: vertices, then crossings.
    let mut site_node: BTreeMap<SiteRef, usize> = BTreeMap::new();
    for v in d.vertex_ids() {
        let s = SiteRef::Vertex(v.clone());
        let n = m.add_node(NodeTag::Site(s.clone()));
        site_node.insert(s, n);
    }
    for c in d.crossing_ids() {
        let s = SiteRef::Crossing(c.clone());
        let n = m.add_node(NodeTag::Site(s.clone()));
        site_node.insert(s, n);
    }
    if m.node_count() == 0 {
        return Err(CompileError::Layout("empty diagram has no map".into()));
    }

    // Dummies per arc, then wire tail-site - d0 - d1 - head-site. Site
    // rotations must come out in slot order, so first create the darts per
    // site in slot order, then the dummy-dummy middles.
    let slots = slot_table(d);
    let mut arc_nodes: BTreeMap<String, [usize; 2]> = BTreeMap::new();
    for (_, (arc, _)) in slots.iter() {
        arc_nodes.entry(arc.clone()).or_insert_with(|| {
            let a = m.add_node(NodeTag::ArcDummy(arc.clone(), 0));
            let b = m.add_node(NodeTag::ArcDummy(arc.clone(), 1));
            [a, b]
        });
    }
    let rotation_of = |s: &SiteRef| -> Vec<String> {
        match s {
            SiteRef::Vertex(v) => d.rotation(v).to_vec(),
            SiteRef::Crossing(c) => d.crossing(c).expect("crossing listed").to_vec(),
        }
    };
    for (site, n) in &site_node {
        if matches!(site, SiteRef::Vertex(v) if d.rotation(v).is_empty()) {
            continue;
        }
        for slot in 0..rotation_of(site).len() {
            let (arc, end) = slots
                .get(&(site.clone(), slot))
                .ok_or_else(|| CompileError::Layout(format!("unused slot at {}", site.id())))?;
            let dummy = arc_nodes[arc][*end as usize];
            m.add_edge(*n, None, dummy, None);
        }
    }
    for (arc, [a, b]) in &arc_nodes {
        let _ = arc;
        m.add_edge(*a, None, *b, None);
    }

    // Chain components together with scaffold edges. Relative placement of
    // split components does not affect the embedded graph they present.
    let adj = m.adjacency();
    let mut comp = vec![usize::MAX; m.node_count()];
    let mut reps = Vec::new();
    for start in 0..m.node_count() {
        if comp[start] != usize::MAX {
            continue;
        }
        let cid = reps.len();
        reps.push(start);
        let mut stack = vec![start];
        comp[start] = cid;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if comp[w] == usize::MAX {
                    comp[w] = cid;
                    stack.push(w);
                }
            }
        }
    }
    for pair in reps.windows(2) {
        m.add_edge(pair[0], Some(0), pair[1], Some(0));
    }

    // A lone vertex still needs a disc to live in: pad with a triangle.
    if m.dart_node.is_empty() {
        let v = 0usize;
        let z1 = m.add_node(NodeTag::Scaffold);
        let z2 = m.add_node(NodeTag::Scaffold);
        m.add_edge(v, None, z1, None);
        m.add_edge(z1, None, z2, None);
        m.add_edge(z2, None, v, None);
    }

    m.check_connected_euler()?;
    m.biconnect()?;
    m.check_connected_euler()?;
    m.hub_faces()?;
    m.check_connected_euler()?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Diagram {
        Diagram::parse(text).unwrap()
    }

    #[test]
    fn augmented_unknot_is_a_hubbed_triangulation() {
        let d = parse("vertex v\nvnode v a a\nedge e a\n");
        let m = augment(&d).unwrap();
        // All faces triangles, Euler 2, simple adjacency.
        for walk in m.trace_faces() {
            assert_eq!(walk.len(), 3);
        }
        let adj = m.adjacency();
        for (u, nbrs) in adj.iter().enumerate() {
            assert!(!nbrs.contains(&u), "loop at {u}");
        }
        let e2: usize = adj.iter().map(|s| s.len()).sum();
        assert_eq!(e2, m.dart_node.len(), "parallel edges collapse adjacency");
    }

    #[test]
    fn flat_path_map_biconnects() {
        let d = parse(
            "vertex a\nvertex b\nvertex c\n\
             vnode a x\nvnode b x y\nvnode c y\n\
             edge e1 x\nedge e2 y\n",
        );
        let m = augment(&d).unwrap();
        for walk in m.trace_faces() {
            let corners: BTreeSet<usize> = walk.iter().map(|&dd| m.head(dd)).collect();
            assert_eq!(walk.len(), corners.len());
            assert_eq!(walk.len(), 3);
        }
    }

    #[test]
    fn split_components_are_connected_by_scaffold() {
        let d = parse(
            "vertex a\nvertex b\n\
             vnode a x x\nvnode b y y\n\
             edge e1 x\nedge e2 y\n",
        );
        let m = augment(&d).unwrap();
        // One connected map; scaffold nodes appear.
        assert!(m.tags.iter().any(|t| matches!(t, NodeTag::Scaffold)));
    }

    #[test]
    fn isolated_vertex_gets_padded() {
        let d = parse("vertex a\n");
        let m = augment(&d).unwrap();
        assert!(m.node_count() >= 4);
        for walk in m.trace_faces() {
            assert_eq!(walk.len(), 3);
        }
    }

    #[test]
    fn crossing_map_stays_planar() {
        // Figure-eight-like curl: one vertex, one crossing.
        let d = parse(
            "vertex v\nvnode v a d\ncrossing c a b b d\n\
             edge e a b d\n",
        );
        let m = augment(&d).unwrap();
        for walk in m.trace_faces() {
            assert_eq!(walk.len(), 3);
        }
    }
}
