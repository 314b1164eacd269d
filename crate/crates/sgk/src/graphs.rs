//! Decorated abstract multigraphs and trees of labeled parts.
//!
//! This layer knows nothing about embeddings. It supplies the combinatorial
//! services the rest of the pipeline leans on: decorated-graph isomorphism
//! search (with optional pinned vertices), canonical encodings for
//! fingerprints, and the bipartite tree skeletons that organize blocks of a
//! decomposition together with their realization as a quotient graph.
//!
//! Conventions: vertex and edge ids are caller-supplied strings ordered
//! lexicographically wherever a deterministic order is needed. Loops are
//! edges with equal endpoints and add two to the degree of their vertex.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {edge} references unknown vertex {vertex}")]
    UnknownVertex { edge: String, vertex: String },
    #[error("coloring mentions unknown element {0}")]
    UnknownColoredElement(String),
    #[error("coloring misses element {0}")]
    MissingColor(String),
    #[error("graphs have different decoration types")]
    DecorationMismatch,
    #[error("pinned vertex {0} does not exist")]
    UnknownPinnedVertex(String),
    #[error("invalid tree skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("vertex colors disagree at glued vertex class containing {0}")]
    ColorClashAtGluing(String),
}

/// Which decorations a graph carries. Isomorphisms are only sought between
/// graphs of equal decoration type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecorationType {
    pub vertex_colored: bool,
    pub edge_colored: bool,
    pub directed: bool,
}

/// A finite multigraph with optional vertex colors, edge colors and edge
/// directions. Loops and parallel edges are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoratedGraph {
    vertices: BTreeSet<String>,
    /// Endpoints per edge id. For directed graphs the pair is (source,
    /// target); for undirected graphs it is normalized to lexicographic
    /// order. Loops store the vertex twice.
    edges: BTreeMap<String, (String, String)>,
    vertex_colors: Option<BTreeMap<String, u32>>,
    edge_colors: Option<BTreeMap<String, u32>>,
    directed: bool,
}

impl DecoratedGraph {
    pub fn new(
        vertices: BTreeSet<String>,
        mut edges: BTreeMap<String, (String, String)>,
        vertex_colors: Option<BTreeMap<String, u32>>,
        edge_colors: Option<BTreeMap<String, u32>>,
        directed: bool,
    ) -> Result<Self, GraphError> {
        for (e, (a, b)) in &edges {
            for v in [a, b] {
                if !vertices.contains(v) {
                    return Err(GraphError::UnknownVertex {
                        edge: e.clone(),
                        vertex: v.clone(),
                    });
                }
            }
        }
        if !directed {
            for (_, pair) in edges.iter_mut() {
                if pair.0 > pair.1 {
                    std::mem::swap(&mut pair.0, &mut pair.1);
                }
            }
        }
        if let Some(vc) = &vertex_colors {
            for v in vc.keys() {
                if !vertices.contains(v) {
                    return Err(GraphError::UnknownColoredElement(v.clone()));
                }
            }
            for v in &vertices {
                if !vc.contains_key(v) {
                    return Err(GraphError::MissingColor(v.clone()));
                }
            }
        }
        if let Some(ec) = &edge_colors {
            for e in ec.keys() {
                if !edges.contains_key(e) {
                    return Err(GraphError::UnknownColoredElement(e.clone()));
                }
            }
            for e in edges.keys() {
                if !ec.contains_key(e) {
                    return Err(GraphError::MissingColor(e.clone()));
                }
            }
        }
        Ok(DecoratedGraph {
            vertices,
            edges,
            vertex_colors,
            edge_colors,
            directed,
        })
    }

    /// The empty graph.
    pub fn empty() -> Self {
        DecoratedGraph {
            vertices: BTreeSet::new(),
            edges: BTreeMap::new(),
            vertex_colors: None,
            edge_colors: None,
            directed: false,
        }
    }

    /// A single vertex, optionally colored.
    pub fn one_point(id: &str, color: Option<u32>) -> Self {
        let mut vertices = BTreeSet::new();
        vertices.insert(id.to_string());
        DecoratedGraph {
            vertices,
            edges: BTreeMap::new(),
            vertex_colors: color.map(|c| {
                let mut m = BTreeMap::new();
                m.insert(id.to_string(), c);
                m
            }),
            edge_colors: None,
            directed: false,
        }
    }

    pub fn decoration_type(&self) -> DecorationType {
        DecorationType {
            vertex_colored: self.vertex_colors.is_some(),
            edge_colored: self.edge_colors.is_some(),
            directed: self.directed,
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = &String> {
        self.vertices.iter()
    }

    pub fn has_vertex(&self, v: &str) -> bool {
        self.vertices.contains(v)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = &String> {
        self.edges.keys()
    }

    pub fn endpoints(&self, e: &str) -> Option<&(String, String)> {
        self.edges.get(e)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_loop(&self, e: &str) -> bool {
        self.edges.get(e).map(|(a, b)| a == b).unwrap_or(false)
    }

    pub fn vertex_color(&self, v: &str) -> Option<u32> {
        self.vertex_colors.as_ref().and_then(|m| m.get(v).copied())
    }

    pub fn edge_color(&self, e: &str) -> Option<u32> {
        self.edge_colors.as_ref().and_then(|m| m.get(e).copied())
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    /// Loops count twice.
    pub fn degree(&self, v: &str) -> usize {
        let mut d = 0;
        for (a, b) in self.edges.values() {
            if a == v {
                d += 1;
            }
            if b == v {
                d += 1;
            }
        }
        d
    }

    pub fn loop_count(&self, v: &str) -> usize {
        self.edges.values().filter(|(a, b)| a == v && b == v).count()
    }

    /// Connected components as sorted vertex sets, sorted by least vertex.
    pub fn components(&self) -> Vec<BTreeSet<String>> {
        let mut seen: BTreeSet<&String> = BTreeSet::new();
        let mut adj: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
        for (a, b) in self.edges.values() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut out = Vec::new();
        for v in &self.vertices {
            if seen.contains(v) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::new();
            queue.push_back(v);
            seen.insert(v);
            while let Some(u) = queue.pop_front() {
                comp.insert(u.clone());
                if let Some(ns) = adj.get(u) {
                    for n in ns {
                        if seen.insert(n) {
                            queue.push_back(n);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// A tree is nonempty, connected and acyclic; loops and parallel edges
    /// are cycles, so a connected graph with one fewer edge than vertices
    /// qualifies.
    pub fn is_tree(&self) -> bool {
        !self.vertices.is_empty()
            && self.edge_count() + 1 == self.vertex_count()
            && self.is_connected()
    }

    /// Vertices of degree exactly one.
    pub fn leaves(&self) -> Vec<String> {
        self.vertices
            .iter()
            .filter(|v| self.degree(v) == 1)
            .cloned()
            .collect()
    }

    pub fn is_one_point(&self) -> bool {
        self.vertices.len() == 1 && self.edges.is_empty()
    }

    /// Exactly two vertices joined by a single edge, nothing else.
    pub fn is_one_edge(&self) -> bool {
        self.vertices.len() == 2 && self.edges.len() == 1 && {
            let (a, b) = self.edges.values().next().unwrap();
            a != b
        }
    }

    /// Invariant used to prune isomorphism search. Equal for vertices that
    /// can correspond under some isomorphism.
    fn vertex_invariant(&self, v: &str) -> VertexInvariant {
        let mut in_deg = 0usize;
        let mut out_deg = 0usize;
        let mut incident_colors: Vec<(Option<u32>, bool)> = Vec::new();
        for (a, b) in self.edges.values() {
            if self.directed {
                if a == v {
                    out_deg += 1;
                }
                if b == v {
                    in_deg += 1;
                }
            }
        }
        for (e, (a, b)) in &self.edges {
            if a == v || b == v {
                let is_loop = a == b;
                incident_colors.push((self.edge_color(e), is_loop));
                if is_loop {
                    incident_colors.push((self.edge_color(e), is_loop));
                }
            }
        }
        incident_colors.sort();
        VertexInvariant {
            degree: self.degree(v),
            color: self.vertex_color(v),
            loops: self.loop_count(v),
            in_deg,
            out_deg,
            incident_colors,
        }
    }

    /// Multiset signature of the edge bundle between an ordered vertex pair.
    /// For undirected graphs callers pass the normalized pair.
    fn bundle(&self, a: &str, b: &str) -> BTreeMap<BundleKey, Vec<String>> {
        let mut out: BTreeMap<BundleKey, Vec<String>> = BTreeMap::new();
        for (e, (x, y)) in &self.edges {
            let matches = if self.directed {
                x == a && y == b
            } else {
                (x == a && y == b) || (x == b && y == a)
            };
            if matches {
                // Direction only discriminates bundles in directed graphs.
                let key = BundleKey {
                    color: self.edge_color(e),
                    forward: !self.directed || x == a,
                };
                out.entry(key).or_default().push(e.clone());
            }
        }
        for v in out.values_mut() {
            v.sort();
        }
        out
    }

    /// Canonical text encoding: equal strings exactly for isomorphic graphs
    /// of equal decoration type. Exponential in the worst case but pruned;
    /// intended for the small graphs this pipeline handles.
    pub fn canonical_encoding(&self) -> String {
        let verts: Vec<&String> = self.vertices.iter().collect();
        let n = verts.len();
        if n == 0 {
            return format!(
                "g|{}{}{}|0|",
                self.vertex_colors.is_some() as u8,
                self.edge_colors.is_some() as u8,
                self.directed as u8
            );
        }
        let invariants: Vec<VertexInvariant> =
            verts.iter().map(|v| self.vertex_invariant(v)).collect();
        let mut best: Option<String> = None;
        let mut order: Vec<usize> = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.canon_rec(&verts, &invariants, &mut order, &mut used, &mut best);
        let mut s = format!(
            "g|{}{}{}|{}|",
            self.vertex_colors.is_some() as u8,
            self.edge_colors.is_some() as u8,
            self.directed as u8,
            n
        );
        s.push_str(&best.unwrap());
        s
    }

    fn encode_under_order(&self, verts: &[&String], order: &[usize]) -> String {
        let mut pos: BTreeMap<&String, usize> = BTreeMap::new();
        for (i, &vi) in order.iter().enumerate() {
            pos.insert(verts[vi], i);
        }
        let mut vlines: Vec<String> = Vec::new();
        for (i, &vi) in order.iter().enumerate() {
            match self.vertex_color(verts[vi]) {
                Some(c) => vlines.push(format!("v{} c{}", i, c)),
                None => vlines.push(format!("v{}", i)),
            }
        }
        let mut elines: Vec<String> = Vec::new();
        for (e, (a, b)) in &self.edges {
            let (mut i, mut j) = (pos[a], pos[b]);
            if !self.directed && i > j {
                std::mem::swap(&mut i, &mut j);
            }
            match self.edge_color(e) {
                Some(c) => elines.push(format!("e{}-{} c{}", i, j, c)),
                None => elines.push(format!("e{}-{}", i, j)),
            }
        }
        elines.sort();
        format!("{};{}", vlines.join(","), elines.join(","))
    }

    fn canon_rec(
        &self,
        verts: &[&String],
        invariants: &[VertexInvariant],
        order: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<String>,
    ) {
        let n = verts.len();
        if order.len() == n {
            let enc = self.encode_under_order(verts, order);
            if best.as_ref().map(|b| enc < *b).unwrap_or(true) {
                *best = Some(enc);
            }
            return;
        }
        // Candidates: unused vertices with the minimal invariant among unused,
        // preferring vertices adjacent to the placed prefix to cut symmetry.
        let mut min_inv: Option<&VertexInvariant> = None;
        for i in 0..n {
            if !used[i] {
                if min_inv.map(|m| invariants[i] < *m).unwrap_or(true) {
                    min_inv = Some(&invariants[i]);
                }
            }
        }
        let min_inv = min_inv.unwrap().clone();
        for i in 0..n {
            if used[i] || invariants[i] != min_inv {
                continue;
            }
            used[i] = true;
            order.push(i);
            self.canon_rec(verts, invariants, order, used, best);
            order.pop();
            used[i] = false;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct VertexInvariant {
    degree: usize,
    color: Option<u32>,
    loops: usize,
    in_deg: usize,
    out_deg: usize,
    incident_colors: Vec<(Option<u32>, bool)>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct BundleKey {
    color: Option<u32>,
    forward: bool,
}

/// An isomorphism of decorated graphs: bijections on vertices and edges
/// preserving incidence and every decoration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphIso {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
}

impl GraphIso {
    /// Checks that this mapping really is an isomorphism from g1 to g2.
    pub fn verify(&self, g1: &DecoratedGraph, g2: &DecoratedGraph) -> bool {
        if g1.decoration_type() != g2.decoration_type() {
            return false;
        }
        if self.vertex_map.len() != g1.vertex_count()
            || self.edge_map.len() != g1.edge_count()
            || g1.vertex_count() != g2.vertex_count()
            || g1.edge_count() != g2.edge_count()
        {
            return false;
        }
        let mut vimage = BTreeSet::new();
        for (a, b) in &self.vertex_map {
            if !g1.has_vertex(a) || !g2.has_vertex(b) {
                return false;
            }
            if g1.vertex_color(a) != g2.vertex_color(b) {
                return false;
            }
            vimage.insert(b.clone());
        }
        if vimage.len() != g2.vertex_count() {
            return false;
        }
        let mut eimage = BTreeSet::new();
        for (e, f) in &self.edge_map {
            let (a, b) = match g1.endpoints(e) {
                Some(p) => p,
                None => return false,
            };
            let (c, d) = match g2.endpoints(f) {
                Some(p) => p,
                None => return false,
            };
            if g1.edge_color(e) != g2.edge_color(f) {
                return false;
            }
            let fa = &self.vertex_map[a];
            let fb = &self.vertex_map[b];
            let ok = if g1.directed() {
                fa == c && fb == d
            } else {
                (fa == c && fb == d) || (fa == d && fb == c)
            };
            if !ok {
                return false;
            }
            eimage.insert(f.clone());
        }
        eimage.len() == g2.edge_count()
    }
}

/// Enumerates isomorphisms from `g1` to `g2` respecting all decorations.
/// `pinned` forces specific vertex images. Results are in a deterministic
/// order; `limit` truncates the enumeration once that many are found.
pub fn iso_search(
    g1: &DecoratedGraph,
    g2: &DecoratedGraph,
    pinned: &[(String, String)],
    limit: Option<usize>,
) -> Result<Vec<GraphIso>, GraphError> {
    if g1.decoration_type() != g2.decoration_type() {
        return Err(GraphError::DecorationMismatch);
    }
    for (a, b) in pinned {
        if !g1.has_vertex(a) {
            return Err(GraphError::UnknownPinnedVertex(a.clone()));
        }
        if !g2.has_vertex(b) {
            return Err(GraphError::UnknownPinnedVertex(b.clone()));
        }
    }
    let mut out = Vec::new();
    if g1.vertex_count() != g2.vertex_count() || g1.edge_count() != g2.edge_count() {
        return Ok(out);
    }
    if g1.vertex_count() == 0 {
        out.push(GraphIso {
            vertex_map: BTreeMap::new(),
            edge_map: BTreeMap::new(),
        });
        return Ok(out);
    }

    let v1: Vec<&String> = g1.vertices.iter().collect();
    let v2: Vec<&String> = g2.vertices.iter().collect();
    let inv1: Vec<VertexInvariant> = v1.iter().map(|v| g1.vertex_invariant(v)).collect();
    let inv2: Vec<VertexInvariant> = v2.iter().map(|v| g2.vertex_invariant(v)).collect();
    {
        let mut a = inv1.clone();
        let mut b = inv2.clone();
        a.sort();
        b.sort();
        if a != b {
            return Ok(out);
        }
    }

    let mut vmap: BTreeMap<String, String> = BTreeMap::new();
    let mut used2: BTreeSet<String> = BTreeSet::new();
    for (a, b) in pinned {
        if let Some(prev) = vmap.get(a) {
            if prev != b {
                return Ok(out);
            }
            continue;
        }
        if used2.contains(b) {
            return Ok(out);
        }
        vmap.insert(a.clone(), b.clone());
        used2.insert(b.clone());
    }

    struct Ctx<'a> {
        g1: &'a DecoratedGraph,
        g2: &'a DecoratedGraph,
        v1: Vec<&'a String>,
        v2: Vec<&'a String>,
        inv1: Vec<VertexInvariant>,
        inv2: Vec<VertexInvariant>,
        limit: Option<usize>,
    }

    fn consistent(ctx: &Ctx, vmap: &BTreeMap<String, String>, a: &str, b: &str) -> bool {
        // Every already-mapped vertex must see identical bundles.
        for (x, y) in vmap.iter() {
            let b1 = bundle_sig(ctx.g1, a, x);
            let b2 = bundle_sig(ctx.g2, b, y);
            if b1 != b2 {
                return false;
            }
        }
        // Loop bundle must match.
        bundle_sig(ctx.g1, a, a) == bundle_sig(ctx.g2, b, b)
    }

    fn bundle_sig(g: &DecoratedGraph, a: &str, b: &str) -> Vec<(BundleKey, usize)> {
        g.bundle(a, b)
            .into_iter()
            .map(|(k, es)| (k, es.len()))
            .collect()
    }

    fn rec(
        ctx: &Ctx,
        vmap: &mut BTreeMap<String, String>,
        used2: &mut BTreeSet<String>,
        out: &mut Vec<GraphIso>,
    ) {
        if let Some(l) = ctx.limit {
            if out.len() >= l {
                return;
            }
        }
        // Next unmapped vertex of g1 in id order.
        let next = ctx.v1.iter().find(|v| !vmap.contains_key(**v));
        let a = match next {
            Some(a) => *a,
            None => {
                emit_edge_bijections(ctx, vmap, out);
                return;
            }
        };
        let ia = &ctx.inv1[ctx.v1.iter().position(|v| v == &a).unwrap()];
        for (j, b) in ctx.v2.iter().enumerate() {
            if used2.contains(*b) || &ctx.inv2[j] != ia {
                continue;
            }
            if !consistent(ctx, vmap, a, b) {
                continue;
            }
            vmap.insert(a.clone(), (*b).clone());
            used2.insert((*b).clone());
            rec(ctx, vmap, used2, out);
            vmap.remove(a);
            used2.remove(*b);
            if let Some(l) = ctx.limit {
                if out.len() >= l {
                    return;
                }
            }
        }
    }

    /// With the vertex bijection fixed, parallel edges of identical color and
    /// relative direction can be matched in any order; enumerate all such
    /// pairings as distinct isomorphisms.
    fn emit_edge_bijections(ctx: &Ctx, vmap: &BTreeMap<String, String>, out: &mut Vec<GraphIso>) {
        // Group g1 edges by ordered endpoint pair and bundle key.
        let mut groups: Vec<(Vec<String>, Vec<String>)> = Vec::new();
        let mut seen_pairs: BTreeSet<(String, String)> = BTreeSet::new();
        for (_, (a, b)) in &ctx.g1.edges {
            let key = (a.clone(), b.clone());
            if !seen_pairs.insert(key) {
                continue;
            }
            let b1 = ctx.g1.bundle(a, b);
            let b2 = ctx.g2.bundle(&vmap[a], &vmap[b]);
            for (k, es1) in b1 {
                let es2 = match b2.get(&k) {
                    Some(v) => v.clone(),
                    None => return,
                };
                if es1.len() != es2.len() {
                    return;
                }
                groups.push((es1, es2));
            }
        }
        // Cartesian product of permutations per group, lexicographic by
        // construction: permute the g2 side of each group.
        fn perms(v: &[String]) -> Vec<Vec<String>> {
            if v.is_empty() {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for (i, x) in v.iter().enumerate() {
                let mut rest: Vec<String> = v.to_vec();
                rest.remove(i);
                for mut tail in perms(&rest) {
                    let mut p = vec![x.clone()];
                    p.append(&mut tail);
                    out.push(p);
                }
            }
            out
        }
        fn build(
            ctx: &Ctx,
            vmap: &BTreeMap<String, String>,
            groups: &[(Vec<String>, Vec<String>)],
            idx: usize,
            emap: &mut BTreeMap<String, String>,
            out: &mut Vec<GraphIso>,
        ) {
            if let Some(l) = ctx.limit {
                if out.len() >= l {
                    return;
                }
            }
            if idx == groups.len() {
                out.push(GraphIso {
                    vertex_map: vmap.clone(),
                    edge_map: emap.clone(),
                });
                return;
            }
            let (src, dst) = &groups[idx];
            for p in perms(dst) {
                for (e, f) in src.iter().zip(p.iter()) {
                    emap.insert(e.clone(), f.clone());
                }
                build(ctx, vmap, groups, idx + 1, emap, out);
                for e in src {
                    emap.remove(e);
                }
                if let Some(l) = ctx.limit {
                    if out.len() >= l {
                        return;
                    }
                }
            }
        }
        let mut emap = BTreeMap::new();
        build(ctx, vmap, &groups, 0, &mut emap, out);
    }

    let ctx = Ctx {
        g1,
        g2,
        v1,
        v2,
        inv1,
        inv2,
        limit,
    };
    // Pins must themselves be consistent before descending.
    {
        let pairs: Vec<(String, String)> =
            vmap.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
        for (a, b) in &pairs {
            let ia = &ctx.inv1[ctx.v1.iter().position(|v| *v == a).unwrap()];
            let ib = &ctx.inv2[ctx.v2.iter().position(|v| *v == b).unwrap()];
            if ia != ib {
                return Ok(out);
            }
            let mut rest = vmap.clone();
            rest.remove(a);
            if !consistent(&ctx, &rest, a, b) {
                return Ok(out);
            }
        }
    }
    rec(&ctx, &mut vmap, &mut used2, &mut out);
    out.sort_by(|x, y| {
        (x.vertex_map.iter().collect::<Vec<_>>(), x.edge_map.iter().collect::<Vec<_>>())
            .cmp(&(y.vertex_map.iter().collect::<Vec<_>>(), y.edge_map.iter().collect::<Vec<_>>()))
    });
    Ok(out)
}

/// A bipartite tree organizing parts: I-nodes carry parts (blocks), J-nodes
/// are gluing sites. Each edge l attaches a J-node to a vertex `v(l)` inside
/// the part at its I-node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSkeleton {
    pub i_nodes: BTreeSet<String>,
    pub j_nodes: BTreeSet<String>,
    /// edge id -> (i node, j node, vertex id inside part i)
    pub edges: BTreeMap<String, (String, String, String)>,
}

impl TreeSkeleton {
    /// The skeleton with no nodes at all; realizes to the empty graph.
    pub fn empty() -> Self {
        TreeSkeleton {
            i_nodes: BTreeSet::new(),
            j_nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    /// A skeleton with a single I-node and nothing else.
    pub fn single(i: &str) -> Self {
        let mut i_nodes = BTreeSet::new();
        i_nodes.insert(i.to_string());
        TreeSkeleton {
            i_nodes,
            j_nodes: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    /// Structural validation: bipartite tree, J-degrees at least two, and no
    /// two edges at one I-node attach the same part vertex. The empty
    /// skeleton is valid and realizes to the empty graph.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (l, (i, j, _)) in &self.edges {
            if !self.i_nodes.contains(i) {
                return Err(GraphError::InvalidSkeleton(format!(
                    "edge {l} references unknown I-node {i}"
                )));
            }
            if !self.j_nodes.contains(j) {
                return Err(GraphError::InvalidSkeleton(format!(
                    "edge {l} references unknown J-node {j}"
                )));
            }
        }
        if self.i_nodes.intersection(&self.j_nodes).next().is_some() {
            return Err(GraphError::InvalidSkeleton(
                "I-nodes and J-nodes overlap".into(),
            ));
        }
        let n = self.i_nodes.len() + self.j_nodes.len();
        if n == 0 {
            return Ok(());
        }
        if self.edges.len() + 1 != n {
            return Err(GraphError::InvalidSkeleton(
                "edge count does not match a tree".into(),
            ));
        }
        // Connectivity.
        let mut adj: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
        for (i, j, _) in self.edges.values() {
            adj.entry(i).or_default().push(j);
            adj.entry(j).or_default().push(i);
        }
        let start = self
            .i_nodes
            .iter()
            .chain(self.j_nodes.iter())
            .next()
            .unwrap();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start);
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            if let Some(ns) = adj.get(u) {
                for v in ns {
                    if seen.insert(v) {
                        queue.push_back(v);
                    }
                }
            }
        }
        if seen.len() != n {
            return Err(GraphError::InvalidSkeleton("skeleton not connected".into()));
        }
        for j in &self.j_nodes {
            let deg = self
                .edges
                .values()
                .filter(|(_, jj, _)| jj == j)
                .count();
            if deg < 2 {
                return Err(GraphError::InvalidSkeleton(format!(
                    "J-node {j} has degree {deg}, need at least 2"
                )));
            }
        }
        let mut seen_atts: BTreeSet<(&String, &String)> = BTreeSet::new();
        for (l, (i, _, v)) in &self.edges {
            if !seen_atts.insert((i, v)) {
                return Err(GraphError::InvalidSkeleton(format!(
                    "edges at I-node {i} reuse vertex {v} (edge {l})"
                )));
            }
        }
        Ok(())
    }

    /// Edges incident to an I-node, sorted by edge id.
    pub fn edges_at_i(&self, i: &str) -> Vec<(&String, &(String, String, String))> {
        self.edges.iter().filter(|(_, (ii, _, _))| ii == i).collect()
    }

    /// Edges incident to a J-node, sorted by edge id.
    pub fn edges_at_j(&self, j: &str) -> Vec<(&String, &(String, String, String))> {
        self.edges.iter().filter(|(_, (_, jj, _))| jj == j).collect()
    }
}

/// Realized vertex id for part vertex `v` of part `i`.
fn realized_id(i: &str, v: &str) -> String {
    format!("{i}.{v}")
}

/// The quotient graph obtained by gluing the parts of a skeleton: vertices
/// attached to one J-node become a single vertex. Returns the realized graph
/// and, per J-node, the realized id of its glued vertex class.
pub fn realized_underlying_graph(
    skeleton: &TreeSkeleton,
    parts: &BTreeMap<String, DecoratedGraph>,
) -> Result<(DecoratedGraph, BTreeMap<String, String>), GraphError> {
    skeleton.validate()?;
    let mut deco: Option<DecorationType> = None;
    for i in &skeleton.i_nodes {
        let g = parts.get(i).ok_or_else(|| {
            GraphError::InvalidSkeleton(format!("no part supplied for I-node {i}"))
        })?;
        match deco {
            None => deco = Some(g.decoration_type()),
            Some(d) => {
                if d != g.decoration_type() {
                    return Err(GraphError::DecorationMismatch);
                }
            }
        }
    }
    for (l, (i, _, v)) in &skeleton.edges {
        let g = &parts[i];
        if !g.has_vertex(v) {
            return Err(GraphError::InvalidSkeleton(format!(
                "edge {l} attaches missing vertex {v} of part {i}"
            )));
        }
    }
    let deco = deco.unwrap_or(DecorationType {
        vertex_colored: false,
        edge_colored: false,
        directed: false,
    });

    // Union-find over (i, v) pairs keyed by realized id.
    let mut parent: BTreeMap<String, String> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<String, String>, x: &str) -> String {
        let p = parent.get(x).cloned().unwrap_or_else(|| x.to_string());
        if p == x {
            return p;
        }
        let r = find(parent, &p);
        parent.insert(x.to_string(), r.clone());
        r
    }
    fn union(parent: &mut BTreeMap<String, String>, a: &str, b: &str) {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            // Smaller id wins so class representatives are deterministic.
            if ra < rb {
                parent.insert(rb, ra);
            } else {
                parent.insert(ra, rb);
            }
        }
    }
    for i in &skeleton.i_nodes {
        for v in parts[i].vertices() {
            let id = realized_id(i, v);
            parent.insert(id.clone(), id);
        }
    }
    for j in &skeleton.j_nodes {
        let atts = skeleton.edges_at_j(j);
        for w in atts.windows(2) {
            let (_, (i1, _, v1)) = w[0];
            let (_, (i2, _, v2)) = w[1];
            union(&mut parent, &realized_id(i1, v1), &realized_id(i2, v2));
        }
    }

    let mut vertices: BTreeSet<String> = BTreeSet::new();
    let mut vertex_colors: BTreeMap<String, u32> = BTreeMap::new();
    let mut color_witness: BTreeMap<String, String> = BTreeMap::new();
    for i in &skeleton.i_nodes {
        let g = &parts[i];
        for v in g.vertices() {
            let rep = find(&mut parent, &realized_id(i, v));
            vertices.insert(rep.clone());
            if deco.vertex_colored {
                let c = g.vertex_color(v).unwrap();
                match vertex_colors.get(&rep) {
                    None => {
                        vertex_colors.insert(rep.clone(), c);
                        color_witness.insert(rep.clone(), realized_id(i, v));
                    }
                    Some(&c0) => {
                        if c0 != c {
                            return Err(GraphError::ColorClashAtGluing(realized_id(i, v)));
                        }
                    }
                }
            }
        }
    }

    let mut edges: BTreeMap<String, (String, String)> = BTreeMap::new();
    let mut edge_colors: BTreeMap<String, u32> = BTreeMap::new();
    for i in &skeleton.i_nodes {
        let g = &parts[i];
        for e in g.edge_ids() {
            let (a, b) = g.endpoints(e).unwrap();
            let ra = find(&mut parent, &realized_id(i, a));
            let rb = find(&mut parent, &realized_id(i, b));
            let id = format!("{i}.{e}");
            edges.insert(id.clone(), (ra, rb));
            if deco.edge_colored {
                edge_colors.insert(id, g.edge_color(e).unwrap());
            }
        }
    }

    let realized = DecoratedGraph::new(
        vertices,
        edges,
        if deco.vertex_colored {
            Some(vertex_colors)
        } else {
            None
        },
        if deco.edge_colored {
            Some(edge_colors)
        } else {
            None
        },
        deco.directed,
    )?;

    let mut j_table: BTreeMap<String, String> = BTreeMap::new();
    for j in &skeleton.j_nodes {
        let atts = skeleton.edges_at_j(j);
        let (_, (i, _, v)) = atts[0];
        j_table.insert(j.clone(), find(&mut parent, &realized_id(i, v)));
    }
    Ok((realized, j_table))
}

/// The gluing-site table: J-node to realized glued vertex. Injective for a
/// valid skeleton realization.
pub fn cut_vertex_table(
    skeleton: &TreeSkeleton,
    parts: &BTreeMap<String, DecoratedGraph>,
) -> Result<BTreeMap<String, String>, GraphError> {
    let (_, table) = realized_underlying_graph(skeleton, parts)?;
    Ok(table)
}

/// A part-preserving isomorphism of tree skeletons.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonIso {
    pub i_map: BTreeMap<String, String>,
    pub j_map: BTreeMap<String, String>,
    pub l_map: BTreeMap<String, String>,
}

/// Enumerates part-preserving tree isomorphisms between two skeletons:
/// bijections I1 to I2, J1 to J2 and L1 to L2 preserving incidence. The
/// attached vertices v(l) are not constrained here; callers compare parts
/// separately. Deterministic order.
pub fn skeleton_isos(s1: &TreeSkeleton, s2: &TreeSkeleton) -> Result<Vec<SkeletonIso>, GraphError> {
    s1.validate()?;
    s2.validate()?;
    let mut out = Vec::new();
    if s1.i_nodes.len() != s2.i_nodes.len()
        || s1.j_nodes.len() != s2.j_nodes.len()
        || s1.edges.len() != s2.edges.len()
    {
        return Ok(out);
    }

    // Build adjacency with edge labels.
    fn adj(s: &TreeSkeleton) -> BTreeMap<String, Vec<(String, String)>> {
        let mut m: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        for n in s.i_nodes.iter().chain(s.j_nodes.iter()) {
            m.insert(n.clone(), Vec::new());
        }
        for (l, (i, j, _)) in &s.edges {
            m.get_mut(i).unwrap().push((l.clone(), j.clone()));
            m.get_mut(j).unwrap().push((l.clone(), i.clone()));
        }
        m
    }
    let a1 = adj(s1);
    let a2 = adj(s2);

    // Degree-respecting backtracking over nodes, I to I and J to J.
    let nodes1: Vec<String> = s1.i_nodes.iter().chain(s1.j_nodes.iter()).cloned().collect();
    struct St<'a> {
        s1: &'a TreeSkeleton,
        s2: &'a TreeSkeleton,
        a1: &'a BTreeMap<String, Vec<(String, String)>>,
        a2: &'a BTreeMap<String, Vec<(String, String)>>,
        nodes1: Vec<String>,
    }
    fn rec(
        st: &St,
        nmap: &mut BTreeMap<String, String>,
        used: &mut BTreeSet<String>,
        out: &mut Vec<SkeletonIso>,
    ) {
        let next = st.nodes1.iter().find(|n| !nmap.contains_key(*n)).cloned();
        let a = match next {
            Some(a) => a,
            None => {
                // Node bijection complete and adjacency-consistent; derive
                // all consistent edge bijections (parallel edges cannot occur
                // in a tree, so the edge map is determined).
                let mut l_map = BTreeMap::new();
                for (l, (i, j, _)) in &st.s1.edges {
                    let ti = &nmap[i];
                    let tj = &nmap[j];
                    let cand = st.s2.edges.iter().find(|(_, (i2, j2, _))| i2 == ti && j2 == tj);
                    match cand {
                        Some((l2, _)) => {
                            l_map.insert(l.clone(), l2.clone());
                        }
                        None => return,
                    }
                }
                let i_map: BTreeMap<String, String> = st
                    .s1
                    .i_nodes
                    .iter()
                    .map(|i| (i.clone(), nmap[i].clone()))
                    .collect();
                let j_map: BTreeMap<String, String> = st
                    .s1
                    .j_nodes
                    .iter()
                    .map(|j| (j.clone(), nmap[j].clone()))
                    .collect();
                out.push(SkeletonIso { i_map, j_map, l_map });
                return;
            }
        };
        let is_i = st.s1.i_nodes.contains(&a);
        let cands: Vec<&String> = if is_i {
            st.s2.i_nodes.iter().collect()
        } else {
            st.s2.j_nodes.iter().collect()
        };
        for b in cands {
            if used.contains(b) {
                continue;
            }
            if st.a1[&a].len() != st.a2[b].len() {
                continue;
            }
            // Mapped neighbors of a must be neighbors of b.
            let ok = st.a1[&a].iter().all(|(_, n)| match nmap.get(n) {
                Some(tn) => st.a2[b].iter().any(|(_, m)| m == tn),
                None => true,
            });
            if !ok {
                continue;
            }
            nmap.insert(a.clone(), b.clone());
            used.insert(b.clone());
            rec(st, nmap, used, out);
            nmap.remove(&a);
            used.remove(b);
        }
    }
    let st = St {
        s1,
        s2,
        a1: &a1,
        a2: &a2,
        nodes1,
    };
    let mut nmap = BTreeMap::new();
    let mut used = BTreeSet::new();
    rec(&st, &mut nmap, &mut used, &mut out);
    out.sort_by(|x, y| {
        (x.i_map.iter().collect::<Vec<_>>(), x.j_map.iter().collect::<Vec<_>>())
            .cmp(&(y.i_map.iter().collect::<Vec<_>>(), y.j_map.iter().collect::<Vec<_>>()))
    });
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(
        verts: &[&str],
        edges: &[(&str, &str, &str)],
        vcols: Option<&[(&str, u32)]>,
        ecols: Option<&[(&str, u32)]>,
        directed: bool,
    ) -> DecoratedGraph {
        DecoratedGraph::new(
            verts.iter().map(|s| s.to_string()).collect(),
            edges
                .iter()
                .map(|(e, a, b)| (e.to_string(), (a.to_string(), b.to_string())))
                .collect(),
            vcols.map(|m| m.iter().map(|(v, c)| (v.to_string(), *c)).collect()),
            ecols.map(|m| m.iter().map(|(e, c)| (e.to_string(), *c)).collect()),
            directed,
        )
        .unwrap()
    }

    #[test]
    fn degrees_count_loops_twice() {
        let h = g(&["v"], &[("l", "v", "v")], None, None, false);
        assert_eq!(h.degree("v"), 2);
        assert_eq!(h.loop_count("v"), 1);
        assert!(!h.is_tree());
        assert!(h.leaves().is_empty());
    }

    #[test]
    fn tree_predicates() {
        let path = g(
            &["a", "b", "c"],
            &[("e1", "a", "b"), ("e2", "b", "c")],
            None,
            None,
            false,
        );
        assert!(path.is_tree());
        assert_eq!(path.leaves(), vec!["a".to_string(), "c".to_string()]);
        let disc = g(&["a", "b"], &[], None, None, false);
        assert!(!disc.is_tree());
        assert!(DecoratedGraph::one_point("p", None).is_tree());
        assert!(!DecoratedGraph::empty().is_tree());
    }

    /// Brute-force oracle: every pair of (vertex bijection, edge bijection)
    /// checked directly against the isomorphism conditions.
    fn brute_force_isos(g1: &DecoratedGraph, g2: &DecoratedGraph) -> Vec<GraphIso> {
        fn perms<T: Clone>(v: &[T]) -> Vec<Vec<T>> {
            if v.is_empty() {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for i in 0..v.len() {
                let mut rest = v.to_vec();
                let x = rest.remove(i);
                for mut t in perms(&rest) {
                    let mut p = vec![x.clone()];
                    p.append(&mut t);
                    out.push(p);
                }
            }
            out
        }
        let v1: Vec<String> = g1.vertices().cloned().collect();
        let v2: Vec<String> = g2.vertices().cloned().collect();
        let e1: Vec<String> = g1.edge_ids().cloned().collect();
        let e2: Vec<String> = g2.edge_ids().cloned().collect();
        let mut out = Vec::new();
        if v1.len() != v2.len() || e1.len() != e2.len() {
            return out;
        }
        for vp in perms(&v2) {
            let vmap: BTreeMap<String, String> =
                v1.iter().cloned().zip(vp.into_iter()).collect();
            for ep in perms(&e2) {
                let emap: BTreeMap<String, String> =
                    e1.iter().cloned().zip(ep.into_iter()).collect();
                let iso = GraphIso {
                    vertex_map: vmap.clone(),
                    edge_map: emap,
                };
                if iso.verify(g1, g2) {
                    out.push(iso);
                }
            }
        }
        out
    }

    #[test]
    fn theta_graph_has_twelve_automorphisms() {
        // Two vertices joined by three parallel edges: 2 vertex bijections
        // times 3! edge pairings. Cross-checked against the brute force
        // oracle, then frozen.
        let theta = g(
            &["u", "v"],
            &[("e1", "u", "v"), ("e2", "u", "v"), ("e3", "u", "v")],
            None,
            None,
            false,
        );
        let isos = iso_search(&theta, &theta, &[], None).unwrap();
        let brute = brute_force_isos(&theta, &theta);
        assert_eq!(isos.len(), brute.len());
        assert_eq!(isos.len(), 12);
        for iso in &isos {
            assert!(iso.verify(&theta, &theta));
        }
    }

    #[test]
    fn identity_is_always_found() {
        let h = g(
            &["a", "b", "c"],
            &[("e1", "a", "b"), ("e2", "b", "c"), ("l", "a", "a")],
            Some(&[("a",1), ("b", 0), ("c", 1)]),
            Some(&[("e1", 2), ("e2", 2), ("l", 0)]),
            false,
        );
        let isos = iso_search(&h, &h, &[], None).unwrap();
        assert!(isos.iter().any(|iso| {
            iso.vertex_map.iter().all(|(a, b)| a == b) && iso.edge_map.iter().all(|(a, b)| a == b)
        }));
    }

    #[test]
    fn colors_obstruct_isomorphism() {
        let a = g(&["u", "v"], &[("e", "u", "v")], Some(&[("u", 0), ("v", 1)]), None, false);
        let b = g(&["u", "v"], &[("e", "u", "v")], Some(&[("u", 0), ("v", 0)]), None, false);
        assert!(iso_search(&a, &b, &[], None).unwrap().is_empty());
        let c = g(&["u", "v"], &[("e", "u", "v")], None, None, false);
        assert_eq!(
            iso_search(&a, &c, &[], None).unwrap_err(),
            GraphError::DecorationMismatch
        );
    }

    #[test]
    fn directions_obstruct_isomorphism() {
        // A directed 2-cycle vs two edges out of one vertex.
        let a = g(
            &["u", "v"],
            &[("e1", "u", "v"), ("e2", "v", "u")],
            None,
            None,
            true,
        );
        let b = g(
            &["u", "v"],
            &[("e1", "u", "v"), ("e2", "u", "v")],
            None,
            None,
            true,
        );
        assert!(iso_search(&a, &b, &[], None).unwrap().is_empty());
        assert_eq!(iso_search(&a, &a, &[], None).unwrap().len(), 2);
        let brute = brute_force_isos(&a, &a);
        assert_eq!(brute.len(), 2);
    }

    #[test]
    fn pinning_restricts_search() {
        let path = g(
            &["a", "b", "c"],
            &[("e1", "a", "b"), ("e2", "b", "c")],
            None,
            None,
            false,
        );
        let all = iso_search(&path, &path, &[], None).unwrap();
        assert_eq!(all.len(), 2);
        let pinned = iso_search(
            &path,
            &path,
            &[("a".to_string(), "c".to_string())],
            None,
        )
        .unwrap();
        assert_eq!(pinned.len(), 1);
        assert_eq!(pinned[0].vertex_map["a"], "c");
        let none = iso_search(&path, &path, &[("a".to_string(), "b".to_string())], None).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn iso_search_matches_brute_force_on_small_graphs() {
        let cases = vec![
            g(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "a", "c")], None, None, false),
            g(&["a", "b"], &[("e1", "a", "b"), ("l1", "a", "a"), ("l2", "b", "b")], None, None, false),
            g(
                &["a", "b", "c", "d"],
                &[("e1", "a", "b"), ("e2", "c", "d")],
                Some(&[("a", 0), ("b", 0), ("c", 0), ("d", 0)]),
                None,
                false,
            ),
            g(&["a"], &[("l1", "a", "a"), ("l2", "a", "a")], None, None, false),
        ];
        for h in &cases {
            let fast = iso_search(h, h, &[], None).unwrap();
            let brute = brute_force_isos(h, h);
            assert_eq!(fast.len(), brute.len(), "graph {h:?}");
        }
    }

    #[test]
    fn canonical_encoding_is_relabel_invariant() {
        let a = g(
            &["x", "y", "z"],
            &[("e1", "x", "y"), ("e2", "y", "z"), ("l", "z", "z")],
            None,
            None,
            false,
        );
        let b = g(
            &["p", "q", "r"],
            &[("f1", "q", "r"), ("f2", "p", "q"), ("g", "p", "p")],
            None,
            None,
            false,
        );
        assert_eq!(a.canonical_encoding(), b.canonical_encoding());
        let c = g(
            &["p", "q", "r"],
            &[("f1", "q", "r"), ("f2", "p", "q"), ("g", "q", "q")],
            None,
            None,
            false,
        );
        assert_ne!(a.canonical_encoding(), c.canonical_encoding());
    }

    fn skel(
        is: &[&str],
        js: &[&str],
        edges: &[(&str, &str, &str, &str)],
    ) -> TreeSkeleton {
        TreeSkeleton {
            i_nodes: is.iter().map(|s| s.to_string()).collect(),
            j_nodes: js.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|(l, i, j, v)| (l.to_string(), (i.to_string(), j.to_string(), v.to_string())))
                .collect(),
        }
    }

    #[test]
    fn star_skeleton_realizes_to_star() {
        // One J-node gluing k one-edge parts at one endpoint each: the
        // realization is a star with k leaves.
        let k = 3;
        let mut parts = BTreeMap::new();
        for idx in 0..k {
            parts.insert(
                format!("i{idx}"),
                g(&["u", "v"], &[("e", "u", "v")], None, None, false),
            );
        }
        let s = skel(
            &["i0", "i1", "i2"],
            &["j"],
            &[
                ("l0", "i0", "j", "u"),
                ("l1", "i1", "j", "u"),
                ("l2", "i2", "j", "u"),
            ],
        );
        let (realized, table) = realized_underlying_graph(&s, &parts).unwrap();
        assert_eq!(realized.vertex_count(), 4);
        assert_eq!(realized.edge_count(), 3);
        let center = &table["j"];
        assert_eq!(realized.degree(center), 3);
        assert!(realized.is_tree());
        // Vertex count formula: sum of part sizes minus sum over J of (deg - 1).
        let total: usize = parts.values().map(|p| p.vertex_count()).sum();
        assert_eq!(realized.vertex_count(), total - (3 - 1));
    }

    #[test]
    fn two_part_path_realization() {
        // Two one-edge parts glued at one vertex gives a 2-edge path.
        let mut parts = BTreeMap::new();
        parts.insert("i0".to_string(), g(&["u", "v"], &[("e", "u", "v")], None, None, false));
        parts.insert("i1".to_string(), g(&["u", "v"], &[("e", "u", "v")], None, None, false));
        let s = skel(
            &["i0", "i1"],
            &["j"],
            &[("l0", "i0", "j", "v"), ("l1", "i1", "j", "u")],
        );
        let (realized, table) = realized_underlying_graph(&s, &parts).unwrap();
        assert_eq!(realized.vertex_count(), 3);
        assert!(realized.is_tree());
        assert_eq!(realized.degree(&table["j"]), 2);
        let cut = cut_vertex_table(&s, &parts).unwrap();
        assert_eq!(cut.len(), 1);
    }

    #[test]
    fn color_clash_at_gluing_is_rejected() {
        let mut parts = BTreeMap::new();
        parts.insert(
            "i0".to_string(),
            g(&["u", "v"], &[("e", "u", "v")], Some(&[("u", 0), ("v", 1)]), None, false),
        );
        parts.insert(
            "i1".to_string(),
            g(&["u", "v"], &[("e", "u", "v")], Some(&[("u", 2), ("v", 0)]), None, false),
        );
        let s = skel(
            &["i0", "i1"],
            &["j"],
            &[("l0", "i0", "j", "v"), ("l1", "i1", "j", "u")],
        );
        assert!(matches!(
            realized_underlying_graph(&s, &parts),
            Err(GraphError::ColorClashAtGluing(_))
        ));
        // Matching colors glue fine.
        parts.insert(
            "i1".to_string(),
            g(&["u", "v"], &[("e", "u", "v")], Some(&[("u", 1), ("v", 0)]), None, false),
        );
        assert!(realized_underlying_graph(&s, &parts).is_ok());
    }

    /// Brute-force skeleton isomorphism oracle for small trees.
    fn brute_force_skeleton_isos(s1: &TreeSkeleton, s2: &TreeSkeleton) -> usize {
        fn perms<T: Clone>(v: &[T]) -> Vec<Vec<T>> {
            if v.is_empty() {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for i in 0..v.len() {
                let mut rest = v.to_vec();
                let x = rest.remove(i);
                for mut t in perms(&rest) {
                    let mut p = vec![x.clone()];
                    p.append(&mut t);
                    out.push(p);
                }
            }
            out
        }
        let i1: Vec<String> = s1.i_nodes.iter().cloned().collect();
        let i2: Vec<String> = s2.i_nodes.iter().cloned().collect();
        let j1: Vec<String> = s1.j_nodes.iter().cloned().collect();
        let j2: Vec<String> = s2.j_nodes.iter().cloned().collect();
        if i1.len() != i2.len() || j1.len() != j2.len() {
            return 0;
        }
        let mut count = 0;
        for ip in perms(&i2) {
            for jp in perms(&j2) {
                let imap: BTreeMap<&String, &String> = i1.iter().zip(ip.iter()).collect();
                let jmap: BTreeMap<&String, &String> = j1.iter().zip(jp.iter()).collect();
                // Edge sets must correspond.
                let ok = s1.edges.values().all(|(i, j, _)| {
                    s2.edges
                        .values()
                        .any(|(i2, j2, _)| i2 == imap[i] && j2 == jmap[j])
                });
                if ok {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn skeleton_isos_match_brute_force_on_small_trees() {
        let star = skel(
            &["i0", "i1", "i2"],
            &["j"],
            &[
                ("l0", "i0", "j", "u"),
                ("l1", "i1", "j", "u"),
                ("l2", "i2", "j", "u"),
            ],
        );
        let path = skel(
            &["i0", "i1", "i2"],
            &["j0", "j1"],
            &[
                ("l0", "i0", "j0", "v"),
                ("l1", "i1", "j0", "u"),
                ("l2", "i1", "j1", "v"),
                ("l3", "i2", "j1", "u"),
            ],
        );
        for (a, b) in [(&star, &star), (&path, &path), (&star, &path)] {
            let fast = skeleton_isos(a, b).unwrap().len();
            let brute = brute_force_skeleton_isos(a, b);
            assert_eq!(fast, brute);
        }
        assert_eq!(skeleton_isos(&star, &star).unwrap().len(), 6);
        assert!(skeleton_isos(&star, &path).unwrap().is_empty());
    }

    #[test]
    fn degenerate_skeletons() {
        // Empty skeleton: valid, realizes to the empty graph, one (empty)
        // self-isomorphism.
        let e = TreeSkeleton::empty();
        assert!(e.validate().is_ok());
        let (realized, table) = realized_underlying_graph(&e, &BTreeMap::new()).unwrap();
        assert_eq!(realized, DecoratedGraph::empty());
        assert!(table.is_empty());
        let isos = skeleton_isos(&e, &e).unwrap();
        assert_eq!(isos.len(), 1);
        assert!(isos[0].i_map.is_empty());

        // Single I-node: realizes to its part, relabeled.
        let s = TreeSkeleton::single("i0");
        let mut parts = BTreeMap::new();
        parts.insert(
            "i0".to_string(),
            g(&["u", "v"], &[("e", "u", "v")], None, None, false),
        );
        let (realized, _) = realized_underlying_graph(&s, &parts).unwrap();
        assert_eq!(realized.vertex_count(), 2);
        assert_eq!(realized.edge_count(), 1);
        assert_eq!(
            iso_search(&realized, &parts["i0"], &[], None).unwrap().len(),
            2
        );
        // Size mismatch yields no isomorphisms.
        assert!(skeleton_isos(&e, &s).unwrap().is_empty());
    }

    #[test]
    fn skeleton_validation_catches_defects() {
        // Degree-1 J-node.
        let s = skel(&["i0"], &["j"], &[("l0", "i0", "j", "u")]);
        assert!(s.validate().is_err());
        // Reused attachment vertex at one I-node (otherwise a valid tree).
        let s = skel(
            &["i0", "i1", "i2"],
            &["j0", "j1"],
            &[
                ("l0", "i0", "j0", "u"),
                ("l1", "i0", "j1", "u"),
                ("l2", "i1", "j0", "u"),
                ("l3", "i2", "j1", "u"),
            ],
        );
        assert_eq!(
            s.validate(),
            Err(GraphError::InvalidSkeleton(
                "edges at I-node i0 reuse vertex u (edge l1)".into()
            ))
        );
    }
}
