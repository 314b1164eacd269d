//! Planar diagram codes for decorated spatial graphs.
//!
//! A diagram is a 4-valent plane map presentation of an embedded graph:
//! graph vertices with a counterclockwise rotation of incident arc ends,
//! crossings with a counterclockwise quadruple whose slots 0 and 2 carry the
//! understrand, and a partition of the arcs into edge traversals. Validation
//! re-derives every structural invariant from scratch, including a genus
//! check by face tracing, so downstream code can trust any `Diagram` value.
//!
//! # Text format (.sgd)
//!
//! One declaration per line; `#` starts a comment; blank lines are ignored.
//!
//! ```text
//! vertex <id> [color=<uint>]
//! crossing <id> <a> <b> <c> <d>    # arcs counterclockwise, (a,c) under
//! vnode <id> <a1> ... <ad>         # rotation at a graph vertex, counterclockwise
//! edge <id> <arc1> ... <arck> [color=<uint>] [from=<vid> to=<vid>]
//! ```
//!
//! Grammar, token by token:
//!   * ids and arc labels: any run of non-whitespace characters not
//!     containing `=` or `#`;
//!   * `vertex` declares a graph vertex; `color=` is a non-negative integer
//!     and must be present on all vertices or none;
//!   * `vnode` gives the full counterclockwise rotation at a declared vertex
//!     (exactly one `vnode` per vertex of degree at least 1, none for
//!     isolated vertices); a loop edge contributes two slots;
//!   * `crossing` lists four arc ends counterclockwise; the strand through
//!     slots 0 and 2 passes under the strand through slots 1 and 3;
//!   * `edge` lists the arcs the edge traverses, in order, from its source
//!     to its target; consecutive arcs must meet at opposite slots of a
//!     common crossing; the first and last arc end at graph vertices;
//!     `color=` must be present on all edges or none, and likewise
//!     `from=`/`to=` (which fix the direction along the arc sequence);
//!   * every arc label occurs exactly twice across all `vnode` and
//!     `crossing` slots, and exactly once across all `edge` lines.
//!
//! Anything outside this grammar is rejected with a typed error.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphs::DecoratedGraph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: duplicate node id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("arc label {arc} occurs {count} times in node slots, expected exactly 2")]
    ArcCount { arc: String, count: usize },
    #[error("rotation system is not planar near {site}: component fails the sphere face count")]
    NonPlanar { site: String },
    #[error("edge partition inconsistent at edge {edge}: {msg}")]
    EdgePartition { edge: String, msg: String },
    #[error("inconsistent decorations: {0}")]
    DecorationInconsistent(String),
    #[error("no vertex named {0}")]
    MissingVertex(String),
    #[error("vertex colors differ at sum basepoints {0} and {1}")]
    ColorMismatch(String, String),
    #[error("diagrams have different decoration types")]
    DecorationMismatch,
}

/// A node of the plane map underlying a diagram.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SiteRef {
    Vertex(String),
    Crossing(String),
}

impl SiteRef {
    pub fn id(&self) -> &str {
        match self {
            SiteRef::Vertex(s) | SiteRef::Crossing(s) => s,
        }
    }
}

/// One of the two ends of an arc: a slot of a vertex rotation or a crossing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArcEnd {
    pub site: SiteRef,
    pub slot: usize,
}

/// One traversed arc of an edge walk, from its tail end to its head end.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub arc: String,
    pub tail: ArcEnd,
    pub head: ArcEnd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct EdgeData {
    arcs: Vec<String>,
    color: Option<u32>,
    /// Traversal endpoints (source, target); equal for loops. Direction is
    /// meaningful only when the diagram is directed.
    source: String,
    target: String,
    walk: Vec<WalkStep>,
}

/// A validated planar diagram of a decorated spatial graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagram {
    vertices: BTreeMap<String, Option<u32>>,
    /// Rotations for vertices of degree >= 1 only.
    rotations: BTreeMap<String, Vec<String>>,
    /// Quadruples normalized to the lexicographically smaller of the two
    /// rotations that keep the understrand in slots 0 and 2.
    crossings: BTreeMap<String, [String; 4]>,
    edges: BTreeMap<String, EdgeData>,
    vertex_colored: bool,
    edge_colored: bool,
    directed: bool,
}

/// Raw edge declaration before walks are resolved.
struct RawEdge {
    line: usize,
    id: String,
    arcs: Vec<String>,
    color: Option<u32>,
    from_to: Option<(String, String)>,
}

struct RawDiagram {
    vertices: Vec<(usize, String, Option<u32>)>,
    vnodes: Vec<(usize, String, Vec<String>)>,
    crossings: Vec<(usize, String, [String; 4])>,
    edges: Vec<RawEdge>,
}

impl Diagram {
    pub fn empty() -> Self {
        Diagram {
            vertices: BTreeMap::new(),
            rotations: BTreeMap::new(),
            crossings: BTreeMap::new(),
            edges: BTreeMap::new(),
            vertex_colored: false,
            edge_colored: false,
            directed: false,
        }
    }

    /// A diagram of a single (possibly colored) isolated vertex.
    pub fn point(id: &str, color: Option<u32>) -> Self {
        let mut vertices = BTreeMap::new();
        vertices.insert(id.to_string(), color);
        Diagram {
            vertices,
            rotations: BTreeMap::new(),
            crossings: BTreeMap::new(),
            edges: BTreeMap::new(),
            vertex_colored: color.is_some(),
            edge_colored: false,
            directed: false,
        }
    }

    pub fn parse(text: &str) -> Result<Diagram, DiagramError> {
        let raw = parse_raw(text)?;
        assemble(raw)
    }

    /// Canonical text form; `parse(render(d))` reproduces `d` exactly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (v, c) in &self.vertices {
            match c {
                Some(c) => out.push_str(&format!("vertex {v} color={c}\n")),
                None => out.push_str(&format!("vertex {v}\n")),
            }
        }
        for (c, q) in &self.crossings {
            out.push_str(&format!("crossing {c} {} {} {} {}\n", q[0], q[1], q[2], q[3]));
        }
        for (v, rot) in &self.rotations {
            out.push_str(&format!("vnode {v} {}\n", rot.join(" ")));
        }
        for (e, data) in &self.edges {
            let mut line = format!("edge {e} {}", data.arcs.join(" "));
            if let Some(c) = data.color {
                line.push_str(&format!(" color={c}"));
            }
            if self.directed {
                line.push_str(&format!(" from={} to={}", data.source, data.target));
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = &String> {
        self.vertices.keys()
    }

    pub fn has_vertex(&self, v: &str) -> bool {
        self.vertices.contains_key(v)
    }

    pub fn vertex_color(&self, v: &str) -> Option<u32> {
        self.vertices.get(v).copied().flatten()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Counterclockwise rotation at a vertex; empty for isolated vertices.
    pub fn rotation(&self, v: &str) -> &[String] {
        self.rotations.get(v).map(|r| r.as_slice()).unwrap_or(&[])
    }

    pub fn crossing_ids(&self) -> impl Iterator<Item = &String> {
        self.crossings.keys()
    }

    pub fn crossing(&self, c: &str) -> Option<&[String; 4]> {
        self.crossings.get(c)
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = &String> {
        self.edges.keys()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_arcs(&self, e: &str) -> Option<&[String]> {
        self.edges.get(e).map(|d| d.arcs.as_slice())
    }

    pub fn edge_color(&self, e: &str) -> Option<u32> {
        self.edges.get(e).and_then(|d| d.color)
    }

    /// Traversal endpoints (source, target) of an edge.
    pub fn endpoints(&self, e: &str) -> Option<(&String, &String)> {
        self.edges.get(e).map(|d| (&d.source, &d.target))
    }

    /// The resolved traversal of an edge through the plane map.
    pub fn walk(&self, e: &str) -> Option<&[WalkStep]> {
        self.edges.get(e).map(|d| d.walk.as_slice())
    }

    pub fn arc_count(&self) -> usize {
        self.edges.values().map(|d| d.arcs.len()).sum()
    }

    pub fn is_vertex_colored(&self) -> bool {
        self.vertex_colored
    }

    pub fn is_edge_colored(&self) -> bool {
        self.edge_colored
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// The abstract decorated graph this diagram presents.
    pub fn underlying_graph(&self) -> DecoratedGraph {
        let vertices: BTreeSet<String> = self.vertices.keys().cloned().collect();
        let edges: BTreeMap<String, (String, String)> = self
            .edges
            .iter()
            .map(|(e, d)| (e.clone(), (d.source.clone(), d.target.clone())))
            .collect();
        let vertex_colors = if self.vertex_colored {
            Some(
                self.vertices
                    .iter()
                    .map(|(v, c)| (v.clone(), c.unwrap()))
                    .collect(),
            )
        } else {
            None
        };
        let edge_colors = if self.edge_colored {
            Some(
                self.edges
                    .iter()
                    .map(|(e, d)| (e.clone(), d.color.unwrap()))
                    .collect(),
            )
        } else {
            None
        };
        DecoratedGraph::new(vertices, edges, vertex_colors, edge_colors, self.directed)
            .expect("validated diagram yields a consistent graph")
    }

    /// Over/under swapped at every crossing; rotations unchanged.
    pub fn mirror(&self) -> Diagram {
        let mut raw = prefix_diagram(self, "");
        for (_, _, q) in raw.crossings.iter_mut() {
            *q = [q[1].clone(), q[2].clone(), q[3].clone(), q[0].clone()];
        }
        let mut out = assemble(raw).expect("mirror of a valid diagram stays valid");
        out.vertex_colored = self.vertex_colored;
        out.edge_colored = self.edge_colored;
        out.directed = self.directed;
        normalize_colors(&mut out);
        out
    }
}

/// Decoration compatibility for binary operations: flags must agree except
/// that a side without vertices (resp. edges) imposes no vertex (resp. edge)
/// constraints.
fn merged_decorations(d1: &Diagram, d2: &Diagram) -> Result<(bool, bool, bool), DiagramError> {
    let vc = match (d1.vertices.is_empty(), d2.vertices.is_empty()) {
        (true, _) => d2.vertex_colored,
        (_, true) => d1.vertex_colored,
        _ => {
            if d1.vertex_colored != d2.vertex_colored {
                return Err(DiagramError::DecorationMismatch);
            }
            d1.vertex_colored
        }
    };
    let (ec, dir) = match (d1.edges.is_empty(), d2.edges.is_empty()) {
        (true, _) => (d2.edge_colored, d2.directed),
        (_, true) => (d1.edge_colored, d1.directed),
        _ => {
            if d1.edge_colored != d2.edge_colored || d1.directed != d2.directed {
                return Err(DiagramError::DecorationMismatch);
            }
            (d1.edge_colored, d1.directed)
        }
    };
    Ok((vc, ec, dir))
}

fn prefix_diagram(d: &Diagram, p: &str) -> RawDiagram {
    let pre = |s: &String| format!("{p}{s}");
    RawDiagram {
        vertices: d
            .vertices
            .iter()
            .map(|(v, c)| (0, pre(v), *c))
            .collect(),
        vnodes: d
            .rotations
            .iter()
            .map(|(v, rot)| (0, pre(v), rot.iter().map(&pre).collect()))
            .collect(),
        crossings: d
            .crossings
            .iter()
            .map(|(c, q)| {
                (
                    0,
                    pre(c),
                    [pre(&q[0]), pre(&q[1]), pre(&q[2]), pre(&q[3])],
                )
            })
            .collect(),
        edges: d
            .edges
            .iter()
            .map(|(e, data)| RawEdge {
                line: 0,
                id: pre(e),
                arcs: data.arcs.iter().map(&pre).collect(),
                color: data.color,
                from_to: if d.directed {
                    Some((pre(&data.source), pre(&data.target)))
                } else {
                    None
                },
            })
            .collect(),
    }
}

/// Juxtaposition of two diagrams after relabeling into the disjoint
/// namespaces `l.` and `r.`.
pub fn disjoint_union(d1: &Diagram, d2: &Diagram) -> Result<Diagram, DiagramError> {
    let (vc, ec, dir) = merged_decorations(d1, d2)?;
    let mut raw = prefix_diagram(d1, "l.");
    let r2 = prefix_diagram(d2, "r.");
    raw.vertices.extend(r2.vertices);
    raw.vnodes.extend(r2.vnodes);
    raw.crossings.extend(r2.crossings);
    raw.edges.extend(r2.edges);
    let mut out = assemble(raw)?;
    out.vertex_colored = vc;
    out.edge_colored = ec;
    out.directed = dir;
    normalize_colors(&mut out);
    Ok(out)
}

/// Merge the basepoints of two diagrams into one vertex. After relabeling
/// into `l.`/`r.` namespaces, `d2`'s rotation at `v2` (rotated to start at
/// its lexicographically smallest arc) is spliced into `d1`'s rotation at
/// `v1` immediately after the first occurrence of the lexicographically
/// smallest arc there. The merged vertex keeps the id `l.<v1>`.
pub fn vertex_sum(
    d1: &Diagram,
    v1: &str,
    d2: &Diagram,
    v2: &str,
) -> Result<Diagram, DiagramError> {
    if !d1.has_vertex(v1) {
        return Err(DiagramError::MissingVertex(v1.to_string()));
    }
    if !d2.has_vertex(v2) {
        return Err(DiagramError::MissingVertex(v2.to_string()));
    }
    let (vc, ec, dir) = merged_decorations(d1, d2)?;
    if vc && d1.vertex_color(v1) != d2.vertex_color(v2) {
        return Err(DiagramError::ColorMismatch(v1.to_string(), v2.to_string()));
    }
    let mut raw = prefix_diagram(d1, "l.");
    let r2 = prefix_diagram(d2, "r.");
    let lv1 = format!("l.{v1}");
    let rv2 = format!("r.{v2}");

    // Rotation of the merged vertex.
    let rot1: Vec<String> = d1.rotation(v1).iter().map(|a| format!("l.{a}")).collect();
    let mut rot2: Vec<String> = d2.rotation(v2).iter().map(|a| format!("r.{a}")).collect();
    if !rot2.is_empty() {
        let min_pos = rot2
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.cmp(b).then(std::cmp::Ordering::Greater))
            .map(|(i, _)| i)
            .unwrap();
        rot2.rotate_left(min_pos);
    }
    let merged_rot = if rot1.is_empty() {
        rot2
    } else {
        let splice_at = {
            let min_arc = rot1.iter().min().unwrap().clone();
            rot1.iter().position(|a| *a == min_arc).unwrap()
        };
        let mut r = Vec::with_capacity(rot1.len() + rot2.len());
        r.extend_from_slice(&rot1[..=splice_at]);
        r.extend(rot2);
        r.extend_from_slice(&rot1[splice_at + 1..]);
        r
    };

    raw.vertices.extend(
        r2.vertices
            .into_iter()
            .filter(|(_, v, _)| *v != rv2),
    );
    raw.vnodes.retain(|(_, v, _)| *v != lv1);
    raw.vnodes
        .extend(r2.vnodes.into_iter().filter(|(_, v, _)| *v != rv2));
    if !merged_rot.is_empty() {
        raw.vnodes.push((0, lv1.clone(), merged_rot));
    }
    raw.crossings.extend(r2.crossings);
    raw.edges.extend(r2.edges.into_iter().map(|mut e| {
        if let Some((f, t)) = &mut e.from_to {
            if *f == rv2 {
                *f = lv1.clone();
            }
            if *t == rv2 {
                *t = lv1.clone();
            }
        }
        e
    }));
    let mut out = assemble(raw)?;
    out.vertex_colored = vc;
    out.edge_colored = ec;
    out.directed = dir;
    normalize_colors(&mut out);
    Ok(out)
}

/// After forcing decoration flags on an assembled diagram, drop stale color
/// payloads for decorations that are off.
fn normalize_colors(d: &mut Diagram) {
    if !d.vertex_colored {
        for c in d.vertices.values_mut() {
            *c = None;
        }
    }
    if !d.edge_colored {
        for e in d.edges.values_mut() {
            e.color = None;
        }
    }
}

/// Keep the understrand in slots 0 and 2, pick the lexicographically smaller
/// of the two admissible rotations.
fn normalize_quadruple(q: [String; 4]) -> [String; 4] {
    let alt = [q[2].clone(), q[3].clone(), q[0].clone(), q[1].clone()];
    if alt < q {
        alt
    } else {
        q
    }
}

fn parse_raw(text: &str) -> Result<RawDiagram, DiagramError> {
    let mut raw = RawDiagram {
        vertices: Vec::new(),
        vnodes: Vec::new(),
        crossings: Vec::new(),
        edges: Vec::new(),
    };
    for (lineno, line_full) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = match line_full.find('#') {
            Some(i) => &line_full[..i],
            None => line_full,
        };
        // Tokens with 1-based starting columns.
        let mut tokens: Vec<(usize, &str)> = Vec::new();
        let mut start: Option<usize> = None;
        for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push((s + 1, &line[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if tokens.is_empty() {
            continue;
        }
        let syn = |col: usize, msg: String| DiagramError::Syntax {
            line: lineno,
            col,
            msg,
        };
        let plain = |tok: (usize, &str)| -> Result<String, DiagramError> {
            if tok.1.contains('=') {
                Err(syn(tok.0, format!("unexpected key=value token {}", tok.1)))
            } else {
                Ok(tok.1.to_string())
            }
        };
        let (_, kw) = tokens[0];
        match kw {
            "vertex" => {
                if tokens.len() < 2 {
                    return Err(syn(tokens[0].0, "vertex needs an id".into()));
                }
                let id = plain(tokens[1])?;
                let mut color = None;
                for &(col, t) in &tokens[2..] {
                    match t.strip_prefix("color=") {
                        Some(v) => {
                            color = Some(v.parse::<u32>().map_err(|_| {
                                syn(col, format!("bad color value {v}"))
                            })?);
                        }
                        None => return Err(syn(col, format!("unexpected token {t}"))),
                    }
                }
                raw.vertices.push((lineno, id, color));
            }
            "crossing" => {
                if tokens.len() != 6 {
                    return Err(syn(
                        tokens[0].0,
                        "crossing needs an id and exactly four arcs".into(),
                    ));
                }
                let id = plain(tokens[1])?;
                let q = [
                    plain(tokens[2])?,
                    plain(tokens[3])?,
                    plain(tokens[4])?,
                    plain(tokens[5])?,
                ];
                raw.crossings.push((lineno, id, q));
            }
            "vnode" => {
                if tokens.len() < 3 {
                    return Err(syn(
                        tokens[0].0,
                        "vnode needs an id and at least one arc".into(),
                    ));
                }
                let id = plain(tokens[1])?;
                let mut rot = Vec::new();
                for &t in &tokens[2..] {
                    rot.push(plain(t)?);
                }
                raw.vnodes.push((lineno, id, rot));
            }
            "edge" => {
                if tokens.len() < 3 {
                    return Err(syn(
                        tokens[0].0,
                        "edge needs an id and at least one arc".into(),
                    ));
                }
                let id = plain(tokens[1])?;
                let mut arcs = Vec::new();
                let mut color = None;
                let mut from = None;
                let mut to = None;
                let mut in_args = false;
                for &(col, t) in &tokens[2..] {
                    if let Some(v) = t.strip_prefix("color=") {
                        in_args = true;
                        color = Some(
                            v.parse::<u32>()
                                .map_err(|_| syn(col, format!("bad color value {v}")))?,
                        );
                    } else if let Some(v) = t.strip_prefix("from=") {
                        in_args = true;
                        from = Some(v.to_string());
                    } else if let Some(v) = t.strip_prefix("to=") {
                        in_args = true;
                        to = Some(v.to_string());
                    } else if t.contains('=') {
                        return Err(syn(col, format!("unknown key in {t}")));
                    } else if in_args {
                        return Err(syn(col, format!("arc {t} after key=value arguments")));
                    } else {
                        arcs.push(t.to_string());
                    }
                }
                let from_to = match (from, to) {
                    (Some(f), Some(t)) => Some((f, t)),
                    (None, None) => None,
                    _ => {
                        return Err(syn(
                            tokens[0].0,
                            "from= and to= must be given together".into(),
                        ))
                    }
                };
                if arcs.is_empty() {
                    return Err(syn(tokens[0].0, "edge needs at least one arc".into()));
                }
                raw.edges.push(RawEdge {
                    line: lineno,
                    id,
                    arcs,
                    color,
                    from_to,
                });
            }
            other => {
                return Err(syn(
                    tokens[0].0,
                    format!("unknown declaration {other}"),
                ))
            }
        }
    }
    Ok(raw)
}

/// Occurrence table entry: where an arc end sits.
type Ends = BTreeMap<String, Vec<ArcEnd>>;

fn assemble(raw: RawDiagram) -> Result<Diagram, DiagramError> {
    // Unique ids; vertices and crossings share the node namespace.
    let mut vertices: BTreeMap<String, Option<u32>> = BTreeMap::new();
    for (line, id, color) in &raw.vertices {
        if vertices.insert(id.clone(), *color).is_some() {
            return Err(DiagramError::DuplicateId {
                line: *line,
                id: id.clone(),
            });
        }
    }
    let mut crossings: BTreeMap<String, [String; 4]> = BTreeMap::new();
    for (line, id, q) in &raw.crossings {
        if vertices.contains_key(id) {
            return Err(DiagramError::DuplicateId {
                line: *line,
                id: id.clone(),
            });
        }
        if crossings
            .insert(id.clone(), normalize_quadruple(q.clone()))
            .is_some()
        {
            return Err(DiagramError::DuplicateId {
                line: *line,
                id: id.clone(),
            });
        }
    }
    let mut rotations: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (line, id, rot) in &raw.vnodes {
        if !vertices.contains_key(id) {
            return Err(DiagramError::Syntax {
                line: *line,
                col: 1,
                msg: format!("vnode references undeclared vertex {id}"),
            });
        }
        if rotations.insert(id.clone(), rot.clone()).is_some() {
            return Err(DiagramError::DuplicateId {
                line: *line,
                id: id.clone(),
            });
        }
    }

    // Decoration uniformity.
    let colored: Vec<bool> = vertices.values().map(|c| c.is_some()).collect();
    let vertex_colored = colored.iter().any(|&b| b);
    if vertex_colored && !colored.iter().all(|&b| b) {
        return Err(DiagramError::DecorationInconsistent(
            "some vertices are colored and some are not".into(),
        ));
    }
    let edge_colored = raw.edges.iter().any(|e| e.color.is_some());
    if edge_colored && !raw.edges.iter().all(|e| e.color.is_some()) {
        return Err(DiagramError::DecorationInconsistent(
            "some edges are colored and some are not".into(),
        ));
    }
    let directed = raw.edges.iter().any(|e| e.from_to.is_some());
    if directed && !raw.edges.iter().all(|e| e.from_to.is_some()) {
        return Err(DiagramError::DecorationInconsistent(
            "some edges are directed and some are not".into(),
        ));
    }

    // Arc end occurrences, in declaration order (crossings use normalized
    // slot order; both orders list each arc the same number of times).
    let mut ends: Ends = BTreeMap::new();
    for (v, rot) in &rotations {
        for (slot, arc) in rot.iter().enumerate() {
            ends.entry(arc.clone()).or_default().push(ArcEnd {
                site: SiteRef::Vertex(v.clone()),
                slot,
            });
        }
    }
    for (c, q) in &crossings {
        for (slot, arc) in q.iter().enumerate() {
            ends.entry(arc.clone()).or_default().push(ArcEnd {
                site: SiteRef::Crossing(c.clone()),
                slot,
            });
        }
    }
    for (arc, occ) in &ends {
        if occ.len() != 2 {
            return Err(DiagramError::ArcCount {
                arc: arc.clone(),
                count: occ.len(),
            });
        }
    }

    // Edge partition: every arc in exactly one edge, once.
    let mut owner: BTreeMap<&String, &String> = BTreeMap::new();
    let mut edge_ids: BTreeSet<&String> = BTreeSet::new();
    for e in &raw.edges {
        if !edge_ids.insert(&e.id) {
            return Err(DiagramError::DuplicateId {
                line: e.line,
                id: e.id.clone(),
            });
        }
        for arc in &e.arcs {
            if !ends.contains_key(arc) {
                return Err(DiagramError::ArcCount {
                    arc: arc.clone(),
                    count: 0,
                });
            }
            if owner.insert(arc, &e.id).is_some() {
                return Err(DiagramError::EdgePartition {
                    edge: e.id.clone(),
                    msg: format!("arc {arc} traversed more than once"),
                });
            }
        }
    }
    for arc in ends.keys() {
        if !owner.contains_key(arc) {
            return Err(DiagramError::EdgePartition {
                edge: "?".into(),
                msg: format!("arc {arc} belongs to no edge"),
            });
        }
    }

    // Resolve walks.
    let other_end = |arc: &String, end: &ArcEnd| -> ArcEnd {
        let occ = &ends[arc];
        if occ[0] == *end {
            occ[1].clone()
        } else {
            occ[0].clone()
        }
    };
    let occupant = |site: &SiteRef, slot: usize| -> (String, ArcEnd) {
        let arc = match site {
            SiteRef::Vertex(v) => rotations[v][slot].clone(),
            SiteRef::Crossing(c) => crossings[c][slot].clone(),
        };
        (
            arc,
            ArcEnd {
                site: site.clone(),
                slot,
            },
        )
    };
    let mut edges: BTreeMap<String, EdgeData> = BTreeMap::new();
    // (crossing, axis) passages, each required exactly once overall.
    let mut passages: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for e in &raw.edges {
        let err = |msg: String| DiagramError::EdgePartition {
            edge: e.id.clone(),
            msg,
        };
        let n = e.arcs.len();
        let first = &e.arcs[0];
        let occ = &ends[first];
        let (source, target, walk) = if n == 1 {
            let (e0, e1) = (&occ[0], &occ[1]);
            match (&e0.site, &e1.site) {
                (SiteRef::Vertex(a), SiteRef::Vertex(b)) => {
                    let (src, tgt, tail, head) = match &e.from_to {
                        Some((f, t)) => {
                            if f == a && t == b {
                                (a.clone(), b.clone(), e0.clone(), e1.clone())
                            } else if f == b && t == a {
                                (b.clone(), a.clone(), e1.clone(), e0.clone())
                            } else {
                                return Err(err(format!(
                                    "from/to {}/{} do not match arc endpoints {}/{}",
                                    f, t, a, b
                                )));
                            }
                        }
                        None => (a.clone(), b.clone(), e0.clone(), e1.clone()),
                    };
                    (
                        src,
                        tgt,
                        vec![WalkStep {
                            arc: first.clone(),
                            tail,
                            head,
                        }],
                    )
                }
                _ => return Err(err("single-arc edge must join graph vertices".into())),
            }
        } else {
            // The start end of the first arc sits at a vertex; the other end
            // chains into the second arc through a crossing.
            let vertex_ends: Vec<&ArcEnd> = occ
                .iter()
                .filter(|x| matches!(x.site, SiteRef::Vertex(_)))
                .collect();
            let start = match vertex_ends.len() {
                0 => return Err(err(format!("edge starts at a crossing via arc {first}"))),
                2 => {
                    return Err(err(format!(
                        "arc {first} joins two vertices but the edge continues"
                    )))
                }
                _ => vertex_ends[0].clone(),
            };
            let mut walk = Vec::with_capacity(n);
            let mut tail = start.clone();
            let mut head = other_end(first, &tail);
            walk.push(WalkStep {
                arc: first.clone(),
                tail: tail.clone(),
                head: head.clone(),
            });
            for arc in &e.arcs[1..] {
                let c = match &head.site {
                    SiteRef::Crossing(c) => c.clone(),
                    SiteRef::Vertex(_) => {
                        return Err(err(format!(
                            "edge passes through a vertex before arc {arc}"
                        )))
                    }
                };
                let out_slot = (head.slot + 2) % 4;
                *passages
                    .entry((c.clone(), head.slot % 2))
                    .or_insert(0) += 1;
                let (next_arc, next_tail) = occupant(&head.site, out_slot);
                if next_arc != *arc {
                    return Err(err(format!(
                        "arc {arc} does not continue the strand at crossing {c} (found {next_arc})"
                    )));
                }
                tail = next_tail;
                head = other_end(arc, &tail);
                walk.push(WalkStep {
                    arc: arc.clone(),
                    tail: tail.clone(),
                    head: head.clone(),
                });
            }
            let (src, tgt) = match (&start.site, &head.site) {
                (SiteRef::Vertex(a), SiteRef::Vertex(b)) => (a.clone(), b.clone()),
                _ => return Err(err("edge ends at a crossing".into())),
            };
            if let Some((f, t)) = &e.from_to {
                if *f != src || *t != tgt {
                    return Err(err(format!(
                        "from/to {}/{} do not match traversal {}/{}",
                        f, t, src, tgt
                    )));
                }
            }
            (src, tgt, walk)
        };
        for v in [&source, &target] {
            if !vertices.contains_key(v) {
                return Err(err(format!("endpoint {v} is not a declared vertex")));
            }
        }
        edges.insert(
            e.id.clone(),
            EdgeData {
                arcs: e.arcs.clone(),
                color: e.color,
                source,
                target,
                walk,
            },
        );
    }
    // Both strands of every crossing must be traversed exactly once.
    for c in crossings.keys() {
        for axis in 0..2 {
            match passages.get(&(c.clone(), axis)).copied().unwrap_or(0) {
                1 => {}
                k => {
                    return Err(DiagramError::EdgePartition {
                        edge: "?".into(),
                        msg: format!(
                            "crossing {c} strand on axis {axis} traversed {k} times, expected 1"
                        ),
                    })
                }
            }
        }
    }
    // Every rotation slot is hit by the walks (arc counts make this
    // automatic, but the check is cheap and guards the walk logic).
    for (v, rot) in &rotations {
        let hit = edges
            .values()
            .flat_map(|d| d.walk.iter())
            .flat_map(|s| [&s.tail, &s.head])
            .filter(|end| end.site == SiteRef::Vertex(v.clone()))
            .count();
        if hit != rot.len() {
            return Err(DiagramError::EdgePartition {
                edge: "?".into(),
                msg: format!("rotation at {v} has {} slots but {hit} are traversed", rot.len()),
            });
        }
    }

    let d = Diagram {
        vertices,
        rotations,
        crossings,
        edges,
        vertex_colored,
        edge_colored,
        directed,
    };
    check_planarity(&d)?;
    Ok(d)
}

/// Face tracing over the rotation system. Each connected component of the
/// plane map must satisfy V - E + F = 2; isolated vertices are trivially
/// planar and skipped.
fn check_planarity(d: &Diagram) -> Result<(), DiagramError> {
    // Sites and their rotations as (arc, occurrence index) lists.
    let mut ends: Ends = BTreeMap::new();
    let mut site_rot: BTreeMap<SiteRef, Vec<(String, usize)>> = BTreeMap::new();
    let mut push = |site: SiteRef, arcs: &[String], ends: &mut Ends| {
        let mut rot = Vec::new();
        for (slot, arc) in arcs.iter().enumerate() {
            let occs = ends.entry(arc.clone()).or_default();
            occs.push(ArcEnd {
                site: site.clone(),
                slot,
            });
            rot.push((arc.clone(), occs.len() - 1));
        }
        site_rot.insert(site, rot);
    };
    for (v, rot) in &d.rotations {
        push(SiteRef::Vertex(v.clone()), rot, &mut ends);
    }
    for (c, q) in &d.crossings {
        push(SiteRef::Crossing(c.clone()), q, &mut ends);
    }

    // Union-find of sites through arcs.
    let mut parent: BTreeMap<SiteRef, SiteRef> = BTreeMap::new();
    for s in site_rot.keys() {
        parent.insert(s.clone(), s.clone());
    }
    fn find(parent: &mut BTreeMap<SiteRef, SiteRef>, x: &SiteRef) -> SiteRef {
        let p = parent[x].clone();
        if p == *x {
            return p;
        }
        let r = find(parent, &p);
        parent.insert(x.clone(), r.clone());
        r
    }
    for occ in ends.values() {
        let a = find(&mut parent, &occ[0].site);
        let b = find(&mut parent, &occ[1].site);
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent.insert(hi, lo);
        }
    }

    // Darts: (arc, head occurrence index). Face successor: arrive at head,
    // turn one slot clockwise, leave along that occupant.
    let mut face_of: BTreeMap<(String, usize), usize> = BTreeMap::new();
    let mut faces = 0usize;
    let mut face_rep: Vec<SiteRef> = Vec::new();
    for arc in ends.keys() {
        for head in 0..2 {
            let key = (arc.clone(), head);
            if face_of.contains_key(&key) {
                continue;
            }
            let fid = faces;
            faces += 1;
            let mut cur = key.clone();
            face_rep.push(ends[arc][head].site.clone());
            loop {
                if face_of.insert(cur.clone(), fid).is_some() {
                    break;
                }
                let end = &ends[&cur.0][cur.1];
                let rot = &site_rot[&end.site];
                let len = rot.len();
                let next_slot = (end.slot + len - 1) % len;
                let (next_arc, next_occ_at_slot) = rot[next_slot].clone();
                // Leave through the other end of that occupant.
                let next_head = 1 - next_occ_at_slot;
                cur = (next_arc, next_head);
            }
        }
    }

    // Tally V, E, F per component.
    let mut v_count: BTreeMap<SiteRef, i64> = BTreeMap::new();
    let mut e_count: BTreeMap<SiteRef, i64> = BTreeMap::new();
    let mut f_seen: BTreeMap<SiteRef, BTreeSet<usize>> = BTreeMap::new();
    for s in site_rot.keys() {
        let r = find(&mut parent, s);
        *v_count.entry(r).or_insert(0) += 1;
    }
    for occ in ends.values() {
        let r = find(&mut parent, &occ[0].site);
        *e_count.entry(r).or_insert(0) += 1;
    }
    for ((arc, head), fid) in &face_of {
        let r = find(&mut parent, &ends[arc][*head].site);
        f_seen.entry(r).or_default().insert(*fid);
    }
    for (rep, v) in &v_count {
        let e = e_count.get(rep).copied().unwrap_or(0);
        let f = f_seen.get(rep).map(|s| s.len() as i64).unwrap_or(0);
        if v - e + f != 2 {
            return Err(DiagramError::NonPlanar {
                site: rep.id().to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::iso_search;

    fn parse_ok(s: &str) -> Diagram {
        match Diagram::parse(s) {
            Ok(d) => d,
            Err(e) => panic!("parse failed: {e}\nsource:\n{s}"),
        }
    }

    const UNKNOT_LOOP: &str = "vertex v\nvnode v a a\nedge e a\n";

    const TREFOIL_LOOP: &str = "\
vertex v
crossing c1 a1b a4 a2 a5
crossing c2 a3 a6 a4 a1a
crossing c3 a5 a2 a6 a3
vnode v a1a a1b
edge e a1b a2 a3 a4 a5 a6 a1a
";

    const THETA: &str = "\
vertex u
vertex w
vnode u t2 t1 t3
vnode w t1 t2 t3
edge e1 t1
edge e2 t2
edge e3 t3
";

    #[test]
    fn empty_and_point_diagrams() {
        let d = parse_ok("");
        assert_eq!(d, Diagram::empty());
        assert_eq!(d.underlying_graph(), DecoratedGraph::empty());

        let d = parse_ok("# just a comment\nvertex v color=1\n");
        assert_eq!(d, Diagram::point("v", Some(1)));
        let g = d.underlying_graph();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.vertex_color("v"), Some(1));
    }

    #[test]
    fn unknot_loop_parses() {
        let d = parse_ok(UNKNOT_LOOP);
        assert_eq!(d.vertex_count(), 1);
        assert_eq!(d.edge_count(), 1);
        assert_eq!(d.crossing_count(), 0);
        let g = d.underlying_graph();
        assert_eq!(g.degree("v"), 2);
        assert_eq!(g.loop_count("v"), 1);
        let (s, t) = d.endpoints("e").unwrap();
        assert_eq!((s.as_str(), t.as_str()), ("v", "v"));
    }

    #[test]
    fn trefoil_loop_parses() {
        let d = parse_ok(TREFOIL_LOOP);
        assert_eq!(d.crossing_count(), 3);
        assert_eq!(d.arc_count(), 7);
        let w = d.walk("e").unwrap();
        assert_eq!(w.len(), 7);
        assert_eq!(w[0].tail.site, SiteRef::Vertex("v".into()));
        assert_eq!(w[6].head.site, SiteRef::Vertex("v".into()));
    }

    #[test]
    fn theta_parses_and_nonplanar_rotation_rejected() {
        let d = parse_ok(THETA);
        assert_eq!(d.underlying_graph().edge_count(), 3);
        // Same rotation at both vertices embeds the theta on a torus.
        let bad = "\
vertex u
vertex w
vnode u t1 t2 t3
vnode w t1 t2 t3
edge e1 t1
edge e2 t2
edge e3 t3
";
        assert!(matches!(
            Diagram::parse(bad),
            Err(DiagramError::NonPlanar { .. })
        ));
    }

    #[test]
    fn parse_errors_are_typed() {
        assert!(matches!(
            Diagram::parse("vertex v color=x\n"),
            Err(DiagramError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            Diagram::parse("vertex v\nvertex v\n"),
            Err(DiagramError::DuplicateId { line: 2, .. })
        ));
        assert!(matches!(
            Diagram::parse("vertex v\nvnode v a\nedge e a\n"),
            Err(DiagramError::ArcCount { count: 1, .. })
        ));
        // Arc in no edge.
        assert!(matches!(
            Diagram::parse("vertex v\nvnode v a a\n"),
            Err(DiagramError::EdgePartition { .. })
        ));
        // Arc claimed twice.
        assert!(matches!(
            Diagram::parse("vertex v\nvnode v a a\nedge e a\nedge f a\n"),
            Err(DiagramError::EdgePartition { .. })
        ));
        // Broken chain: second arc not opposite at the crossing.
        let broken = "\
vertex a
vertex b
vertex c
crossing k x1 x3 x2 x2
vnode a x0
vnode b x0 x1
vnode c x3
edge e1 x0
edge e2 x1 x3 x2
";
        assert!(matches!(
            Diagram::parse(broken),
            Err(DiagramError::EdgePartition { .. })
        ));
        assert!(matches!(
            Diagram::parse("frobnicate\n"),
            Err(DiagramError::Syntax { .. })
        ));
    }

    #[test]
    fn kinked_edge_walks_through_its_crossing() {
        let kinked = "\
vertex a
vertex b
vertex c
crossing k x1 x3 x2 x2
vnode a x0
vnode b x0 x1
vnode c x3
edge e1 x0
edge e2 x1 x2 x3
";
        let d = parse_ok(kinked);
        let (s, t) = d.endpoints("e2").unwrap();
        assert_eq!((s.as_str(), t.as_str()), ("b", "c"));
        assert!(d.underlying_graph().is_tree());
    }

    #[test]
    fn directed_edges_respect_traversal() {
        let d = parse_ok("vertex u\nvertex w\nvnode u a\nvnode w a\nedge e a from=u to=w\n");
        assert!(d.is_directed());
        let (s, t) = d.endpoints("e").unwrap();
        assert_eq!((s.as_str(), t.as_str()), ("u", "w"));
        // Reversed declaration flips the stored traversal.
        let d2 = parse_ok("vertex u\nvertex w\nvnode u a\nvnode w a\nedge e a from=w to=u\n");
        let (s, t) = d2.endpoints("e").unwrap();
        assert_eq!((s.as_str(), t.as_str()), ("w", "u"));
        // Multi-arc edges must declare the traversal direction.
        let bad = "\
vertex a
vertex b
vertex c
crossing k x1 x3 x2 x2
vnode a x0
vnode b x0 x1
vnode c x3
edge e1 x0 from=a to=b
edge e2 x1 x2 x3 from=c to=b
";
        assert!(matches!(
            Diagram::parse(bad),
            Err(DiagramError::EdgePartition { .. })
        ));
        // Mixed directed/undirected is inconsistent.
        assert!(matches!(
            Diagram::parse("vertex u\nvertex w\nvnode u a b\nvnode w a b\nedge e a from=u to=w\nedge f b\n"),
            Err(DiagramError::DecorationInconsistent(_))
        ));
    }

    #[test]
    fn render_round_trips() {
        for src in [
            "",
            "vertex v color=3\n",
            UNKNOT_LOOP,
            TREFOIL_LOOP,
            THETA,
            "vertex u\nvertex w\nvnode u a\nvnode w a\nedge e a from=u to=w\n",
        ] {
            let d = parse_ok(src);
            let d2 = parse_ok(&d.render());
            assert_eq!(d, d2, "round trip failed for:\n{src}");
        }
    }

    #[test]
    fn disjoint_union_juxtaposes() {
        let a = parse_ok(UNKNOT_LOOP);
        let b = parse_ok(UNKNOT_LOOP);
        let u = disjoint_union(&a, &b).unwrap();
        assert_eq!(u.vertex_count(), 2);
        assert_eq!(u.edge_count(), 2);
        assert_eq!(u.crossing_count(), 0);
        let g = u.underlying_graph();
        assert_eq!(g.components().len(), 2);

        // Identity: union with the empty diagram relabels only.
        let with_empty = disjoint_union(&a, &Diagram::empty()).unwrap();
        assert_eq!(with_empty.vertex_count(), 1);
        assert!(iso_search(
            &with_empty.underlying_graph(),
            &a.underlying_graph(),
            &[],
            Some(1)
        )
        .unwrap()
        .len()
            == 1);
    }

    #[test]
    fn union_decoration_compatibility() {
        let plain = parse_ok(UNKNOT_LOOP);
        let colored = parse_ok("vertex v color=1\nvnode v a a\nedge e a\n");
        assert_eq!(
            disjoint_union(&plain, &colored).unwrap_err(),
            DiagramError::DecorationMismatch
        );
        // The empty diagram is compatible with anything.
        assert!(disjoint_union(&colored, &Diagram::empty()).is_ok());
        let pt = Diagram::point("p", Some(2));
        let u = disjoint_union(&colored, &pt).unwrap();
        assert!(u.is_vertex_colored());
        assert_eq!(u.vertex_color("r.p"), Some(2));
    }

    #[test]
    fn vertex_sum_of_one_edges_is_a_path() {
        let e1 = parse_ok("vertex u\nvertex w\nvnode u a\nvnode w a\nedge e a\n");
        let s = vertex_sum(&e1, "w", &e1, "u").unwrap();
        assert_eq!(s.vertex_count(), 3);
        assert_eq!(s.edge_count(), 2);
        assert_eq!(s.crossing_count(), 0);
        let g = s.underlying_graph();
        assert!(g.is_tree());
        assert_eq!(g.degree("l.w"), 2);
        assert_eq!(s.rotation("l.w"), ["l.a", "r.a"]);
    }

    #[test]
    fn vertex_sum_of_trefoils() {
        let t = parse_ok(TREFOIL_LOOP);
        let s = vertex_sum(&t, "v", &t, "v").unwrap();
        assert_eq!(s.vertex_count(), 1);
        assert_eq!(s.edge_count(), 2);
        assert_eq!(s.crossing_count(), 6);
        let g = s.underlying_graph();
        assert_eq!(g.loop_count("l.v"), 2);
        assert_eq!(g.degree("l.v"), 4);
    }

    #[test]
    fn vertex_sum_with_point_is_identity_up_to_relabeling() {
        let t = parse_ok(TREFOIL_LOOP);
        let s = vertex_sum(&t, "v", &Diagram::point("p", None), "p").unwrap();
        assert_eq!(s.vertex_count(), 1);
        assert_eq!(s.crossing_count(), 3);
        assert_eq!(s.render(), {
            // Same diagram with the l. prefix everywhere.
            let mut expect = parse_ok(TREFOIL_LOOP);
            expect = disjoint_union(&expect, &Diagram::empty()).unwrap();
            expect.render()
        });
        // Errors: missing vertex, color mismatch.
        assert!(matches!(
            vertex_sum(&t, "nope", &t, "v"),
            Err(DiagramError::MissingVertex(_))
        ));
        let c1 = Diagram::point("p", Some(1));
        let c2 = Diagram::point("q", Some(2));
        assert!(matches!(
            vertex_sum(&c1, "p", &c2, "q"),
            Err(DiagramError::ColorMismatch(_, _))
        ));
    }

    #[test]
    fn mirror_is_an_involution_and_flips_crossings() {
        let t = parse_ok(TREFOIL_LOOP);
        let m = t.mirror();
        assert_ne!(t, m);
        assert_eq!(t, m.mirror());
        // Understrand arcs change at every crossing.
        for c in t.crossing_ids() {
            let q = t.crossing(c).unwrap();
            let qm = m.crossing(c).unwrap();
            let under: BTreeSet<_> = [&q[0], &q[2]].into_iter().collect();
            let under_m: BTreeSet<_> = [&qm[0], &qm[2]].into_iter().collect();
            assert_ne!(under, under_m);
        }
        // Crossing-free diagrams are fixed.
        let u = parse_ok(UNKNOT_LOOP);
        assert_eq!(u, u.mirror());
    }

    #[test]
    fn underlying_graph_respects_operations() {
        let a = parse_ok(THETA);
        let b = parse_ok(UNKNOT_LOOP);
        let u = disjoint_union(&a, &b).unwrap();
        let g = u.underlying_graph();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 4);
        let s = vertex_sum(&a, "u", &b, "v").unwrap();
        let gs = s.underlying_graph();
        assert_eq!(gs.vertex_count(), 2);
        assert_eq!(gs.edge_count(), 4);
        assert_eq!(gs.degree("l.u"), 5);
    }
}
