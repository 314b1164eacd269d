//! Compiling diagrams into triangulated spheres.
//!
//! A diagram becomes a closed oriented triangulation of the 3-sphere with
//! the spatial graph tracked as a marked subcomplex. The route: enrich the
//! diagram's plane map to a simple maximal planar map, draw it on an
//! integer grid by the shift algorithm, thicken the mesh to a two-layer
//! prism slab with understrands dipping below the plane, and cone the slab
//! boundary to one apex. Every stage re-verifies its own output, so a
//! compiled sphere is structurally sound by construction and additionally
//! checkable with [`verify_sphere`].
//!
//! The marked subcomplex travels beside the gluing table in a `.sub`
//! sidecar with one record per line:
//!
//! ```text
//! vertex <name> <vertex-class>
//! path <name> <edge-class><+|-> ...
//! ```
//!
//! where `+` means the step follows the edge class reference direction.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::diagram::{Diagram, SiteRef};
use crate::graphs::{DecoratedGraph, GraphError};
use crate::tri::{pachner_simplify, SubComplex, TriError, Triangulation};

mod fpp;
mod map;
mod slab;

use map::NodeTag;

#[derive(Debug, Error)]
pub enum CompileError {
    /// The layout or embedding stage could not verify its own output.
    /// Valid diagrams never reach this; it guards internal invariants.
    #[error("layout: {0}")]
    Layout(String),
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Tri(#[from] TriError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A straight-line grid drawing of a diagram: sites at integer points,
/// arcs as integer polylines meeting only at shared sites.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct Layout {
    pub vertices: BTreeMap<String, (i64, i64)>,
    pub crossings: BTreeMap<String, (i64, i64)>,
    /// Polyline per arc, from its tail site to its head site.
    pub arcs: BTreeMap<String, Vec<(i64, i64)>>,
}

/// Result of compiling a diagram.
#[derive(Clone, Debug)]
pub struct Compiled {
    /// Closed oriented triangulation with the homology profile of S^3.
    pub sphere: Triangulation,
    /// The spatial graph: marked vertices and edge paths in the 1-skeleton.
    pub sub: SubComplex,
    /// Decorations and incidences, as read off the diagram.
    pub graph: DecoratedGraph,
    pub layout: Layout,
}

fn layout_of(d: &Diagram, m: &map::PlaneMap, dr: &fpp::Drawing) -> Layout {
    let mut out = Layout::default();
    let mut node_of: BTreeMap<SiteRef, usize> = BTreeMap::new();
    let mut dummy: BTreeMap<(String, u8), usize> = BTreeMap::new();
    for (i, tag) in m.tags.iter().enumerate() {
        match tag {
            NodeTag::Site(SiteRef::Vertex(v)) => {
                out.vertices.insert(v.clone(), dr.coords[i]);
                node_of.insert(SiteRef::Vertex(v.clone()), i);
            }
            NodeTag::Site(SiteRef::Crossing(c)) => {
                out.crossings.insert(c.clone(), dr.coords[i]);
                node_of.insert(SiteRef::Crossing(c.clone()), i);
            }
            NodeTag::ArcDummy(a, end) => {
                dummy.insert((a.clone(), *end), i);
            }
            NodeTag::Scaffold => {}
        }
    }
    for e in d.edge_ids() {
        for step in d.walk(e).expect("edge listed by the diagram") {
            let pts = vec![
                dr.coords[node_of[&step.tail.site]],
                dr.coords[dummy[&(step.arc.clone(), 0u8)]],
                dr.coords[dummy[&(step.arc.clone(), 1u8)]],
                dr.coords[node_of[&step.head.site]],
            ];
            out.arcs.insert(step.arc.clone(), pts);
        }
    }
    out
}

/// Draws the diagram on an integer grid, realizing its rotation system.
/// The empty diagram gets the empty drawing.
pub fn planar_layout(d: &Diagram) -> Result<Layout, CompileError> {
    if d.vertex_count() == 0 {
        return Ok(Layout::default());
    }
    let m = map::augment(d)?;
    let dr = fpp::draw(&m)?;
    Ok(layout_of(d, &m, &dr))
}

/// Compiles a diagram to a closed oriented 3-sphere triangulation carrying
/// the spatial graph as a marked subcomplex.
pub fn compile_to_sphere(d: &Diagram) -> Result<Compiled, CompileError> {
    let graph = d.underlying_graph();
    if d.vertex_count() == 0 {
        let mut sphere = crate::tri::two_tet_sphere();
        sphere.validate_and_orient()?;
        return Ok(Compiled {
            sphere,
            sub: SubComplex::empty(),
            graph,
            layout: Layout::default(),
        });
    }
    let m = map::augment(d)?;
    let dr = fpp::draw(&m)?;
    let layout = layout_of(d, &m, &dr);
    let (sphere, sub) = slab::embed(d, &m, &dr)?;
    Ok(Compiled {
        sphere,
        sub,
        graph,
        layout,
    })
}

/// Diagnostic report of [`verify_sphere`].
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct SphereReport {
    pub closed: bool,
    pub orientable: bool,
    /// H0 = Z, H1 = 0, H2 = 0 over the integers.
    pub sphere_homology: bool,
    /// Pachner simplification reached a minimal sphere triangulation.
    pub certified: bool,
    pub tets_after_simplify: usize,
}

impl SphereReport {
    pub fn outcome(&self) -> &'static str {
        if !(self.closed && self.orientable && self.sphere_homology) {
            "rejected"
        } else if self.certified {
            "certified"
        } else {
            "homology-consistent"
        }
    }
}

/// Checks the sphere conditions and attempts to certify by simplifying to
/// the two-tet sphere within the move budget.
pub fn verify_sphere_budget(t: &Triangulation, budget: u64) -> SphereReport {
    let closed = t.is_closed();
    let orientable = {
        let mut c = t.clone();
        c.validate_and_orient().is_ok()
    };
    let sphere_homology = closed
        && t.homology(false).is_ok_and(|h| {
            h.h[0].rank == 1
                && h.h[1].rank == 0
                && h.h[2].rank == 0
                && h.h.iter().all(|g| g.torsion.is_empty())
        });
    let mut tets_after_simplify = t.tet_count();
    let mut certified = false;
    if closed && orientable && sphere_homology {
        if let Ok(small) = pachner_simplify(t, &BTreeSet::new(), &BTreeSet::new(), budget) {
            tets_after_simplify = small.tet_count();
            // A closed orientable homology sphere on at most two tets is a
            // genuine 3-sphere; nothing else fits in the small census.
            certified = small.tet_count() <= 2;
        }
    }
    SphereReport {
        closed,
        orientable,
        sphere_homology,
        certified,
        tets_after_simplify,
    }
}

pub fn verify_sphere(t: &Triangulation) -> SphereReport {
    verify_sphere_budget(t, 50_000)
}

/// Reads the underlying decorated graph back out of a marked sphere:
/// vertices from the marks, incidences from the path endpoints, decorations
/// carried over by name from `deco`.
pub fn read_back_graph(
    sphere: &Triangulation,
    sub: &SubComplex,
    deco: &DecoratedGraph,
) -> Result<DecoratedGraph, CompileError> {
    let skel = sphere.skeleton()?;
    let mut name_of: BTreeMap<usize, String> = BTreeMap::new();
    for (name, &class) in &sub.marked_vertices {
        name_of.insert(class, name.clone());
    }
    let vertices: BTreeSet<String> = sub.marked_vertices.keys().cloned().collect();
    let mut edges: BTreeMap<String, (String, String)> = BTreeMap::new();
    for (name, path) in &sub.edge_paths {
        let (c0, f0) = path[0];
        let (cl, fl) = *path.last().expect("validated paths are nonempty");
        let ends0 = skel.edge_endpoints(c0);
        let endsl = skel.edge_endpoints(cl);
        let start = if f0 { ends0.0 } else { ends0.1 };
        let end = if fl { endsl.1 } else { endsl.0 };
        let sv = name_of
            .get(&start)
            .ok_or_else(|| CompileError::Layout(format!("path {name} starts off-mark")))?;
        let ev = name_of
            .get(&end)
            .ok_or_else(|| CompileError::Layout(format!("path {name} ends off-mark")))?;
        edges.insert(name.clone(), (sv.clone(), ev.clone()));
    }
    let missing = |kind: &str, name: &str| {
        CompileError::Layout(format!("{kind} {name} lost its color on read-back"))
    };
    let vertex_colors = if deco.decoration_type().vertex_colored {
        let mut cols = BTreeMap::new();
        for v in &vertices {
            cols.insert(
                v.clone(),
                deco.vertex_color(v).ok_or_else(|| missing("vertex", v))?,
            );
        }
        Some(cols)
    } else {
        None
    };
    let edge_colors = if deco.decoration_type().edge_colored {
        let mut cols = BTreeMap::new();
        for e in edges.keys() {
            cols.insert(
                e.clone(),
                deco.edge_color(e).ok_or_else(|| missing("edge", e))?,
            );
        }
        Some(cols)
    } else {
        None
    };
    Ok(DecoratedGraph::new(
        vertices,
        edges,
        vertex_colors,
        edge_colors,
        deco.decoration_type().directed,
    )?)
}

/// Renders the marked subcomplex sidecar.
pub fn render_sub(sub: &SubComplex) -> String {
    let mut out = String::new();
    for (name, class) in &sub.marked_vertices {
        out.push_str(&format!("vertex {name} {class}\n"));
    }
    for (name, path) in &sub.edge_paths {
        let steps: Vec<String> = path
            .iter()
            .map(|&(c, fwd)| format!("{c}{}", if fwd { '+' } else { '-' }))
            .collect();
        out.push_str(&format!("path {name} {}\n", steps.join(" ")));
    }
    out
}

/// Parses the sidecar format written by [`render_sub`].
pub fn parse_sub(text: &str) -> Result<SubComplex, CompileError> {
    let bad = |line: usize, msg: String| CompileError::Sidecar(format!("line {line}: {msg}"));
    let mut sub = SubComplex::empty();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match tokens[0] {
            "vertex" => {
                if tokens.len() != 3 {
                    return Err(bad(line, "vertex needs a name and a class".into()));
                }
                let class: usize = tokens[2]
                    .parse()
                    .map_err(|_| bad(line, format!("bad class {}", tokens[2])))?;
                if sub
                    .marked_vertices
                    .insert(tokens[1].to_string(), class)
                    .is_some()
                {
                    return Err(bad(line, format!("duplicate vertex {}", tokens[1])));
                }
            }
            "path" => {
                if tokens.len() < 3 {
                    return Err(bad(line, "path needs a name and steps".into()));
                }
                let mut steps = Vec::with_capacity(tokens.len() - 2);
                for tok in &tokens[2..] {
                    let (num, fwd) = match tok.as_bytes().last() {
                        Some(b'+') => (&tok[..tok.len() - 1], true),
                        Some(b'-') => (&tok[..tok.len() - 1], false),
                        _ => return Err(bad(line, format!("step {tok} lacks a direction"))),
                    };
                    let class: usize = num
                        .parse()
                        .map_err(|_| bad(line, format!("bad step class {tok}")))?;
                    steps.push((class, fwd));
                }
                if sub
                    .edge_paths
                    .insert(tokens[1].to_string(), steps)
                    .is_some()
                {
                    return Err(bad(line, format!("duplicate path {}", tokens[1])));
                }
            }
            other => return Err(bad(line, format!("unknown record {other}"))),
        }
    }
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Diagram {
        Diagram::parse(text).unwrap()
    }

    fn corpus(name: &str) -> Diagram {
        let path = format!("{}/corpus/{name}.sgd", env!("CARGO_MANIFEST_DIR"));
        parse(&std::fs::read_to_string(path).unwrap())
    }

    #[test]
    fn empty_diagram_compiles_to_certified_sphere() {
        let c = compile_to_sphere(&Diagram::empty()).unwrap();
        assert!(c.sub.marked_vertices.is_empty() && c.sub.edge_paths.is_empty());
        let rep = verify_sphere(&c.sphere);
        assert_eq!(rep.outcome(), "certified");
        assert_eq!(planar_layout(&Diagram::empty()).unwrap(), Layout::default());
    }

    #[test]
    fn single_vertex_layout_and_sphere() {
        let d = Diagram::point("p", None);
        let lay = planar_layout(&d).unwrap();
        assert_eq!(lay.vertices.len(), 1);
        assert!(lay.arcs.is_empty());
        let c = compile_to_sphere(&d).unwrap();
        assert_eq!(c.sub.marked_vertices.len(), 1);
        assert!(c.sub.edge_paths.is_empty());
        assert_ne!(verify_sphere(&c.sphere).outcome(), "rejected");
    }

    #[test]
    fn two_tet_sphere_is_certified() {
        let mut t = crate::tri::two_tet_sphere();
        t.validate_and_orient().unwrap();
        let rep = verify_sphere(&t);
        assert!(rep.certified);
    }

    #[test]
    fn solid_torus_is_rejected() {
        let t = crate::tri::one_tet_solid_torus();
        let rep = verify_sphere(&t);
        assert!(!rep.closed);
        assert_eq!(rep.outcome(), "rejected");
    }

    #[test]
    fn unknot_layout_respects_sites() {
        let d = corpus("unknot-loop");
        let lay = planar_layout(&d).unwrap();
        for (_, pts) in &lay.arcs {
            assert!(pts.len() >= 2);
        }
        // Arc endpoints coincide with their site grid points.
        for e in d.edge_ids() {
            for step in d.walk(e).unwrap() {
                let pts = &lay.arcs[&step.arc];
                let at = |s: &SiteRef| match s {
                    SiteRef::Vertex(v) => lay.vertices[v],
                    SiteRef::Crossing(c) => lay.crossings[c],
                };
                assert_eq!(*pts.first().unwrap(), at(&step.tail.site));
                assert_eq!(*pts.last().unwrap(), at(&step.head.site));
            }
        }
    }

    #[test]
    fn corpus_compiles_and_reads_back() {
        for name in [
            "empty",
            "point",
            "point-colored",
            "one-edge",
            "path2",
            "colored-path",
            "star3",
            "unknot-loop",
            "directed-loop",
            "theta",
            "wedge2",
            "split-union",
            "flat-handcuffs",
        ] {
            let d = corpus(name);
            let c = compile_to_sphere(&d).unwrap();
            assert!(c.sphere.is_closed(), "{name}: not closed");
            assert!(c.sphere.orientation().is_some(), "{name}: unoriented");
            c.sub.validate(&c.sphere).unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = read_back_graph(&c.sphere, &c.sub, &c.graph).unwrap();
            assert_eq!(back, c.graph, "{name}: read-back mismatch");
        }
    }

    #[test]
    fn knotted_corpus_compiles() {
        for name in ["trefoil-loop", "trefoil-loop-mirror", "fig3-hopf", "tangled-tree", "fig5"] {
            let d = corpus(name);
            let c = compile_to_sphere(&d).unwrap();
            let h = c.sphere.homology(false).unwrap();
            assert_eq!(h.h[1].rank, 0, "{name}: H1 rank");
            assert_eq!(h.h[2].rank, 0, "{name}: H2 rank");
            assert!(h.h.iter().all(|g| g.torsion.is_empty()), "{name}: torsion");
            let back = read_back_graph(&c.sphere, &c.sub, &c.graph).unwrap();
            assert_eq!(back, c.graph, "{name}: read-back mismatch");
        }
    }

    #[test]
    fn sidecar_round_trips() {
        let d = corpus("theta");
        let c = compile_to_sphere(&d).unwrap();
        let text = render_sub(&c.sub);
        let back = parse_sub(&text).unwrap();
        assert_eq!(back, c.sub);
        assert!(parse_sub("vertex v\n").is_err());
        assert!(parse_sub("path p 3?\n").is_err());
        assert!(parse_sub("# comment only\n").unwrap().marked_vertices.is_empty());
    }
}
