//! From a verified drawing to a triangulated 3-sphere. The drawing's mesh
//! is thickened to a two-layer prism slab; the slab boundary is coned to a
//! single apex, closing the sphere. Strands run along middle-plane edges,
//! dipping to the bottom layer at undercrossings, so the marked subcomplex
//! realizes the diagram's spatial graph with its over/under data.

use std::collections::BTreeMap;

use crate::diagram::{Diagram, SiteRef};
use crate::tri::{from_labeled_tets, split_prism, SubComplex, Triangulation};

use super::fpp::Drawing;
use super::map::{NodeTag, PlaneMap};
use super::CompileError;

fn err(msg: impl Into<String>) -> CompileError {
    CompileError::Layout(msg.into())
}

/// Vertex label of map node `p` at level `z` in {-1, 0, 1}.
fn label(p: usize, z: i64) -> u64 {
    p as u64 * 3 + (z + 1) as u64
}

/// Builds the closed oriented sphere and the label-to-class map. Slab tets
/// are signed by their geometric orientation in the drawing; apex tets take
/// the sign forced by coherence with their base prism face.
fn cone_slab(dr: &Drawing) -> Result<(Triangulation, BTreeMap<u64, usize>), CompileError> {
    let n = dr.coords.len();
    let mut tets: Vec<[u64; 4]> = Vec::with_capacity(dr.triangles.len() * 6);
    for t in &dr.triangles {
        let (a, b, c) = (t[0] as u64, t[1] as u64, t[2] as u64);
        split_prism(&mut tets, a, b, c, |p, k| p * 3 + k);
        split_prism(&mut tets, a, b, c, |p, k| p * 3 + 1 + k);
    }
    let n_slab = tets.len();

    let mut face_count: BTreeMap<[u64; 3], u32> = BTreeMap::new();
    for t in &tets {
        for omit in 0..4 {
            let mut tri: Vec<u64> = (0..4).filter(|&i| i != omit).map(|i| t[i]).collect();
            tri.sort_unstable();
            *face_count.entry([tri[0], tri[1], tri[2]]).or_insert(0) += 1;
        }
    }
    let apex = label(n, -1);
    for (tri, count) in &face_count {
        match count {
            1 => tets.push([apex, tri[0], tri[1], tri[2]]),
            2 => {}
            _ => return Err(err("slab face shared by more than two prisms")),
        }
    }

    let (mut sphere, vmap) = from_labeled_tets(&tets)?;
    if !sphere.is_closed() {
        return Err(err("cone over the slab boundary did not close"));
    }

    let pos = |l: u64| -> (i128, i128, i128) {
        let p = (l / 3) as usize;
        let z = (l % 3) as i128 - 1;
        (dr.coords[p].0 as i128, dr.coords[p].1 as i128, z)
    };
    let mut signs = vec![0i8; sphere.tet_count()];
    for (i, t) in tets[..n_slab].iter().enumerate() {
        let (a, b, c, d) = (pos(t[0]), pos(t[1]), pos(t[2]), pos(t[3]));
        let u = (b.0 - a.0, b.1 - a.1, b.2 - a.2);
        let v = (c.0 - a.0, c.1 - a.1, c.2 - a.2);
        let w = (d.0 - a.0, d.1 - a.1, d.2 - a.2);
        let det = u.0 * (v.1 * w.2 - v.2 * w.1) - u.1 * (v.0 * w.2 - v.2 * w.0)
            + u.2 * (v.0 * w.1 - v.1 * w.0);
        signs[i] = match det.signum() {
            1 => 1,
            -1 => -1,
            _ => return Err(err("degenerate prism tet in the slab")),
        };
    }
    for i in n_slab..sphere.tet_count() {
        let mut found = false;
        for f in 0..4u8 {
            let Some(g) = sphere.gluing(i, f) else {
                continue;
            };
            if g.tet < n_slab {
                signs[i] = -signs[g.tet] * g.perm.sign();
                found = true;
                break;
            }
        }
        if !found {
            return Err(err("apex tet with no slab neighbor"));
        }
    }
    sphere.orient_with(signs)?;
    Ok((sphere, vmap))
}

/// Node and level chain of one edge traversal, in walk order. Every
/// consecutive pair is an edge of the slab: a middle-plane drawing edge, a
/// vertical prism edge, or a bottom copy of a drawing edge under a dip.
fn edge_chain(
    d: &Diagram,
    edge: &str,
    site_node: &BTreeMap<SiteRef, usize>,
    dummy: &BTreeMap<(String, u8), usize>,
) -> Result<Vec<(usize, i64)>, CompileError> {
    let walk = d.walk(edge).ok_or_else(|| err("edge missing a walk"))?;
    let site = |s: &SiteRef| -> Result<usize, CompileError> {
        site_node
            .get(s)
            .copied()
            .ok_or_else(|| err(format!("no map node for site {}", s.id())))
    };
    let first = walk.first().ok_or_else(|| err("empty edge walk"))?;
    let mut chain = vec![(site(&first.tail.site)?, 0)];
    let mut resurface = false;
    for step in walk {
        let d0 = dummy[&(step.arc.clone(), 0u8)];
        let d1 = dummy[&(step.arc.clone(), 1u8)];
        if resurface {
            chain.push((d0, -1));
            chain.push((d0, 0));
            resurface = false;
        } else {
            chain.push((d0, 0));
        }
        chain.push((d1, 0));
        match &step.head.site {
            SiteRef::Crossing(_) => {
                let c = site(&step.head.site)?;
                if step.head.slot % 2 == 0 {
                    // Understrand: dip to the bottom layer through the
                    // flanking arc dummies.
                    chain.push((d1, -1));
                    chain.push((c, -1));
                    resurface = true;
                } else {
                    chain.push((c, 0));
                }
            }
            SiteRef::Vertex(_) => chain.push((site(&step.head.site)?, 0)),
        }
    }
    Ok(chain)
}

/// Assembles the marked subcomplex: one marked vertex per graph vertex at
/// the middle plane, one edge path per graph edge along its chain.
fn mark_strands(
    d: &Diagram,
    m: &PlaneMap,
    sphere: &Triangulation,
    vmap: &BTreeMap<u64, usize>,
) -> Result<SubComplex, CompileError> {
    let mut site_node: BTreeMap<SiteRef, usize> = BTreeMap::new();
    let mut dummy: BTreeMap<(String, u8), usize> = BTreeMap::new();
    for (i, tag) in m.tags.iter().enumerate() {
        match tag {
            NodeTag::Site(s) => {
                site_node.insert(s.clone(), i);
            }
            NodeTag::ArcDummy(a, end) => {
                dummy.insert((a.clone(), *end), i);
            }
            NodeTag::Scaffold => {}
        }
    }

    let skel = sphere.skeleton().map_err(CompileError::Tri)?;
    let mut pair_class: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for c in 0..skel.edge_count() {
        let (a, b) = skel.edge_endpoints(c);
        let key = (a.min(b), a.max(b));
        if pair_class.insert(key, c).is_some() {
            return Err(err("two edge classes join the same vertex pair"));
        }
    }
    let class_of = |node: usize, z: i64| -> Result<usize, CompileError> {
        vmap.get(&label(node, z))
            .copied()
            .ok_or_else(|| err("map node missing from the slab"))
    };

    let mut sub = SubComplex::empty();
    for v in d.vertex_ids() {
        let node = site_node
            .get(&SiteRef::Vertex(v.clone()))
            .ok_or_else(|| err(format!("vertex {v} has no map node")))?;
        sub.marked_vertices
            .insert(v.clone(), class_of(*node, 0)?);
    }
    for e in d.edge_ids() {
        let chain = edge_chain(d, e, &site_node, &dummy)?;
        let mut path = Vec::with_capacity(chain.len() - 1);
        for pair in chain.windows(2) {
            let va = class_of(pair[0].0, pair[0].1)?;
            let vb = class_of(pair[1].0, pair[1].1)?;
            let key = (va.min(vb), va.max(vb));
            let c = *pair_class
                .get(&key)
                .ok_or_else(|| err(format!("chain step of edge {e} is not a slab edge")))?;
            let (t0, _) = skel.edge_endpoints(c);
            path.push((c, t0 == va));
        }
        sub.edge_paths.insert(e.clone(), path);
    }
    sub.validate(sphere).map_err(CompileError::Tri)?;
    Ok(sub)
}

/// Thickens and cones the drawing, then marks the diagram's strands.
pub(crate) fn embed(
    d: &Diagram,
    m: &PlaneMap,
    dr: &Drawing,
) -> Result<(Triangulation, SubComplex), CompileError> {
    let (sphere, vmap) = cone_slab(dr)?;
    let sub = mark_strands(d, m, &sphere, &vmap)?;
    Ok((sphere, sub))
}
