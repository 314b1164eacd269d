//! Straight-line grid drawing of the augmented map by canonical ordering
//! and the shift method. The drawing is verified a posteriori with exact
//! integer predicates: pairwise segment disjointness, per-node rotation
//! realization, and consistent face orientation, so an invalid drawing can
//! never escape this module.

use std::collections::BTreeSet;

use super::map::PlaneMap;
use super::CompileError;

pub(crate) struct Drawing {
    /// Position of every map node.
    pub coords: Vec<(i64, i64)>,
    /// Inner faces of the map, as corner triples.
    pub triangles: Vec<[usize; 3]>,
}

fn err(msg: impl Into<String>) -> CompileError {
    CompileError::Layout(msg.into())
}

/// Reverse peel: removes boundary vertices one at a time, never the two
/// anchors, never a vertex incident to a chord of the current boundary.
/// Returns the vertex order and, per vertex, its neighbors at removal time
/// in boundary order (the cover path of the forward phase).
struct Peel {
    order: Vec<usize>,
    cover: Vec<Vec<usize>>,
}

fn peel(m: &PlaneMap) -> Result<Peel, CompileError> {
    let n = m.node_count();
    let faces = m.trace_faces();
    let outer = &faces[0];
    if outer.len() != 3 {
        return Err(err("outer face is not a triangle"));
    }
    let h = |d: usize| m.head(d);
    let (v1, v2) = (h(outer[0]), h(outer[1]));

    let mut alive = vec![true; n];
    let eff_rot = |alive: &[bool], u: usize| -> Vec<usize> {
        m.rot[u]
            .iter()
            .copied()
            .filter(|&d| alive[m.head(d)])
            .collect()
    };
    // Face successor on the map restricted to live nodes.
    let next_dart = |alive: &[bool], d: usize| -> usize {
        let t = m.dart_twin[d];
        let u = m.dart_node[t];
        let r = eff_rot(alive, u);
        let i = r.iter().position(|&x| x == t).expect("twin is live");
        r[(i + r.len() - 1) % r.len()]
    };

    let mut walk: Vec<usize> = outer.clone();
    let mut order = vec![0usize; n];
    let mut cover: Vec<Vec<usize>> = vec![Vec::new(); n];
    order[0] = v1;
    order[1] = v2;

    for k in (3..n).rev() {
        let cycle: Vec<usize> = walk.iter().map(|&d| h(d)).collect();
        let on_cycle: BTreeSet<usize> = cycle.iter().copied().collect();
        if on_cycle.len() != cycle.len() {
            return Err(err("boundary cycle develops a repeated vertex"));
        }
        let mut chosen = None;
        for (i, &w) in cycle.iter().enumerate() {
            if w == v1 || w == v2 {
                continue;
            }
            let nbrs: Vec<usize> = eff_rot(&alive, w).iter().map(|&d| h(d)).collect();
            let on = nbrs.iter().filter(|&&x| on_cycle.contains(&x)).count();
            if on == 2 {
                chosen = Some((i, w));
                break;
            }
        }
        let (i, w) = chosen.ok_or_else(|| err("no removable boundary vertex"))?;
        let prev = cycle[(i + cycle.len() - 1) % cycle.len()];
        let next = cycle[(i + 1) % cycle.len()];

        // Internal neighbors fill one angular side between the boundary
        // darts; the other side is the outer gap and must be empty.
        let r = eff_rot(&alive, w);
        let heads: Vec<usize> = r.iter().map(|&d| h(d)).collect();
        let ip = heads
            .iter()
            .position(|&x| x == prev)
            .ok_or_else(|| err("boundary predecessor missing from rotation"))?;
        let iq = heads
            .iter()
            .position(|&x| x == next)
            .ok_or_else(|| err("boundary successor missing from rotation"))?;
        let side = |from: usize, to: usize| -> Vec<usize> {
            let mut out = Vec::new();
            let mut j = (from + 1) % heads.len();
            while j != to {
                out.push(heads[j]);
                j = (j + 1) % heads.len();
            }
            out
        };
        // Rotations are counterclockwise and the outer walk is clockwise,
        // so the sector from the successor dart counterclockwise back to
        // the predecessor dart is the outer gap; the other sector holds the
        // internal neighbors already in new-boundary order.
        let internals = side(ip, iq);
        if !side(iq, ip).is_empty() {
            return Err(err("boundary vertex has no outer gap"));
        }
        let mut cov = vec![prev];
        cov.extend(internals);
        cov.push(next);
        order[k] = w;
        cover[w] = cov;
        alive[w] = false;

        // Retrace the outer face from a surviving dart.
        let seed = *walk
            .iter()
            .find(|&&d| m.dart_node[d] != w && h(d) != w)
            .ok_or_else(|| err("outer walk vanished"))?;
        let mut nw = Vec::new();
        let mut d = seed;
        loop {
            nw.push(d);
            d = next_dart(&alive, d);
            if d == seed {
                break;
            }
        }
        walk = nw;
    }

    let cycle: Vec<usize> = walk.iter().map(|&d| h(d)).collect();
    let v3 = *cycle
        .iter()
        .find(|&&x| x != v1 && x != v2)
        .ok_or_else(|| err("degenerate final boundary"))?;
    if cycle.len() != 3 {
        return Err(err("peel finished with a non-triangle boundary"));
    }
    order[2] = v3;
    Ok(Peel { order, cover })
}

/// Forward shift phase: place vertices in canonical order, shifting placed
/// subtrees right so every new vertex sees its cover path on slopes +-1.
fn place(m: &PlaneMap, p: &Peel) -> Result<Vec<(i64, i64)>, CompileError> {
    let n = m.node_count();
    let mut x = vec![0i64; n];
    let mut y = vec![0i64; n];
    let mut moved_with: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();

    let (v1, v2, v3) = (p.order[0], p.order[1], p.order[2]);
    x[v1] = 0;
    y[v1] = 0;
    x[v2] = 2;
    y[v2] = 0;
    x[v3] = 1;
    y[v3] = 1;
    let mut frontier = vec![v1, v3, v2];

    for &vk in &p.order[3..] {
        let mut cov = p.cover[vk].clone();
        let pos_of = |u: usize, frontier: &[usize]| frontier.iter().position(|&f| f == u);
        let first = pos_of(cov[0], &frontier)
            .ok_or_else(|| err("cover path endpoint left the frontier"))?;
        let last = pos_of(*cov.last().expect("cover nonempty"), &frontier)
            .ok_or_else(|| err("cover path endpoint left the frontier"))?;
        if first > last {
            cov.reverse();
        }
        let (pp, qq) = if first <= last {
            (first, last)
        } else {
            (last, first)
        };
        if qq - pp + 1 != cov.len() {
            return Err(err("cover path is not contiguous on the frontier"));
        }
        for (off, &u) in cov.iter().enumerate() {
            if frontier[pp + off] != u {
                return Err(err("cover path order disagrees with the frontier"));
            }
        }

        for (i, &f) in frontier.iter().enumerate() {
            let dx = if i > pp && i < qq {
                1
            } else if i >= qq {
                2
            } else {
                0
            };
            if dx != 0 {
                for &u in &moved_with[f] {
                    x[u] += dx;
                }
            }
        }
        let (wp, wq) = (frontier[pp], frontier[qq]);
        let sx = x[wp] + x[wq] + y[wq] - y[wp];
        let sy = x[wq] - x[wp] + y[wp] + y[wq];
        if sx % 2 != 0 || sy % 2 != 0 {
            return Err(err("shift parity broke; placement is not integral"));
        }
        x[vk] = sx / 2;
        y[vk] = sy / 2;

        let mut absorbed = vec![vk];
        for &f in &frontier[pp + 1..qq] {
            absorbed.extend(moved_with[f].iter().copied());
        }
        moved_with[vk] = absorbed;
        frontier.splice(pp + 1..qq, [vk]);
    }

    Ok(x.into_iter().zip(y).collect())
}

type Pt = (i64, i64);

fn cross(o: Pt, a: Pt, b: Pt) -> i128 {
    let (ox, oy) = (o.0 as i128, o.1 as i128);
    (a.0 as i128 - ox) * (b.1 as i128 - oy) - (a.1 as i128 - oy) * (b.0 as i128 - ox)
}

fn on_segment(p: Pt, q: Pt, r: Pt) -> bool {
    cross(p, q, r) == 0
        && r.0 >= p.0.min(q.0)
        && r.0 <= p.0.max(q.0)
        && r.1 >= p.1.min(q.1)
        && r.1 <= p.1.max(q.1)
}

/// True when segments ab and cd intersect anywhere (shared endpoints count).
fn segments_meet(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)) {
        return true;
    }
    (d1 == 0 && on_segment(c, d, a))
        || (d2 == 0 && on_segment(c, d, b))
        || (d3 == 0 && on_segment(a, b, c))
        || (d4 == 0 && on_segment(a, b, d))
}

/// Checks that straight edges meet only at shared endpoints.
fn check_segments(m: &PlaneMap, coords: &[Pt]) -> Result<(), CompileError> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for d in 0..m.dart_node.len() {
        let (u, v) = (m.dart_node[d], m.head(d));
        if u < v {
            edges.push((u, v));
        }
    }
    let distinct: BTreeSet<Pt> = coords.iter().copied().collect();
    if distinct.len() != coords.len() {
        return Err(err("two nodes share a grid point"));
    }
    for (i, &(a, b)) in edges.iter().enumerate() {
        if coords[a] == coords[b] {
            return Err(err("degenerate edge in the drawing"));
        }
        for &(c, d) in &edges[i + 1..] {
            let shared: Vec<usize> = [a, b]
                .iter()
                .copied()
                .filter(|x| *x == c || *x == d)
                .collect();
            match shared.len() {
                2 => return Err(err("parallel edges survived augmentation")),
                1 => {
                    let s = coords[shared[0]];
                    let o1 = if a == shared[0] { b } else { a };
                    let o2 = if c == shared[0] { d } else { c };
                    // Beyond the shared endpoint the segments must diverge.
                    if cross(s, coords[o1], coords[o2]) == 0
                        && (on_segment(s, coords[o1], coords[o2])
                            || on_segment(s, coords[o2], coords[o1]))
                    {
                        return Err(err("edges overlap along a line"));
                    }
                }
                _ => {
                    if segments_meet(coords[a], coords[b], coords[c], coords[d]) {
                        return Err(err("edges cross in the drawing"));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks that the drawn counterclockwise order around every node equals
/// its rotation.
fn check_rotations(m: &PlaneMap, coords: &[Pt]) -> Result<(), CompileError> {
    for u in 0..m.node_count() {
        let heads: Vec<usize> = m.rot[u].iter().map(|&d| m.head(d)).collect();
        if heads.len() < 3 {
            continue;
        }
        let mut drawn = heads.clone();
        let half = |w: usize| -> u8 {
            let dx = coords[w].0 - coords[u].0;
            let dy = coords[w].1 - coords[u].1;
            u8::from(!(dy > 0 || (dy == 0 && dx > 0)))
        };
        drawn.sort_by(|&a, &b| {
            half(a).cmp(&half(b)).then_with(|| {
                // Within a half-plane, counterclockwise means a right turn
                // from a to b seen from u.
                cross(coords[u], coords[a], coords[b]).cmp(&0).reverse()
            })
        });
        let off = drawn
            .iter()
            .position(|&w| w == heads[0])
            .expect("same node set");
        let aligned = (0..heads.len()).all(|i| drawn[(off + i) % heads.len()] == heads[i]);
        if !aligned {
            return Err(err(format!("rotation at node {u} is not realized")));
        }
    }
    Ok(())
}

/// Draws the augmented map. The outer face is the first traced face; all
/// other faces come back as triangles of the mesh.
pub(crate) fn draw(m: &PlaneMap) -> Result<Drawing, CompileError> {
    let n = m.node_count();
    if n < 4 {
        return Err(err("map too small to draw"));
    }
    let p = peel(m)?;
    let mut coords = place(m, &p)?;

    let faces = m.trace_faces();
    let triangles: Vec<[usize; 3]> = faces[1..]
        .iter()
        .map(|walk| {
            let c: Vec<usize> = walk.iter().map(|&d| m.head(d)).collect();
            [c[0], c[1], c[2]]
        })
        .collect();

    // The inner faces must agree on orientation; mirror if they are all
    // clockwise, so that rotations read counterclockwise on the page.
    let mut sign = 0i128;
    for t in &triangles {
        let s = cross(coords[t[0]], coords[t[1]], coords[t[2]]);
        if s == 0 {
            return Err(err("degenerate face in the drawing"));
        }
        if sign == 0 {
            sign = s.signum();
        } else if sign != s.signum() {
            return Err(err("faces disagree on orientation"));
        }
    }
    if sign < 0 {
        for c in coords.iter_mut() {
            c.0 = -c.0;
        }
    }

    let bound = 2 * n as i64 + 4;
    if coords
        .iter()
        .any(|&(cx, cy)| cx.abs() > bound || cy.abs() > bound)
    {
        return Err(err("drawing left the polynomial grid"));
    }

    check_segments(m, &coords)?;
    check_rotations(m, &coords)?;
    Ok(Drawing { coords, triangles })
}

#[cfg(test)]
mod tests {
    use super::super::map::augment;
    use super::*;
    use crate::diagram::Diagram;

    fn drawn(text: &str) -> (PlaneMap, Drawing) {
        let d = Diagram::parse(text).unwrap();
        let m = augment(&d).unwrap();
        let dr = draw(&m).unwrap();
        (m, dr)
    }

    #[test]
    fn unknot_draws_and_verifies() {
        let (m, dr) = drawn("vertex v\nvnode v a a\nedge e a\n");
        assert_eq!(dr.coords.len(), m.node_count());
        assert_eq!(dr.triangles.len(), m.trace_faces().len() - 1);
    }

    #[test]
    fn trefoil_curl_draws() {
        let (_, dr) = drawn(
            "vertex v\nvnode v a d\ncrossing c a b b d\n\
             edge e a b d\n",
        );
        assert!(dr.triangles.len() > 6);
    }

    #[test]
    fn theta_draws() {
        let (_, dr) = drawn(
            "vertex u\nvertex w\n\
             vnode u a b c\nvnode w c b a\n\
             edge e1 a\nedge e2 b\nedge e3 c\n",
        );
        assert!(!dr.triangles.is_empty());
    }

    #[test]
    fn split_union_draws_in_one_grid() {
        let (_, dr) = drawn(
            "vertex a\nvertex b\n\
             vnode a x x\nvnode b y y\n\
             edge e1 x\nedge e2 y\n",
        );
        assert!(!dr.triangles.is_empty());
    }

    #[test]
    fn face_count_matches_euler() {
        let (m, dr) = drawn("vertex v\nvnode v a a\nedge e a\n");
        let nn = m.node_count() as i64;
        let ee = (m.dart_node.len() / 2) as i64;
        assert_eq!(dr.triangles.len() as i64, ee - nn + 1);
    }
}
