//! Flattened boundary patterns.
//!
//! [`flatten_pattern`] forgets everything about a marked exterior except
//! its boundary surface and a set of distinguished edges drawn on it: the
//! juncture circles, a fan of arcs at three points of every circle, and a
//! marked triangle with corner fans on each boundary sphere belonging to
//! an isolated vertex. The arc counts encode the decorations. Walking a
//! circle so that the fan sizes at its three marked points ascend, the
//! first point carries one arc into the vertex region, the second two
//! (plus one arc into the edge region exactly when this circle is the
//! edge's positive end), and the third `f + 3` arcs into the vertex
//! region and `g` into the edge region, where `f` and `g` are the vertex
//! and edge colors (uncolored reads as 0; telling those apart is the
//! decoration type's job and lives with the graph, not the pattern). The
//! vertex region lies to the left of the ascending direction, which is
//! how the pattern remembers the ambient orientation.
//!
//! [`recover_marking`] parses such a surface back into regions, colors,
//! positive ends and the orientation bit with no access to the exterior
//! it came from; flattening and recovering round-trips, and recovering a
//! mirrored surface flips exactly the orientation bit.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{boundary_view, ExtError, MarkedExterior, Region, RegionKind};

/// A closed oriented surface given by directed corner triples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternSurface {
    pub vertex_count: usize,
    pub faces: Vec<[usize; 3]>,
}

/// A surface with a distinguished one-dimensional pattern drawn along its
/// edges. Every decoration of a marked exterior's boundary can be read
/// back off this by [`recover_marking`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlattenedPattern {
    pub surface: PatternSurface,
    /// Distinguished edges as ordered pairs (lo, hi).
    pub edges: BTreeSet<(usize, usize)>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Working copy of the boundary surface during flattening: faces with
/// their regions, juncture cycles, and the directed-edge index kept in
/// step as the surface is refined.
struct Builder {
    nv: usize,
    faces: Vec<[usize; 3]>,
    region: Vec<usize>,
    dir: BTreeMap<(usize, usize), usize>,
    /// Directed juncture cycles, indexed like the exterior's junctures.
    cycles: Vec<Vec<usize>>,
}

fn directed(faces: &[[usize; 3]]) -> Result<BTreeMap<(usize, usize), usize>, ExtError> {
    let mut dir = BTreeMap::new();
    for (i, f) in faces.iter().enumerate() {
        if f[0] == f[1] || f[0] == f[2] || f[1] == f[2] {
            return Err(ExtError::BadInput(
                "surface triangle with repeated corner".into(),
            ));
        }
        for j in 0..3 {
            if dir.insert((f[j], f[(j + 1) % 3]), i).is_some() {
                return Err(ExtError::BadInput(
                    "directed edge shared by two triangles".into(),
                ));
            }
        }
    }
    for &(a, b) in dir.keys() {
        if !dir.contains_key(&(b, a)) {
            return Err(ExtError::BadInput(
                "surface is not closed and coherently oriented".into(),
            ));
        }
    }
    Ok(dir)
}

impl Builder {
    fn new(
        nv: usize,
        faces: Vec<[usize; 3]>,
        region: Vec<usize>,
        cycles: Vec<Vec<usize>>,
    ) -> Result<Builder, ExtError> {
        let dir = directed(&faces)?;
        Ok(Builder {
            nv,
            faces,
            region,
            dir,
            cycles,
        })
    }

    fn unmap(&mut self, f: usize) {
        let t = self.faces[f];
        for j in 0..3 {
            self.dir.remove(&(t[j], t[(j + 1) % 3]));
        }
    }

    fn map(&mut self, f: usize) {
        let t = self.faces[f];
        for j in 0..3 {
            self.dir.insert((t[j], t[(j + 1) % 3]), f);
        }
    }

    fn push_face(&mut self, tri: [usize; 3], region: usize) {
        self.faces.push(tri);
        self.region.push(region);
        self.map(self.faces.len() - 1);
    }

    /// 2-4 split: a new vertex in the middle of the edge `{x, y}`, its
    /// two faces each cut in two. A juncture cycle running through the
    /// edge picks the new vertex up.
    fn split_edge(&mut self, x: usize, y: usize) -> usize {
        let f1 = self.dir[&(x, y)];
        let f2 = self.dir[&(y, x)];
        let a = third(self.faces[f1], x, y);
        let b = third(self.faces[f2], y, x);
        let m = self.nv;
        self.nv += 1;
        self.unmap(f1);
        self.unmap(f2);
        self.faces[f1] = [x, m, a];
        self.map(f1);
        self.push_face([m, y, a], self.region[f1]);
        self.faces[f2] = [y, m, b];
        self.map(f2);
        self.push_face([m, x, b], self.region[f2]);
        'cycles: for cyc in &mut self.cycles {
            for i in 0..cyc.len() {
                let (u, v) = (cyc[i], cyc[(i + 1) % cyc.len()]);
                if (u, v) == (x, y) || (u, v) == (y, x) {
                    cyc.insert(i + 1, m);
                    break 'cycles;
                }
            }
        }
        m
    }

    /// 1-3 split: a new vertex in the middle of a face. Adds one clean
    /// link vertex at each of the face's corners and touches nothing
    /// else; this is how arc fans get room to grow.
    fn center_split(&mut self, f: usize) -> usize {
        let [p, q, r] = self.faces[f];
        let z = self.nv;
        self.nv += 1;
        self.unmap(f);
        self.faces[f] = [p, q, z];
        self.map(f);
        self.push_face([q, r, z], self.region[f]);
        self.push_face([r, p, z], self.region[f]);
        z
    }

    /// Ring of link vertices around `p` strictly between the edges
    /// `{from, p}` and `{p, to}`, swept starting from the face that
    /// contains the directed pair `(from, p)`. Every face crossed must
    /// lie in region `side`.
    fn fan(&self, p: usize, from: usize, to: usize, side: usize) -> Result<Vec<usize>, ExtError> {
        let mut f = *self
            .dir
            .get(&(from, p))
            .ok_or_else(|| ExtError::Malformed("fan start edge is not on the surface".into()))?;
        let mut ring = Vec::new();
        let mut guard = 0usize;
        loop {
            if self.region[f] != side {
                return Err(ExtError::Malformed("fan crossed out of its region".into()));
            }
            guard += 1;
            if guard > self.faces.len() {
                return Err(ExtError::Malformed("fan did not close up".into()));
            }
            let tri = self.faces[f];
            let j = (0..3)
                .position(|j| tri[j] == p)
                .expect("the sweep stays on faces containing p");
            let z = tri[(j + 1) % 3];
            if z == to {
                return Ok(ring);
            }
            ring.push(z);
            f = *self
                .dir
                .get(&(z, p))
                .expect("closed oriented surfaces pair every directed edge");
        }
    }

    /// `need` clean ring vertices at `p` between `{from, p}` and
    /// `{p, to}` through `side`, center-splitting the first sector face
    /// until enough exist. New vertices are interior, so they are clean.
    fn clean_ring(
        &mut self,
        p: usize,
        from: usize,
        to: usize,
        side: usize,
        need: usize,
        used: &BTreeSet<usize>,
    ) -> Result<Vec<usize>, ExtError> {
        for _ in 0..=need {
            let ring = self.fan(p, from, to, side)?;
            let clean: Vec<usize> = ring
                .into_iter()
                .filter(|q| !used.contains(q))
                .take(need)
                .collect();
            if clean.len() == need {
                return Ok(clean);
            }
            let f0 = self.dir[&(from, p)];
            self.center_split(f0);
        }
        Err(ExtError::Malformed(
            "fan growth failed to produce clean vertices".into(),
        ))
    }
}

/// Third corner of a face read cyclically as `(x, y, .)`.
fn third(tri: [usize; 3], x: usize, y: usize) -> usize {
    let j = (0..3)
        .position(|j| tri[j] == x)
        .expect("the face contains x");
    debug_assert_eq!(tri[(j + 1) % 3], y);
    tri[(j + 2) % 3]
}

/// Everything place() needs to know about one juncture.
struct JunctureNeeds {
    vertex_region: usize,
    edge_region: usize,
    /// Arcs into the vertex region at the third point (color + 3).
    v_arcs: usize,
    /// Arcs into the edge region at the third point (edge color).
    g_arcs: usize,
    /// One extra edge-region arc at the second point when this juncture
    /// is the edge's positive end.
    positive: bool,
}

/// Draws the whole pattern, refining the surface locally wherever a
/// circle is too short or an arc fan lacks room.
fn place(
    b: &mut Builder,
    needs: &[JunctureNeeds],
    isolated: &[(usize, usize)], // (region id, arc count at the second corner)
) -> Result<BTreeSet<(usize, usize)>, ExtError> {
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let draw = |a: usize, b: usize, edges: &mut BTreeSet<(usize, usize)>| {
        if !edges.insert(key(a, b)) {
            return Err(ExtError::Malformed("pattern edge drawn twice".into()));
        }
        Ok(())
    };

    // Three fan points per circle must be pairwise non-adjacent, so
    // every circle needs length at least 9.
    for j in 0..b.cycles.len() {
        while b.cycles[j].len() < 9 {
            let (x, y) = (b.cycles[j][0], b.cycles[j][1]);
            b.split_edge(x, y);
        }
    }
    for cyc in &b.cycles {
        used.extend(cyc.iter().copied());
        for i in 0..cyc.len() {
            draw(cyc[i], cyc[(i + 1) % cyc.len()], &mut edges)?;
        }
    }

    // Marked triangles for isolated vertices, with their corners
    // reserved.
    let mut markings: Vec<(usize, [usize; 3], usize)> = Vec::new();
    for &(rid, arcs) in isolated {
        let face = b
            .region
            .iter()
            .position(|&r| r == rid)
            .ok_or_else(|| ExtError::Malformed("isolated region has no faces".into()))?;
        let tri = b.faces[face];
        used.extend(tri);
        for j in 0..3 {
            draw(tri[j], tri[(j + 1) % 3], &mut edges)?;
        }
        markings.push((rid, tri, arcs));
    }

    // Arc fans at three points of each juncture circle. The counts
    // ascend along the cycle direction so the parser can recover it.
    for (j, need) in needs.iter().enumerate() {
        let cyc = b.cycles[j].clone();
        let n = cyc.len();
        let anchors = [0, n / 3, 2 * n / 3];
        let v_counts = [1usize, 2, need.v_arcs];
        let e_counts = [0usize, usize::from(need.positive), need.g_arcs];
        for (a, &at) in anchors.iter().enumerate() {
            let p = cyc[at];
            let prev = cyc[(at + n - 1) % n];
            let next = cyc[(at + 1) % n];
            for q in b.clean_ring(p, prev, next, need.vertex_region, v_counts[a], &used)? {
                used.insert(q);
                draw(p, q, &mut edges)?;
            }
            if e_counts[a] > 0 {
                for q in b.clean_ring(p, next, prev, need.edge_region, e_counts[a], &used)? {
                    used.insert(q);
                    draw(p, q, &mut edges)?;
                }
            }
        }
    }

    // Corner fans of the marked triangles, outside the triangle. Fan
    // sizes ascend along the reverse of the face's orientation, so that
    // the fan side (the outside) lies left of the ascending direction,
    // just as the vertex side of a juncture lies left of its cycle.
    for &(rid, tri, arcs) in &markings {
        let counts = [1usize, arcs, 2];
        for (j, &count) in counts.iter().enumerate() {
            let p = tri[j];
            let before = tri[(j + 2) % 3];
            let after = tri[(j + 1) % 3];
            // Ring outside the triangle between its two edges at p: the
            // sweep starts across the edge {p, after}.
            for q in b.clean_ring(p, after, before, rid, count, &used)? {
                used.insert(q);
                draw(p, q, &mut edges)?;
            }
        }
    }

    Ok(edges)
}

/// Flattens a marked exterior's boundary to a pattern on a bare surface.
///
/// The surface is a combinatorial copy of the boundary, subdivided at
/// edge midpoints as often as needed to fit all arc fans on clean
/// vertices. An exterior without boundary flattens to the empty pattern.
pub fn flatten_pattern(me: &MarkedExterior) -> Result<FlattenedPattern, ExtError> {
    let skel = me.manifold.skeleton()?;
    let bv = boundary_view(&me.manifold, &skel)?;
    if bv.faces.is_empty() {
        return Ok(FlattenedPattern {
            surface: PatternSurface {
                vertex_count: 0,
                faces: Vec::new(),
            },
            edges: BTreeSet::new(),
        });
    }

    let mut compact: BTreeMap<usize, usize> = BTreeMap::new();
    for tri in &bv.triple {
        for &v in tri {
            let next = compact.len();
            compact.entry(v).or_insert(next);
        }
    }
    let mut b = Builder::new(
        compact.len(),
        bv.triple.iter().map(|t| t.map(|v| compact[&v])).collect(),
        bv.faces.iter().map(|f| me.region_of[f]).collect(),
        me.junctures
            .iter()
            .map(|j| j.verts.iter().map(|v| compact[v]).collect())
            .collect(),
    )?;

    let needs: Vec<JunctureNeeds> = me
        .junctures
        .iter()
        .enumerate()
        .map(|(jid, j)| {
            let vcolor = match &me.regions[j.vertex_region].kind {
                RegionKind::Vertex { color, .. } => color.unwrap_or(0),
                RegionKind::Edge { .. } => unreachable!("junctures bound one vertex region"),
            };
            let (gcolor, positive) = match &me.regions[j.edge_region].kind {
                RegionKind::Edge {
                    color,
                    positive_end,
                    ..
                } => (color.unwrap_or(0), *positive_end),
                RegionKind::Vertex { .. } => unreachable!("junctures bound one edge region"),
            };
            JunctureNeeds {
                vertex_region: j.vertex_region,
                edge_region: j.edge_region,
                v_arcs: vcolor as usize + 3,
                g_arcs: gcolor as usize,
                positive: positive == Some(jid),
            }
        })
        .collect();
    let isolated: Vec<(usize, usize)> = me
        .regions
        .iter()
        .enumerate()
        .filter(|(_, r)| r.junctures.is_empty())
        .map(|(rid, r)| match &r.kind {
            RegionKind::Vertex { color, .. } => Ok((rid, color.unwrap_or(0) as usize + 3)),
            RegionKind::Edge { .. } => Err(ExtError::Malformed(
                "edge region without junctures".into(),
            )),
        })
        .collect::<Result<_, _>>()?;

    let edges = place(&mut b, &needs, &isolated)?;
    Ok(FlattenedPattern {
        surface: PatternSurface {
            vertex_count: b.nv,
            faces: b.faces,
        },
        edges,
    })
}

/// One boundary region as recovered from a pattern. Colors come back as
/// arc counts, so an uncolored element reads as count 0.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RecoveredRegion {
    Vertex {
        arcs: u32,
        chi: i64,
        junctures: usize,
        /// Per juncture: edge arc count across it, positive end here.
        ends: Vec<(u32, bool)>,
    },
    Edge {
        arcs: u32,
        /// Per juncture: vertex arc count across it, its Euler
        /// characteristic, positive end here.
        ends: Vec<(u32, i64, bool)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RecoveredComponent {
    pub euler: i64,
    pub regions: Vec<RecoveredRegion>,
}

/// Everything [`recover_marking`] reads off a flattened pattern: the
/// region structure per boundary component and whether the surface's
/// orientation agrees with the convention the arcs were drawn under.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Recovered {
    pub orientation_reversed: bool,
    pub components: Vec<RecoveredComponent>,
}

impl Recovered {
    /// The value [`recover_marking`] must produce for this exterior's
    /// pattern: the same region data with colors read as arc counts.
    pub fn of_exterior(me: &MarkedExterior) -> Recovered {
        let arcs_of = |r: &Region| -> u32 {
            match &r.kind {
                RegionKind::Vertex { color, .. } | RegionKind::Edge { color, .. } => {
                    color.unwrap_or(0)
                }
            }
        };
        let positive_at = |rid: usize, jid: usize| -> bool {
            matches!(
                &me.regions[rid].kind,
                RegionKind::Edge { positive_end, .. } if *positive_end == Some(jid)
            )
        };
        let mut comps: Vec<RecoveredComponent> = (0..me.boundary_components)
            .map(|_| RecoveredComponent {
                euler: 0,
                regions: Vec::new(),
            })
            .collect();
        for (rid, r) in me.regions.iter().enumerate() {
            let entry = match &r.kind {
                RegionKind::Vertex { .. } => {
                    let mut ends: Vec<(u32, bool)> = r
                        .junctures
                        .iter()
                        .map(|&j| {
                            let er = me.junctures[j].edge_region;
                            (arcs_of(&me.regions[er]), positive_at(er, j))
                        })
                        .collect();
                    ends.sort_unstable();
                    RecoveredRegion::Vertex {
                        arcs: arcs_of(r),
                        chi: r.chi,
                        junctures: r.junctures.len(),
                        ends,
                    }
                }
                RegionKind::Edge { .. } => {
                    let mut ends: Vec<(u32, i64, bool)> = r
                        .junctures
                        .iter()
                        .map(|&j| {
                            let vr = me.junctures[j].vertex_region;
                            (
                                arcs_of(&me.regions[vr]),
                                me.regions[vr].chi,
                                positive_at(rid, j),
                            )
                        })
                        .collect();
                    ends.sort_unstable();
                    RecoveredRegion::Edge {
                        arcs: arcs_of(r),
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
        Recovered {
            orientation_reversed: false,
            components: comps,
        }
    }
}

/// Data gathered about one pattern circle while parsing.
struct Circle {
    verts: Vec<usize>,
    /// Region left of the direction `verts` lists, and right of it.
    left: usize,
    right: usize,
    component: usize,
}

/// Reads the marking back off a flattened pattern.
///
/// Recovers the regions with their arc counts, adjacency, positive ends
/// and Euler characteristics, plus a single orientation bit saying
/// whether the surface is mirrored relative to the convention the arcs
/// encode. Malformed patterns are rejected, never guessed at.
pub fn recover_marking(fp: &FlattenedPattern) -> Result<Recovered, ExtError> {
    let s = &fp.surface;
    if s.faces.is_empty() {
        if s.vertex_count != 0 || !fp.edges.is_empty() {
            return Err(ExtError::BadInput(
                "pattern on an empty surface must be empty".into(),
            ));
        }
        return Ok(Recovered {
            orientation_reversed: false,
            components: Vec::new(),
        });
    }
    for f in &s.faces {
        if f.iter().any(|&v| v >= s.vertex_count) {
            return Err(ExtError::BadInput("face corner out of range".into()));
        }
    }
    let dir = directed(&s.faces)?;
    for &(a, b) in &fp.edges {
        if !dir.contains_key(&(a, b)) {
            return Err(ExtError::BadInput(
                "pattern edge is not an edge of the surface".into(),
            ));
        }
    }

    // Sort pattern edges into arc spokes (one endpoint of degree 1) and
    // circle edges (every endpoint continues).
    let mut pdeg: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in &fp.edges {
        *pdeg.entry(a).or_insert(0) += 1;
        *pdeg.entry(b).or_insert(0) += 1;
    }
    let mut spokes: Vec<(usize, usize)> = Vec::new(); // (anchor, leaf)
    let mut circle_adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in &fp.edges {
        match (pdeg[&a], pdeg[&b]) {
            (1, 1) => {
                return Err(ExtError::BadInput(
                    "stray pattern segment with two loose ends".into(),
                ))
            }
            (1, _) => spokes.push((b, a)),
            (_, 1) => spokes.push((a, b)),
            _ => {
                circle_adj.entry(a).or_default().push(b);
                circle_adj.entry(b).or_default().push(a);
            }
        }
    }
    for (v, nb) in &circle_adj {
        if nb.len() != 2 {
            return Err(ExtError::BadInput(format!(
                "pattern vertex {v} lies on {} circle edges, expected 2",
                nb.len()
            )));
        }
    }

    // Face components and regions: regions are what is left of the
    // surface after cutting along the pattern circles (spokes do not
    // separate anything).
    let circle_edges: BTreeSet<(usize, usize)> = circle_adj
        .iter()
        .flat_map(|(&v, nb)| nb.iter().map(move |&w| key(v, w)))
        .collect();
    let mut comp_uf = Uf::new(s.faces.len());
    let mut region_uf = Uf::new(s.faces.len());
    for (&(a, b), &f) in &dir {
        if a < b {
            let g = dir[&(b, a)];
            comp_uf.union(f, g);
            if !circle_edges.contains(&(a, b)) {
                region_uf.union(f, g);
            }
        }
    }
    let component: Vec<usize> = {
        let mut ids = BTreeMap::new();
        (0..s.faces.len())
            .map(|f| {
                let root = comp_uf.find(f);
                let next = ids.len();
                *ids.entry(root).or_insert(next)
            })
            .collect()
    };
    let ncomps = component.iter().copied().max().unwrap_or(0) + 1;
    let region: Vec<usize> = {
        let mut ids = BTreeMap::new();
        (0..s.faces.len())
            .map(|f| {
                let root = region_uf.find(f);
                let next = ids.len();
                *ids.entry(root).or_insert(next)
            })
            .collect()
    };
    let nregions = region.iter().copied().max().unwrap_or(0) + 1;

    // Euler characteristics of components and of closed regions.
    let comp_euler = euler_by(&s.faces, &component, ncomps);
    let region_euler = euler_by(&s.faces, &region, nregions);
    let comp_of_region: Vec<usize> = {
        let mut m = vec![usize::MAX; nregions];
        for f in 0..s.faces.len() {
            m[region[f]] = component[f];
        }
        m
    };

    // Spoke fans per (anchor, region).
    let mut fans: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for &(p, q) in &spokes {
        let f = dir[&(p, q)];
        *fans.entry((p, region[f])).or_insert(0) += 1;
    }

    // Trace the circles.
    let mut circles: Vec<Circle> = Vec::new();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for &start in circle_adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut verts = vec![start];
        seen.insert(start);
        let mut prev = start;
        let mut cur = circle_adj[&start][0];
        while cur != start {
            if !seen.insert(cur) {
                return Err(ExtError::BadInput(
                    "pattern circles cross or touch".into(),
                ));
            }
            verts.push(cur);
            let nb = &circle_adj[&cur];
            let next = if nb[0] == prev { nb[1] } else { nb[0] };
            prev = cur;
            cur = next;
        }
        if verts.len() < 3 {
            return Err(ExtError::BadInput("pattern circle shorter than 3".into()));
        }
        let n = verts.len();
        let mut left = usize::MAX;
        let mut right = usize::MAX;
        for i in 0..n {
            let l = region[dir[&(verts[i], verts[(i + 1) % n])]];
            let r = region[dir[&(verts[(i + 1) % n], verts[i])]];
            if i == 0 {
                (left, right) = (l, r);
            } else if (l, r) != (left, right) {
                return Err(ExtError::BadInput(
                    "pattern circle does not separate two regions".into(),
                ));
            }
        }
        if left == right {
            return Err(ExtError::BadInput(
                "pattern circle has the same region on both sides".into(),
            ));
        }
        let component = component[dir[&(verts[0], verts[1])]];
        circles.push(Circle {
            verts,
            left,
            right,
            component,
        });
    }
    if circles.is_empty() {
        return Err(ExtError::BadInput(
            "pattern without circles on a non-empty surface".into(),
        ));
    }

    let mut circles_on_comp: Vec<usize> = vec![0; ncomps];
    for c in &circles {
        circles_on_comp[c.component] += 1;
    }
    if circles_on_comp.iter().any(|&n| n == 0) {
        return Err(ExtError::BadInput(
            "boundary component without any marking".into(),
        ));
    }

    // Classify each circle: read its three fan anchors, decide which side
    // is the vertex region, extract counts and the chirality bit.
    struct Reading {
        vregion: usize,
        eregion: usize,
        f: u32,
        g: u32,
        m: bool,
        flipped: bool,
        /// Marked triangle around an isolated vertex (single circle on a
        /// component, bounding a single face).
        isolated: bool,
    }
    let mut readings: Vec<Reading> = Vec::new();
    for c in &circles {
        let n = c.verts.len();
        let pos: BTreeMap<usize, usize> =
            c.verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let side_counts = |side: usize| -> Vec<(usize, u32)> {
            c.verts
                .iter()
                .filter_map(|&v| fans.get(&(v, side)).map(|&k| (pos[&v], k)))
                .collect()
        };
        let lc = side_counts(c.left);
        let rc = side_counts(c.right);
        // A valid vertex side has fans of sizes 1, 2 and k >= 3 at three
        // points; the edge side then has fans only at the 2- and k-points,
        // at most one arc at the 2-point.
        let valid = |v: &[(usize, u32)], e: &[(usize, u32)]| -> Option<(usize, usize, usize)> {
            if v.len() != 3 {
                return None;
            }
            let mut by_count = v.to_vec();
            by_count.sort_by_key(|&(_, k)| k);
            let [(p1, k1), (p2, k2), (p3, k3)] = by_count[..] else {
                return None;
            };
            if k1 != 1 || k2 != 2 || k3 < 3 {
                return None;
            }
            for &(p, k) in e {
                if p == p2 {
                    if k > 1 {
                        return None;
                    }
                } else if p != p3 || k == 0 {
                    return None;
                }
            }
            Some((p1, p2, p3))
        };
        let (vregion, eregion, anchors) = match (valid(&lc, &rc), valid(&rc, &lc)) {
            (Some(a), None) => (c.left, c.right, a),
            (None, Some(a)) => (c.right, c.left, a),
            _ => {
                return Err(ExtError::BadInput(
                    "circle fans do not single out a vertex side".into(),
                ))
            }
        };
        let (vcounts, ecounts) = if vregion == c.left {
            (&lc, &rc)
        } else {
            (&rc, &lc)
        };
        let (p1, p2, p3) = anchors;
        let g = ecounts
            .iter()
            .find(|&&(p, _)| p == p3)
            .map_or(0, |&(_, k)| k);
        let m = ecounts.iter().any(|&(p, k)| p == p2 && k == 1);
        let f = vcounts
            .iter()
            .find(|&&(p, _)| p == p3)
            .expect("the vertex side has a fan at its third anchor")
            .1
            - 3;
        // The fan sizes ascend along the direction the circle was drawn
        // under; comparing that with the stored direction and the side
        // the vertex region ended up on gives the chirality.
        let ascending = (p2 + n - p1) % n < (p3 + n - p1) % n;
        let flipped = if ascending {
            vregion != c.left
        } else {
            vregion != c.right
        };
        let isolated = circles_on_comp[c.component] == 1;
        readings.push(Reading {
            vregion,
            eregion,
            f,
            g,
            m,
            flipped,
            isolated,
        });
    }

    let flipped = readings[0].flipped;
    if readings.iter().any(|r| r.flipped != flipped) {
        return Err(ExtError::BadInput(
            "circles wind inconsistently across the pattern".into(),
        ));
    }

    // Assemble regions from the per-circle readings.
    #[derive(Default)]
    struct VAgg {
        f: Option<u32>,
        ends: Vec<(u32, bool)>,
    }
    #[derive(Default)]
    struct EAgg {
        g: Option<u32>,
        ends: Vec<(u32, i64, bool)>,
    }
    let mut vaggs: BTreeMap<usize, VAgg> = BTreeMap::new();
    let mut eaggs: BTreeMap<usize, EAgg> = BTreeMap::new();
    let mut isolated_entries: Vec<(usize, RecoveredRegion)> = Vec::new();
    for (c, r) in circles.iter().zip(&readings) {
        if r.isolated {
            // The single circle on its component marks an isolated
            // vertex; the circle must be a bare triangle around one face
            // with all fans outside.
            if c.verts.len() != 3 {
                return Err(ExtError::BadInput(
                    "isolated marking is not a triangle".into(),
                ));
            }
            let inside_faces = (0..s.faces.len())
                .filter(|&fc| region[fc] == r.eregion)
                .count();
            if inside_faces != 1 {
                // The roles might be swapped: the fans sit in the big
                // region, so the "edge side" we inferred must be the
                // single enclosed face. If the vertex side is the single
                // face instead, the pattern is malformed.
                return Err(ExtError::BadInput(
                    "isolated marking does not enclose a single face".into(),
                ));
            }
            if comp_euler[c.component] != 2 {
                return Err(ExtError::BadInput(
                    "isolated marking on a non-sphere component".into(),
                ));
            }
            isolated_entries.push((
                c.component,
                RecoveredRegion::Vertex {
                    arcs: r.f,
                    chi: 2,
                    junctures: 0,
                    ends: Vec::new(),
                },
            ));
            continue;
        }
        let va = vaggs.entry(r.vregion).or_default();
        match va.f {
            Some(f) if f != r.f => {
                return Err(ExtError::BadInput(
                    "vertex region with conflicting fan sizes".into(),
                ))
            }
            _ => va.f = Some(r.f),
        }
        va.ends.push((r.g, r.m));
        let ea = eaggs.entry(r.eregion).or_default();
        match ea.g {
            Some(g) if g != r.g => {
                return Err(ExtError::BadInput(
                    "edge region with conflicting fan sizes".into(),
                ))
            }
            _ => ea.g = Some(r.g),
        }
    }
    // Edge ends need the vertex data, so fill them in a second pass.
    for r in &readings {
        if r.isolated {
            continue;
        }
        let vchi = region_euler[r.vregion];
        let ea = eaggs.get_mut(&r.eregion).expect("filled in the first pass");
        ea.ends.push((vaggs[&r.vregion].f.unwrap(), vchi, r.m));
    }

    for (&rid, ea) in &eaggs {
        if ea.ends.len() != 2 {
            return Err(ExtError::BadInput(format!(
                "edge region bounded by {} circles, expected 2",
                ea.ends.len()
            )));
        }
        if region_euler[rid] != 0 {
            return Err(ExtError::BadInput(
                "edge region is not an annulus".into(),
            ));
        }
        if ea.ends.iter().filter(|&&(_, _, m)| m).count() > 1 {
            return Err(ExtError::BadInput(
                "edge region with two positive ends".into(),
            ));
        }
        if vaggs.contains_key(&rid) {
            return Err(ExtError::BadInput(
                "region read as both vertex and edge side".into(),
            ));
        }
    }

    let mut comps: Vec<RecoveredComponent> = (0..ncomps)
        .map(|c| RecoveredComponent {
            euler: comp_euler[c],
            regions: Vec::new(),
        })
        .collect();
    for (rid, va) in &vaggs {
        let mut ends = va.ends.clone();
        ends.sort_unstable();
        comps[comp_of_region[*rid]]
            .regions
            .push(RecoveredRegion::Vertex {
                arcs: va.f.expect("set when the aggregate was created"),
                chi: region_euler[*rid],
                junctures: va.ends.len(),
                ends,
            });
    }
    for (rid, ea) in &eaggs {
        let mut ends = ea.ends.clone();
        ends.sort_unstable();
        comps[comp_of_region[*rid]]
            .regions
            .push(RecoveredRegion::Edge {
                arcs: ea.g.expect("set when the aggregate was created"),
                ends,
            });
    }
    for (comp, entry) in isolated_entries {
        comps[comp].regions.push(entry);
    }
    for c in &mut comps {
        c.regions.sort();
    }
    comps.sort();
    Ok(Recovered {
        orientation_reversed: flipped,
        components: comps,
    })
}

/// Euler characteristic of the closed subsurface spanned by each class of
/// faces (class = component or region id per face).
fn euler_by(faces: &[[usize; 3]], class: &[usize], n: usize) -> Vec<i64> {
    let mut vs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut es: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); n];
    let mut fs: Vec<i64> = vec![0; n];
    for (i, f) in faces.iter().enumerate() {
        let c = class[i];
        vs[c].extend(f);
        for j in 0..3 {
            es[c].insert(key(f[j], f[(j + 1) % 3]));
        }
        fs[c] += 1;
    }
    (0..n)
        .map(|c| vs[c].len() as i64 - es[c].len() as i64 + fs[c])
        .collect()
}

struct Uf {
    parent: Vec<usize>,
}

impl Uf {
    fn new(n: usize) -> Uf {
        Uf {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::compile_to_sphere;
    use crate::diagram::Diagram;
    use crate::exterior::build_exterior;

    fn exterior_of(text: &str) -> MarkedExterior {
        let d = Diagram::parse(text).expect("test diagram parses");
        let c = compile_to_sphere(&d).expect("test diagram compiles");
        build_exterior(&c.sphere, &c.sub, &c.graph, 2).expect("exterior builds")
    }

    fn corpus(name: &str) -> String {
        let path: std::path::PathBuf = [env!("CARGO_MANIFEST_DIR"), "corpus", name]
            .iter()
            .collect();
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"))
    }

    #[test]
    fn empty_exterior_flattens_to_the_empty_pattern() {
        let me = exterior_of(&corpus("empty.sgd"));
        let fp = flatten_pattern(&me).unwrap();
        assert_eq!(fp.surface.vertex_count, 0);
        assert!(fp.surface.faces.is_empty());
        assert!(fp.edges.is_empty());
        let rec = recover_marking(&fp).unwrap();
        assert!(!rec.orientation_reversed);
        assert!(rec.components.is_empty());
    }

    #[test]
    fn point_pattern_is_a_triangle_with_three_corner_fans() {
        let me = exterior_of(&corpus("point.sgd"));
        let fp = flatten_pattern(&me).unwrap();
        // Triangle (3 edges) plus fans of 1, 2 and 3 arcs.
        assert_eq!(fp.edges.len(), 3 + 1 + 2 + 3);
        let rec = recover_marking(&fp).unwrap();
        assert_eq!(rec, Recovered::of_exterior(&me));
        assert_eq!(
            rec.components[0].regions,
            vec![RecoveredRegion::Vertex {
                arcs: 0,
                chi: 2,
                junctures: 0,
                ends: vec![],
            }]
        );
    }

    #[test]
    fn colored_point_pattern_grows_its_third_fan() {
        let me = exterior_of(&corpus("point-colored.sgd"));
        let fp = flatten_pattern(&me).unwrap();
        assert_eq!(fp.edges.len(), 3 + 1 + 2 + 4, "color 1 means 4 arcs");
        let rec = recover_marking(&fp).unwrap();
        assert_eq!(rec, Recovered::of_exterior(&me));
    }

    #[test]
    fn directed_colored_loop_pattern_places_one_positive_arc() {
        let me = exterior_of("vertex v\nvnode v a a\nedge e a color=2 from=v to=v\n");
        let fp = flatten_pattern(&me).unwrap();
        let rec = recover_marking(&fp).unwrap();
        assert_eq!(rec, Recovered::of_exterior(&me));
        let edge = rec.components[0]
            .regions
            .iter()
            .find_map(|r| match r {
                RecoveredRegion::Edge { arcs, ends } => Some((*arcs, ends.clone())),
                RecoveredRegion::Vertex { .. } => None,
            })
            .expect("loop pattern has an edge region");
        assert_eq!(edge.0, 2);
        assert_eq!(edge.1, vec![(0, 0, false), (0, 0, true)]);
    }

    #[test]
    fn recovery_round_trips_across_the_corpus() {
        for name in [
            "point.sgd",
            "point-colored.sgd",
            "one-edge.sgd",
            "unknot-loop.sgd",
            "directed-loop.sgd",
            "colored-path.sgd",
            "split-union.sgd",
        ] {
            let me = exterior_of(&corpus(name));
            let fp = flatten_pattern(&me).unwrap();
            let rec = recover_marking(&fp).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(rec, Recovered::of_exterior(&me), "{name}");
            assert!(!rec.orientation_reversed, "{name}");
        }
    }

    #[test]
    fn mirrored_patterns_flip_exactly_the_orientation_bit() {
        for name in ["point.sgd", "one-edge.sgd", "directed-loop.sgd"] {
            let me = exterior_of(&corpus(name));
            let fp = flatten_pattern(&me).unwrap();
            let mirrored = FlattenedPattern {
                surface: PatternSurface {
                    vertex_count: fp.surface.vertex_count,
                    faces: fp.surface.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
                },
                edges: fp.edges.clone(),
            };
            let rec = recover_marking(&mirrored).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(rec.orientation_reversed, "{name}");
            assert_eq!(
                rec.components,
                Recovered::of_exterior(&me).components,
                "{name}: mirroring must not change the region data"
            );
        }
    }

    #[test]
    fn dropping_any_single_arc_breaks_the_pattern() {
        let me = exterior_of(&corpus("point.sgd"));
        let fp = flatten_pattern(&me).unwrap();
        for &edge in &fp.edges {
            let mut edges = fp.edges.clone();
            edges.remove(&edge);
            let broken = FlattenedPattern {
                surface: fp.surface.clone(),
                edges,
            };
            assert!(
                recover_marking(&broken).is_err(),
                "removing {edge:?} should make the pattern unreadable"
            );
        }
    }
}
