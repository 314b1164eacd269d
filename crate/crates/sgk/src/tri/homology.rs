//! Simplicial homology of the identified complex, absolute or relative to
//! the boundary, over the integers via Smith normal form.

use super::perm::{edge_index, face_verts};
use super::{TriError, Triangulation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// A finitely generated abelian group: rank plus torsion coefficients in
/// divisibility order (each divides the next).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbelianGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl std::fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for t in &self.torsion {
            parts.push(format!("Z/{t}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Homology in degrees 0, 1, 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomologyProfile {
    pub h: [AbelianGroup; 3],
}

impl std::fmt::Display for HomologyProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "H0={}, H1={}, H2={}", self.h[0], self.h[1], self.h[2])
    }
}

struct Matrix {
    rows: usize,
    cols: usize,
    a: Vec<i128>,
}

impl Matrix {
    fn zero(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            a: vec![0; rows * cols],
        }
    }

    fn at(&self, i: usize, j: usize) -> i128 {
        self.a[i * self.cols + j]
    }

    fn add_at(&mut self, i: usize, j: usize, v: i128) {
        let e = &mut self.a[i * self.cols + j];
        *e = e.checked_add(v).expect("homology entry overflow");
    }

    #[cfg(test)]
    fn set(&mut self, i: usize, j: usize, v: i128) {
        self.a[i * self.cols + j] = v;
    }

    /// Diagonal of the Smith normal form: nonzero entries, each dividing
    /// the next, all positive.
    fn smith_diagonal(mut self) -> Vec<i128> {
        let mut diag = Vec::new();
        let mut t = 0;
        while t < self.rows && t < self.cols {
            // Pivot: smallest nonzero magnitude in the working submatrix.
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..self.rows {
                for j in t..self.cols {
                    let v = self.at(i, j);
                    if v != 0
                        && pivot
                            .map(|(pi, pj)| v.abs() < self.at(pi, pj).abs())
                            .unwrap_or(true)
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);

            loop {
                // Clear column t by Euclidean row reduction; a nonzero
                // remainder becomes the new, strictly smaller pivot.
                let mut dirty = false;
                for i in (t + 1)..self.rows {
                    if self.at(i, t) == 0 {
                        continue;
                    }
                    let q = self.at(i, t).div_euclid(self.at(t, t));
                    if q != 0 {
                        self.row_sub(i, t, q);
                    }
                    if self.at(i, t) != 0 {
                        self.swap_rows(i, t);
                        dirty = true;
                    }
                }
                if dirty {
                    continue;
                }
                for j in (t + 1)..self.cols {
                    if self.at(t, j) == 0 {
                        continue;
                    }
                    let q = self.at(t, j).div_euclid(self.at(t, t));
                    if q != 0 {
                        self.col_sub(j, t, q);
                    }
                    if self.at(t, j) != 0 {
                        self.swap_cols(j, t);
                        dirty = true;
                    }
                }
                if dirty {
                    continue;
                }
                // The pivot must divide every remaining entry; if not, add
                // the offending row into row t and reduce again.
                let mut fixed = false;
                'scan: for i in (t + 1)..self.rows {
                    for j in (t + 1)..self.cols {
                        if self.at(i, j) % self.at(t, t) != 0 {
                            self.row_sub(t, i, -1);
                            fixed = true;
                            break 'scan;
                        }
                    }
                }
                if !fixed {
                    break;
                }
            }
            diag.push(self.at(t, t).abs());
            t += 1;
        }
        diag
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.a.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.a.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row a -= q * row b
    fn row_sub(&mut self, a: usize, b: usize, q: i128) {
        for j in 0..self.cols {
            let v = self
                .at(b, j)
                .checked_mul(q)
                .expect("homology entry overflow");
            let e = &mut self.a[a * self.cols + j];
            *e = e.checked_sub(v).expect("homology entry overflow");
        }
    }

    /// col a -= q * col b
    fn col_sub(&mut self, a: usize, b: usize, q: i128) {
        for i in 0..self.rows {
            let v = self
                .at(i, b)
                .checked_mul(q)
                .expect("homology entry overflow");
            let e = &mut self.a[i * self.cols + a];
            *e = e.checked_sub(v).expect("homology entry overflow");
        }
    }
}

/// Sparse integer matrix front-end for the Smith normal form: entries of
/// magnitude one are eliminated with a low fill-in pivot order (boundary
/// matrices are almost entirely unit entries), and whatever small core
/// remains goes through the dense routine. Pivoting on a unit is a
/// unimodular reduction, so the form of the input is the eliminated ones
/// followed by the form of the core.
struct Sparse {
    nrows: usize,
    ncols: usize,
    /// Per column: row index to nonzero value.
    col: Vec<BTreeMap<usize, i128>>,
    /// Per row: columns holding a nonzero in this row.
    row: Vec<BTreeSet<usize>>,
    /// Per column: how many of its entries have magnitude one.
    units: Vec<usize>,
    /// Columns eligible for pivoting, grouped by entry count (capped).
    /// Only columns with at least one unit entry are bucketed.
    buckets: Vec<BTreeSet<usize>>,
    bucket_of: Vec<usize>,
}

const BUCKET_CAP: usize = 32;

impl Sparse {
    fn zero(nrows: usize, ncols: usize) -> Sparse {
        Sparse {
            nrows,
            ncols,
            col: vec![BTreeMap::new(); ncols],
            row: vec![BTreeSet::new(); nrows],
            units: vec![0; ncols],
            buckets: vec![BTreeSet::new(); BUCKET_CAP + 1],
            bucket_of: vec![usize::MAX; ncols],
        }
    }

    fn rebucket(&mut self, c: usize) {
        let want = if self.units[c] > 0 {
            self.col[c].len().min(BUCKET_CAP)
        } else {
            usize::MAX
        };
        let have = self.bucket_of[c];
        if want == have {
            return;
        }
        if have != usize::MAX {
            self.buckets[have].remove(&c);
        }
        if want != usize::MAX {
            self.buckets[want].insert(c);
        }
        self.bucket_of[c] = want;
    }

    fn set(&mut self, r: usize, c: usize, v: i128) {
        let old = self.col[c].get(&r).copied().unwrap_or(0);
        if old == v {
            return;
        }
        if old.abs() == 1 {
            self.units[c] -= 1;
        }
        if v == 0 {
            self.col[c].remove(&r);
            self.row[r].remove(&c);
        } else {
            self.col[c].insert(r, v);
            self.row[r].insert(c);
            if v.abs() == 1 {
                self.units[c] += 1;
            }
        }
        self.rebucket(c);
    }

    fn add_at(&mut self, r: usize, c: usize, v: i128) {
        let old = self.col[c].get(&r).copied().unwrap_or(0);
        self.set(r, c, old.checked_add(v).expect("homology entry overflow"));
    }

    /// Eliminates the unit pivot at (r, c): clears row r from every other
    /// column, then drops row r and column c from the active matrix.
    fn eliminate(&mut self, r: usize, c: usize) {
        let v = self.col[c][&r];
        debug_assert_eq!(v.abs(), 1);
        let pivot_col: Vec<(usize, i128)> = self.col[c].iter().map(|(&i, &x)| (i, x)).collect();
        let others: Vec<usize> = self.row[r].iter().copied().filter(|&x| x != c).collect();
        for c2 in others {
            // col c2 -= (c2[r] * v) * col c zeroes c2's entry in row r.
            let q = self.col[c2][&r].checked_mul(v).expect("homology entry overflow");
            for &(r2, x) in &pivot_col {
                let delta = q.checked_mul(x).expect("homology entry overflow");
                let old = self.col[c2].get(&r2).copied().unwrap_or(0);
                self.set(r2, c2, old.checked_sub(delta).expect("homology entry overflow"));
            }
        }
        for &(r2, _) in &pivot_col {
            self.row[r2].remove(&c);
        }
        self.col[c].clear();
        self.units[c] = 0;
        self.rebucket(c);
        debug_assert!(self.row[r].is_empty());
    }

    fn smith_diagonal(mut self) -> Vec<i128> {
        let mut ones = 0usize;
        loop {
            // Smallest active column with a unit entry; within it, the
            // unit row met by the fewest other columns. This keeps the
            // fill-in of the elimination low.
            let Some(&c) = self.buckets.iter().find_map(|b| b.first()) else {
                break;
            };
            let r = self.col[c]
                .iter()
                .filter(|(_, v)| v.abs() == 1)
                .map(|(&r, _)| r)
                .min_by_key(|&r| self.row[r].len())
                .expect("bucketed column has a unit entry");
            self.eliminate(r, c);
            ones += 1;
        }

        // Dense core: whatever has no unit entries left.
        let live_cols: Vec<usize> = (0..self.ncols).filter(|&c| !self.col[c].is_empty()).collect();
        let live_rows: Vec<usize> = (0..self.nrows).filter(|&r| !self.row[r].is_empty()).collect();
        let mut diag = vec![1i128; ones];
        if !live_cols.is_empty() {
            let rindex: BTreeMap<usize, usize> =
                live_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
            let mut core = Matrix::zero(live_rows.len(), live_cols.len());
            for (j, &c) in live_cols.iter().enumerate() {
                for (&r, &v) in &self.col[c] {
                    core.add_at(rindex[&r], j, v);
                }
            }
            diag.extend(core.smith_diagonal());
        }
        diag
    }
}

pub fn homology(t: &Triangulation, rel_boundary: bool) -> Result<HomologyProfile, TriError> {
    let s = t.skeleton()?;
    let keep_v: Vec<bool> = s
        .vertex_boundary
        .iter()
        .map(|&b| !(rel_boundary && b))
        .collect();
    let keep_e: Vec<bool> = s
        .edge_boundary
        .iter()
        .map(|&b| !(rel_boundary && b))
        .collect();
    let keep_f: Vec<bool> = s
        .tri_boundary
        .iter()
        .map(|&b| !(rel_boundary && b))
        .collect();

    let index = |keep: &[bool]| {
        let mut idx = vec![usize::MAX; keep.len()];
        let mut n = 0;
        for (c, &k) in keep.iter().enumerate() {
            if k {
                idx[c] = n;
                n += 1;
            }
        }
        (idx, n)
    };
    let (vi, nv) = index(&keep_v);
    let (ei, ne) = index(&keep_e);
    let (fi, nf) = index(&keep_f);
    let nt = t.tet_count();

    // d1: edges to vertices, head minus tail.
    let mut d1 = Sparse::zero(nv, ne);
    for c in 0..s.edge_count() {
        if !keep_e[c] {
            continue;
        }
        let (tail, head) = s.edge_endpoints(c);
        if keep_v[head] {
            d1.add_at(vi[head], ei[c], 1);
        }
        if keep_v[tail] {
            d1.add_at(vi[tail], ei[c], -1);
        }
    }

    // d2: triangles to edges. For rep vertices a < b < c the boundary is
    // +(b,c) - (a,c) + (a,b), each transported to its class direction.
    let mut d2 = Sparse::zero(ne, nf);
    for c in 0..s.triangle_count() {
        if !keep_f[c] {
            continue;
        }
        let (rt, rf) = s.tri_members[c][0];
        let vs = face_verts(rf);
        let terms = [(vs[1], vs[2], 1i128), (vs[0], vs[2], -1), (vs[0], vs[1], 1)];
        for (a, b, sign) in terms {
            let e = edge_index(a, b) as usize;
            let cls = s.edge_class[rt][e];
            if !keep_e[cls] {
                continue;
            }
            let aligned = if s.edge_aligned[rt][e] { 1 } else { -1 };
            d2.add_at(ei[cls], fi[c], sign * aligned);
        }
    }

    // d3: tets to triangles, face i with sign (-1)^i relative to the class
    // representative orientation.
    let mut d3 = Sparse::zero(nf, nt);
    for tet in 0..nt {
        for face in 0..4usize {
            let cls = s.tri_class[tet][face];
            if !keep_f[cls] {
                continue;
            }
            let sign = if face % 2 == 0 { 1i128 } else { -1 };
            d3.add_at(fi[cls], tet, sign * i128::from(s.tri_or[tet][face]));
        }
    }

    let s1 = d1.smith_diagonal();
    let s2 = d2.smith_diagonal();
    let s3 = d3.smith_diagonal();
    let (r1, r2, r3) = (s1.len(), s2.len(), s3.len());

    let torsion = |diag: &[i128]| -> Vec<u64> {
        diag.iter()
            .filter(|&&d| d > 1)
            .map(|&d| u64::try_from(d).expect("torsion coefficient overflow"))
            .collect()
    };

    let h0 = AbelianGroup {
        rank: nv - r1,
        torsion: torsion(&s1),
    };
    let h1 = AbelianGroup {
        rank: ne - r1 - r2,
        torsion: torsion(&s2),
    };
    let h2 = AbelianGroup {
        rank: nf - r2 - r3,
        torsion: torsion(&s3),
    };
    Ok(HomologyProfile { h: [h0, h1, h2] })
}

#[cfg(test)]
mod tests {
    use super::super::{free_tet, one_tet_solid_torus, snapped_ball, two_tet_sphere};
    use super::*;

    fn group(rank: usize, torsion: &[u64]) -> AbelianGroup {
        AbelianGroup {
            rank,
            torsion: torsion.to_vec(),
        }
    }

    #[test]
    fn sphere_homology() {
        let h = two_tet_sphere().homology(false).unwrap();
        assert_eq!(h.h, [group(1, &[]), group(0, &[]), group(0, &[])]);
        // Closed manifold: relative equals absolute in these degrees.
        let hr = two_tet_sphere().homology(true).unwrap();
        assert_eq!(h, hr);
    }

    #[test]
    fn ball_homology() {
        for t in [free_tet(), snapped_ball()] {
            let h = t.homology(false).unwrap();
            assert_eq!(h.h, [group(1, &[]), group(0, &[]), group(0, &[])]);
            let hr = t.homology(true).unwrap();
            assert_eq!(hr.h, [group(0, &[]), group(0, &[]), group(0, &[])]);
        }
    }

    #[test]
    fn solid_torus_homology() {
        let t = one_tet_solid_torus();
        let h = t.homology(false).unwrap();
        assert_eq!(h.h, [group(1, &[]), group(1, &[]), group(0, &[])]);
        // Relative to the boundary torus: only H2 survives.
        let hr = t.homology(true).unwrap();
        assert_eq!(hr.h, [group(0, &[]), group(0, &[]), group(1, &[])]);
    }

    #[test]
    fn sparse_matches_dense_on_examples() {
        let mut m = Sparse::zero(2, 2);
        m.add_at(0, 0, 2);
        m.add_at(1, 1, 3);
        assert_eq!(m.smith_diagonal(), vec![1, 6]);

        let mut m = Sparse::zero(2, 3);
        m.add_at(0, 0, 2);
        m.add_at(0, 1, 4);
        m.add_at(1, 0, 4);
        m.add_at(1, 1, 8);
        assert_eq!(m.smith_diagonal(), vec![2]);

        assert_eq!(Sparse::zero(3, 3).smith_diagonal(), Vec::<i128>::new());
    }

    #[test]
    fn sparse_matches_dense_on_random_fills() {
        // Deterministic xorshift; small entries so dense arithmetic stays
        // comfortable while still exercising torsion and rank defects.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for trial in 0..60 {
            let rows = 1 + (next() % 7) as usize;
            let cols = 1 + (next() % 7) as usize;
            let mut dense = Matrix::zero(rows, cols);
            let mut sparse = Sparse::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    let v = match next() % 8 {
                        0 | 1 => 0i128,
                        2 | 3 => 1,
                        4 => -1,
                        5 => 2,
                        6 => -3,
                        _ => 5,
                    };
                    if v != 0 {
                        dense.set(i, j, v);
                        sparse.add_at(i, j, v);
                    }
                }
            }
            assert_eq!(
                sparse.smith_diagonal(),
                dense.smith_diagonal(),
                "trial {trial} ({rows}x{cols})"
            );
        }
    }

    #[test]
    fn smith_diagonal_examples() {
        // diag(2)xdiag(3) pattern with divisibility fix: the form of
        // [[2,0],[0,3]] is diag(1,6).
        let mut m = Matrix::zero(2, 2);
        m.set(0, 0, 2);
        m.set(1, 1, 3);
        assert_eq!(m.smith_diagonal(), vec![1, 6]);

        let mut m = Matrix::zero(2, 3);
        m.set(0, 0, 2);
        m.set(0, 1, 4);
        m.set(1, 0, 4);
        m.set(1, 1, 8);
        assert_eq!(m.smith_diagonal(), vec![2]);

        let m = Matrix::zero(3, 3);
        assert_eq!(m.smith_diagonal(), Vec::<i128>::new());
    }

    #[test]
    fn display_forms() {
        assert_eq!(group(0, &[]).to_string(), "0");
        assert_eq!(group(1, &[]).to_string(), "Z");
        assert_eq!(group(2, &[2, 4]).to_string(), "Z^2 + Z/2 + Z/4");
    }
}
