//! Exact linear algebra workhorses: integer Hermite normal form with
//! optional transform tracking, integer kernels, and rational Gaussian
//! elimination over sparse rows.
//!
//! The Hermite convention is row-style throughout: pivots are positive,
//! appear on strictly increasing columns, and every entry above a pivot
//! is reduced into `[0, pivot)`. That convention is what makes the
//! canonical forms in this crate deterministic and comparable.

use crate::{Int, Rational};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_integer::Integer as _;
use num_traits::{One, Signed, Zero};

/// Row-style Hermite normal form of the given integer rows.
///
/// Returns the nonzero canonical rows and their pivot columns. The input
/// row order does not affect the output (the output is canonical for the
/// generated row lattice).
pub fn hermite_normal_form(rows: Vec<Vec<Int>>) -> (Vec<Vec<Int>>, Vec<usize>) {
    let (h, p, _) = hnf_inner(rows, false);
    (h, p)
}

/// Hermite normal form together with a unimodular transform: returns
/// `(h, pivots, u)` where `u * input = [h; zero rows]` and `u` is square
/// unimodular over the integers.
pub fn hermite_with_transform(rows: Vec<Vec<Int>>) -> (Vec<Vec<Int>>, Vec<usize>, Vec<Vec<Int>>) {
    let (h, p, u) = hnf_inner(rows, true);
    (h, p, u.expect("transform requested"))
}

#[allow(clippy::type_complexity)]
fn hnf_inner(
    mut a: Vec<Vec<Int>>,
    want_transform: bool,
) -> (Vec<Vec<Int>>, Vec<usize>, Option<Vec<Vec<Int>>>) {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    debug_assert!(a.iter().all(|r| r.len() == n));
    let mut u: Option<Vec<Vec<Int>>> = want_transform.then(|| {
        (0..m)
            .map(|i| {
                let mut row = alloc::vec![Int::zero(); m];
                row[i] = Int::one();
                row
            })
            .collect()
    });

    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..n {
        if r == m {
            break;
        }
        // Euclidean reduction within column `c`, rows `r..`.
        loop {
            let mut best: Option<usize> = None;
            let mut count = 0usize;
            for (i, row) in a.iter().enumerate().skip(r) {
                if !row[c].is_zero() {
                    count += 1;
                    let better = match best {
                        None => true,
                        Some(b) => {
                            let (ma, mb) = (row[c].abs(), a[b][c].abs());
                            ma < mb
                        }
                    };
                    if better {
                        best = Some(i);
                    }
                }
            }
            let Some(b) = best else { break };
            if a[b][c].is_negative() {
                negate_row(&mut a[b]);
                if let Some(u) = u.as_mut() {
                    negate_row(&mut u[b]);
                }
            }
            if count == 1 {
                a.swap(r, b);
                if let Some(u) = u.as_mut() {
                    u.swap(r, b);
                }
                break;
            }
            let pivot = a[b][c].clone();
            for i in r..m {
                if i == b || a[i][c].is_zero() {
                    continue;
                }
                let q = a[i][c].div_floor(&pivot);
                if !q.is_zero() {
                    row_sub_scaled(&mut a, i, b, &q);
                    if let Some(u) = u.as_mut() {
                        row_sub_scaled(u, i, b, &q);
                    }
                }
            }
        }
        if a[r][c].is_zero() {
            continue;
        }
        // Reduce the entries above the new pivot into [0, pivot).
        let pivot = a[r][c].clone();
        for i in 0..r {
            let q = a[i][c].div_floor(&pivot);
            if !q.is_zero() {
                row_sub_scaled(&mut a, i, r, &q);
                if let Some(u) = u.as_mut() {
                    row_sub_scaled(u, i, r, &q);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    (a, pivots, u)
}

fn negate_row(row: &mut [Int]) {
    for v in row.iter_mut() {
        *v = -core::mem::take(v);
    }
}

fn row_sub_scaled(a: &mut [Vec<Int>], i: usize, j: usize, q: &Int) {
    debug_assert!(i != j);
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (head, tail) = a.split_at_mut(hi);
    let (ri, rj) = if i < j {
        (&mut head[lo], &tail[0])
    } else {
        (&mut tail[0], &head[lo])
    };
    for (vi, vj) in ri.iter_mut().zip(rj.iter()) {
        *vi -= q * vj;
    }
}

/// Basis of the integer kernel `{x : a·x = 0}` of an integer matrix given
/// by rows. The kernel of an integer matrix is a saturated sublattice, so
/// the returned rows generate every rational solution up to scaling.
pub fn integer_kernel(rows: &[Vec<Int>], ncols: usize) -> Vec<Vec<Int>> {
    // Kernel vectors of `a` are the transform rows that zero out `aᵀ`.
    let m = rows.len();
    let transposed: Vec<Vec<Int>> = (0..ncols)
        .map(|c| (0..m).map(|r| rows[r][c].clone()).collect())
        .collect();
    let (h, _, u) = hnf_inner(transposed, true);
    let rank = h.len();
    let u = u.expect("transform requested");
    u.into_iter().skip(rank).collect()
}

/// Dense rational matrix in reduced row echelon form, kept for span
/// queries: membership, reduction to a canonical residual, annihilators.
#[derive(Debug, Clone, Default)]
pub struct RowSpan {
    /// Echelon rows, each normalized to a leading 1 and fully reduced.
    rows: Vec<Vec<Rational>>,
    /// Pivot column of each row, strictly increasing.
    pivots: Vec<usize>,
    ncols: usize,
}

impl RowSpan {
    pub fn new(ncols: usize) -> Self {
        RowSpan {
            rows: Vec::new(),
            pivots: Vec::new(),
            ncols,
        }
    }

    pub fn from_rows<I: IntoIterator<Item = Vec<Rational>>>(ncols: usize, rows: I) -> Self {
        let mut s = Self::new(ncols);
        for r in rows {
            s.insert(r);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the span; the result has zeros in all pivot
    /// columns and is the canonical representative of `v` modulo the span.
    pub fn reduce(&self, mut v: Vec<Rational>) -> Vec<Rational> {
        debug_assert_eq!(v.len(), self.ncols);
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let c = v[p].clone();
                for (vi, ri) in v.iter_mut().zip(row.iter()) {
                    *vi -= &c * ri;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Rational]) -> bool {
        self.reduce(v.to_vec()).iter().all(Zero::is_zero)
    }

    /// Inserts a vector, returning true if it enlarged the span.
    pub fn insert(&mut self, v: Vec<Rational>) -> bool {
        let mut v = self.reduce(v);
        let Some(p) = v.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let lead = v[p].clone();
        for c in v.iter_mut() {
            *c /= &lead;
        }
        // Reduce existing rows against the new pivot, keep rows sorted.
        for row in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let c = row[p].clone();
                for (ri, vi) in row.iter_mut().zip(v.iter()) {
                    *ri -= &c * vi;
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.rows.insert(at, v);
        self.pivots.insert(at, p);
        true
    }

    /// Coordinates of `v` in terms of the original spanning set are not
    /// tracked; this solves against the echelon rows instead and reports
    /// the coefficients for them, or None when `v` is outside the span.
    pub fn echelon_coordinates(&self, v: &[Rational]) -> Option<Vec<Rational>> {
        let mut v = v.to_vec();
        let mut coords = alloc::vec![Rational::zero(); self.rows.len()];
        for (k, (row, &p)) in self.rows.iter().zip(&self.pivots).enumerate() {
            if !v[p].is_zero() {
                let c = v[p].clone();
                for (vi, ri) in v.iter_mut().zip(row.iter()) {
                    *vi -= &c * ri;
                }
                coords[k] = c;
            }
        }
        v.iter().all(Zero::is_zero).then_some(coords)
    }

    /// Basis of the annihilator `{a : a·v = 0 for every v in the span}`,
    /// i.e. the nullspace of the span matrix read as rows of functionals.
    pub fn annihilator(&self) -> Vec<Vec<Rational>> {
        let pivot_set: alloc::collections::BTreeSet<usize> = self.pivots.iter().copied().collect();
        let mut out = Vec::new();
        for f in 0..self.ncols {
            if pivot_set.contains(&f) {
                continue;
            }
            // Functional vanishing on the span: 1 at the free column, and
            // minus the row entries at the pivots.
            let mut a = alloc::vec![Rational::zero(); self.ncols];
            a[f] = Rational::one();
            for (row, &p) in self.rows.iter().zip(&self.pivots) {
                a[p] = -row[f].clone();
            }
            out.push(a);
        }
        out
    }

    /// Intersection with another span over the same coordinates.
    pub fn intersect(&self, other: &RowSpan) -> RowSpan {
        let mut ann = RowSpan::new(self.ncols);
        for a in self.annihilator() {
            ann.insert(a);
        }
        for a in other.annihilator() {
            ann.insert(a);
        }
        // The intersection is the annihilator of the joint annihilator.
        let mut out = RowSpan::new(self.ncols);
        for v in ann.annihilator() {
            out.insert(v);
        }
        out
    }
}

/// A sparse system of homogeneous rational equations, solved once into a
/// nullspace basis. Rows are functionals over `nvars` unknowns.
#[derive(Debug, Default)]
pub struct SparseSystem {
    rows: Vec<BTreeMap<usize, Rational>>,
    nvars: usize,
}

impl SparseSystem {
    pub fn new(nvars: usize) -> Self {
        SparseSystem {
            rows: Vec::new(),
            nvars,
        }
    }

    pub fn push(&mut self, row: BTreeMap<usize, Rational>) {
        if !row.is_empty() {
            self.rows.push(row);
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dense basis of the solution space `{x : row·x = 0 for all rows}`.
    pub fn nullspace(self) -> Vec<Vec<Rational>> {
        let nvars = self.nvars;
        // pivot column -> normalized sparse row
        let mut pivot_rows: BTreeMap<usize, BTreeMap<usize, Rational>> = BTreeMap::new();
        for mut row in self.rows {
            // Reduce against existing pivots until the leading column is free.
            while let Some((&lead, _)) = row.iter().next() {
                if let Some(p) = pivot_rows.get(&lead) {
                    let c = row[&lead].clone();
                    for (col, val) in p {
                        let e = row.entry(*col).or_insert_with(Rational::zero);
                        *e -= &c * val;
                        if e.is_zero() {
                            row.remove(col);
                        }
                    }
                    debug_assert!(!row.contains_key(&lead));
                } else {
                    let c = row[&lead].clone();
                    for val in row.values_mut() {
                        *val /= &c;
                    }
                    pivot_rows.insert(lead, row);
                    break;
                }
            }
        }
        // Back-substitution: make every pivot row reduced against later pivots.
        let pivot_cols: Vec<usize> = pivot_rows.keys().copied().collect();
        for i in (0..pivot_cols.len()).rev() {
            let pc = pivot_cols[i];
            let mut row = pivot_rows.remove(&pc).expect("pivot row");
            let later: Vec<usize> = row
                .keys()
                .copied()
                .filter(|c| *c > pc && pivot_rows.contains_key(c))
                .collect();
            for c in later {
                let coef = row[&c].clone();
                let other = &pivot_rows[&c];
                for (col, val) in other {
                    let e = row.entry(*col).or_insert_with(Rational::zero);
                    *e -= &coef * val;
                    if e.is_zero() {
                        row.remove(col);
                    }
                }
            }
            pivot_rows.insert(pc, row);
        }
        let free: Vec<usize> = (0..nvars).filter(|c| !pivot_rows.contains_key(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = alloc::vec![Rational::zero(); nvars];
                x[f] = Rational::one();
                for (&pc, row) in &pivot_rows {
                    if let Some(v) = row.get(&f) {
                        x[pc] = -v.clone();
                    }
                }
                x
            })
            .collect()
    }
}
