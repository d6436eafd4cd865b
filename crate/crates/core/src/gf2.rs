//! Sparse linear algebra over GF(2).
//!
//! Elimination runs in two phases.  Low-weight columns are pivoted out of the
//! sparse structure (Markowitz order: lightest column, lightest row) until the
//! active part fills past 10%; the remainder is finished on bit-packed dense
//! rows.  Row histories are carried along when the left nullspace is wanted.

use rayon::prelude::*;

use crate::cubic::FactorBase;
use crate::error::{Error, Result};
use crate::sieve::Relation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBitMatrix {
    ncols: usize,
    rows: Vec<Vec<u32>>,
}

impl SparseBitMatrix {
    pub fn new(ncols: usize) -> Self {
        SparseBitMatrix { ncols, rows: Vec::new() }
    }

    /// Rows given as column lists; duplicates cancel in pairs.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<u32>>) -> Self {
        let mut m = SparseBitMatrix::new(ncols);
        for r in rows {
            m.push_row(r);
        }
        m
    }

    /// Exponent vectors of the relations reduced mod 2.
    pub fn from_relations(ncols: usize, relations: &[Relation]) -> Self {
        SparseBitMatrix { ncols, rows: relations.iter().map(|r| r.odd_columns()).collect() }
    }

    pub fn push_row(&mut self, mut cols: Vec<u32>) {
        cols.sort_unstable();
        let mut out: Vec<u32> = Vec::with_capacity(cols.len());
        for c in cols {
            assert!((c as usize) < self.ncols, "column {c} out of range");
            if out.last() == Some(&c) {
                out.pop();
            } else {
                out.push(c);
            }
        }
        self.rows.push(out);
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.ncols];
        for r in &self.rows {
            for &c in r {
                w[c as usize] += 1;
            }
        }
        w
    }

    pub fn row_weights(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn transpose(&self) -> SparseBitMatrix {
        let mut t = vec![Vec::new(); self.ncols];
        for (i, r) in self.rows.iter().enumerate() {
            for &c in r {
                t[c as usize].push(i as u32);
            }
        }
        SparseBitMatrix { ncols: self.rows.len(), rows: t }
    }

    /// Submatrix on the given rows (in order).
    pub fn select_rows(&self, rows: &[usize]) -> SparseBitMatrix {
        SparseBitMatrix { ncols: self.ncols, rows: rows.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    /// Submatrix on the given columns, renumbered in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> SparseBitMatrix {
        let mut map = vec![u32::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k as u32;
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut v: Vec<u32> = r.iter().map(|&c| map[c as usize]).filter(|&k| k != u32::MAX).collect();
                v.sort_unstable();
                v
            })
            .collect();
        SparseBitMatrix { ncols: cols.len(), rows }
    }

    /// `v M` for a row subset `v`, as a sorted column list.
    pub fn combine_rows(&self, v: &[u32]) -> Vec<u32> {
        let mut acc = Vec::new();
        for &i in v {
            acc = xor_sorted(&acc, &self.rows[i as usize]);
        }
        acc
    }

    /// `M x` for a column subset `x`, as a sorted row list.
    pub fn apply(&self, x: &[u32]) -> Vec<u32> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| intersection_parity(r, x))
            .map(|(i, _)| i as u32)
            .collect()
    }
}

fn intersection_parity(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j, mut n) = (0, 0, 0u32);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n ^= 1;
                i += 1;
                j += 1;
            }
        }
    }
    n == 1
}

/// Symmetric difference of two sorted lists.
pub fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

// ---------------------------------------------------------------------------
// dense rows

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(n: usize) -> Self {
        BitRow { words: vec![0; n.div_ceil(64)] }
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn ones(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (k, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let t = w.trailing_zeros();
                out.push((k * 64) as u32 + t);
                w &= w - 1;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// elimination

const DENSE_FILL: f64 = 0.10;
const SPARSE_MAX_WEIGHT: usize = 8;

struct SRow {
    cols: Vec<u32>,
    hist: Vec<u32>,
}

/// Rank of `m` and, with `track`, a basis of its left nullspace.
fn eliminate(m: &SparseBitMatrix, track: bool) -> (usize, Vec<Vec<u32>>) {
    let nrows = m.nrows();
    let mut rows: Vec<Option<SRow>> = m
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| Some(SRow { cols: r.clone(), hist: if track { vec![i as u32] } else { Vec::new() } }))
        .collect();
    let mut null: Vec<Vec<u32>> = Vec::new();
    for r in rows.iter_mut() {
        if r.as_ref().is_some_and(|r| r.cols.is_empty()) {
            null.push(r.take().unwrap().hist);
        }
    }
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); m.ncols];
    for (i, r) in rows.iter().enumerate() {
        if let Some(r) = r {
            for &c in &r.cols {
                col_rows[c as usize].push(i as u32);
            }
        }
    }
    let mut col_done = vec![false; m.ncols];
    let mut rank = 0;

    // sparse phase
    loop {
        let mut progress = false;
        for w in 1..=SPARSE_MAX_WEIGHT {
            for c in 0..m.ncols {
                if col_done[c] {
                    continue;
                }
                // refresh the row list for c
                let list: Vec<u32> = col_rows[c]
                    .iter()
                    .copied()
                    .filter(|&i| rows[i as usize].as_ref().is_some_and(|r| r.cols.binary_search(&(c as u32)).is_ok()))
                    .collect();
                let mut list = list;
                list.sort_unstable();
                list.dedup();
                col_rows[c] = list.clone();
                if list.is_empty() {
                    col_done[c] = true;
                    continue;
                }
                if list.len() != w {
                    continue;
                }
                let &piv = list.iter().min_by_key(|&&i| rows[i as usize].as_ref().unwrap().cols.len()).unwrap();
                let prow = rows[piv as usize].take().unwrap();
                for &i in &list {
                    if i == piv {
                        continue;
                    }
                    let r = rows[i as usize].as_mut().unwrap();
                    let newcols = xor_sorted(&r.cols, &prow.cols);
                    for &nc in &newcols {
                        if r.cols.binary_search(&nc).is_err() {
                            col_rows[nc as usize].push(i);
                        }
                    }
                    r.cols = newcols;
                    if track {
                        r.hist = xor_sorted(&r.hist, &prow.hist);
                    }
                    if r.cols.is_empty() {
                        null.push(rows[i as usize].take().unwrap().hist);
                    }
                }
                col_done[c] = true;
                rank += 1;
                progress = true;
            }
            if progress {
                break;
            }
        }
        if !progress {
            break;
        }
        let nnz: usize = rows.iter().flatten().map(|r| r.cols.len()).sum();
        let live_cols = col_done.iter().filter(|&&d| !d).count().max(1);
        let active = rows.iter().filter(|r| r.is_some()).count().max(1);
        if nnz as f64 > DENSE_FILL * (active * live_cols) as f64 {
            break;
        }
    }

    // dense tail
    let live: Vec<usize> = (0..m.ncols).filter(|&c| !col_done[c]).collect();
    let mut cmap = vec![u32::MAX; m.ncols];
    for (k, &c) in live.iter().enumerate() {
        cmap[c] = k as u32;
    }
    let mut dense: Vec<(BitRow, BitRow)> = rows
        .into_iter()
        .flatten()
        .map(|r| {
            let mut a = BitRow::zeros(live.len());
            for &c in &r.cols {
                a.set(cmap[c as usize] as usize);
            }
            let mut h = BitRow::zeros(if track { nrows } else { 0 });
            for &i in &r.hist {
                h.set(i as usize);
            }
            (a, h)
        })
        .collect();
    let mut top = 0;
    for c in 0..live.len() {
        let Some(p) = (top..dense.len()).find(|&i| dense[i].0.get(c)) else { continue };
        dense.swap(top, p);
        let (head, tail) = dense.split_at_mut(top + 1);
        let pivot = &head[top];
        tail.par_iter_mut().filter(|r| r.0.get(c)).for_each(|r| {
            r.0.xor_assign(&pivot.0);
            if track {
                r.1.xor_assign(&pivot.1);
            }
        });
        top += 1;
    }
    rank += top;
    if track {
        null.extend(dense[top..].iter().map(|(_, h)| h.ones()));
        for v in null.iter_mut() {
            v.sort_unstable();
        }
    }
    (rank, null)
}

pub fn rank(m: &SparseBitMatrix) -> usize {
    eliminate(m, false).0
}

/// Dimension and a basis of `{x : M x = 0}`; vectors are column lists.
pub fn right_nullity(m: &SparseBitMatrix) -> (usize, Vec<Vec<u32>>) {
    let basis = eliminate(&m.transpose(), true).1;
    (basis.len(), basis)
}

/// A basis of `{v : v M = 0}`; vectors are row lists.
pub fn left_nullspace(m: &SparseBitMatrix) -> Vec<Vec<u32>> {
    eliminate(m, true).1
}

// ---------------------------------------------------------------------------
// pruning

#[derive(Clone, Debug)]
pub struct PruneReport {
    pub matrix: SparseBitMatrix,
    /// Surviving original row indices, in order.
    pub kept_rows: Vec<usize>,
    pub removed_columns: Vec<usize>,
    pub removed_rows: Vec<usize>,
    /// Columns at norm `<= belabas` with weight zero after pruning.
    pub zero_protected: Vec<usize>,
    pub belabas_bound: u64,
}

/// Drop columns of weight below `min_column_weight` whose norm exceeds the
/// Belabas bound, together with their rows, until nothing changes.  Empty
/// columns above the bound go too; they would only inflate the nullity.  Columns
/// at or below the bound are never touched; the surviving matrix keeps every
/// column so indices still match the base.
pub fn prune(m: &SparseBitMatrix, base: &FactorBase, belabas_bound: u64, min_column_weight: usize) -> PruneReport {
    assert_eq!(m.ncols(), base.len());
    let mut alive = vec![true; m.nrows()];
    let mut col_removed = vec![false; m.ncols()];
    loop {
        let mut w = vec![0usize; m.ncols()];
        for (i, r) in m.rows.iter().enumerate() {
            if alive[i] {
                for &c in r {
                    w[c as usize] += 1;
                }
            }
        }
        let drop: Vec<usize> = (0..m.ncols())
            .filter(|&c| !col_removed[c] && w[c] < min_column_weight && base.primes[c].p > belabas_bound)
            .collect();
        if drop.is_empty() {
            break;
        }
        for &c in &drop {
            col_removed[c] = true;
        }
        for (i, r) in m.rows.iter().enumerate() {
            if alive[i] && r.iter().any(|&c| col_removed[c as usize]) {
                alive[i] = false;
            }
        }
    }
    let kept_rows: Vec<usize> = (0..m.nrows()).filter(|&i| alive[i]).collect();
    let removed_rows: Vec<usize> = (0..m.nrows()).filter(|&i| !alive[i]).collect();
    let matrix = m.select_rows(&kept_rows);
    let weights = matrix.column_weights();
    let zero_protected = (0..m.ncols()).filter(|&c| weights[c] == 0 && base.primes[c].p <= belabas_bound).collect();
    PruneReport {
        matrix,
        kept_rows,
        removed_columns: (0..m.ncols()).filter(|&c| col_removed[c]).collect(),
        removed_rows,
        zero_protected,
        belabas_bound,
    }
}

impl PruneReport {
    /// Columns still in play, ascending.
    pub fn kept_columns(&self) -> Vec<usize> {
        let mut removed = self.removed_columns.iter().peekable();
        (0..self.matrix.ncols())
            .filter(|c| {
                if removed.peek() == Some(&c) {
                    removed.next();
                    false
                } else {
                    true
                }
            })
            .collect()
    }

    /// Right nullity on the kept columns.
    pub fn nullity(&self) -> (usize, Vec<Vec<u32>>) {
        let cols = self.kept_columns();
        let (d, basis) = right_nullity(&self.matrix.select_columns(&cols));
        let basis = basis.into_iter().map(|v| v.into_iter().map(|k| cols[k as usize] as u32).collect()).collect();
        (d, basis)
    }

    /// Error on a protected column left empty: its class would be free in
    /// the quotient and the nullity would only count it.
    pub fn ensure_sound(&self, base: &FactorBase) -> Result<()> {
        match self.zero_protected.first() {
            Some(&c) => Err(Error::UnsoundPrune {
                column: c,
                norm: base.primes[c].p,
                bound: self.belabas_bound,
                weight: 0,
            }),
            None => Ok(()),
        }
    }
}

/// Nullspace vectors supported on at most three columns, all above the
/// Belabas bound.
pub fn spurious_vectors(basis: &[Vec<u32>], base: &FactorBase, belabas_bound: u64) -> Vec<usize> {
    basis
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty() && v.len() <= 3 && v.iter().all(|&c| base.primes[c as usize].p > belabas_bound))
        .map(|(i, _)| i)
        .collect()
}
