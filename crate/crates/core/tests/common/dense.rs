//! Dense GF(2) elimination on `u64` words, as an independent check.

pub struct Dense {
    pub ncols: usize,
    pub rows: Vec<Vec<u64>>,
}

impl Dense {
    pub fn from_sparse(ncols: usize, rows: &[Vec<u32>]) -> Dense {
        let words = ncols.div_ceil(64).max(1);
        let rows = rows
            .iter()
            .map(|r| {
                let mut w = vec![0u64; words];
                for &c in r {
                    w[c as usize / 64] ^= 1 << (c % 64);
                }
                w
            })
            .collect();
        Dense { ncols, rows }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.rows.clone();
        let mut rank = 0;
        for c in 0..self.ncols {
            let (w, bit) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..m.len()).find(|&i| m[i][w] & bit != 0) else { continue };
            m.swap(rank, p);
            let pivot = m[rank].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i != rank && row[w] & bit != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// `M x` for a column set `x`.
    pub fn apply(&self, x: &[u32]) -> bool {
        self.rows.iter().all(|r| x.iter().filter(|&&c| r[c as usize / 64] >> (c % 64) & 1 == 1).count() % 2 == 0)
    }

    /// `v^T M` for a row set `v`.
    pub fn combine(&self, v: &[u32]) -> bool {
        let words = self.rows.first().map_or(1, Vec::len);
        let mut acc = vec![0u64; words];
        for &i in v {
            for (x, y) in acc.iter_mut().zip(&self.rows[i as usize]) {
                *x ^= y;
            }
        }
        acc.iter().all(|&w| w == 0)
    }
}

/// Rank of a list of vectors given as index sets.
pub fn span_rank(n: usize, vecs: &[Vec<u32>]) -> usize {
    Dense::from_sparse(n, vecs).rank()
}
