//! Direct solver for the small symmetric sparse systems the P1 assembly
//! produces.
//!
//! Lexicographic grid numbering keeps every stiffness/mass coupling within a
//! band of half-width nx+2, so the sparse factorization is a symmetric banded
//! LDL^T without pivoting. Factorization requires positive pivots; a
//! non-positive pivot is reported so callers can fall back to a definite
//! linearization. All loops run in a fixed order, which keeps solves
//! bit-reproducible across runs.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("pivot {pivot:.3e} at row {row} is not positive definite")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("right-hand side has length {got}, matrix has {expected} rows")]
    SizeMismatch { expected: usize, got: usize },
}

/// Symmetric banded matrix storing the lower band row by row.
///
/// Entry (i, j) with j <= i and i - j <= bandwidth lives at
/// `data[i * (bandwidth + 1) + (bandwidth - (i - j))]`, so the diagonal sits
/// at the end of each row slot.
#[derive(Clone, Debug)]
pub struct SymBandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        SymBandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (self.bandwidth - (i - j))
    }

    /// Adds `value` to entry (i, j). Only the lower triangle is stored;
    /// upper-triangle contributions from symmetric element matrices are
    /// skipped by the caller, not mirrored here.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(
            i >= j,
            "banded add expects lower-triangle indices, got ({i}, {j})"
        );
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bandwidth {
            0.0
        } else {
            self.data[self.slot(r, c)]
        }
    }

    /// In-place LDL^T factorization. Fails on a non-positive pivot, which for
    /// our assemblies signals an indefinite linearization rather than a
    /// numerically marginal system.
    pub fn ldlt(mut self) -> Result<LdltFactor, LinalgError> {
        let n = self.n;
        let bw = self.bandwidth;
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = self.data[self.slot(j, j)];
            for k in lo..j {
                let dk = self.data[self.slot(k, k)];
                let ljk = self.data[self.slot(j, k)];
                d -= ljk * ljk * dk;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
            }
            let sj = self.slot(j, j);
            self.data[sj] = d;
            let hi = (j + bw).min(n - 1);
            for i in (j + 1)..=hi {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut lij = self.data[self.slot(i, j)];
                for k in lo_i..j {
                    let dk = self.data[self.slot(k, k)];
                    lij -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)] * dk;
                }
                let s = self.slot(i, j);
                self.data[s] = lij / d;
            }
        }
        Ok(LdltFactor {
            n,
            bandwidth: bw,
            data: self.data,
        })
    }
}

/// Factored form of a [`SymBandMatrix`]; unit lower band plus diagonal D.
#[derive(Clone, Debug)]
pub struct LdltFactor {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl LdltFactor {
    fn slot(&self, i: usize, j: usize) -> usize {
        i * (self.bandwidth + 1) + (self.bandwidth - (i - j))
    }

    /// Solves A x = b, overwriting `b` with x.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::SizeMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let bw = self.bandwidth;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut v = b[i];
            for k in lo..i {
                v -= self.data[self.slot(i, k)] * b[k];
            }
            b[i] = v;
        }
        for i in 0..self.n {
            b[i] /= self.data[self.slot(i, i)];
        }
        for i in (0..self.n).rev() {
            let hi = (i + bw).min(self.n - 1);
            let mut v = b[i];
            for k in (i + 1)..=hi {
                v -= self.data[self.slot(k, i)] * b[k];
            }
            b[i] = v;
        }
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}
