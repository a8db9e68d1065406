use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Smallest admissible |U_ii| in an LU factorization.
pub const PIVOT_TOL: f64 = 1e-14;

/// Solves `a x = b` by LU with partial pivoting followed by one step of
/// iterative refinement. Fails if any pivot falls below [`PIVOT_TOL`].
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    let pivot = lu.u().diagonal().amin();
    if !(pivot >= PIVOT_TOL) {
        return Err(Error::Singular {
            pivot,
            threshold: PIVOT_TOL,
        });
    }
    let mut x = lu.solve(b).ok_or(Error::Singular {
        pivot,
        threshold: PIVOT_TOL,
    })?;
    let residual = b - a * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    Ok(x)
}

/// Entrywise support pattern of a square matrix, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl BoolMatrix {
    pub fn support(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let bits = (0..n * n).map(|k| m[(k / n, k % n)] > 0.0).collect();
        BoolMatrix { n, bits }
    }

    pub fn all(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Boolean product: `(A B)_{ij} = OR_k A_ik AND B_kj`.
    pub fn mul(&self, other: &BoolMatrix) -> BoolMatrix {
        let n = self.n;
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if !self.bits[i * n + k] {
                    continue;
                }
                let src = &other.bits[k * n..(k + 1) * n];
                let dst = &mut bits[i * n..(i + 1) * n];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
        BoolMatrix { n, bits }
    }
}
