//! Stationary distributions and ergodicity checks for finite Markov chains.

use std::ops::Index;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, ValidationReport};
use crate::linalg::{self, BoolMatrix};
use crate::model::check_stochastic;

/// `||P^T pi - pi||_inf` must fall below this for a distribution to count as stationary.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;
/// Iteration cap for [`stationary_distribution_power`].
pub const POWER_MAX_ITERS: usize = 1_000_000;
/// Successive-change stop for [`stationary_distribution_power`].
pub const POWER_STEP_TOL: f64 = 1e-13;

/// A probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub p: DVector<f64>,
}

impl Distribution {
    pub fn new(p: DVector<f64>) -> Result<Self> {
        let mut report = ValidationReport::default();
        crate::model::check_prob_row(p.iter(), "distribution", &mut report);
        report.into_result()?;
        Ok(Distribution { p })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.p.as_slice()
    }
}

impl Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.p[i]
    }
}

fn require_stochastic(p: &DMatrix<f64>) -> Result<()> {
    let mut report = ValidationReport::default();
    if p.nrows() == 0 {
        report.push("empty transition matrix");
    }
    check_stochastic(p, "transition matrix", &mut report);
    report.into_result()
}

/// `||P^T pi - pi||_inf`
pub fn stationary_residual(p: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    (p.transpose() * pi - pi).amax()
}

/// Stationary distribution of an irreducible, aperiodic chain.
///
/// Solves `(P^T - I) pi = 0` with the last equation replaced by `sum(pi) = 1`
/// using LU with partial pivoting. A pivot below 1e-14 is reported as
/// [`Error::Singular`]. If the direct solution misses the residual tolerance,
/// power iteration is tried before giving up.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Distribution> {
    require_stochastic(p)?;
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = linalg::solve(&a, &b)?;
    if stationary_residual(p, &pi) < STATIONARY_RESIDUAL_TOL {
        return Ok(Distribution { p: pi });
    }
    let fallback = stationary_distribution_power(p)?;
    let residual = stationary_residual(p, &fallback.p);
    if residual < STATIONARY_RESIDUAL_TOL {
        Ok(fallback)
    } else {
        Err(Error::Numerical(format!(
            "stationary residual {residual:e} exceeds {STATIONARY_RESIDUAL_TOL:e}"
        )))
    }
}

/// Power iteration `pi <- P^T pi` from the uniform vector, stopping once the
/// sup-norm change drops below 1e-13 (at most 10^6 sweeps).
pub fn stationary_distribution_power(p: &DMatrix<f64>) -> Result<Distribution> {
    require_stochastic(p)?;
    let n = p.nrows();
    let pt = p.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    let mut change = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let mut next = &pt * &pi;
        let total = next.sum();
        next /= total;
        change = (&next - &pi).amax();
        pi = next;
        if change < POWER_STEP_TOL {
            return Ok(Distribution { p: pi });
        }
    }
    Err(Error::NoConvergence {
        iterations: POWER_MAX_ITERS,
        residual: change,
    })
}

/// Wielandt bound `(n-1)^2 + 1`: a primitive `n x n` matrix has a strictly
/// positive power at or below this exponent.
pub fn wielandt_bound(n: usize) -> usize {
    let m = n.saturating_sub(1);
    m * m + 1
}

/// True iff the chain is irreducible and aperiodic, i.e. some power of `P`
/// up to the Wielandt bound is strictly positive.
///
/// Works on the support pattern only, so tiny positive probabilities are
/// never lost to underflow. Positivity of `P^m` persists for every larger
/// exponent, so repeated squaring past the bound decides the question.
pub fn check_irreducible_aperiodic(p: &DMatrix<f64>) -> bool {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return false;
    }
    let bound = wielandt_bound(n);
    let mut power = BoolMatrix::support(p);
    let mut exponent = 1usize;
    loop {
        if power.all() {
            return true;
        }
        if exponent >= bound {
            return false;
        }
        power = power.mul(&power);
        exponent *= 2;
    }
}
