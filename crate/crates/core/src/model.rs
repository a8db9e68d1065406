//! Data model for switching non-stationary decision and reward processes.
//!
//! An [`SnsMdp`] is a family of ordinary MDPs sharing state and action spaces,
//! one per environmental state, together with a Markov chain ([`EnvChain`])
//! that picks which member is active at each step. The agent never sees the
//! active member.
//!
//! Indices are 0-based everywhere. Rewards are stored once, as `r_e(s, a)`;
//! the per-policy reward matrix `R(s, e)` of an [`SnsMrp`] is always derived.

use std::ops::Index;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, ValidationReport};

/// Absolute tolerance on every probability row sum.
pub const PROB_TOL: f64 = 1e-12;

/// Checks one probability row, recording violations against `label`.
pub(crate) fn check_prob_row<'a>(
    row: impl IntoIterator<Item = &'a f64>,
    label: &str,
    report: &mut ValidationReport,
) {
    let mut sum = 0.0;
    for (j, &x) in row.into_iter().enumerate() {
        if !x.is_finite() {
            report.push(format!("non-finite probability {x} at {label}, column {j}"));
            return;
        }
        if x < 0.0 {
            report.push(format!("negative probability {x} at {label}, column {j}"));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > PROB_TOL {
        report.push(format!("row sum {sum} at {label}"));
    }
}

pub(crate) fn check_stochastic(m: &DMatrix<f64>, label: &str, report: &mut ValidationReport) {
    if m.nrows() != m.ncols() {
        report.push(format!(
            "{label} is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        ));
        return;
    }
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        check_prob_row(&row, &format!("{label} row {i}"), report);
    }
}

fn check_gamma(gamma: f64, report: &mut ValidationReport) {
    if !gamma.is_finite() || gamma < 0.0 {
        report.push(format!("discount must be in [0,1), got {gamma}"));
    } else if gamma >= 1.0 {
        report.push("discount must be < 1");
    }
}

/// The hidden environmental chain `q(e'|e)`, rows indexed by the current environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvChain {
    pub q: DMatrix<f64>,
}

impl EnvChain {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        let chain = EnvChain { q };
        chain.validate().into_result()?;
        Ok(chain)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn n_envs(&self) -> usize {
        self.q.nrows()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.q.nrows() == 0 {
            report.push("environment chain must have at least one state");
            return report;
        }
        check_stochastic(&self.q, "env_chain", &mut report);
        report
    }
}

/// Switching non-stationary MDP.
///
/// `trans[e][a]` is the `n_states x n_states` matrix with entry `(s, s')`
/// equal to `p_e(s'|s, a)`; `rewards[e]` is `n_states x n_actions` with entry
/// `(s, a)` equal to `r_e(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnsMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub trans: Vec<Vec<DMatrix<f64>>>,
    pub rewards: Vec<DMatrix<f64>>,
    pub env: EnvChain,
}

impl SnsMdp {
    /// Builds a model and rejects it unless [`validate_mdp`] passes.
    pub fn new(
        gamma: f64,
        trans: Vec<Vec<DMatrix<f64>>>,
        rewards: Vec<DMatrix<f64>>,
        env: EnvChain,
    ) -> Result<Self> {
        let n_states = trans
            .first()
            .and_then(|per_action| per_action.first())
            .map_or(0, |m| m.nrows());
        let n_actions = trans.first().map_or(0, Vec::len);
        let model = SnsMdp {
            n_states,
            n_actions,
            gamma,
            trans,
            rewards,
            env,
        };
        validate_mdp(&model).into_result()?;
        Ok(model)
    }

    pub fn n_envs(&self) -> usize {
        self.env.n_envs()
    }

    /// `p_e(s'|s, a)`
    #[inline]
    pub fn p(&self, e: usize, a: usize, s: usize, s_next: usize) -> f64 {
        self.trans[e][a][(s, s_next)]
    }

    /// `r_e(s, a)`
    #[inline]
    pub fn r(&self, e: usize, s: usize, a: usize) -> f64 {
        self.rewards[e][(s, a)]
    }

    /// Largest reward magnitude over all `(e, s, a)`.
    pub fn max_abs_reward(&self) -> f64 {
        self.rewards
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0_f64, |acc, r| acc.max(r.abs()))
    }
}

/// Checks every structural invariant of an [`SnsMdp`]. Never fails; the
/// returned report lists each violation with the offending index.
pub fn validate_mdp(model: &SnsMdp) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (ns, na) = (model.n_states, model.n_actions);
    if ns == 0 {
        report.push("n_states must be positive");
    }
    if na == 0 {
        report.push("n_actions must be positive");
    }
    check_gamma(model.gamma, &mut report);

    let env_report = model.env.validate();
    report.violations.extend(env_report.violations);
    let ne = model.env.n_envs();

    if model.trans.len() != ne {
        report.push(format!(
            "transitions has {} environments, env_chain has {ne}",
            model.trans.len()
        ));
    }
    if model.rewards.len() != ne {
        report.push(format!(
            "rewards has {} environments, env_chain has {ne}",
            model.rewards.len()
        ));
    }

    for (e, per_action) in model.trans.iter().enumerate() {
        if per_action.len() != na {
            report.push(format!(
                "transitions[{e}] has {} actions, expected {na}",
                per_action.len()
            ));
            continue;
        }
        for (a, m) in per_action.iter().enumerate() {
            if m.nrows() != ns || m.ncols() != ns {
                report.push(format!(
                    "transitions[{e}][{a}] is {}x{}, expected {ns}x{ns}",
                    m.nrows(),
                    m.ncols()
                ));
                continue;
            }
            for s in 0..ns {
                let row: Vec<f64> = m.row(s).iter().copied().collect();
                check_prob_row(&row, &format!("(e={e},a={a},s={s})"), &mut report);
            }
        }
    }

    for (e, m) in model.rewards.iter().enumerate() {
        if m.nrows() != ns || m.ncols() != na {
            report.push(format!(
                "rewards[{e}] is {}x{}, expected {ns}x{na}",
                m.nrows(),
                m.ncols()
            ));
            continue;
        }
        for s in 0..ns {
            for a in 0..na {
                let r = m[(s, a)];
                if !r.is_finite() {
                    report.push(format!("non-finite reward {r} at (e={e},s={s},a={a})"));
                }
            }
        }
    }
    report
}

/// Reward process obtained from an [`SnsMdp`] under a fixed policy.
///
/// `p[e]` is the row-stochastic `P_e`; `r` is `n_states x n_envs` with
/// `r[(s, e)] = r_e(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnsMrp {
    pub n_states: usize,
    pub p: Vec<DMatrix<f64>>,
    pub r: DMatrix<f64>,
    pub gamma: f64,
    pub env: EnvChain,
}

impl SnsMrp {
    pub fn new(p: Vec<DMatrix<f64>>, r: DMatrix<f64>, gamma: f64, env: EnvChain) -> Result<Self> {
        let mrp = SnsMrp {
            n_states: r.nrows(),
            p,
            r,
            gamma,
            env,
        };
        mrp.validate().into_result()?;
        Ok(mrp)
    }

    pub fn n_envs(&self) -> usize {
        self.env.n_envs()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = self.env.validate();
        check_gamma(self.gamma, &mut report);
        let (ns, ne) = (self.n_states, self.env.n_envs());
        if ns == 0 {
            report.push("n_states must be positive");
        }
        if self.p.len() != ne {
            report.push(format!(
                "{} transition matrices for {ne} environments",
                self.p.len()
            ));
        }
        if self.r.nrows() != ns || self.r.ncols() != ne {
            report.push(format!(
                "reward matrix is {}x{}, expected {ns}x{ne}",
                self.r.nrows(),
                self.r.ncols()
            ));
        }
        for (e, m) in self.p.iter().enumerate() {
            if m.nrows() != ns {
                report.push(format!("P_{e} has {} rows, expected {ns}", m.nrows()));
                continue;
            }
            check_stochastic(m, &format!("P_{e}"), &mut report);
        }
        if self.r.iter().any(|x| !x.is_finite()) {
            report.push("reward matrix has non-finite entries");
        }
        report
    }
}

/// Stationary, state-dependent policy `mu(a|s)` stored as an
/// `n_states x n_actions` row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub mu: DMatrix<f64>,
}

impl Policy {
    pub fn new(mu: DMatrix<f64>) -> Result<Self> {
        let mut report = ValidationReport::default();
        if mu.nrows() == 0 || mu.ncols() == 0 {
            report.push("policy must have at least one state and one action");
        }
        for s in 0..mu.nrows() {
            let row: Vec<f64> = mu.row(s).iter().copied().collect();
            check_prob_row(&row, &format!("policy state {s}"), &mut report);
        }
        report.into_result()?;
        Ok(Policy { mu })
    }

    /// One-hot policy taking `actions[s]` in state `s`.
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Result<Self> {
        let mut mu = DMatrix::zeros(actions.len(), n_actions);
        for (s, &a) in actions.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::OutOfRange {
                    what: "action",
                    index: a,
                    limit: n_actions,
                });
            }
            mu[(s, a)] = 1.0;
        }
        Policy::new(mu)
    }

    pub fn constant(n_states: usize, n_actions: usize, action: usize) -> Result<Self> {
        Self::deterministic(&vec![action; n_states], n_actions)
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy {
            mu: DMatrix::from_element(n_states, n_actions, 1.0 / n_actions as f64),
        }
    }

    pub fn n_states(&self) -> usize {
        self.mu.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.mu.ncols()
    }

    /// The chosen action at `s` if that row is one-hot.
    pub fn action(&self, s: usize) -> Option<usize> {
        let row = self.mu.row(s);
        let mut chosen = None;
        for (a, &p) in row.iter().enumerate() {
            if p == 1.0 && chosen.is_none() {
                chosen = Some(a);
            } else if p != 0.0 {
                return None;
            }
        }
        chosen
    }

    /// Per-state actions, if every row is one-hot.
    pub fn actions(&self) -> Option<Vec<usize>> {
        (0..self.n_states()).map(|s| self.action(s)).collect()
    }

    pub fn is_deterministic(&self) -> bool {
        self.actions().is_some()
    }
}

/// State values `v(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector(pub DVector<f64>);

impl ValueVector {
    pub fn zeros(n: usize) -> Self {
        ValueVector(DVector::zeros(n))
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        ValueVector(DVector::from_vec(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.amax()
    }

    pub fn sup_dist(&self, other: &ValueVector) -> f64 {
        (&self.0 - &other.0).amax()
    }

    pub fn l2_dist(&self, other: &ValueVector) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl Index<usize> for ValueVector {
    type Output = f64;

    fn index(&self, s: usize) -> &f64 {
        &self.0[s]
    }
}

/// Action values `Q(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable(pub DMatrix<f64>);

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable(DMatrix::zeros(n_states, n_actions))
    }

    pub fn n_states(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.0.ncols()
    }

    /// `max_a Q(s, a)`
    pub fn row_max(&self, s: usize) -> f64 {
        self.0.row(s).max()
    }

    /// `max_a Q(·, a)` as a value vector.
    pub fn greedy_values(&self) -> ValueVector {
        ValueVector(DVector::from_fn(self.n_states(), |s, _| self.row_max(s)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.amax()
    }

    pub fn sup_dist(&self, other: &QTable) -> f64 {
        (&self.0 - &other.0).amax()
    }

    /// Frobenius (Euclidean) distance.
    pub fn l2_dist(&self, other: &QTable) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl Index<(usize, usize)> for QTable {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Values `v(s, e)` of the fully observed joint chain.
#[derive(Debug, Clone, PartialEq)]
pub struct JointValue(pub DMatrix<f64>);

impl JointValue {
    /// `sum_e weights(e) v(s, e)`
    pub fn marginal(&self, weights: &[f64]) -> ValueVector {
        ValueVector(&self.0 * DVector::from_column_slice(weights))
    }
}

impl Index<(usize, usize)> for JointValue {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
