//! Exact solvers: environment-averaged dynamics, the closed-form SNS value,
//! the joint `(s, e)` value used as an independent check, SNS Q-tables,
//! policy iteration, and Bellman-optimality value iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::markov::{check_irreducible_aperiodic, stationary_distribution, Distribution};
use crate::model::{JointValue, Policy, QTable, SnsMdp, SnsMrp, ValueVector, PROB_TOL};

/// Sup-norm bound on `v - (r_bar + gamma P_bar v)` below which a linear
/// solve is accepted, relative to `max(1, ||v||_inf)`.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Tie tolerance used by [`greedy_policy`].
pub const GREEDY_TIE_TOL: f64 = 1e-12;

fn check_dims(what: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {}x{}",
            got.0, got.1, want.0, want.1
        )));
    }
    Ok(())
}

/// Reward process induced by `policy`:
/// `P_e^mu(s, s') = sum_a p_e(s'|s, a) mu(a|s)` and
/// `R^mu(s, e) = sum_a r_e(s, a) mu(a|s)`.
pub fn induce_mrp(model: &SnsMdp, policy: &Policy) -> Result<SnsMrp> {
    let (ns, na, ne) = (model.n_states, model.n_actions, model.n_envs());
    check_dims("policy", policy.mu.shape(), (ns, na))?;
    let mut p = Vec::with_capacity(ne);
    let mut r = DMatrix::zeros(ns, ne);
    for e in 0..ne {
        let mut pe = DMatrix::zeros(ns, ns);
        for s in 0..ns {
            for a in 0..na {
                let w = policy.mu[(s, a)];
                if w == 0.0 {
                    continue;
                }
                for s2 in 0..ns {
                    pe[(s, s2)] += w * model.trans[e][a][(s, s2)];
                }
                r[(s, e)] += w * model.rewards[e][(s, a)];
            }
        }
        p.push(pe);
    }
    Ok(SnsMrp {
        n_states: ns,
        p,
        r,
        gamma: model.gamma,
        env: model.env.clone(),
    })
}

/// Dynamics and rewards averaged over the environment distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedDynamics {
    /// `sum_e pi(e) P_e^mu`
    pub p_bar: DMatrix<f64>,
    /// `R^mu pi`
    pub r_bar: DVector<f64>,
    /// `sum_e pi(e) r_e(s, a)`
    pub r_bar_sa: DMatrix<f64>,
    /// `p_bar_sa[a][(s, s')] = sum_e pi(e) p_e(s'|s, a)`
    pub p_bar_sa: Vec<DMatrix<f64>>,
}

impl AveragedDynamics {
    pub fn n_states(&self) -> usize {
        self.r_bar_sa.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.r_bar_sa.ncols()
    }
}

/// Averages the model over `pi_env`, which must be the stationary
/// distribution of `model.env`.
pub fn averaged_dynamics(
    model: &SnsMdp,
    policy: &Policy,
    pi_env: &Distribution,
) -> Result<AveragedDynamics> {
    let (ns, na, ne) = (model.n_states, model.n_actions, model.n_envs());
    check_dims("policy", policy.mu.shape(), (ns, na))?;
    if pi_env.len() != ne {
        return Err(Error::Dimension(format!(
            "environment distribution has {} entries, expected {ne}",
            pi_env.len()
        )));
    }
    let mut p_bar_sa = vec![DMatrix::zeros(ns, ns); na];
    let mut r_bar_sa = DMatrix::zeros(ns, na);
    for e in 0..ne {
        let w = pi_env[e];
        for (a, acc) in p_bar_sa.iter_mut().enumerate() {
            *acc += &model.trans[e][a] * w;
        }
        r_bar_sa += &model.rewards[e] * w;
    }
    let mut p_bar = DMatrix::zeros(ns, ns);
    let mut r_bar = DVector::zeros(ns);
    for s in 0..ns {
        for a in 0..na {
            let w = policy.mu[(s, a)];
            if w == 0.0 {
                continue;
            }
            for s2 in 0..ns {
                p_bar[(s, s2)] += w * p_bar_sa[a][(s, s2)];
            }
            r_bar[s] += w * r_bar_sa[(s, a)];
        }
    }
    Ok(AveragedDynamics {
        p_bar,
        r_bar,
        r_bar_sa,
        p_bar_sa,
    })
}

/// Assumption 1: the environment chain and every `P_e` are irreducible and aperiodic.
pub fn check_mrp_assumption(mrp: &SnsMrp) -> Result<()> {
    if !check_irreducible_aperiodic(&mrp.env.q) {
        return Err(Error::Assumption("environment chain".into()));
    }
    for (e, pe) in mrp.p.iter().enumerate() {
        if !check_irreducible_aperiodic(pe) {
            return Err(Error::Assumption(format!("state chain of environment {e}")));
        }
    }
    Ok(())
}

/// Per-`(e, a)` version of the assumption check, used before policy iteration.
pub fn check_mdp_assumption(model: &SnsMdp) -> Result<()> {
    if !check_irreducible_aperiodic(&model.env.q) {
        return Err(Error::Assumption("environment chain".into()));
    }
    for (e, per_action) in model.trans.iter().enumerate() {
        for (a, m) in per_action.iter().enumerate() {
            if !check_irreducible_aperiodic(m) {
                return Err(Error::Assumption(format!(
                    "state chain of environment {e} under action {a}"
                )));
            }
        }
    }
    Ok(())
}

/// `sum_e pi(e) P_e` and `R pi` for a reward process.
pub fn mrp_averages(mrp: &SnsMrp, pi_env: &Distribution) -> (DMatrix<f64>, DVector<f64>) {
    let ns = mrp.n_states;
    let mut p_bar = DMatrix::zeros(ns, ns);
    for (e, pe) in mrp.p.iter().enumerate() {
        p_bar += pe * pi_env[e];
    }
    let r_bar = &mrp.r * &pi_env.p;
    (p_bar, r_bar)
}

/// Solves `v = r + gamma P v` for a row-stochastic `P`.
pub fn solve_discounted(p: &DMatrix<f64>, r: &DVector<f64>, gamma: f64) -> Result<ValueVector> {
    let n = r.len();
    let a = DMatrix::identity(n, n) - p * gamma;
    let v = linalg::solve(&a, r)?;
    let residual = (&v - (r + p * &v * gamma)).amax();
    if !(residual < FIXED_POINT_TOL * v.amax().max(1.0)) {
        return Err(Error::Numerical(format!(
            "fixed-point residual {residual:e} after linear solve"
        )));
    }
    Ok(ValueVector(v))
}

/// Closed-form SNS value `(I - gamma sum_e pi(e) P_e)^{-1} R pi`, where `pi`
/// is the stationary distribution of the environment chain.
///
/// Requires every `P_e` and the environment chain to be irreducible and
/// aperiodic.
pub fn sns_value_closed_form(mrp: &SnsMrp) -> Result<ValueVector> {
    mrp.validate().into_result()?;
    check_mrp_assumption(mrp)?;
    let pi_env = stationary_distribution(&mrp.env.q)?;
    sns_value_with(mrp, &pi_env)
}

/// [`sns_value_closed_form`] with a precomputed environment distribution and
/// no assumption check.
pub fn sns_value_with(mrp: &SnsMrp, pi_env: &Distribution) -> Result<ValueVector> {
    let (p_bar, r_bar) = mrp_averages(mrp, pi_env);
    solve_discounted(&p_bar, &r_bar, mrp.gamma)
}

/// Value of the fully observed joint chain on `(s, e)`:
/// `v(s, e) = R(s, e) + gamma sum_{s', e'} p_e(s'|s) q(e'|e) v(s', e')`,
/// solved directly as one `|S||E|`-dimensional linear system.
pub fn joint_value_oracle(mrp: &SnsMrp) -> Result<JointValue> {
    mrp.validate().into_result()?;
    let (ns, ne) = (mrp.n_states, mrp.n_envs());
    let n = ns * ne;
    let idx = |s: usize, e: usize| s * ne + e;
    let mut h = DMatrix::zeros(n, n);
    for s in 0..ns {
        for e in 0..ne {
            for s2 in 0..ns {
                let ps = mrp.p[e][(s, s2)];
                if ps == 0.0 {
                    continue;
                }
                for e2 in 0..ne {
                    h[(idx(s, e), idx(s2, e2))] = ps * mrp.env.q[(e, e2)];
                }
            }
        }
    }
    let r = DVector::from_fn(n, |k, _| mrp.r[(k / ne, k % ne)]);
    let v = solve_discounted(&h, &r, mrp.gamma)?;
    Ok(JointValue(DMatrix::from_fn(ns, ne, |s, e| v[idx(s, e)])))
}

/// `Q(s, a) = r_bar(s, a) + gamma sum_{s'} p_bar(s'|s, a) v(s')`.
pub fn sns_q_from_value(avg: &AveragedDynamics, v: &ValueVector, gamma: f64) -> Result<QTable> {
    let (ns, na) = (avg.n_states(), avg.n_actions());
    if v.len() != ns {
        return Err(Error::Dimension(format!(
            "value vector has {} entries, expected {ns}",
            v.len()
        )));
    }
    let mut q = avg.r_bar_sa.clone();
    for a in 0..na {
        let next = &avg.p_bar_sa[a] * &v.0;
        for s in 0..ns {
            q[(s, a)] += gamma * next[s];
        }
    }
    Ok(QTable(q))
}

/// Deterministic greedy policy. A state keeps the incumbent's action when
/// it is within 1e-12 of the row maximum, otherwise takes the lowest-index
/// maximizer.
pub fn greedy_policy(q: &QTable, incumbent: Option<&Policy>) -> Policy {
    let (ns, na) = (q.n_states(), q.n_actions());
    let mut mu = DMatrix::zeros(ns, na);
    for s in 0..ns {
        let best = q.row_max(s);
        let kept = incumbent
            .and_then(|p| p.action(s))
            .filter(|&a| a < na && q[(s, a)] >= best - GREEDY_TIE_TOL);
        let a = kept.unwrap_or_else(|| {
            (0..na)
                .find(|&a| q[(s, a)] >= best - GREEDY_TIE_TOL)
                .unwrap_or(0)
        });
        mu[(s, a)] = 1.0;
    }
    Policy { mu }
}

/// Result of [`policy_iteration`].
#[derive(Debug, Clone)]
pub struct PolicyIterationResult {
    pub policy: Policy,
    pub value: ValueVector,
    /// `v^{SNS, mu^n}` for every evaluated policy, starting with `mu^0`.
    pub trace: Vec<ValueVector>,
    /// Number of improvement steps taken, including the final one that
    /// left the policy unchanged.
    pub iterations: usize,
    /// `||v - max_a [r_bar(., a) + gamma p_bar(.|., a) v]||_inf`
    pub bellman_residual: f64,
}

/// Upper bound on the number of deterministic policies, saturating.
pub fn policy_count_bound(n_states: usize, n_actions: usize) -> usize {
    let mut bound = 1usize;
    for _ in 0..n_states {
        bound = bound.saturating_mul(n_actions);
    }
    bound
}

/// Bellman-optimality residual of `v` under averaged action dynamics.
pub fn bellman_residual(avg: &AveragedDynamics, v: &ValueVector, gamma: f64) -> Result<f64> {
    let q = sns_q_from_value(avg, v, gamma)?;
    Ok(q.greedy_values().sup_dist(v))
}

/// Policy iteration on the environment-averaged model.
///
/// Starts from the all-action-0 policy; each sweep evaluates the current
/// policy in closed form and improves greedily with incumbent-preserving tie
/// breaking. Stops when the policy no longer changes, or errors after
/// `|A|^|S|` sweeps.
pub fn policy_iteration(model: &SnsMdp) -> Result<PolicyIterationResult> {
    check_mdp_assumption(model)?;
    policy_iteration_unchecked(model)
}

/// [`policy_iteration`] without the irreducibility/aperiodicity check. The
/// averaged linear systems stay nonsingular for any `gamma < 1`, so this is
/// usable on models whose chains have absorbing states.
pub fn policy_iteration_unchecked(model: &SnsMdp) -> Result<PolicyIterationResult> {
    let pi_env = stationary_distribution(&model.env.q)?;
    let (ns, na) = (model.n_states, model.n_actions);
    let limit = policy_count_bound(ns, na);
    let mut policy = Policy::constant(ns, na, 0)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let avg = averaged_dynamics(model, &policy, &pi_env)?;
        let value = solve_discounted(&avg.p_bar, &avg.r_bar, model.gamma)?;
        trace.push(value.clone());
        let q = sns_q_from_value(&avg, &value, model.gamma)?;
        let improved = greedy_policy(&q, Some(&policy));
        iterations += 1;
        if improved == policy {
            let bellman_residual = q.greedy_values().sup_dist(&value);
            return Ok(PolicyIterationResult {
                policy,
                value,
                trace,
                iterations,
                bellman_residual,
            });
        }
        if iterations >= limit {
            return Err(Error::NoConvergence {
                iterations,
                residual: q.greedy_values().sup_dist(&value),
            });
        }
        policy = improved;
    }
}

/// One application of the SNS Bellman optimality operator,
/// `(TQ)(s, a) = r_bar(s, a) + gamma sum_{s'} p_bar(s'|s, a) max_{a'} Q(s', a')`.
pub fn apply_optimality_operator(avg: &AveragedDynamics, q: &QTable, gamma: f64) -> QTable {
    let v = q.greedy_values();
    sns_q_from_value(avg, &v, gamma).expect("Q-table and dynamics dimensions agree")
}

/// Default sup-norm accuracy for [`optimal_q_value_iteration`].
pub const VALUE_ITERATION_TOL: f64 = 1e-12;
pub const VALUE_ITERATION_MAX_ITERS: usize = 1_000_000;

/// Iterates the optimality operator from the zero table.
///
/// Stops once the successive change is below `tol (1 - gamma) / gamma`,
/// which bounds the distance to the fixed point by `tol`. The threshold is
/// floored at a few ulps of `||Q||_inf`, below which the iteration can only
/// shuffle round-off.
pub fn optimal_q_value_iteration(model: &SnsMdp, tol: f64, max_iters: usize) -> Result<QTable> {
    if !(tol > 0.0) {
        return Err(Error::Numerical(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let pi_env = stationary_distribution(&model.env.q)?;
    let uniform = Policy::uniform(model.n_states, model.n_actions);
    let avg = averaged_dynamics(model, &uniform, &pi_env)?;
    let gamma = model.gamma;
    let mut q = QTable::zeros(model.n_states, model.n_actions);
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        let next = apply_optimality_operator(&avg, &q, gamma);
        change = next.sup_dist(&q);
        q = next;
        if gamma == 0.0 {
            return Ok(q);
        }
        let floor = 8.0 * f64::EPSILON * q.sup_norm();
        if change < (tol * (1.0 - gamma) / gamma).max(floor) {
            return Ok(q);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        residual: change,
    })
}

/// Checks that every row of `m` sums to one within [`PROB_TOL`].
pub fn is_row_stochastic(m: &DMatrix<f64>) -> bool {
    m.row_iter()
        .all(|r| r.iter().all(|&x| x >= 0.0) && (r.sum() - 1.0).abs() <= PROB_TOL)
}
