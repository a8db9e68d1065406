//! Tabular TD(0) policy evaluation and Q-learning driven by the simulator.
//!
//! Learners see [`Observation`]s only; the hidden environment never reaches
//! the update rules.

use crate::error::{Error, Result};
use crate::model::{Policy, QTable, SnsMdp, ValueVector};
use crate::sim::{InitialEnv, Observation, Simulator};

/// Step-size schedule `alpha_n`, where `n` counts earlier updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `alpha_n = min(1, c / (n + t0))`: the sum diverges while the sum of
    /// squares converges.
    RobbinsMonro { c: f64, t0: f64 },
    /// Fixed step in `(0, 1]`. Does not satisfy the Robbins-Monro
    /// conditions; iterates settle into a noise ball around the limit.
    Constant { alpha: f64 },
}

impl StepSchedule {
    pub fn alpha(&self, n: u64) -> f64 {
        match *self {
            StepSchedule::RobbinsMonro { c, t0 } => (c / (n as f64 + t0)).min(1.0),
            StepSchedule::Constant { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::RobbinsMonro { c, t0 } => {
                c > 0.0 && t0 > 0.0 && c.is_finite() && t0.is_finite()
            }
            StepSchedule::Constant { alpha } => alpha > 0.0 && alpha <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Numerical(format!("invalid step schedule {self:?}")))
        }
    }
}

/// Which counter indexes the step-size schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepClock {
    /// Number of earlier updates of the entry being updated (per state for
    /// TD, per state-action pair for Q-learning).
    #[default]
    PerEntry,
    /// The global step counter `k`.
    Global,
}

/// Shared settings for [`td_evaluate`] and [`q_learn`].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub schedule: StepSchedule,
    pub clock: StepClock,
    pub n_steps: u64,
    pub seed: u64,
    pub s0: usize,
    pub e0: InitialEnv,
    /// Overrides the model's discount for the update rule.
    pub gamma: Option<f64>,
}

impl LearnerConfig {
    pub fn new(schedule: StepSchedule, n_steps: u64, seed: u64) -> Self {
        LearnerConfig {
            schedule,
            clock: StepClock::PerEntry,
            n_steps,
            seed,
            s0: 0,
            e0: InitialEnv::Stationary,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    /// Number of updates applied so far.
    pub k: u64,
    pub err_sup: f64,
    pub err_l2: f64,
}

/// Error checkpoints at `k = 0, 1, 2, 4, ...` plus the final step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnerTrace {
    pub checkpoints: Vec<Checkpoint>,
    /// Largest `|entry|` seen in any iterate.
    pub max_abs: f64,
}

fn is_checkpoint(k: u64, n_steps: u64) -> bool {
    k == 0 || k.is_power_of_two() || k == n_steps
}

/// `v(s) += alpha (r + gamma v(s') - v(s))` at the observed state only.
pub fn td_step(v: &mut ValueVector, obs: &Observation, alpha: f64, gamma: f64) {
    let td_error = obs.r + gamma * v.0[obs.s_next] - v.0[obs.s];
    v.0[obs.s] += alpha * td_error;
}

/// `Q(s, a) = (1 - alpha) Q(s, a) + alpha (r + gamma max_a' Q(s', a'))` at
/// the observed pair only.
pub fn q_step(q: &mut QTable, obs: &Observation, alpha: f64, gamma: f64) {
    let target = obs.r + gamma * q.row_max(obs.s_next);
    let cur = q.0[(obs.s, obs.a)];
    q.0[(obs.s, obs.a)] = (1.0 - alpha) * cur + alpha * target;
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "discount must be in [0,1), got {gamma}"
        )))
    }
}

/// TD(0) evaluation of `policy` from `v_0 = 0`.
///
/// When `reference` is given, the trace records sup-norm and Euclidean
/// distances to it at geometric checkpoints.
pub fn td_evaluate(
    model: &SnsMdp,
    policy: &Policy,
    cfg: &LearnerConfig,
    reference: Option<&ValueVector>,
) -> Result<(ValueVector, LearnerTrace)> {
    cfg.schedule.validate()?;
    let gamma = cfg.gamma.unwrap_or(model.gamma);
    check_gamma(gamma)?;
    if policy.mu.shape() != (model.n_states, model.n_actions) {
        return Err(Error::Dimension("policy does not match model".into()));
    }
    if let Some(r) = reference {
        if r.len() != model.n_states {
            return Err(Error::Dimension("reference value has wrong length".into()));
        }
    }
    let mut sim = Simulator::new(model, cfg.s0, cfg.e0, cfg.seed)?;
    let mut v = ValueVector::zeros(model.n_states);
    let mut visits = vec![0u64; model.n_states];
    let mut trace = LearnerTrace::default();
    let record = |v: &ValueVector, k: u64, trace: &mut LearnerTrace| {
        if let Some(r) = reference {
            trace.checkpoints.push(Checkpoint {
                k,
                err_sup: v.sup_dist(r),
                err_l2: v.l2_dist(r),
            });
        }
    };
    record(&v, 0, &mut trace);
    for k in 1..=cfg.n_steps {
        let obs = sim.step_with(policy).observed();
        let n = match cfg.clock {
            StepClock::PerEntry => visits[obs.s],
            StepClock::Global => k - 1,
        };
        visits[obs.s] += 1;
        td_step(&mut v, &obs, cfg.schedule.alpha(n), gamma);
        trace.max_abs = trace.max_abs.max(v.0[obs.s].abs());
        if is_checkpoint(k, cfg.n_steps) {
            record(&v, k, &mut trace);
        }
    }
    Ok((v, trace))
}

/// Q-learning from `Q_0 = 0` along a trajectory generated by `behavior`.
///
/// The behavior policy must give every action positive probability in every
/// state.
pub fn q_learn(
    model: &SnsMdp,
    behavior: &Policy,
    cfg: &LearnerConfig,
    reference: Option<&QTable>,
) -> Result<(QTable, LearnerTrace)> {
    cfg.schedule.validate()?;
    let gamma = cfg.gamma.unwrap_or(model.gamma);
    check_gamma(gamma)?;
    let (ns, na) = (model.n_states, model.n_actions);
    if behavior.mu.shape() != (ns, na) {
        return Err(Error::Dimension(
            "behavior policy does not match model".into(),
        ));
    }
    for s in 0..ns {
        for a in 0..na {
            if !(behavior.mu[(s, a)] > 0.0) {
                return Err(Error::Exploration {
                    state: s,
                    action: a,
                });
            }
        }
    }
    if let Some(r) = reference {
        if r.0.shape() != (ns, na) {
            return Err(Error::Dimension("reference Q-table has wrong shape".into()));
        }
    }
    let mut sim = Simulator::new(model, cfg.s0, cfg.e0, cfg.seed)?;
    let mut q = QTable::zeros(ns, na);
    let mut visits = vec![0u64; ns * na];
    let mut trace = LearnerTrace::default();
    let record = |q: &QTable, k: u64, trace: &mut LearnerTrace| {
        if let Some(r) = reference {
            trace.checkpoints.push(Checkpoint {
                k,
                err_sup: q.sup_dist(r),
                err_l2: q.l2_dist(r),
            });
        }
    };
    record(&q, 0, &mut trace);
    for k in 1..=cfg.n_steps {
        let obs = sim.step_with(behavior).observed();
        let slot = obs.s * na + obs.a;
        let n = match cfg.clock {
            StepClock::PerEntry => visits[slot],
            StepClock::Global => k - 1,
        };
        visits[slot] += 1;
        q_step(&mut q, &obs, cfg.schedule.alpha(n), gamma);
        trace.max_abs = trace.max_abs.max(q.0[(obs.s, obs.a)].abs());
        if is_checkpoint(k, cfg.n_steps) {
            record(&q, k, &mut trace);
        }
    }
    Ok((q, trace))
}
