//! Seeded simulator producing the observable trajectory `(S_k, A_k, R_k)`
//! while evolving the hidden environment `E_k`.
//!
//! Reproducibility contract:
//! * generator: xoshiro256++ seeded from a `u64` through SplitMix64
//!   (`Xoshiro256PlusPlus::seed_from_u64`);
//! * uniforms: `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! * discrete draws: inverse CDF over the row, cumulative sums taken left to
//!   right, the last positive-probability entry absorbing round-off;
//! * draw order per step: action (in [`Simulator::rollout`] only), next
//!   state, next environment.

use std::io::Write;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::markov::stationary_distribution;
use crate::model::{Policy, SnsMdp};

/// Identifier recorded in run manifests.
pub const GENERATOR_ID: &str = "xoshiro256++/splitmix64-seeded/u53-uniform";

/// Seeded uniform source shared by the simulator and learners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRng(Xoshiro256PlusPlus);

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from `weights` by inverse CDF with one uniform.
    pub fn categorical<'a>(&mut self, weights: impl IntoIterator<Item = &'a f64>) -> usize {
        let u = self.uniform();
        sample_index(weights, u)
    }
}

/// Inverse-CDF lookup: first index whose running sum exceeds `u`. If
/// round-off leaves `u` past the total, the last index with positive weight
/// is returned.
pub fn sample_index<'a>(weights: impl IntoIterator<Item = &'a f64>, u: f64) -> usize {
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            cum += w;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

/// How the initial environment is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialEnv {
    /// Drawn from the stationary distribution of the environment chain,
    /// consuming the first uniform.
    #[default]
    Stationary,
    Fixed(usize),
}

/// What a learner is allowed to see of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub k: u64,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

/// One simulated step, including the hidden environment that generated it.
/// Learners only ever receive [`TransitionSample::observed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSample {
    obs: Observation,
    e_hidden: usize,
}

impl TransitionSample {
    pub fn observed(&self) -> Observation {
        self.obs
    }

    /// Diagnostics only.
    pub fn hidden_env(&self) -> usize {
        self.e_hidden
    }
}

/// Owns the current `(s, e, k)` and the generator.
#[derive(Debug, Clone)]
pub struct Simulator<'m> {
    model: &'m SnsMdp,
    s: usize,
    e: usize,
    k: u64,
    rng: SimRng,
}

impl<'m> Simulator<'m> {
    pub fn new(model: &'m SnsMdp, s0: usize, e0: InitialEnv, seed: u64) -> Result<Self> {
        if s0 >= model.n_states {
            return Err(Error::OutOfRange {
                what: "initial state",
                index: s0,
                limit: model.n_states,
            });
        }
        let mut rng = SimRng::new(seed);
        let e = match e0 {
            InitialEnv::Fixed(e) if e >= model.n_envs() => {
                return Err(Error::OutOfRange {
                    what: "initial environment",
                    index: e,
                    limit: model.n_envs(),
                })
            }
            InitialEnv::Fixed(e) => e,
            InitialEnv::Stationary => {
                let pi = stationary_distribution(&model.env.q)?;
                rng.categorical(pi.as_slice())
            }
        };
        Ok(Simulator {
            model,
            s: s0,
            e,
            k: 0,
            rng,
        })
    }

    pub fn model(&self) -> &'m SnsMdp {
        self.model
    }

    pub fn state(&self) -> usize {
        self.s
    }

    pub fn hidden_env(&self) -> usize {
        self.e
    }

    pub fn steps_taken(&self) -> u64 {
        self.k
    }

    /// Applies action `a`: reward `r_e(s, a)`, then `s' ~ p_e(.|s, a)`, then
    /// `e' ~ q(.|e)`.
    pub fn step(&mut self, a: usize) -> Result<TransitionSample> {
        if a >= self.model.n_actions {
            return Err(Error::OutOfRange {
                what: "action",
                index: a,
                limit: self.model.n_actions,
            });
        }
        Ok(self.step_unchecked(a))
    }

    fn step_unchecked(&mut self, a: usize) -> TransitionSample {
        let (s, e, k) = (self.s, self.e, self.k);
        let r = self.model.r(e, s, a);
        let s_next = self.rng.categorical(self.model.trans[e][a].row(s).iter());
        let e_next = self.rng.categorical(self.model.env.q.row(e).iter());
        self.s = s_next;
        self.e = e_next;
        self.k += 1;
        TransitionSample {
            obs: Observation { k, s, a, r, s_next },
            e_hidden: e,
        }
    }

    /// Draws `A_k ~ mu(.|S_k)` from the same generator, then steps.
    pub fn step_with(&mut self, policy: &Policy) -> TransitionSample {
        let a = self.rng.categorical(policy.mu.row(self.s).iter());
        self.step_unchecked(a)
    }

    pub fn rollout(&mut self, policy: &Policy, n_steps: usize) -> Result<Vec<TransitionSample>> {
        if policy.mu.shape() != (self.model.n_states, self.model.n_actions) {
            return Err(Error::Dimension(format!(
                "policy is {}x{}, model has {} states and {} actions",
                policy.mu.nrows(),
                policy.mu.ncols(),
                self.model.n_states,
                self.model.n_actions
            )));
        }
        Ok((0..n_steps).map(|_| self.step_with(policy)).collect())
    }
}

/// Writes `k,s,a,r,s_next,e_hidden` rows with a header.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    samples: &[TransitionSample],
) -> std::io::Result<()> {
    writeln!(out, "k,s,a,r,s_next,e_hidden")?;
    for t in samples {
        let o = t.obs;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            o.k, o.s, o.a, o.r, o.s_next, t.e_hidden
        )?;
    }
    Ok(())
}
