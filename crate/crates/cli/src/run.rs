//! Reproducible experiment runs.
//!
//! A [`RunSpec`] holds everything that determines a run's output files. It
//! is stored (with bookkeeping) as `manifest.json`, and [`execute`] on the
//! same spec reproduces every CSV byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sns_mdp::learners::LearnerTrace;
use sns_mdp::markov::{stationary_distribution, stationary_residual};
use sns_mdp::nalgebra::DMatrix;
use sns_mdp::sim::write_trajectory_csv;
use sns_mdp::solvers::{
    check_mdp_assumption, check_mrp_assumption, sns_value_with, VALUE_ITERATION_MAX_ITERS,
    VALUE_ITERATION_TOL,
};
use sns_mdp::{
    build_wireless_mdp, check_irreducible_aperiodic, default_wireless_config, induce_mrp,
    load_model, optimal_q_value_iteration, policy_iteration_unchecked, q_learn, td_evaluate,
    InitialEnv, LearnerConfig, Policy, QTable, Simulator, SnsMdp, StepClock, StepSchedule,
    ValueVector, GENERATOR_ID,
};

use crate::error::{CliError, Result};

/// Tolerance for `max_a Q* = v*` before a `solve` run writes anything.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Wireless,
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Constant { alpha: f64 },
    RobbinsMonro { c: f64, t0: f64 },
}

impl From<ScheduleSpec> for StepSchedule {
    fn from(s: ScheduleSpec) -> Self {
        match s {
            ScheduleSpec::Constant { alpha } => StepSchedule::Constant { alpha },
            ScheduleSpec::RobbinsMonro { c, t0 } => StepSchedule::RobbinsMonro { c, t0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockSpec {
    #[default]
    PerEntry,
    Global,
}

impl From<ClockSpec> for StepClock {
    fn from(c: ClockSpec) -> Self {
        match c {
            ClockSpec::PerEntry => StepClock::PerEntry,
            ClockSpec::Global => StepClock::Global,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    Action0,
    Uniform,
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Evaluate,
    Qlearn,
    Solve,
    Simulate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub command: Command,
    pub model: ModelSource,
    /// Replaces the model's discount when set.
    pub gamma: Option<f64>,
    pub seeds: Vec<u64>,
    pub n_steps: u64,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub clock: ClockSpec,
    pub policy: PolicySpec,
    #[serde(default)]
    pub s0: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub spec: RunSpec,
    pub resolved_gamma: f64,
    pub generator: String,
    pub outputs: Vec<String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; the only time-dependent field.
    pub created_unix: u64,
}

/// Named output files of a run, in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
    pub resolved_gamma: f64,
}

impl Artifacts {
    fn push(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_str())
    }
}

pub fn load_source(source: &ModelSource, gamma: Option<f64>) -> Result<SnsMdp> {
    let mut model = match source {
        ModelSource::Wireless => build_wireless_mdp(&default_wireless_config())?,
        ModelSource::Path(p) => load_model(p)?,
    };
    if let Some(g) = gamma {
        if !(0.0..1.0).contains(&g) {
            return Err(CliError::Usage(format!(
                "--gamma must be in [0,1), got {g}"
            )));
        }
        model.gamma = g;
    }
    Ok(model)
}

pub fn resolve_policy(spec: &PolicySpec, model: &SnsMdp) -> Result<Policy> {
    let (ns, na) = (model.n_states, model.n_actions);
    match spec {
        PolicySpec::Action0 => Ok(Policy::constant(ns, na, 0)?),
        PolicySpec::Uniform => Ok(Policy::uniform(ns, na)),
        PolicySpec::Path(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
            let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
            if rows.len() != ns || rows.iter().any(|r| r.len() != na) {
                return Err(CliError::Usage(format!(
                    "policy file must be a {ns}x{na} nested array"
                )));
            }
            let mu = nalgebra_from_rows(&rows);
            Ok(Policy::new(mu)?)
        }
    }
}

fn nalgebra_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn trace_csv(trace: &LearnerTrace) -> String {
    let mut out = String::from("k,err_sup,err_l2\n");
    for c in &trace.checkpoints {
        let _ = writeln!(out, "{},{},{}", c.k, c.err_sup, c.err_l2);
    }
    out
}

/// Checkpoint-wise mean over runs that share one checkpoint schedule.
pub fn mean_trace(traces: &[LearnerTrace]) -> LearnerTrace {
    let Some(first) = traces.first() else {
        return LearnerTrace::default();
    };
    let n = traces.len() as f64;
    let checkpoints = first
        .checkpoints
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (sup, l2) = traces.iter().fold((0.0, 0.0), |(a, b), t| {
                (a + t.checkpoints[i].err_sup, b + t.checkpoints[i].err_l2)
            });
            sns_mdp::Checkpoint {
                k: c.k,
                err_sup: sup / n,
                err_l2: l2 / n,
            }
        })
        .collect();
    LearnerTrace {
        checkpoints,
        max_abs: traces.iter().fold(0.0, |m, t| m.max(t.max_abs)),
    }
}

fn learner_config(spec: &RunSpec, seed: u64) -> LearnerConfig {
    let mut cfg = LearnerConfig::new(spec.schedule.into(), spec.n_steps, seed);
    cfg.clock = spec.clock.into();
    cfg.s0 = spec.s0;
    cfg.e0 = InitialEnv::Stationary;
    cfg
}

fn require_seeds(spec: &RunSpec) -> Result<()> {
    if spec.seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    Ok(())
}

fn push_traces(art: &mut Artifacts, seeds: &[u64], traces: &[LearnerTrace]) -> LearnerTrace {
    for (seed, trace) in seeds.iter().zip(traces) {
        art.push(format!("trace_seed{seed}.csv"), trace_csv(trace));
    }
    let mean = mean_trace(traces);
    art.push("trace_mean.csv", trace_csv(&mean));
    mean
}

fn first_last(trace: &LearnerTrace) -> (f64, f64, f64, f64) {
    let first = trace.checkpoints.first();
    let last = trace.checkpoints.last();
    (
        first.map_or(f64::NAN, |c| c.err_sup),
        last.map_or(f64::NAN, |c| c.err_sup),
        first.map_or(f64::NAN, |c| c.err_l2),
        last.map_or(f64::NAN, |c| c.err_l2),
    )
}

/// TD(0) per seed against the closed-form SNS value of the chosen policy.
pub fn run_evaluate(spec: &RunSpec) -> Result<Artifacts> {
    require_seeds(spec)?;
    let model = load_source(&spec.model, spec.gamma)?;
    let policy = resolve_policy(&spec.policy, &model)?;
    let mrp = induce_mrp(&model, &policy)?;
    let assumption_ok = check_mrp_assumption(&mrp).is_ok();
    if !assumption_ok {
        eprintln!("warning: induced chains are not all irreducible and aperiodic");
    }
    let pi_env = stationary_distribution(&model.env.q)?;
    let reference = sns_value_with(&mrp, &pi_env)?;

    let runs = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            td_evaluate(
                &model,
                &policy,
                &learner_config(spec, seed),
                Some(&reference),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (estimates, traces): (Vec<ValueVector>, Vec<LearnerTrace>) = runs.into_iter().unzip();

    let mut art = Artifacts {
        resolved_gamma: model.gamma,
        ..Default::default()
    };
    let mean = push_traces(&mut art, &spec.seeds, &traces);
    let (init_sup, final_sup, init_l2, final_l2) = first_last(&mean);
    let per_seed: Vec<_> = spec
        .seeds
        .iter()
        .zip(&estimates)
        .zip(&traces)
        .map(|((seed, est), tr)| {
            let last = tr.checkpoints.last();
            json!({
                "seed": seed,
                "final_err_sup": last.map(|c| c.err_sup),
                "final_err_l2": last.map(|c| c.err_l2),
                "estimate": est.as_slice(),
            })
        })
        .collect();
    let summary = json!({
        "command": "evaluate",
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "n_envs": model.n_envs(),
        "gamma": model.gamma,
        "assumption_ok": assumption_ok,
        "pi_env": pi_env.as_slice(),
        "reference": reference.as_slice(),
        "reference_sup_norm": reference.sup_norm(),
        "initial_mean_err_sup": init_sup,
        "final_mean_err_sup": final_sup,
        "initial_mean_err_l2": init_l2,
        "final_mean_err_l2": final_l2,
        "runs": per_seed,
    });
    art.push(
        "summary.json",
        serde_json::to_string_pretty(&summary)? + "\n",
    );
    Ok(art)
}

/// Q-learning per seed with a uniform behavior policy, measured against Q*.
pub fn run_qlearn(spec: &RunSpec) -> Result<Artifacts> {
    require_seeds(spec)?;
    let model = load_source(&spec.model, spec.gamma)?;
    let q_star = optimal_q_value_iteration(&model, VALUE_ITERATION_TOL, VALUE_ITERATION_MAX_ITERS)?;
    let behavior = Policy::uniform(model.n_states, model.n_actions);
    let runs = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            q_learn(
                &model,
                &behavior,
                &learner_config(spec, seed),
                Some(&q_star),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (estimates, traces): (Vec<QTable>, Vec<LearnerTrace>) = runs.into_iter().unzip();

    let mut art = Artifacts {
        resolved_gamma: model.gamma,
        ..Default::default()
    };
    let mean = push_traces(&mut art, &spec.seeds, &traces);
    let (init_sup, final_sup, init_l2, final_l2) = first_last(&mean);
    let max_l2 = mean
        .checkpoints
        .iter()
        .fold(0.0_f64, |m, c| m.max(c.err_l2));
    let bound = model.max_abs_reward() / (1.0 - model.gamma);
    let per_seed: Vec<_> = spec
        .seeds
        .iter()
        .zip(&estimates)
        .zip(&traces)
        .map(|((seed, est), tr)| {
            let last = tr.checkpoints.last();
            json!({
                "seed": seed,
                "final_err_sup": last.map(|c| c.err_sup),
                "final_err_l2": last.map(|c| c.err_l2),
                "max_abs_iterate": tr.max_abs,
                "estimate": rows_of(&est.0),
            })
        })
        .collect();
    let summary = json!({
        "command": "qlearn",
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "n_envs": model.n_envs(),
        "gamma": model.gamma,
        "q_star": rows_of(&q_star.0),
        "q_star_sup_norm": q_star.sup_norm(),
        "iterate_bound": bound,
        "max_abs_iterate": mean.max_abs,
        "initial_mean_err_sup": init_sup,
        "final_mean_err_sup": final_sup,
        "initial_mean_err_l2": init_l2,
        "final_mean_err_l2": final_l2,
        "max_mean_err_l2": max_l2,
        "runs": per_seed,
    });
    art.push(
        "summary.json",
        serde_json::to_string_pretty(&summary)? + "\n",
    );
    Ok(art)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Policy iteration plus value iteration, cross-checked before writing.
pub fn run_solve(spec: &RunSpec) -> Result<Artifacts> {
    let model = load_source(&spec.model, spec.gamma)?;
    // The built-in wireless tables contain P_success = 1 entries, so the
    // per-(e, a) check can fail on a model the solvers still handle.
    let assumption = check_mdp_assumption(&model);
    if let Err(e) = &assumption {
        eprintln!("warning: {e}; solving anyway");
    }
    let pi_result = policy_iteration_unchecked(&model)?;
    let q_star = optimal_q_value_iteration(&model, VALUE_ITERATION_TOL, VALUE_ITERATION_MAX_ITERS)?;
    let gap = q_star.greedy_values().sup_dist(&pi_result.value);
    if !(gap < CROSS_CHECK_TOL) {
        return Err(CliError::CrossCheck(format!(
            "max_a Q* differs from policy-iteration value by {gap:e}"
        )));
    }
    let actions = pi_result
        .policy
        .actions()
        .expect("policy iteration returns a deterministic policy");
    let trace: Vec<&[f64]> = pi_result.trace.iter().map(|v| v.as_slice()).collect();
    let summary = json!({
        "command": "solve",
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "n_envs": model.n_envs(),
        "gamma": model.gamma,
        "policy": actions,
        "value": pi_result.value.as_slice(),
        "q_star": rows_of(&q_star.0),
        "iterations": pi_result.iterations,
        "trace": trace,
        "bellman_residual": pi_result.bellman_residual,
        "cross_check_gap": gap,
        "assumption_ok": assumption.is_ok(),
    });
    let mut art = Artifacts {
        resolved_gamma: model.gamma,
        ..Default::default()
    };
    let mut pi_csv = String::from("iteration,s,value\n");
    for (n, v) in pi_result.trace.iter().enumerate() {
        for (s, x) in v.as_slice().iter().enumerate() {
            let _ = writeln!(pi_csv, "{n},{s},{x}");
        }
    }
    art.push("policy_iteration_trace.csv", pi_csv);
    art.push(
        "summary.json",
        serde_json::to_string_pretty(&summary)? + "\n",
    );
    Ok(art)
}

/// Trajectory dump for the first seed.
pub fn run_simulate(spec: &RunSpec) -> Result<Artifacts> {
    require_seeds(spec)?;
    let model = load_source(&spec.model, spec.gamma)?;
    let policy = resolve_policy(&spec.policy, &model)?;
    let mut sim = Simulator::new(&model, spec.s0, InitialEnv::Stationary, spec.seeds[0])?;
    let samples = sim.rollout(&policy, spec.n_steps as usize)?;
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &samples).expect("writing to memory");
    let mut art = Artifacts {
        resolved_gamma: model.gamma,
        ..Default::default()
    };
    art.push("trajectory.csv", String::from_utf8(buf).expect("ascii csv"));
    Ok(art)
}

pub fn execute(spec: &RunSpec) -> Result<Artifacts> {
    match spec.command {
        Command::Evaluate => run_evaluate(spec),
        Command::Qlearn => run_qlearn(spec),
        Command::Solve => run_solve(spec),
        Command::Simulate => run_simulate(spec),
    }
}

/// Writes every artifact and the manifest into `dir`, creating it if needed.
pub fn write_run(dir: &Path, spec: &RunSpec, art: &Artifacts) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    for (name, body) in &art.files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(path.display().to_string(), e))?;
    }
    let manifest = RunManifest {
        spec: spec.clone(),
        resolved_gamma: art.resolved_gamma,
        generator: GENERATOR_ID.to_string(),
        outputs: art.files.iter().map(|(n, _)| n.clone()).collect(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Human-readable model report: dimensions, environment distribution and
/// ergodicity verdicts for the environment chain and every `(e, a)` matrix.
pub fn inspect(model: &SnsMdp) -> Result<(String, bool)> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "states {}  actions {}  environments {}  gamma {}",
        model.n_states,
        model.n_actions,
        model.n_envs(),
        model.gamma
    );
    let env_ok = check_irreducible_aperiodic(&model.env.q);
    let _ = writeln!(
        out,
        "env chain: {}",
        if env_ok {
            "irreducible, aperiodic"
        } else {
            "NOT irreducible and aperiodic"
        }
    );
    if env_ok {
        let pi = stationary_distribution(&model.env.q)?;
        let residual = stationary_residual(&model.env.q, &pi.p);
        let entries: Vec<String> = pi.as_slice().iter().map(|x| format!("{x:.12}")).collect();
        let _ = writeln!(
            out,
            "pi_env: [{}]  residual {residual:.3e}",
            entries.join(", ")
        );
    } else {
        let _ = writeln!(
            out,
            "warning: stationary environment distribution is not unique"
        );
    }
    let mut all_ok = env_ok;
    for e in 0..model.n_envs() {
        for a in 0..model.n_actions {
            let ok = check_irreducible_aperiodic(&model.trans[e][a]);
            all_ok &= ok;
            let _ = writeln!(
                out,
                "state chain e={e} a={a}: {}",
                if ok {
                    "irreducible, aperiodic"
                } else {
                    "NOT irreducible and aperiodic"
                }
            );
        }
    }
    if !all_ok {
        let _ = writeln!(
            out,
            "warning: some chains violate the irreducibility/aperiodicity assumption"
        );
    }
    Ok((out, all_ok))
}
