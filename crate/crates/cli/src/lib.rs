//! Command-line front end: `inspect`, `evaluate`, `solve`, `qlearn`,
//! `wireless`, `simulate` and `replay`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sns_mdp::{build_wireless_mdp, default_wireless_config, io::model_to_json};

use crate::error::{CliError, Result};
use crate::run::{
    execute, inspect, load_source, read_manifest, write_run, ClockSpec, Command, ModelSource,
    PolicySpec, RunSpec, ScheduleSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "sns",
    version,
    about = "Switching non-stationary MDP experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Print dimensions, the environment distribution and ergodicity checks.
    Inspect {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// TD(0) evaluation of a fixed policy, one run per seed.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        learn: LearnArgs,
        /// `action0`, `uniform`, or a JSON file holding the policy matrix.
        #[arg(long, default_value = "action0")]
        policy: String,
    },
    /// Optimal policy by policy iteration, cross-checked by value iteration.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Q-learning under a uniform behavior policy, one run per seed.
    Qlearn {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        learn: LearnArgs,
    },
    /// Write the built-in adaptive-modulation model to a file.
    Wireless {
        #[arg(long, default_value = "wireless_model.json")]
        out: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Dump one trajectory, including the hidden environment, as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "action0")]
        policy: String,
        #[arg(long, default_value_t = 1000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ModelArgs {
    /// Model file in the JSON model format.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Use the built-in adaptive-modulation model.
    #[arg(long)]
    pub wireless: bool,
}

impl ModelArgs {
    fn source(&self) -> ModelSource {
        match &self.model {
            Some(p) => ModelSource::Path(p.clone()),
            None => ModelSource::Wireless,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ClockArg {
    PerEntry,
    Global,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Comma-separated seeds; one independent run per seed.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    /// Overrides the model discount.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Constant step size (default 0.01 unless Robbins-Monro is chosen).
    #[arg(long, conflicts_with_all = ["rm_c", "rm_t0"])]
    pub alpha: Option<f64>,
    /// Robbins-Monro scale: alpha_n = c / (n + t0).
    #[arg(long, requires = "rm_t0")]
    pub rm_c: Option<f64>,
    #[arg(long, requires = "rm_c")]
    pub rm_t0: Option<f64>,
    /// Counter indexing the step size.
    #[arg(long, value_enum, default_value = "per-entry")]
    pub clock: ClockArg,
    /// Initial observable state.
    #[arg(long, default_value_t = 0)]
    pub s0: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl LearnArgs {
    fn schedule(&self) -> ScheduleSpec {
        match (self.rm_c, self.rm_t0) {
            (Some(c), Some(t0)) => ScheduleSpec::RobbinsMonro { c, t0 },
            _ => ScheduleSpec::Constant {
                alpha: self.alpha.unwrap_or(0.01),
            },
        }
    }

    fn spec(&self, command: Command, model: ModelSource, policy: PolicySpec) -> RunSpec {
        RunSpec {
            command,
            model,
            gamma: self.gamma,
            seeds: self.seed.clone(),
            n_steps: self.steps,
            schedule: self.schedule(),
            clock: match self.clock {
                ClockArg::PerEntry => ClockSpec::PerEntry,
                ClockArg::Global => ClockSpec::Global,
            },
            policy,
            s0: self.s0,
        }
    }
}

fn parse_policy(s: &str) -> PolicySpec {
    match s {
        "action0" => PolicySpec::Action0,
        "uniform" => PolicySpec::Uniform,
        path => PolicySpec::Path(PathBuf::from(path)),
    }
}

fn run_and_write(spec: &RunSpec, out: &Path) -> Result<String> {
    let art = execute(spec)?;
    let manifest = write_run(out, spec, &art)?;
    Ok(format!(
        "wrote {} files and manifest.json to {}\n",
        manifest.outputs.len(),
        out.display()
    ))
}

/// Runs one parsed command and returns what should be printed on success.
pub fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Cmd::Inspect { model } => {
            let m = load_source(&model.source(), None)?;
            let (report, _) = inspect(&m)?;
            Ok(report)
        }
        Cmd::Evaluate {
            model,
            learn,
            policy,
        } => {
            let spec = learn.spec(Command::Evaluate, model.source(), parse_policy(&policy));
            run_and_write(&spec, &learn.out)
        }
        Cmd::Qlearn { model, learn } => {
            let spec = learn.spec(Command::Qlearn, model.source(), PolicySpec::Uniform);
            run_and_write(&spec, &learn.out)
        }
        Cmd::Solve { model, out } => {
            let spec = RunSpec {
                command: Command::Solve,
                model: model.source(),
                gamma: None,
                seeds: Vec::new(),
                n_steps: 0,
                schedule: ScheduleSpec::Constant { alpha: 0.01 },
                clock: ClockSpec::PerEntry,
                policy: PolicySpec::Action0,
                s0: 0,
            };
            run_and_write(&spec, &out)
        }
        Cmd::Wireless { out, gamma } => {
            let mut cfg = default_wireless_config();
            if let Some(g) = gamma {
                cfg.gamma = g;
            }
            let model = build_wireless_mdp(&cfg)?;
            fs::write(&out, model_to_json(&model)?)
                .map_err(|e| CliError::io(out.display().to_string(), e))?;
            Ok(format!("wrote {}\n", out.display()))
        }
        Cmd::Simulate {
            model,
            policy,
            steps,
            seed,
            gamma,
            out,
        } => {
            let spec = RunSpec {
                command: Command::Simulate,
                model: model.source(),
                gamma,
                seeds: vec![seed],
                n_steps: steps,
                schedule: ScheduleSpec::Constant { alpha: 0.01 },
                clock: ClockSpec::PerEntry,
                policy: parse_policy(&policy),
                s0: 0,
            };
            run_and_write(&spec, &out)
        }
        Cmd::Replay { manifest, out } => {
            let m = read_manifest(&manifest)?;
            run_and_write(&m.spec, &out)
        }
    }
}
