//! JSON model files.
//!
//! Layout: `n_states`, `n_actions`, `n_envs`, `gamma`, `env_chain[e][e']`,
//! `transitions[e][a][s][s']`, `rewards[e][s][a]`. Unknown keys are rejected.
//! Every float is written with 17 significant digits so a reload reproduces
//! the model bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{matrix_from_rows, matrix_rows, validate_mdp, EnvChain, SnsMdp};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n_states: usize,
    n_actions: usize,
    n_envs: usize,
    gamma: f64,
    env_chain: Vec<Vec<f64>>,
    transitions: Vec<Vec<Vec<Vec<f64>>>>,
    rewards: Vec<Vec<Vec<f64>>>,
}

fn expect_len(field: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Parse(format!(
            "field `{field}` has {got} entries, expected {want}"
        )));
    }
    Ok(())
}

fn checked_matrix(
    field: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>> {
    expect_len(field, rows.len(), nrows)?;
    for (i, r) in rows.iter().enumerate() {
        expect_len(&format!("{field}[{i}]"), r.len(), ncols)?;
    }
    matrix_from_rows(rows)
}

impl ModelFile {
    fn into_model(self) -> Result<SnsMdp> {
        let (ns, na, ne) = (self.n_states, self.n_actions, self.n_envs);
        let q = checked_matrix("env_chain", &self.env_chain, ne, ne)?;
        expect_len("transitions", self.transitions.len(), ne)?;
        expect_len("rewards", self.rewards.len(), ne)?;
        let mut trans = Vec::with_capacity(ne);
        for (e, per_action) in self.transitions.iter().enumerate() {
            expect_len(&format!("transitions[{e}]"), per_action.len(), na)?;
            let mats = per_action
                .iter()
                .enumerate()
                .map(|(a, rows)| checked_matrix(&format!("transitions[{e}][{a}]"), rows, ns, ns))
                .collect::<Result<Vec<_>>>()?;
            trans.push(mats);
        }
        let rewards = self
            .rewards
            .iter()
            .enumerate()
            .map(|(e, rows)| checked_matrix(&format!("rewards[{e}]"), rows, ns, na))
            .collect::<Result<Vec<_>>>()?;
        let model = SnsMdp {
            n_states: ns,
            n_actions: na,
            gamma: self.gamma,
            trans,
            rewards,
            env: EnvChain { q },
        };
        validate_mdp(&model).into_result()?;
        Ok(model)
    }
}

/// Parses a model from JSON text. Errors carry the serde line/column or the
/// offending field name.
pub fn parse_model(text: &str) -> Result<SnsMdp> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SnsMdp> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

/// Renders a valid model; invalid models are refused with their report.
pub fn model_to_json(model: &SnsMdp) -> Result<String> {
    validate_mdp(model).into_result()?;
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"n_states\": {},", model.n_states);
    let _ = writeln!(out, "  \"n_actions\": {},", model.n_actions);
    let _ = writeln!(out, "  \"n_envs\": {},", model.n_envs());
    let _ = writeln!(out, "  \"gamma\": {},", fmt_f64(model.gamma));

    out.push_str("  \"env_chain\": ");
    write_matrix(&mut out, &matrix_rows(&model.env.q), 2);
    out.push_str(",\n  \"transitions\": [\n");
    for (e, per_action) in model.trans.iter().enumerate() {
        out.push_str("    [\n");
        for (a, m) in per_action.iter().enumerate() {
            out.push_str("      ");
            write_matrix(&mut out, &matrix_rows(m), 6);
            out.push_str(if a + 1 < per_action.len() {
                ",\n"
            } else {
                "\n"
            });
        }
        out.push_str(if e + 1 < model.trans.len() {
            "    ],\n"
        } else {
            "    ]\n"
        });
    }
    out.push_str("  ],\n  \"rewards\": [\n");
    for (e, m) in model.rewards.iter().enumerate() {
        out.push_str("    ");
        write_matrix(&mut out, &matrix_rows(m), 4);
        out.push_str(if e + 1 < model.rewards.len() {
            ",\n"
        } else {
            "\n"
        });
    }
    out.push_str("  ]\n}\n");
    Ok(out)
}

pub fn save_model(model: &SnsMdp, path: impl AsRef<Path>) -> Result<()> {
    let text = model_to_json(model)?;
    fs::write(path, text)?;
    Ok(())
}

/// 17 significant digits: enough for any f64 to parse back to itself.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_matrix(out: &mut String, rows: &[Vec<f64>], indent: usize) {
    let pad = " ".repeat(indent + 2);
    out.push_str("[\n");
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&pad);
        out.push('[');
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&fmt_f64(*x));
        }
        out.push(']');
        if i + 1 < rows.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str(&" ".repeat(indent));
    out.push(']');
}
