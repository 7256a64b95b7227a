//! Turns parsed expressions and files into backend objects.

use std::path::Path;

use infoinv::comgeo::{classical_model, gbit_model, pr_box, BilinearState, ComModel};
use infoinv::invsep::{Decomposition, QuantumPolytope};
use infoinv::qstate::{bell_state, random_mixed, werner_state, DensityMatrix, State};
use serde::de::DeserializeOwned;

use crate::expr::{self, Expr};
use crate::{CliError, CliResult};

pub enum Resolved {
    Quantum {
        rho: DensityMatrix,
        decomposition: Option<Decomposition>,
    },
    Gpt {
        phi: BilinearState,
        a: ComModel,
        b: ComModel,
        models: [String; 2],
    },
}

pub fn resolve_state(text: &str, default_seed: u64) -> CliResult<Resolved> {
    let e = expr::parse(text)?;
    Ok(match e {
        Expr::Bell(kind) => Resolved::Quantum {
            rho: bell_state(kind),
            decomposition: None,
        },
        Expr::Werner(p) => Resolved::Quantum {
            rho: werner_state(p)?,
            decomposition: None,
        },
        Expr::Random { split, rank, seed } => Resolved::Quantum {
            rho: random_mixed(split, rank.unwrap_or(split.total()), seed.unwrap_or(default_seed))?,
            decomposition: None,
        },
        Expr::File(path) => {
            let value: serde_json::Value = read_json(&path)?;
            if value.get("terms").is_some() {
                let d: Decomposition = from_value(value, &path)?;
                Resolved::Quantum {
                    rho: d.state(),
                    decomposition: Some(d),
                }
            } else {
                let s: State = from_value(value, &path)?;
                Resolved::Quantum {
                    rho: s.to_density(),
                    decomposition: None,
                }
            }
        }
        Expr::PrBox => {
            let g = gbit_model();
            Resolved::Gpt {
                phi: pr_box(),
                a: g.clone(),
                b: g,
                models: ["gbit".into(), "gbit".into()],
            }
        }
        Expr::Classical(_) | Expr::Gbit => {
            return Err(CliError::Parse(format!("'{text}' names a model, not a state")));
        }
    })
}

pub fn resolve_model(text: &str) -> CliResult<ComModel> {
    match expr::parse(text)? {
        Expr::Classical(n) => Ok(classical_model(n)?),
        Expr::Gbit => Ok(gbit_model()),
        _ => Err(CliError::Parse(format!(
            "'{text}' is not a model expression (expected classical:n or gbit)"
        ))),
    }
}

pub fn load_polytope(path: &Path) -> CliResult<QuantumPolytope> {
    from_value(read_json(path)?, path)
}

fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read '{}': {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("'{}' is not valid JSON: {e}", path.display())))
}

/// Structural mismatches are parse errors; values rejected by the toolkit's
/// own checks (positivity, normalization, weights) are validation failures.
fn from_value<T: DeserializeOwned>(value: serde_json::Value, path: &Path) -> CliResult<T> {
    serde_json::from_value(value).map_err(|e| {
        let msg = format!("'{}': {e}", path.display());
        if e.to_string().starts_with("domain error") {
            CliError::Validation(msg)
        } else {
            CliError::Parse(msg)
        }
    })
}
