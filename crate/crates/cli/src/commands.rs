//! The four subcommands. Each returns the complete text for stdout.

use std::path::Path;

use infoinv::comgeo::{
    enumerate_max_vertices, gpt_marginals, hull_membership, max_tensor_constraints, max_tensor_membership, min_tensor,
    polytope_equal, pr_box, BilinearState, ComModel, Separation, DEFAULT_DIM_CAP,
};
use infoinv::invsep::{
    css_distance, css_from_decomposition, g_measure, gpt_g_measure, gpt_separability, is_css, is_product,
    ppt_is_conclusive, ppt_min_eigenvalue, ppt_verdict, FKind, MeasureConfig, PptVerdict, QuantumPolytope,
};
use infoinv::matcore::NormKind;
use infoinv::qstate::{marginals, pi_map, purity, werner_state, DensityMatrix, State};
use serde::Serialize;

use crate::resolve::{load_polytope, resolve_model, resolve_state, Resolved};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub seed: u64,
    pub tol: f64,
    pub format: Option<Format>,
    pub measure: MeasureConfig,
}

/// What `analyze --emit` prints instead of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    State,
    Witness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Min,
    Max,
    Both,
}

#[derive(Serialize)]
struct MeasureValue {
    f_kind: FKind,
    norm: NormKind,
    value: f64,
}

fn measure_list(eval: impl Fn(MeasureConfig) -> CliResult<f64>) -> CliResult<Vec<MeasureValue>> {
    MeasureConfig::all()
        .map(|cfg| {
            Ok(MeasureValue {
                f_kind: cfg.f_kind,
                norm: cfg.norm_kind,
                value: eval(cfg)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct Marginals {
    purity_a: f64,
    purity_b: f64,
}

#[derive(Serialize)]
struct QuantumVerdicts {
    product: bool,
    css_singleton: bool,
    ppt: PptVerdict,
    ppt_conclusive: bool,
}

#[derive(Serialize)]
struct WitnessSummary {
    terms: usize,
    vertices: usize,
    css: bool,
    residual: f64,
}

#[derive(Serialize)]
struct QuantumReport {
    input: String,
    backend: &'static str,
    dim_a: usize,
    dim_b: usize,
    purity: f64,
    marginals: Marginals,
    pi_distance: f64,
    measure: MeasureValue,
    sm_frobenius: f64,
    sm_trace: f64,
    measures: Vec<MeasureValue>,
    ppt_min_eig: f64,
    verdicts: QuantumVerdicts,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<WitnessSummary>,
}

#[derive(Serialize)]
struct GptMarginals {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize)]
struct GptVerdicts {
    product: bool,
    max_membership: bool,
    separable: bool,
}

#[derive(Serialize)]
struct GptReport {
    input: String,
    backend: &'static str,
    models: [String; 2],
    coeffs: Vec<f64>,
    marginals: GptMarginals,
    pi_distance: f64,
    measure: MeasureValue,
    measures: Vec<MeasureValue>,
    verdicts: GptVerdicts,
    /// Hyperplane separating the state from the product hull.
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Separation>,
}

pub fn analyze(input: &str, emit: Option<Emit>, s: &Settings) -> CliResult<String> {
    let resolved = resolve_state(input, s.seed)?;
    match (emit, resolved) {
        (Some(Emit::State), Resolved::Quantum { rho, .. }) => to_json(&State::Density(rho)),
        (
            Some(Emit::Witness),
            Resolved::Quantum {
                decomposition: Some(d), ..
            },
        ) => to_json(&css_from_decomposition(&d)),
        (Some(Emit::Witness), _) => Err(CliError::Parse("--emit witness needs a decomposition file".into())),
        (Some(Emit::State), Resolved::Gpt { .. }) => {
            Err(CliError::Parse("--emit state supports quantum states only".into()))
        }
        (None, Resolved::Quantum { rho, decomposition }) => {
            let report = quantum_report(input, &rho, decomposition.as_ref(), s)?;
            match s.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report),
                Format::Csv => csv_table(
                    &[
                        "input",
                        "pi_distance",
                        "measure",
                        "sm_frobenius",
                        "sm_trace",
                        "ppt_min_eig",
                        "product",
                        "css_singleton",
                        "ppt",
                    ],
                    &[vec![
                        report.input.clone(),
                        report.pi_distance.to_string(),
                        report.measure.value.to_string(),
                        report.sm_frobenius.to_string(),
                        report.sm_trace.to_string(),
                        report.ppt_min_eig.to_string(),
                        report.verdicts.product.to_string(),
                        report.verdicts.css_singleton.to_string(),
                        report.verdicts.ppt.name().to_string(),
                    ]],
                ),
            }
        }
        (None, Resolved::Gpt { phi, a, b, models }) => {
            let report = gpt_report(input, &phi, &a, &b, models, s)?;
            match s.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report),
                Format::Csv => csv_table(
                    &[
                        "input",
                        "pi_distance",
                        "measure",
                        "product",
                        "max_membership",
                        "separable",
                    ],
                    &[vec![
                        report.input.clone(),
                        report.pi_distance.to_string(),
                        report.measure.value.to_string(),
                        report.verdicts.product.to_string(),
                        report.verdicts.max_membership.to_string(),
                        report.verdicts.separable.to_string(),
                    ]],
                ),
            }
        }
    }
}

fn quantum_report(
    input: &str,
    rho: &DensityMatrix,
    decomposition: Option<&infoinv::invsep::Decomposition>,
    s: &Settings,
) -> CliResult<QuantumReport> {
    let (a, b) = marginals(rho);
    let split = rho.split();
    let with = |norm| MeasureConfig::new(s.measure.f_kind, norm);
    let witness = match decomposition {
        None => None,
        Some(d) => {
            let w = css_from_decomposition(d);
            Some(WitnessSummary {
                terms: d.terms().len(),
                vertices: w.vertices().len(),
                css: is_css(&w, s.tol)?,
                residual: w.fit(rho)?.residual,
            })
        }
    };
    Ok(QuantumReport {
        input: input.to_string(),
        backend: "quantum",
        dim_a: split.dim_a,
        dim_b: split.dim_b,
        purity: purity(rho),
        marginals: Marginals {
            purity_a: purity(&a),
            purity_b: purity(&b),
        },
        pi_distance: (pi_map(rho).matrix() - rho.matrix()).frobenius(),
        measure: MeasureValue {
            f_kind: s.measure.f_kind,
            norm: s.measure.norm_kind,
            value: g_measure(rho, s.measure),
        },
        sm_frobenius: g_measure(rho, with(NormKind::Frobenius)),
        sm_trace: g_measure(rho, with(NormKind::Trace)),
        measures: measure_list(|cfg| Ok(g_measure(rho, cfg)))?,
        ppt_min_eig: ppt_min_eigenvalue(rho),
        verdicts: QuantumVerdicts {
            product: is_product(rho, s.tol),
            css_singleton: is_css(&QuantumPolytope::singleton(rho.clone()), s.tol)?,
            ppt: ppt_verdict(rho),
            ppt_conclusive: ppt_is_conclusive(split),
        },
        witness,
    })
}

fn gpt_report(
    input: &str,
    phi: &BilinearState,
    a: &ComModel,
    b: &ComModel,
    models: [String; 2],
    s: &Settings,
) -> CliResult<GptReport> {
    let max_membership = max_tensor_membership(phi, &max_tensor_constraints(a, b), s.tol)?;
    let (wa, wb) = gpt_marginals(phi, a, b)?;
    let prod = BilinearState::product(&wa, &wb);
    let pi_distance = prod
        .coords()
        .iter()
        .zip(phi.coords())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let fit = gpt_separability(phi, a, b)?;
    Ok(GptReport {
        input: input.to_string(),
        backend: "gpt",
        models,
        coeffs: phi.coords().to_vec(),
        marginals: GptMarginals { a: wa, b: wb },
        pi_distance,
        measure: MeasureValue {
            f_kind: s.measure.f_kind,
            norm: s.measure.norm_kind,
            value: gpt_g_measure(phi, a, b, s.measure)?,
        },
        measures: measure_list(|cfg| Ok(gpt_g_measure(phi, a, b, cfg)?))?,
        verdicts: GptVerdicts {
            product: pi_distance <= s.tol,
            max_membership,
            separable: fit.residual <= s.tol,
        },
        certificate: fit.separation,
    })
}

#[derive(Serialize)]
struct SweepRow {
    p: f64,
    sm_frobenius: f64,
    sm_trace: f64,
    ppt_min_eig: f64,
    verdict: PptVerdict,
}

/// Werner sweep over `steps` evenly spaced parameters in `[start, stop]`.
pub fn sweep(start: f64, stop: f64, steps: usize, s: &Settings) -> CliResult<String> {
    if !(start.is_finite() && stop.is_finite() && 0.0 <= start && start <= stop && stop <= 1.0) {
        return Err(CliError::Parse(format!(
            "grid must satisfy 0 <= start <= stop <= 1, got start={start} stop={stop}"
        )));
    }
    if !(2..=1_000_000).contains(&steps) {
        return Err(CliError::Parse(format!("steps must lie in 2..=1000000, got {steps}")));
    }
    let rows = (0..steps)
        .map(|i| {
            let p = if i == steps - 1 {
                stop
            } else {
                start + (stop - start) * i as f64 / (steps - 1) as f64
            };
            let rho = werner_state(p)?;
            Ok(SweepRow {
                p,
                sm_frobenius: g_measure(&rho, MeasureConfig::new(s.measure.f_kind, NormKind::Frobenius)),
                sm_trace: g_measure(&rho, MeasureConfig::new(s.measure.f_kind, NormKind::Trace)),
                ppt_min_eig: ppt_min_eigenvalue(&rho),
                verdict: ppt_verdict(&rho),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    match s.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => csv_table(
            &["p", "sm_frobenius", "sm_trace", "ppt_min_eig", "verdict"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.p.to_string(),
                        r.sm_frobenius.to_string(),
                        r.sm_trace.to_string(),
                        r.ppt_min_eig.to_string(),
                        r.verdict.name().to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}

#[derive(Serialize)]
struct TensorReport {
    model_a: String,
    model_b: String,
    min_vertices: usize,
    min_in_max: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    equal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outside_count: Option<usize>,
    /// Vertices of the maximal product outside the minimal one.
    #[serde(skip_serializing_if = "Option::is_none")]
    outside: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pr_box_outside: Option<bool>,
}

pub fn tensor(model_a: &str, model_b: &str, which: Which, s: &Settings) -> CliResult<String> {
    let (a, b) = (resolve_model(model_a)?, resolve_model(model_b)?);
    let min = min_tensor(&a, &b);
    let h = max_tensor_constraints(&a, &b);
    let mut min_in_max = true;
    for v in min.vertices() {
        min_in_max &= h.contains(v, s.tol)?;
    }
    let mut report = TensorReport {
        model_a: model_a.to_string(),
        model_b: model_b.to_string(),
        min_vertices: min.len(),
        min_in_max,
        max_vertices: None,
        equal: None,
        outside_count: None,
        outside: None,
        pr_box_outside: None,
    };
    if which != Which::Min {
        let max = enumerate_max_vertices(&h, DEFAULT_DIM_CAP)?;
        report.max_vertices = Some(max.len());
        if which == Which::Both {
            report.equal = Some(polytope_equal(&min, &max, s.tol)?);
            let mut outside = Vec::new();
            for v in max.vertices() {
                if !hull_membership(v, &min, s.tol)? {
                    outside.push(v.clone());
                }
            }
            if model_a == "gbit" && model_b == "gbit" {
                let pr = pr_box();
                report.pr_box_outside = Some(
                    outside
                        .iter()
                        .any(|v| v.iter().zip(pr.coords()).all(|(x, y)| (x - y).abs() <= s.tol)),
                );
            }
            report.outside_count = Some(outside.len());
            report.outside = Some(outside);
        }
    }
    match s.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => csv_table(
            &[
                "model_a",
                "model_b",
                "min_vertices",
                "max_vertices",
                "equal",
                "min_in_max",
                "outside_count",
            ],
            &[vec![
                report.model_a.clone(),
                report.model_b.clone(),
                report.min_vertices.to_string(),
                report.max_vertices.map(|n| n.to_string()).unwrap_or_default(),
                report.equal.map(|e| e.to_string()).unwrap_or_default(),
                report.min_in_max.to_string(),
                report.outside_count.map(|n| n.to_string()).unwrap_or_default(),
            ]],
        ),
    }
}

#[derive(Serialize)]
struct CssReport {
    input: String,
    vertices: usize,
    css: bool,
    /// Largest hull residual between the polytope and its image under `Λ∘τ`.
    distance_summary: f64,
}

pub fn css_check(path: &Path, s: &Settings) -> CliResult<String> {
    let c = load_polytope(path)?;
    let report = CssReport {
        input: path.display().to_string(),
        vertices: c.vertices().len(),
        css: is_css(&c, s.tol)?,
        distance_summary: css_distance(&c)?,
    };
    match s.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => csv_table(
            &["input", "vertices", "css", "distance_summary"],
            &[vec![
                report.input.clone(),
                report.vertices.to_string(),
                report.css.to_string(),
                report.distance_summary.to_string(),
            ]],
        ),
    }
}

/// Pretty JSON with a trailing newline; non-finite numbers are rejected.
fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut out = serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    // NaN and infinities serialize as null; no report field is ever null otherwise.
    let back: serde_json::Value = serde_json::from_str(&out).map_err(|e| CliError::Validation(e.to_string()))?;
    if has_null(&back) {
        return Err(CliError::Validation("report contains a non-finite number".into()));
    }
    out.push('\n');
    Ok(out)
}

fn has_null(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Null => true,
        serde_json::Value::Array(xs) => xs.iter().any(has_null),
        serde_json::Value::Object(m) => m.values().any(has_null),
        _ => false,
    }
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Validation(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        if r.iter().any(|f| f == "NaN" || f.ends_with("inf")) {
            return Err(CliError::Validation("table contains a non-finite number".into()));
        }
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Validation(e.to_string()))
}
