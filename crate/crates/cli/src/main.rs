use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use infoinv::invsep::{FKind, MeasureConfig, CSS_TOL};
use infoinv::matcore::NormKind;
use infoinv_cli::commands::{self, Emit, Format, Settings, Which};
use infoinv_cli::{CliError, CliResult};

/// Separability and correlation analysis for quantum and box-world states.
#[derive(Parser)]
#[command(name = "infoinv", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for membership, equality and product tests.
    #[arg(long, global = true, default_value_t = CSS_TOL)]
    tol: f64,
    /// Output format (analyze, tensor and css-check default to json, sweep to csv).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Function applied to Π(ρ) − ρ: identity, abs or square.
    #[arg(long = "f-kind", global = true, default_value = "identity")]
    f_kind: FKind,
    /// Norm for the headline measure: frobenius, trace or max_abs.
    #[arg(long, global = true, default_value = "frobenius")]
    norm: NormKind,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report marginals, measures and verdicts for one state expression.
    Analyze {
        /// bell:phi+, werner:0.35, random:2x2[:rank=k][:seed=n], file:path.json or prbox
        expr: String,
        /// Print the state (or the witness polytope of a decomposition file) as JSON instead.
        #[arg(long, value_enum)]
        emit: Option<EmitArg>,
    },
    /// Tabulate measures and the partial-transpose test along a state family.
    Sweep {
        #[arg(value_enum)]
        family: Family,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 1.0)]
        stop: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
    /// Compare minimal and maximal tensor products of two models.
    Tensor {
        /// classical:n or gbit
        model_a: String,
        model_b: String,
        #[arg(long, value_enum, default_value = "both")]
        which: WhichArg,
    },
    /// Check whether a polytope of states is invariant under Λ∘τ.
    CssCheck { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    State,
    Witness,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Werner,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    Min,
    Max,
    Both,
}

fn run(cli: Cli) -> CliResult<String> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Parse(format!(
            "--tol must be a positive number, got {}",
            cli.tol
        )));
    }
    let settings = Settings {
        seed: cli.seed,
        tol: cli.tol,
        format: cli.format.map(|f| match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }),
        measure: MeasureConfig::new(cli.f_kind, cli.norm),
    };
    match cli.command {
        Command::Analyze { expr, emit } => {
            let emit = emit.map(|e| match e {
                EmitArg::State => Emit::State,
                EmitArg::Witness => Emit::Witness,
            });
            commands::analyze(&expr, emit, &settings)
        }
        Command::Sweep {
            family: Family::Werner,
            start,
            stop,
            steps,
        } => commands::sweep(start, stop, steps, &settings),
        Command::Tensor {
            model_a,
            model_b,
            which,
        } => {
            let which = match which {
                WhichArg::Min => Which::Min,
                WhichArg::Max => Which::Max,
                WhichArg::Both => Which::Both,
            };
            commands::tensor(&model_a, &model_b, which, &settings)
        }
        Command::CssCheck { path } => commands::css_check(&path, &settings),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("infoinv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
