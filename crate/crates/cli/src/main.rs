//! `g2`: command-line front end for the G₂-structure kernel.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use g2_core::{G2Error, Mode};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "g2", version, about = "Computations with G2-structures on R^7")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for generated inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override the pass/fail tolerance of a check.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the identity suite and report each identity.
    Identities {
        #[arg(long, default_value = "exact")]
        mode: Mode,
    },
    /// Octonion data.
    Octonion {
        #[command(subcommand)]
        what: OctonionCommand,
    },
    /// Split a form into its irreducible pieces.
    Decompose {
        #[arg(long)]
        degree: usize,
        #[arg(long = "in")]
        input: PathBuf,
        /// Positive 3-form defining the structure (default φ₀).
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long, default_value = "float")]
        mode: Mode,
    },
    /// Metric, volume factor and dual 4-form of a positive 3-form.
    Metric {
        /// 3-form (default φ₀).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "float")]
        mode: Mode,
    },
    /// Deform a structure and compare with the exact rebuild.
    Deform {
        #[arg(long, value_enum)]
        mode: DeformMode,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Base 3-form (default φ₀).
        #[arg(long = "in")]
        input: Option<PathBuf>,
        /// Direction 3-form; its component of the chosen type is used.
        /// Seeded random when absent.
        #[arg(long)]
        chi: Option<PathBuf>,
    },
    /// Torsion of a 3-form field on a periodic grid.
    Torsion {
        /// Field JSON; a generated sample is used when absent.
        #[arg(long = "in", alias = "field")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Sample::Generic)]
        sample: Sample,
        /// Points per varying axis of the sample.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Christoffel::ChainRule)]
        christoffel: Christoffel,
    },
    /// Moduli geometry of a chart of constant forms.
    Moduli {
        /// Basis JSON; a seeded chart is used when absent.
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Coordinates JSON (default: the base point).
        #[arg(long)]
        coords: Option<PathBuf>,
        /// Quantities to report.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Quantity::V, Quantity::K, Quantity::G])]
        report: Vec<Quantity>,
        /// Number of seeded Λ³₂₇ directions when no basis is given.
        #[arg(long, default_value_t = 2)]
        directions: usize,
    },
    /// Betti numbers of a barely G2 manifold.
    Betti { h11_plus: u64, h11_minus: u64, h21: u64 },
}

#[derive(Subcommand, Debug)]
enum OctonionCommand {
    /// Multiplication table of 1, e1, …, e7.
    Table,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DeformMode {
    Conformal,
    Vector,
    L27,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Sample {
    Constant,
    Conformal,
    Generic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Christoffel {
    ChainRule,
    MetricDifferences,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[allow(clippy::upper_case_acronyms)]
#[value(rename_all = "UPPER")]
enum Quantity {
    V,
    K,
    G,
    A,
    Q,
    R,
}

/// Exit status for a kernel error.
fn exit_code(e: &G2Error) -> u8 {
    match e {
        G2Error::NotPositive(_) | G2Error::NotPositiveDefinite => 3,
        G2Error::Invariant(_) | G2Error::NonUniversalCalibration { .. } | G2Error::Singular => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(outcome) => {
            let mut text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
            text.push('\n');
            let written = match &cli.out {
                Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
