//! `cmdeg`: exact CM degrees, section counts, HN fractions and delta invariants.

mod cache;
mod commands;
mod report;

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cache::Cache;
use crate::report::{Format, RunReport};

#[derive(Parser, Debug)]
#[command(name = "cmdeg", version, about, propagate_version = true)]
struct Cli {
    /// Emit a machine-readable JSON report.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit tables as CSV.
    #[arg(long, global = true)]
    csv: bool,
    /// Bypass the on-disk result cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Spread parameter sweeps over worker threads.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct FamilyArgs {
    /// Descriptor file, or the name of a bundled descriptor (e.g. `examples/not_nef`).
    pub descriptor: String,
}

#[derive(Args, Debug, Clone)]
pub struct ClassArgs {
    /// Divisor class: `-K`, `fiber`, or `xi,f,e1,...,ek` meaning `xi·ξ + f·F − Σ e_j E_j`.
    #[arg(long, default_value = "-K", allow_hyphen_values = true)]
    pub class: String,
    /// Add this many fibers to the class.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub plus_fibers: String,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Degree of the CM line bundle with its monomial expansion ledger.
    CmDegree(FamilyArgs),
    /// Table of h⁰(m·class) over a range of m.
    Sections {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        class: ClassArgs,
        /// Multiples: `1..20` (inclusive), `3`, or `1,2,5`.
        #[arg(long = "m-range", visible_alias = "m", default_value = "1..10")]
        m_range: String,
    },
    /// Volume of a class from an exact polynomial fit of h⁰.
    Volume {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        class: ClassArgs,
    },
    /// Splitting type of the pushforward of m·class to the base.
    Splitting {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, default_value_t = 1)]
        m: u64,
    },
    /// Hilbert polynomial of the fibers and μ_L.
    FiberHilbert {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        class: ClassArgs,
    },
    /// Globally generated rank fraction of tensor powers of an HN profile.
    HnFraction {
        /// Slope:rank pairs, e.g. `2:1,-1:1`.
        #[arg(long, allow_hyphen_values = true)]
        profile: String,
        #[arg(long, default_value_t = 0)]
        genus: u32,
        #[arg(long = "m-range", visible_alias = "m", default_value = "1..10")]
        m_range: String,
        /// Slope threshold; defaults to 2g.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<String>,
        /// Add the normal-approximation estimate (floating point).
        #[arg(long)]
        clt: bool,
        /// Add the exact Chebyshev lower bound.
        #[arg(long)]
        chebyshev: bool,
        /// Also report the least m reaching fraction 1 − ε.
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Fraction of Sym^m summands of a split bundle on P¹ at or above a degree.
    SymFraction {
        /// Splitting degrees, e.g. `-1,1`.
        #[arg(long, allow_hyphen_values = true)]
        degrees: String,
        #[arg(long = "m-range", visible_alias = "m", default_value = "1..10")]
        m_range: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        threshold: String,
    },
    /// S_q, S and A/S for a valuation on (P^n, O(d)).
    Delta {
        /// Model, e.g. `P1:d=2`, `P2:d=-K`, `P3:d=5/2`.
        #[arg(long)]
        model: String,
        /// `hyperplane` or `point`.
        #[arg(long, default_value = "hyperplane")]
        valuation: String,
        #[arg(long = "q-range", visible_alias = "q", default_value = "1..5")]
        q_range: String,
    },
    /// Knudsen–Mumford expansion and the CM identities; exits 1 if any fails.
    KmCheck {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1)]
        s: u64,
    },
    /// Nef test of a class against the built-in curve and surface witnesses.
    NefCheck {
        #[command(flatten)]
        family: FamilyArgs,
        #[command(flatten)]
        class: ClassArgs,
        /// Add `a·f*λ`, i.e. `a·deg λ` fibers.
        #[arg(long, allow_hyphen_values = true)]
        plus_lambda: Option<String>,
    },
    /// Dimension of a plane-curve linear system with base points and a fixed curve.
    PlaneSystem {
        #[arg(long)]
        degree: u32,
        /// Multiplicity at each of the four frame points.
        #[arg(long, default_value_t = 1)]
        mult: u32,
        /// Degree of the Fermat curve to factor out; omit for none.
        #[arg(long)]
        divisor_degree: Option<u32>,
        #[arg(long, default_value_t = 1)]
        divisor_mult: u32,
    },
    /// Threshold and bound arithmetic.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// List the bundled descriptors, or print one as JSON.
    Descriptors {
        /// Name of a descriptor to print.
        name: Option<String>,
    },
    /// Run the acceptance suite over the bundled examples.
    ReproducePaper {
        /// Also validate every descriptor file in this directory.
        #[arg(long)]
        descriptor_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug, Clone)]
pub enum BoundsCommand {
    /// vol(−K_X) ≤ 2·dim·vol(−K_F) and vol(−K_X) ≤ 2·dim^dim.
    Volume {
        #[arg(long)]
        vol_x: String,
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        vol_f: String,
    },
    /// (n+1)/n·α ≤ δ ≤ (n+1)·α.
    AlphaDelta {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        delta: String,
        #[arg(long)]
        n: u32,
    },
    /// The coefficient δ/((δ−1)·v·(n+1)).
    NefThreshold {
        #[arg(long)]
        delta: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        n: u32,
    },
    /// Stability verdict from δ or α.
    Stability {
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        n: u32,
    },
}

/// Exit status: 0 success, 1 failed identity or criterion, 2 bad input.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    use cmdeg_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::Consistency(_) | E::Fit(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = if cli.json {
        Format::Json
    } else if cli.csv {
        Format::Csv
    } else {
        Format::Human
    };
    let cache = if cli.no_cache { Cache::disabled() } else { Cache::new(true) };
    let start = Instant::now();
    let run = commands::prepare(&cli.command).and_then(|job| {
        let outputs = match (job.cacheable, cache.get(&job.name, &job.inputs)) {
            (true, Some(hit)) => hit,
            _ => {
                let out = (job.run)(cli.parallel)?;
                if job.cacheable {
                    cache.put(&job.name, &job.inputs, &out);
                }
                out
            }
        };
        Ok((job.name, job.inputs, outputs))
    });
    match run {
        Ok((command, inputs, outputs)) => {
            let failed = !outputs.failures.is_empty();
            let report = RunReport {
                command,
                inputs,
                outputs,
                status: if failed { "failed" } else { "ok" },
                wall_time_s_approx: start.elapsed().as_secs_f64(),
            };
            match report.write(format, &mut io::stdout().lock()) {
                Ok(()) => {}
                // a closed pipe (`| head`) is not an error
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(u8::from(failed))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
