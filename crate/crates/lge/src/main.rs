//! Command-line front end: analytic queries, bounds, slot-level
//! simulation, Monte Carlo estimation, the max-min urn search, and data
//! emission for the survivor-probability level plot.
//!
//! Machine-readable output goes to standard output (or `--output`);
//! human summaries go to standard error. Numeric output uses shortest
//! round-trip formatting, so every value re-parses exactly.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lge::analytics::{self, GeoParam};
use lge::error::Error;
use lge::montecarlo;
use lge::occupancy;
use lge::protocol;
use lge::streams::stream;

/// Environment variable holding the default directory for relative
/// `--output` paths.
const OUTPUT_DIR_ENV: &str = "LGE_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "lge", version, about = "Leader election analytics and simulation toolkit")]
struct Cli {
    /// Cap worker parallelism (results are identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Write machine-readable output here instead of standard output.
    /// Relative paths resolve against $LGE_OUTPUT_DIR when it is set.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PmfRoute {
    Series,
    Alternating,
    Rice,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExpectTarget {
    Survivors,
    Max,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum McTarget {
    Pmf,
    MaxTail,
    Phase,
}

#[derive(Subcommand)]
enum Command {
    /// Survivor-count probability Pr[W_{n,p} = a].
    Pmf {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        a: u64,
        #[arg(long, value_enum, default_value = "series")]
        method: PmfRoute,
        /// Series truncation tolerance.
        #[arg(long, default_value_t = 1e-16)]
        tol: f64,
        /// Fluctuation terms kept by the residue-series route.
        #[arg(long, default_value_t = 20)]
        k: u32,
    },
    /// Expected survivor count E[W] or expected maximum E[M].
    Expect {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_enum, default_value = "survivors")]
        target: ExpectTarget,
    },
    /// Tail envelopes: phi_p(k), the survivor tail bound, and (with
    /// --c) the threshold/bound pair for the maximum.
    Bounds {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        c: Option<f64>,
    },
    /// Slot budget for one phase at the given failure exponent.
    Rounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long = "eps-exp", default_value_t = 20.0)]
        eps_exp: f64,
    },
    /// Run one full election phase and emit its JSON summary.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.01)]
        p: f64,
        /// Top key digit index; defaults to the value implied by the
        /// round budget at failure exponent 20.
        #[arg(long)]
        l: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the per-slot trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo estimation with confidence reporting.
    Montecarlo {
        #[arg(long, value_enum)]
        target: McTarget,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        l: Option<u32>,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Multi-start max-min search over urn distributions.
    Msp {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 5000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// CSV of Pr[W_{n,p} = 1] for n = 1..nMax (defaults reproduce the
    /// p = 1/3, n <= 600 level plot).
    Figure1 {
        #[arg(long, default_value_t = 1.0 / 3.0)]
        p: f64,
        #[arg(long = "n-max", default_value_t = 600)]
        n_max: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("lge: failed to configure thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lge: {e}");
            let code = match e {
                Error::InvalidParameter { .. } | Error::BoundInapplicable { .. } => 2,
                Error::PrecisionLoss { .. } => 3,
                Error::Io(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}

/// Resolve an output path against $LGE_OUTPUT_DIR, then open a writer
/// (standard output when no path is given).
fn open_output(path: &Option<PathBuf>) -> lge::Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(io::stdout().lock())),
        Some(p) => {
            let resolved = resolve_output(p);
            Ok(Box::new(File::create(resolved)?))
        }
    }
}

fn resolve_output(p: &Path) -> PathBuf {
    if p.is_relative() {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(p);
            }
        }
    }
    p.to_path_buf()
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> lge::Result<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn run(command: Command) -> lge::Result<()> {
    match command {
        Command::Pmf { n, p, a, method, tol, k } => {
            let param = GeoParam::new(p)?;
            if n < 1 || a < 1 || a > n {
                return Err(Error::invalid("a", "need 1 <= a <= n"));
            }
            let value = match method {
                PmfRoute::Series => {
                    if !(tol > 0.0) {
                        return Err(Error::invalid("tol", "need tol > 0"));
                    }
                    analytics::survivor_pmf_series(n, param, a, tol)
                }
                PmfRoute::Alternating => analytics::survivor_pmf_alternating(n, param, a)?,
                PmfRoute::Rice => {
                    let approx = analytics::pmf_rice_approx(n, param, a, k)?;
                    eprintln!(
                        "central={} errorBound={} truncationResidual={}",
                        approx.central, approx.error_bound, approx.truncation_residual
                    );
                    approx.value()
                }
            };
            println!("{value}");
            eprintln!("Pr[W = {a}] for n={n}, p={p}");
        }
        Command::Expect { n, p, target } => {
            let param = GeoParam::new(p)?;
            if n < 1 {
                return Err(Error::invalid("n", "need n >= 1"));
            }
            match target {
                ExpectTarget::Survivors => {
                    let value = analytics::expected_survivors(n, param);
                    println!("{value}");
                    eprintln!("E[survivors] for n={n}, p={p}");
                }
                ExpectTarget::Max => {
                    let exact = analytics::expected_max_exact(n, param, 1e-14);
                    let approx = analytics::expected_max_approx(n, param);
                    println!("{exact}");
                    eprintln!("E[max] for n={n}, p={p} (leading-order approx {approx})");
                }
            }
        }
        Command::Bounds { p, k, n, c } => {
            let param = GeoParam::new(p)?;
            if k < 1 {
                return Err(Error::invalid("k", "need k >= 1"));
            }
            #[derive(Serialize)]
            struct BoundsOut {
                phi: f64,
                #[serde(rename = "tailBound", skip_serializing_if = "Option::is_none")]
                tail_bound: Option<f64>,
                #[serde(rename = "maxTail", skip_serializing_if = "Option::is_none")]
                max_tail: Option<analytics::MaxTailBound>,
            }
            let tail_bound = match analytics::survivor_tail_bound(param, k) {
                Ok(v) => Some(v),
                Err(Error::BoundInapplicable { .. }) => {
                    eprintln!("survivor tail bound inapplicable: p >= 1/2");
                    None
                }
                Err(e) => return Err(e),
            };
            let max_tail = match (n, c) {
                (Some(n), Some(c)) => Some(analytics::max_geo_tail_bound(n, param, c)?),
                _ => None,
            };
            let out = BoundsOut {
                phi: analytics::phi_bound(param, k),
                tail_bound,
                max_tail,
            };
            emit_json(&None, &out)?;
        }
        Command::Rounds { n, p, eps_exp } => {
            let param = GeoParam::new(p)?;
            if n < 2 {
                return Err(Error::invalid("n", "need n >= 2"));
            }
            if !(eps_exp > 0.0) {
                return Err(Error::invalid("eps-exp", "need a positive exponent"));
            }
            let plan = analytics::rounds_required(n, param, eps_exp);
            println!("{}", plan.slots);
            eprintln!(
                "{} slots (key digits 0..={}) for n={n}, p={p}, failure 1e-{eps_exp}",
                plan.slots, plan.key_index
            );
        }
        Command::Simulate { n, p, l, seed, trace, out } => {
            let param = GeoParam::new(p)?;
            if n < 1 {
                return Err(Error::invalid("n", "need n >= 1"));
            }
            let l = l.unwrap_or_else(|| analytics::rounds_required(n.max(2), param, 20.0).key_index);
            let mut rng = stream(seed, 0);
            let (survivor_count, trace_data) = protocol::lge_phase(n, param, l, &mut rng)?;
            if let Some(path) = &trace {
                let file = File::create(resolve_output(path))?;
                trace_data.write_csv(file)?;
            }
            let summary = protocol::PhaseSummary {
                n,
                p,
                l,
                survivor_count,
                slots: 2 * (l + 1),
            };
            emit_json(&out.output, &summary)?;
            eprintln!("{survivor_count} survivor(s) in {} slots", 2 * (l + 1));
        }
        Command::Montecarlo { target, n, p, c, l, trials, seed, format, out } => {
            let param = GeoParam::new(p)?;
            let reports = match target {
                McTarget::Pmf => montecarlo::estimate_survivor_pmf(n, param, trials, seed)?,
                McTarget::MaxTail => {
                    let c = c.ok_or_else(|| Error::invalid("c", "required for max-tail"))?;
                    vec![montecarlo::estimate_max_tail(n, param, c, trials, seed)?]
                }
                McTarget::Phase => {
                    let l = l.unwrap_or_else(|| {
                        analytics::rounds_required(n.max(2), param, 20.0).key_index
                    });
                    let est = montecarlo::estimate_phase_survivors(n, param, l, trials, seed)?;
                    if est.regime_mismatch {
                        eprintln!(
                            "warning: truncation budget {} — survivor counts are not WGeo-distributed at this L",
                            est.truncation_budget
                        );
                    }
                    est.reports
                }
            };
            match format {
                Format::Json => emit_json(&out.output, &reports)?,
                Format::Csv => {
                    let w = open_output(&out.output)?;
                    montecarlo::write_histogram_csv(&reports, w)?;
                }
            }
            eprintln!("{} report(s) over {trials} trials", reports.len());
        }
        Command::Msp { l, n, budget, seed, out } => {
            let result = occupancy::msp_search(l, n, budget, seed)?;
            emit_json(&out.output, &result)?;
            if result.budget_exhausted {
                eprintln!("search stopped on budget; value is best-so-far");
            }
            eprintln!(
                "max-min value {} (bound {}), worst Q = {}",
                result.value, result.bound, result.worst_q
            );
        }
        Command::Figure1 { p, n_max, out } => {
            let param = GeoParam::new(p)?;
            if n_max < 1 {
                return Err(Error::invalid("n-max", "need at least one row"));
            }
            let mut w = open_output(&out.output)?;
            writeln!(w, "n,prob")?;
            for n in 1..=n_max {
                writeln!(w, "{n},{}", analytics::survivor_pmf_series(n, param, 1, 1e-16))?;
            }
            eprintln!("{n_max} rows of Pr[W = 1] at p = {p}");
        }
    }
    Ok(())
}
