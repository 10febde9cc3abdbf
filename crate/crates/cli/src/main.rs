use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ocsmatch::harness::enumerate::{bound_table, enumerate_float, round_limit};
use ocsmatch::harness::experiment::run_experiment;
use ocsmatch::harness::generators;
use ocsmatch::harness::Instance;
use ocsmatch::lp::{build_lp, share_table_csv, solve_lp};
use ocsmatch::ocs::{OcsVariant, Pair};
use ocsmatch::primal_dual::params::LOAD_TOLERANCE;
use ocsmatch::GainShareParams;

mod expr;

#[derive(Parser)]
#[command(name = "ocsmatch", version, about = "Online correlated selection and edge-weighted online matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the finite gain-sharing LP.
    SolveLp {
        /// OCS quality, e.g. `1/16` or `1/(3*sqrt(3))`.
        #[arg(long)]
        gamma: String,
        #[arg(long, default_value = "3/2")]
        kappa: String,
        #[arg(long, default_value_t = 7)]
        kmax: usize,
        /// JSON output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the (k, a, b) table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the matcher on an instance.
    RunMatch {
        #[arg(long)]
        instance: PathBuf,
        /// Parameter JSON, or `table-original` / `table-improved`.
        #[arg(long)]
        params: String,
        #[arg(long, default_value = "improved")]
        ocs: OcsVariant,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-round JSON-lines log of the dual updates.
        #[arg(long)]
        audit_log: Option<PathBuf>,
    },
    /// Enumerate an OCS on a pair sequence and compare with its bound.
    VerifyOcs {
        #[arg(long)]
        variant: OcsVariant,
        /// JSON list of candidate pairs, e.g. `[[0,1],[0,2]]`.
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Emit JSON instead of a text table.
        #[arg(long)]
        json: bool,
    },
    /// Generate an instance.
    Gen {
        #[arg(long)]
        family: Family,
        /// Offline vertex count.
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Online vertex count (random family).
        #[arg(long)]
        n_online: Option<usize>,
        /// Comma-separated increasing weight levels (layers family).
        #[arg(long, default_value = "1,2,4")]
        levels: String,
        #[arg(long, default_value_t = 10)]
        max_weight: u32,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Family {
    Triangular,
    Layers,
    Random,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SolveLp { gamma, kappa, kmax, out, csv } => {
            let gamma = expr::eval(&gamma).context("--gamma")?;
            let kappa = expr::eval(&kappa).context("--kappa")?;
            let sol = solve_lp(&build_lp(gamma, kappa, kmax)?)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&sol)?)?;
            if let Some(path) = csv {
                write(&path, &share_table_csv(&sol.params))?;
            }
        }
        Command::RunMatch { instance, params, ocs, trials, seed, report, audit_log } => {
            let inst = Instance::load(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let params = load_params(&params)?;
            let (rep, schedule) = run_experiment(&inst, &params, ocs, trials, seed)?;
            emit(report.as_deref(), &serde_json::to_string_pretty(&rep)?)?;
            if let Some(path) = audit_log {
                let mut text = String::new();
                for rec in schedule.audit_log() {
                    text.push_str(&serde_json::to_string(&rec)?);
                    text.push('\n');
                }
                write(&path, &text)?;
            }
            eprintln!(
                "mean {:.6} +- {:.6}, OPT {}, ratio {}, violations {}",
                rep.mean_value,
                rep.stderr_value,
                rep.opt,
                rep.mean_ratio.map_or("n/a".into(), |r| format!("{r:.6}")),
                rep.violations()
            );
        }
        Command::VerifyOcs { variant, sequence, tolerance, json } => {
            let text = fs::read_to_string(&sequence).with_context(|| format!("reading {}", sequence.display()))?;
            let raw: Vec<(usize, usize)> = serde_json::from_str(&text).context("sequence must be a list of pairs")?;
            if raw.len() > round_limit(variant) {
                bail!("{variant} enumeration is limited to {} rounds, got {}", round_limit(variant), raw.len());
            }
            let pairs = raw
                .iter()
                .enumerate()
                .map(|(t, &(a, b))| Pair::new(t, a, b))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = bound_table(variant, &pairs, tolerance)?;
            let marginals: Vec<f64> = {
                let en = enumerate_float(variant, &pairs)?;
                (0..pairs.len()).map(|t| en.first_chosen(t)).collect()
            };
            if json {
                let out = serde_json::json!({ "variant": variant, "rows": rows, "first_chosen": marginals });
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                let mut out = std::io::stdout().lock();
                writeln!(out, "{:>9}  {:<16} {:<10} {:>12} {:>12}  holds", "candidate", "rounds", "runs", "probability", "bound")?;
                for r in &rows {
                    writeln!(
                        out,
                        "{:>9}  {:<16} {:<10} {:>12.9} {:>12.9}  {}",
                        r.candidate,
                        format!("{:?}", r.rounds),
                        format!("{:?}", r.runs),
                        r.probability,
                        r.bound,
                        r.holds
                    )?;
                }
                writeln!(out, "first-candidate marginals: {marginals:?}")?;
            }
            if rows.iter().any(|r| !r.holds) {
                eprintln!("bound violated in {} of {} rows", rows.iter().filter(|r| !r.holds).count(), rows.len());
            }
        }
        Command::Gen { family, n, n_online, levels, max_weight, density, seed, out } => {
            if n == 0 {
                bail!("--n must be positive");
            }
            let inst = match family {
                Family::Triangular => generators::upper_triangular(n, seed),
                Family::Layers => {
                    let levels = levels
                        .split(',')
                        .map(|l| l.trim().parse::<f64>().with_context(|| format!("level `{l}`")))
                        .collect::<Result<Vec<_>>>()?;
                    if levels.is_empty() || levels[0] <= 0.0 || levels.windows(2).any(|w| w[0] >= w[1]) {
                        bail!("--levels must be positive and strictly increasing");
                    }
                    generators::weighted_layers(n, &levels, seed)
                }
                Family::Random => {
                    if max_weight == 0 || !(0.0..=1.0).contains(&density) {
                        bail!("--max-weight must be positive and --density in [0, 1]");
                    }
                    generators::random(n, n_online.unwrap_or(n), max_weight, density, seed)
                }
            };
            emit(out.as_deref(), &inst.to_json())?;
        }
    }
    Ok(())
}

fn load_params(arg: &str) -> Result<GainShareParams> {
    match arg {
        "table-original" => return Ok(GainShareParams::table_original()),
        "table-improved" => return Ok(GainShareParams::table_improved()),
        _ => {}
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    let params: GainShareParams = serde_json::from_str(&text).context("parameter file")?;
    params.check(LOAD_TOLERANCE).map_err(anyhow::Error::msg).context("parameter file")?;
    Ok(params)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
