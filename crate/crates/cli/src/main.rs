use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use ipg_core::bench::{run_bench, solve, verify_record, BenchConfig, RunRecord, RunStatus, SolveMethod, SolveOptions, Suite};
use ipg_core::games::{keg, knapsack, lotsizing, DuopolyGame, KegGame};
use ipg_core::instance::Instance;
use ipg_core::pns::SizeRule;

const EXIT_CODES: &str = "Exit codes:
  0  success (solve: verified equilibrium)
  1  internal or solver failure
  2  usage error or invalid input
  3  iteration or time limit reached
  4  oracle verification failed";

#[derive(Parser)]
#[command(name = "ipg", version, about = "Equilibria of integer programming games", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GameKind {
    Knapsack,
    Keg,
    Lotsizing,
    Duopoly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Guided,
    Literal,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    #[command(after_help = EXIT_CODES)]
    Gen {
        #[arg(long, value_enum)]
        game: GameKind,
        /// Items per player (knapsack).
        #[arg(long)]
        n: Option<usize>,
        /// Number of players (knapsack, lotsizing).
        #[arg(long)]
        m: Option<usize>,
        /// Budget tightness 0..=9 (knapsack).
        #[arg(long, default_value_t = 5)]
        ins: u32,
        /// Periods (lotsizing).
        #[arg(long = "T", alias = "periods")]
        periods: Option<usize>,
        /// Vertices (keg).
        #[arg(long)]
        vertices: Option<usize>,
        /// Arc probability (keg); defaults to about four arcs per vertex.
        #[arg(long)]
        density: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and verify the result.
    #[command(after_help = EXIT_CODES)]
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "msgm", value_parser = parse_method)]
        method: SolveMethod,
        /// Deviation tolerance; 0 for knapsack and keg, 1e-6 otherwise.
        #[arg(long)]
        eps: Option<f64>,
        /// Seconds.
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, value_enum, default_value = "guided")]
        size_rule: Rule,
        /// Write the run record here instead of standard output.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Re-check a run record against its instance.
    #[command(after_help = EXIT_CODES)]
    Verify {
        instance: PathBuf,
        record: PathBuf,
        /// Override the record's tolerance.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run a benchmark suite and write CSV.
    #[command(after_help = EXIT_CODES)]
    Bench {
        /// knapsack-2p, knapsack-3p, keg, lotsizing, ce-knapsack or direct-pns.
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        /// Size groups, comma separated; two-parameter groups as AxB
        /// (lotsizing: m x T, ce-knapsack and direct-pns: n x m).
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        /// Seconds per run.
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<SolveMethod, String> {
    s.parse().map_err(|e: ipg_core::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: ipg_core::Error| e.to_string())
}

/// Parses `20,40` or `2x10,3x50`.
fn parse_sizes(s: &str) -> anyhow::Result<Vec<Vec<usize>>> {
    s.split(',')
        .map(|g| g.trim().split('x').map(|v| v.trim().parse::<usize>().with_context(|| format!("bad size {g:?}"))).collect())
        .collect()
}

fn duration(secs: f64) -> anyhow::Result<Duration> {
    if !(secs.is_finite() && secs > 0.0) {
        bail!("time limit must be a positive number of seconds");
    }
    Ok(Duration::from_secs_f64(secs))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Instance::from_json(&text)?)
}

/// Failure with a chosen exit code.
struct Exit(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = match e.downcast_ref::<ipg_core::Error>() {
            Some(ipg_core::Error::Internal(_) | ipg_core::Error::SolverFailure(_)) => 1,
            _ => 2,
        };
        Exit(code, e)
    }
}

fn need(v: Option<usize>, flag: &str) -> Result<usize, Exit> {
    match v {
        Some(x) if x > 0 => Ok(x),
        _ => Err(Exit(2, anyhow::anyhow!("--{flag} must be given as a positive integer"))),
    }
}

fn run(cli: Cli) -> Result<u8, Exit> {
    match cli.command {
        Command::Gen { game, n, m, ins, periods, vertices, density, seed, out } => {
            let inst = match game {
                GameKind::Knapsack => {
                    if ins > 9 {
                        return Err(Exit(2, anyhow::anyhow!("--ins must be between 0 and 9")));
                    }
                    Instance::Knapsack(knapsack::generate(need(n, "n")?, need(m, "m")?, ins, seed))
                }
                GameKind::Keg => {
                    let v = need(vertices, "vertices")?;
                    let d = density.unwrap_or_else(|| keg::default_density(v));
                    if !(0.0..=1.0).contains(&d) {
                        return Err(Exit(2, anyhow::anyhow!("--density must lie in [0, 1]")));
                    }
                    Instance::Keg(KegGame::new(keg::generate(v, d, seed), true))
                }
                GameKind::Lotsizing => Instance::LotSizing(lotsizing::generate(need(m, "m")?, need(periods, "T")?, seed)),
                GameKind::Duopoly => Instance::Duopoly(DuopolyGame::new()),
            };
            emit(out.as_deref(), &inst.to_json())?;
            Ok(0)
        }
        Command::Solve { instance, method, eps, time_limit, max_iter, size_rule, out } => {
            let inst = load(&instance)?;
            if let Some(e) = eps {
                if !(e.is_finite() && e >= 0.0) {
                    return Err(Exit(2, anyhow::anyhow!("--eps must be a nonnegative number")));
                }
            }
            let opts = SolveOptions {
                epsilon: eps,
                max_iterations: max_iter.max(1),
                time_limit: duration(time_limit)?,
                size_rule: match size_rule {
                    Rule::Guided => SizeRule::Guided,
                    Rule::Literal => SizeRule::Literal,
                },
                ..SolveOptions::default()
            };
            let id = instance.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let record = solve(&inst, &id, method, &opts)?;
            emit(out.as_deref(), &record.to_json())?;
            Ok(if record.status != RunStatus::Equilibrium {
                3
            } else if !record.verdict.pass {
                4
            } else {
                0
            })
        }
        Command::Verify { instance, record, eps } => {
            let inst = load(&instance)?;
            let text = fs::read_to_string(&record).with_context(|| format!("reading {}", record.display()))?;
            let mut rec = RunRecord::from_json(&text)?;
            if let Some(e) = eps {
                rec.epsilon = e;
            }
            let report = verify_record(&inst, &rec)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(if report.pass { 0 } else { 4 })
        }
        Command::Bench { suite, sizes, instances, time_limit, max_iter, jobs, seed, out } => {
            let mut cfg = BenchConfig::new(suite);
            if let Some(s) = sizes {
                cfg.sizes = parse_sizes(&s)?;
            }
            cfg.instances = instances;
            cfg.time_limit = duration(time_limit)?;
            cfg.max_iterations = max_iter.max(1);
            cfg.jobs = jobs.max(1);
            cfg.seed = seed;
            let report = run_bench(&cfg)?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(out.as_deref(), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
            let limited = report.rows.iter().any(|r| r.record.status != RunStatus::Equilibrium);
            let failed = report.rows.iter().any(|r| r.record.status == RunStatus::Equilibrium && !r.record.verdict.pass);
            Ok(if failed {
                4
            } else if limited {
                3
            } else {
                0
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
