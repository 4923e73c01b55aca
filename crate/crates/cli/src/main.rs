use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qsearch::analysis::{b_bound, eta_bound_max_constrained, mu_crit, p_soln_lower_bound};
use qsearch::ensembles::{generate, m_max, m_max_bal, EnsembleKind, EnsembleSpec};
use qsearch::estimators::EstimatorKind;
use qsearch::harness::{run_experiment, solve_file, ExperimentConfig, Figure};
use qsearch::sat::{emit_dimacs, parse_bits};

#[derive(Parser)]
#[command(name = "qsearch", version, about = "Single-step structured quantum search for k-SAT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an instance from a planted-solution ensemble and print it as DIMACS.
    Generate {
        /// Ensemble config file (`n`, `k`, `m`, `kind`, `seed`, `solution`).
        #[arg(long, conflicts_with_all = ["n", "k"])]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        k: Option<u32>,
        /// Clause count; defaults to the ensemble maximum.
        #[arg(long)]
        m: Option<u64>,
        #[arg(long, default_value = "max_constrained")]
        kind: EnsembleKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Planted solution as a bit string, most significant variable first.
        #[arg(long)]
        solution: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one step of the algorithm on a DIMACS file.
    Solve {
        path: PathBuf,
        #[arg(long, default_value = "ml_random")]
        estimator: EstimatorKind,
        #[arg(long)]
        json: bool,
    },
    /// Run a sweep from a config file or a figure preset.
    Experiment {
        #[arg(required_unless_present = "figure")]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        figure: Option<Figure>,
        /// Output directory for rows.csv, summary.csv and summary.json.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
    },
    /// Print ensemble sizes and error bounds for given parameters.
    Bounds {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
        /// Clause count for the ensemble bound.
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        balanced: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { config, n, k, m, kind, seed, solution, output } => {
            let spec = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    EnsembleSpec::from_config(&text)?
                }
                None => {
                    let (Some(n), Some(k)) = (n, k) else { bail!("--n and --k are required without --config") };
                    let m = match m {
                        Some(m) => m,
                        None => kind.max_clauses(n, k)?,
                    };
                    let spec = EnsembleSpec::new(n, k, m, kind, seed)?;
                    match solution {
                        Some(bits) => {
                            let (a, len) = parse_bits(&bits).context("solution must be a bit string")?;
                            if len != n {
                                bail!("solution has {len} bits, expected {n}");
                            }
                            spec.with_solution(a)?
                        }
                        None => spec,
                    }
                }
            };
            let dimacs = emit_dimacs(&generate(&spec)?);
            match output {
                Some(path) => std::fs::write(&path, dimacs).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{dimacs}"),
            }
        }
        Command::Solve { path, estimator, json } => {
            let report = solve_file(&path, estimator)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
        }
        Command::Experiment { config, figure, output, instances, base_seed } => {
            let mut cfg = match (config, figure) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    ExperimentConfig::from_config(&text)?
                }
                (None, Some(fig)) => ExperimentConfig::preset(fig),
                (None, None) => unreachable!("clap requires one of config or figure"),
            };
            if let Some(i) = instances {
                cfg.instances = i;
            }
            if let Some(s) = base_seed {
                cfg.base_seed = s;
            }
            if output.is_some() {
                cfg.output = output;
            }
            cfg.validate()?;
            let result = run_experiment(&cfg)?;
            for s in &result.skipped {
                eprintln!("skipped n={} k={} m={} {}: {}", s.n, s.k, s.m_rule, s.ensemble, s.reason);
            }
            match &cfg.output {
                Some(dir) => {
                    result.write_to(dir)?;
                    eprintln!("wrote {}", dir.display());
                }
                None => print!("{}", result.summary_csv()),
            }
            for c in &result.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if !result.all_checks_passed() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bounds { n, k, m, balanced } => {
            println!("m_max = {}", m_max(n, k)?);
            println!("m_max_bal = {}", m_max_bal(n, k)?);
            match mu_crit(k) {
                Ok(mu) => println!("mu_crit = {mu:.6}"),
                Err(_) => println!("mu_crit = n/a (k < 2)"),
            }
            match eta_bound_max_constrained(n, k) {
                Some(b) => println!(
                    "maximal eta bound = {b:.6e}, P_soln >= {:.12}",
                    p_soln_lower_bound(b)
                ),
                None => println!("maximal eta bound = n/a (n - k + 3 < n/2)"),
            }
            if let Some(m) = m {
                let bound = b_bound(n, k, m, balanced)?;
                println!("B = {:.6e}, P_soln >= {:.12}", bound.b, bound.p_soln_lower_bound());
                println!("2 p_(n/2) = {:.6e}", bound.asymptotic);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
