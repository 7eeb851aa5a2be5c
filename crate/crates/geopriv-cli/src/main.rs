//! Command-line driver for the geopriv library: sampling, loss
//! evaluation, privacy checking, LP construction and solving, prior
//! building, and the epsilon-sweep experiments.
//!
//! Exit codes: 0 success, 1 completed with flagged rows, 2 bad
//! configuration or input.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geopriv::experiment::{
    read_sweep_csv, run_remap_comparison, run_sweep_comparison, summarize, write_plot_csv,
    write_remap_csv, write_sweep_csv, EpsilonRange, ExperimentConfig, PriorSource,
    SyntheticPrior,
};
use geopriv::grid::GridSpec;
use geopriv::lp::{build_lp, check_mechanism_privacy, solve_lp};
use geopriv::prior::{build_prior, parse_checkins};
use geopriv::radial::TailMode;
use geopriv::{
    DiscreteMechanism, DistinguishabilityFn, Execution, GeoGrid, LossFn, PlanarLaplace, Prior,
    Radial, RngState,
};

#[derive(Parser)]
#[command(
    name = "geopriv",
    version,
    about = "Location obfuscation: calibrated planar noise, LP-built cell mechanisms, \
             remapping, and utility/privacy sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw noise vectors from the planar Laplace mechanism.
    Sample {
        /// Privacy parameter in 1/km.
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV (r_km, theta_rad, dx_km, dy_km).
        #[arg(long)]
        out: PathBuf,
    },
    /// Expected loss of the planar Laplace noise (or a tabulated radial).
    EvalLoss {
        #[arg(long)]
        epsilon: Option<f64>,
        /// Tabulated radial CSV (r_km,density) instead of --epsilon.
        #[arg(long)]
        radial: Option<PathBuf>,
        /// 'linear', 'step:<km>', or 'csv:<path>'.
        #[arg(long, default_value = "linear")]
        loss: String,
    },
    /// Verify the ratio bounds of a mechanism CSV on a grid.
    CheckPrivacy {
        #[arg(long)]
        mechanism: PathBuf,
        /// Grid spec JSON.
        #[arg(long)]
        grid: PathBuf,
        /// 'linear:<eps>', 'drestricted:<eps>:<d_km>', or 'csv:<path>'.
        #[arg(long)]
        ell: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Construct the mechanism LP and export it in LP text format.
    BuildLp {
        #[command(flatten)]
        problem: ProblemArgs,
        /// LP-format output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the mechanism LP and write the optimal mechanism CSV.
    SolveLp {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Mechanism CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON with objective and certificates.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Build a user's prior from a check-in file.
    Prior {
        #[arg(long)]
        checkins: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        user: u64,
        /// Prior CSV output (cell_index,weight).
        #[arg(long)]
        out: PathBuf,
        /// Ingestion stats JSON output.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Epsilon sweep comparing additive Laplace vs LP mechanisms.
    Sweep {
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Epsilon sweep comparing nearest vs posterior remapping.
    RemapEval {
        #[command(flatten)]
        experiment: ExperimentArgs,
    },
    /// Summarize sweep rows into JSON and a plot-ready CSV.
    Report {
        /// Sweep CSV produced by `geopriv sweep`.
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Grid spec JSON.
    #[arg(long)]
    grid: PathBuf,
    /// Prior CSV (cell_index,weight); uniform when omitted.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// 'linear:<eps>', 'drestricted:<eps>:<d_km>', or 'csv:<path>'.
    #[arg(long)]
    ell: String,
    /// 'linear', 'step:<km>', or 'csv:<path>'.
    #[arg(long, default_value = "linear")]
    loss: String,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON; flag overrides apply on top.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon_start: Option<f64>,
    #[arg(long)]
    epsilon_stop: Option<f64>,
    #[arg(long)]
    epsilon_step: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Check-in file for building priors (with --users).
    #[arg(long)]
    checkins: Option<PathBuf>,
    /// Comma-separated user ids from the check-in file.
    #[arg(long, value_delimiter = ',')]
    users: Vec<u64>,
    /// Grid as COLSxROWS over the demo region, e.g. 8x6.
    #[arg(long)]
    grid: Option<String>,
    /// Paper-scale defaults: 8x6 grid for sweep, 80x60 for remap-eval,
    /// full epsilon range.
    #[arg(long)]
    full: bool,
    /// Output directory for the CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn parse_ell_spec(spec: &str) -> geopriv::Result<DistinguishabilityFn> {
    if let Some(rest) = spec.strip_prefix("linear:") {
        let eps: f64 = rest
            .parse()
            .map_err(|_| geopriv::Error::Config(format!("bad epsilon '{rest}'")))?;
        return DistinguishabilityFn::linear(eps);
    }
    if let Some(rest) = spec.strip_prefix("drestricted:") {
        let mut parts = rest.split(':');
        let eps: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| geopriv::Error::Config(format!("bad spec '{spec}'")))?;
        let d: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| geopriv::Error::Config(format!("bad spec '{spec}'")))?;
        return DistinguishabilityFn::d_restricted(eps, d);
    }
    if let Some(path) = spec.strip_prefix("csv:") {
        let file = File::open(path)?;
        return DistinguishabilityFn::from_csv(BufReader::new(file));
    }
    Err(geopriv::Error::Config(format!(
        "unknown budget spec '{spec}' (expected 'linear:<eps>', 'drestricted:<eps>:<d>', 'csv:<path>')"
    )))
}

fn load_grid(path: &Path) -> geopriv::Result<GeoGrid> {
    let file = File::open(path)?;
    let spec: GridSpec = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| geopriv::Error::Config(format!("bad grid spec: {e}")))?;
    spec.to_grid()
}

fn load_problem(
    args: &ProblemArgs,
) -> geopriv::Result<(GeoGrid, Prior, DistinguishabilityFn, LossFn)> {
    let grid = load_grid(&args.grid)?;
    let prior = match &args.prior {
        Some(path) => {
            let file = File::open(path)?;
            Prior::from_csv(BufReader::new(file))?
        }
        None => Prior::uniform(grid.len()),
    };
    let ell = parse_ell_spec(&args.ell)?;
    let loss = geopriv::experiment::parse_loss_spec(&args.loss)?;
    Ok((grid, prior, ell, loss))
}

fn resolve_config(args: &ExperimentArgs, remap: bool) -> geopriv::Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let file = File::open(path)?;
            serde_json::from_reader(BufReader::new(file))
                .map_err(|e| geopriv::Error::Config(format!("bad config: {e}")))?
        }
        None => {
            let la = geopriv::Region::los_angeles();
            ExperimentConfig {
                grid: GridSpec {
                    lat_min: la.lat_min,
                    lat_max: la.lat_max,
                    lon_min: la.lon_min,
                    lon_max: la.lon_max,
                    cols: 4,
                    rows: 3,
                },
                epsilon: EpsilonRange::paper_default(),
                prior: PriorSource::Synthetic { style: SyntheticPrior::TwoCluster },
                loss: "linear".into(),
                seed: 42,
                mc_samples: 100_000,
            }
        }
    };
    if args.full {
        if remap {
            config.grid.cols = 80;
            config.grid.rows = 60;
        } else {
            config.grid.cols = 8;
            config.grid.rows = 6;
        }
        config.epsilon = EpsilonRange::paper_default();
    }
    if let Some(s) = args.epsilon_start {
        config.epsilon.start = s;
    }
    if let Some(s) = args.epsilon_stop {
        config.epsilon.stop = s;
    }
    if let Some(s) = args.epsilon_step {
        config.epsilon.step = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(g) = &args.grid {
        let (c, r) = g
            .split_once('x')
            .and_then(|(c, r)| Some((c.parse().ok()?, r.parse().ok()?)))
            .ok_or_else(|| {
                geopriv::Error::Config(format!("bad grid '{g}', expected COLSxROWS"))
            })?;
        config.grid.cols = c;
        config.grid.rows = r;
    }
    if let Some(path) = &args.checkins {
        if args.users.is_empty() {
            return Err(geopriv::Error::Config("--checkins requires --users".into()));
        }
        config.prior = PriorSource::Checkins { path: path.clone(), users: args.users.clone() };
    }
    Ok(config)
}

fn run(cli: Cli) -> geopriv::Result<ExitCode> {
    match cli.command {
        Command::Sample { epsilon, count, seed, out } => {
            let mech = PlanarLaplace::new(epsilon)?;
            let mut rng = RngState::new(seed);
            let mut w = BufWriter::new(File::create(&out)?);
            writeln!(w, "r_km,theta_rad,dx_km,dy_km")?;
            for _ in 0..count {
                let v = mech.sample(&mut rng);
                writeln!(w, "{:.9},{:.9},{:.9},{:.9}", v.r, v.theta, v.dx(), v.dy())?;
            }
            w.flush()?;
            eprintln!("wrote {count} samples to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::EvalLoss { epsilon, radial, loss } => {
            let loss = geopriv::experiment::parse_loss_spec(&loss)?;
            let radial = match (epsilon, radial) {
                (Some(eps), None) => PlanarLaplace::new(eps)?.radial(),
                (None, Some(path)) => {
                    let file = File::open(path)?;
                    Radial::from_csv(BufReader::new(file), TailMode::Zero)?
                }
                _ => {
                    return Err(geopriv::Error::Config(
                        "pass exactly one of --epsilon or --radial".into(),
                    ))
                }
            };
            let value = radial.expected_loss(&loss)?;
            println!("{}", serde_json::json!({ "expected_loss_km": value }));
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckPrivacy { mechanism, grid, ell, tol } => {
            let mech = DiscreteMechanism::from_csv(BufReader::new(File::open(&mechanism)?))?;
            let grid = load_grid(&grid)?;
            let ell = parse_ell_spec(&ell)?;
            let out = check_mechanism_privacy(&mech, &grid, &ell, tol)?;
            println!(
                "{}",
                serde_json::json!({
                    "holds": out.holds,
                    "worst_log_ratio_excess": out.worst_excess,
                    "worst_violation": out.worst_violation,
                })
            );
            Ok(if out.holds { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::BuildLp { problem, out } => {
            let (grid, prior, ell, loss) = load_problem(&problem)?;
            let inst = build_lp(&grid, &prior, &ell, &loss)?;
            let mut w = BufWriter::new(File::create(&out)?);
            inst.write_lp_format(&mut w)?;
            w.flush()?;
            println!(
                "{}",
                serde_json::json!({
                    "cells": inst.num_cells(),
                    "variables": inst.variable_count(),
                    "inequalities": inst.inequality_count(),
                    "equalities": inst.equality_count(),
                })
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveLp { problem, tol, out, summary } => {
            let (grid, prior, ell, loss) = load_problem(&problem)?;
            let inst = build_lp(&grid, &prior, &ell, &loss)?;
            let sol = solve_lp(&inst, tol)?;
            let mut w = BufWriter::new(File::create(&out)?);
            sol.mechanism.to_csv(&mut w)?;
            w.flush()?;
            let report = serde_json::json!({
                "objective_km": sol.objective,
                "lp_objective_km": sol.lp_objective,
                "optimality_gap_bound": sol.optimality_gap_bound,
                "iterations": sol.iterations,
                "relaxed_constraints": sol.relaxed_constraints,
            });
            if let Some(path) = summary {
                std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            println!("{report}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Prior { checkins, grid, user, out, stats } => {
            let grid = load_grid(&grid)?;
            let file = File::open(&checkins)?;
            let (records, report) = parse_checkins(BufReader::new(file))?;
            let (prior, pstats) = build_prior(&records, &grid, user)?;
            let mut w = BufWriter::new(File::create(&out)?);
            prior.to_csv(&mut w)?;
            w.flush()?;
            let json = serde_json::json!({
                "user": user,
                "total": pstats.total,
                "in_region": pstats.in_region,
                "dropped": pstats.dropped,
                "malformed_rows": report.malformed.len(),
            });
            if let Some(path) = stats {
                std::fs::write(path, serde_json::to_string_pretty(&json)? + "\n")?;
            }
            println!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { experiment } => {
            let config = resolve_config(&experiment, false)?;
            std::fs::create_dir_all(&experiment.out_dir)?;
            let outcome = run_sweep_comparison(&config, Execution::Parallel)?;
            let path = experiment.out_dir.join("sweep.csv");
            let mut w = BufWriter::new(File::create(&path)?);
            write_sweep_csv(&outcome.rows, &mut w)?;
            w.flush()?;
            let summary = summarize(&outcome.rows)?;
            let spath = experiment.out_dir.join("sweep_summary.json");
            std::fs::write(&spath, serde_json::to_string_pretty(&summary)? + "\n")?;
            eprintln!("wrote {} and {}", path.display(), spath.display());
            Ok(if outcome.any_flagged { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::RemapEval { experiment } => {
            let config = resolve_config(&experiment, true)?;
            std::fs::create_dir_all(&experiment.out_dir)?;
            let outcome = run_remap_comparison(&config, Execution::Parallel)?;
            let path = experiment.out_dir.join("remap.csv");
            let mut w = BufWriter::new(File::create(&path)?);
            write_remap_csv(&outcome.rows, &mut w)?;
            w.flush()?;
            eprintln!("wrote {}", path.display());
            Ok(if outcome.any_flagged { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Report { rows, summary, plot } => {
            let parsed = read_sweep_csv(BufReader::new(File::open(&rows)?))?;
            let s = summarize(&parsed)?;
            std::fs::write(&summary, serde_json::to_string_pretty(&s)? + "\n")?;
            if let Some(plot) = plot {
                let mut w = BufWriter::new(File::create(&plot)?);
                write_plot_csv(&parsed, &mut w)?;
                w.flush()?;
            }
            println!("{}", serde_json::to_string(&s)?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e @ geopriv::Error::Config(_)) | Err(e @ geopriv::Error::Parse(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
