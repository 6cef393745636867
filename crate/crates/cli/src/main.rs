//! `plnc` — command-line front end for the two-way satellite relaying
//! simulator: Monte Carlo sweeps, analytical bounds, constellation design
//! and signal-set dumps, all emitted as CSV (or JSON) with the resolved
//! configuration embedded as a comment header.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{FileConfig, Resolved};
use plnc_core::analysis::{q_function, total_bound, BoundScenario};
use plnc_core::constellation::{superpose, Constellation};
use plnc_core::links::cascade_snr;
use plnc_core::mapping::{dmin_sq_analytic, select_map, DenoiseMap};
use plnc_core::packing::{greedy_pack, papr};
use plnc_core::simulator::{sweep, Scheme, CSV_HEADER};

#[derive(Parser)]
#[command(name = "plnc", version, about = "Two-way satellite relaying simulator")]
struct Cli {
    /// TOML configuration file (missing keys fall back to defaults)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads: 0 = all cores, 1 = sequential; never changes results
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output path (default <command>.csv or .json)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep of the configured scenario
    Simulate,
    /// Analytical bounds over the sweep axis
    Bounds,
    /// Greedy sphere-packing constellation design
    Pack {
        /// Number of constellation points
        #[arg(long)]
        cardinality: Option<usize>,
        /// Power limit of the constraint
        #[arg(long)]
        limit: Option<f64>,
        #[arg(long, value_enum)]
        constraint: Option<ConstraintArg>,
        #[arg(long)]
        restarts: Option<u32>,
    },
    /// Signal sets, denoising maps and minimum-distance grids
    Constellation {
        #[command(subcommand)]
        what: ConstellationCmd,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConstraintArg {
    AveragePower,
    PeakPower,
}

#[derive(Subcommand)]
enum ConstellationCmd {
    /// The superposed receive constellation at a given channel phase
    Superposed {
        /// Channel phase shift in radians
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
    /// Print both denoising maps as 4x4 grids
    Maps,
    /// Brute-force and closed-form minimum distance over a phase grid
    DminGrid {
        #[arg(long, default_value_t = 1024)]
        points: usize,
    },
}

enum AppError {
    Config(String),
    Runtime(String),
}

impl From<plnc_core::Error> for AppError {
    fn from(e: plnc_core::Error) -> Self {
        match e {
            plnc_core::Error::InvalidParameter(_) | plnc_core::Error::InvalidConstellation(_) => {
                AppError::Config(e.to_string())
            }
            _ => AppError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_resolved(cli: &Cli) -> Result<Resolved, AppError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
            FileConfig::parse(&text).map_err(AppError::Config)?
        }
        None => FileConfig::default(),
    };
    let mut resolved = file.resolve().map_err(AppError::Config)?;
    if let Some(seed) = cli.seed {
        resolved.seed = seed;
    }
    if let Some(workers) = cli.workers {
        resolved.workers = workers;
    }
    Ok(resolved)
}

fn out_path(cli: &Cli, stem: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| {
        PathBuf::from(match cli.format {
            Format::Csv => format!("{stem}.csv"),
            Format::Json => format!("{stem}.json"),
        })
    })
}

fn run(cli: Cli) -> Result<(), AppError> {
    match &cli.command {
        Command::Simulate => cmd_simulate(&cli),
        Command::Bounds => cmd_bounds(&cli),
        Command::Pack {
            cardinality,
            limit,
            constraint,
            restarts,
        } => cmd_pack(&cli, *cardinality, *limit, *constraint, *restarts),
        Command::Constellation { what } => cmd_constellation(&cli, what),
    }
}

fn cmd_simulate(cli: &Cli) -> Result<(), AppError> {
    let r = load_resolved(cli)?;
    let points = sweep(&r.scenario, &r.sweep, &r.stopping, r.seed, r.workers)?;

    let path = out_path(cli, "simulate");
    match cli.format {
        Format::Csv => {
            let mut text = r.echo_block();
            text.push_str(CSV_HEADER);
            text.push('\n');
            for p in &points {
                text.push_str(&p.csv_row());
                text.push('\n');
            }
            std::fs::write(&path, text)?;
        }
        Format::Json => write_json(&path, &r, &points)?,
    }

    println!(
        "{} {} points over {} ({} dB to {} dB)",
        r.scenario.scheme_str(),
        points.len(),
        r.sweep.axis.as_str(),
        r.sweep.start_db,
        r.sweep.stop_db
    );
    for p in &points {
        let res = &p.result;
        println!(
            "  {:>5} dB  ber={:.4e}  fer={:.4e}  throughput={:.4}  bound={:.4e}  frames={}{}",
            p.axis_db,
            res.ber(),
            res.fer(),
            res.throughput(),
            p.bound,
            res.frames,
            if res.censored { "  censored" } else { "" }
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct BoundsRow {
    scenario: String,
    axis_db: f64,
    p_e_ma: f64,
    p_e_bc: f64,
    p_e_total: f64,
}

fn cmd_bounds(cli: &Cli) -> Result<(), AppError> {
    let r = load_resolved(cli)?;
    let grid = r.sweep.grid()?;
    let mut rows = Vec::with_capacity(grid.len());
    for &value_db in &grid {
        let budget = r.sweep.axis.apply(&r.scenario.budget, value_db);
        let row = match r.scenario.scheme {
            Scheme::PlncSync => {
                let b = total_bound(BoundScenario::SyncScaled, &budget)?;
                BoundsRow {
                    scenario: "sync-scaled".into(),
                    axis_db: value_db,
                    p_e_ma: b.p_e_ma,
                    p_e_bc: b.p_e_bc,
                    p_e_total: b.p_e_total,
                }
            }
            Scheme::PlncRandomPhase => {
                let b = total_bound(BoundScenario::RandomPhase, &budget)?;
                BoundsRow {
                    scenario: "random-phase".into(),
                    axis_db: value_db,
                    p_e_ma: b.p_e_ma,
                    p_e_bc: b.p_e_bc,
                    p_e_total: b.p_e_total,
                }
            }
            Scheme::NoPlncBaseline => {
                let ret = q_function(cascade_snr(budget.gamma_ru(), budget.gamma_rd())?.sqrt());
                let fwd = q_function(cascade_snr(budget.gamma_fu(), budget.gamma_fd())?.sqrt());
                BoundsRow {
                    scenario: "no-plnc-baseline".into(),
                    axis_db: value_db,
                    p_e_ma: ret,
                    p_e_bc: fwd,
                    p_e_total: ret + fwd,
                }
            }
        };
        rows.push(row);
    }

    let path = out_path(cli, "bounds");
    match cli.format {
        Format::Csv => {
            let mut text = r.echo_block();
            text.push_str("scenario,gamma_fd_db,p_e_ma,p_e_bc,p_e_total\n");
            for row in &rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    row.scenario, row.axis_db, row.p_e_ma, row.p_e_bc, row.p_e_total
                );
            }
            std::fs::write(&path, text)?;
        }
        Format::Json => write_json(&path, &r, &rows)?,
    }
    println!(
        "bounds for {} over {}: {} rows, total {:.4e} down to {:.4e}",
        rows[0].scenario,
        r.sweep.axis.as_str(),
        rows.len(),
        rows.first().unwrap().p_e_total,
        rows.last().unwrap().p_e_total
    );
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PackMetrics {
    d_min: f64,
    papr: f64,
    e_peak: f64,
    e_avg: f64,
}

fn cmd_pack(
    cli: &Cli,
    cardinality: Option<usize>,
    limit: Option<f64>,
    constraint: Option<ConstraintArg>,
    restarts: Option<u32>,
) -> Result<(), AppError> {
    use plnc_core::packing::PowerConstraint;

    let mut r = load_resolved(cli)?;
    if let Some(n) = cardinality {
        if n != r.pack.cardinality {
            r.pack = plnc_core::packing::PackingProblem::uniform(n, r.pack.constraint);
        }
    }
    let current_limit = match r.pack.constraint {
        PowerConstraint::AveragePower(l) | PowerConstraint::PeakPower(l) => l,
    };
    let limit = limit.unwrap_or(current_limit);
    r.pack.constraint = match (constraint, r.pack.constraint) {
        (Some(ConstraintArg::AveragePower), _) => PowerConstraint::AveragePower(limit),
        (Some(ConstraintArg::PeakPower), _) => PowerConstraint::PeakPower(limit),
        (None, PowerConstraint::AveragePower(_)) => PowerConstraint::AveragePower(limit),
        (None, PowerConstraint::PeakPower(_)) => PowerConstraint::PeakPower(limit),
    };
    if let Some(n) = restarts {
        r.pack_restarts = n;
    }

    let c = greedy_pack(&r.pack, r.seed, r.pack_restarts)?;
    let metrics = PackMetrics {
        d_min: c.min_distance_sq().sqrt(),
        papr: papr(&c)?,
        e_peak: c.peak_energy(),
        e_avg: c.avg_energy(),
    };

    let path = out_path(cli, "pack");
    match cli.format {
        Format::Csv => {
            let mut text = r.echo_block();
            let _ = writeln!(
                text,
                "# d_min = {}, papr = {}, e_peak = {}, e_avg = {}",
                metrics.d_min, metrics.papr, metrics.e_peak, metrics.e_avg
            );
            text.push_str(&c.to_csv());
            std::fs::write(&path, text)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct PackOut<'a> {
                config: FileConfig,
                constellation: &'a Constellation,
                metrics: &'a PackMetrics,
            }
            let out = PackOut {
                config: r.echo(),
                constellation: &c,
                metrics: &metrics,
            };
            std::fs::write(&path, serde_json::to_string_pretty(&out).unwrap())?;
        }
    }
    println!(
        "packed {} points: d_min = {:.6}, PAPR = {:.4}, E_peak = {:.6}, E_avg = {:.6}",
        c.len(),
        metrics.d_min,
        metrics.papr,
        metrics.e_peak,
        metrics.e_avg
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_constellation(cli: &Cli, what: &ConstellationCmd) -> Result<(), AppError> {
    let r = load_resolved(cli)?;
    match what {
        ConstellationCmd::Superposed { theta } => {
            let q = Constellation::qpsk();
            let s = superpose(&q, &q, *theta)?;
            let map = select_map(*theta);
            // label = the map value when the point decodes unambiguously
            let mut text = r.echo_block();
            let _ = writeln!(text, "# theta = {theta}, map = {}", map.name());
            text.push_str("label,re,im,probability\n");
            let tags = s.pair_tags().expect("superposed constellation is tagged");
            for (i, p) in s.points().iter().enumerate() {
                let clusters: Vec<u8> = tags[i]
                    .iter()
                    .map(|&(ma, mb)| map.cluster_of(ma, mb))
                    .collect();
                let label = if clusters.iter().all(|&c| c == clusters[0]) {
                    clusters[0] as usize
                } else {
                    i
                };
                let _ = writeln!(text, "{label},{},{},{}", p.re, p.im, s.probabilities()[i]);
            }
            let path = out_path(cli, "superposed");
            std::fs::write(&path, text)?;
            println!(
                "superposed constellation at theta = {theta}: {} points, map {}",
                s.len(),
                map.name()
            );
            println!("wrote {}", path.display());
        }
        ConstellationCmd::Maps => {
            print!("{}", DenoiseMap::c0());
            println!();
            print!("{}", DenoiseMap::c1());
        }
        ConstellationCmd::DminGrid { points } => {
            if *points < 2 {
                return Err(AppError::Config("dmin-grid needs at least 2 points".into()));
            }
            let q = Constellation::qpsk();
            let c0 = DenoiseMap::c0();
            let mut text = r.echo_block();
            text.push_str("theta_rad,dmin2_adaptive,dmin2_fixed_c0,dmin2_analytic\n");
            for k in 0..*points {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / *points as f64;
                let s = superpose(&q, &q, theta)?;
                let adaptive = select_map(theta);
                let da = s.min_cross_cluster_distance_sq(|a, b| adaptive.cluster_of(a, b))?;
                let d0 = s.min_cross_cluster_distance_sq(|a, b| c0.cluster_of(a, b))?;
                let _ = writeln!(text, "{theta},{da},{d0},{}", dmin_sq_analytic(theta, 1.0));
            }
            let path = out_path(cli, "dmin_grid");
            std::fs::write(&path, text)?;
            println!("wrote {} ({} grid points)", path.display(), points);
        }
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &PathBuf, r: &Resolved, payload: &T) -> Result<(), AppError> {
    #[derive(Serialize)]
    struct JsonOut<'a, T> {
        config: FileConfig,
        results: &'a T,
    }
    let out = JsonOut {
        config: r.echo(),
        results: payload,
    };
    std::fs::write(path, serde_json::to_string_pretty(&out).unwrap())?;
    Ok(())
}
