use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use meshless_stokes::config::SimConfig;
use meshless_stokes::dynamics::{RunStatus, TrajectoryRecord};
use meshless_stokes::output::{field_csv, krylov_csv, OutputDir};
use meshless_stokes::pointcloud::jittered_unit_square;
use meshless_stokes::scenarios::{self, build_cloud};
use meshless_stokes::{Error, Result};

#[derive(Parser)]
#[command(name = "meshless-stokes", version, about = "Meshless Stokes solver with rigid colloid coupling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults to the built-in config of the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: out/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reconstruction order, 2 or 4.
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Seed for the randomized test cloud written by cloud-dump.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Manufactured-solution convergence study on the unit square.
    Converge,
    /// Rotating cylinders: Couette oracle and lubrication force trend.
    Cylinders,
    /// Disk in a Poiseuille channel: drag, linearity and drift.
    Channel,
    /// Two free disks in shear flow.
    Shear,
    /// Square colloid through a notched channel.
    Notch,
    /// Writes the point cloud of the configuration.
    CloudDump,
    /// One solve of the configuration as written.
    SolveOnce,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Converge => "converge",
            Command::Cylinders => "cylinders",
            Command::Channel => "channel",
            Command::Shear => "shear",
            Command::Notch => "notch",
            Command::CloudDump => "cloud-dump",
            Command::SolveOnce => "solve-once",
        }
    }

    fn preset(self) -> &'static str {
        match self {
            Command::CloudDump | Command::SolveOnce => "quiescent",
            other => other.name(),
        }
    }
}

fn load_config(cmd: Command, common: &Common) -> Result<SimConfig> {
    let mut cfg = match &common.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::preset(cmd.preset())?,
    };
    if let Some(m) = common.order {
        cfg.order = m;
    }
    if let Some(dt) = common.dt {
        cfg.time.dt = dt;
    }
    if let Some(n) = common.steps {
        cfg.time.steps = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_trajectory(out: &OutputDir, record: &TrajectoryRecord) -> Result<()> {
    out.write("trajectory.csv", &record.to_csv())?;
    out.write("diagnostics.csv", &record.diagnostics_csv())
}

fn run(cmd: Command, common: &Common) -> Result<()> {
    let cfg = load_config(cmd, common)?;
    let root = common.out.clone().unwrap_or_else(|| PathBuf::from("out").join(cmd.name()));
    let mut out = OutputDir::new(root);
    out.write("config.toml", &cfg.to_toml())?;
    let mut failure = None;
    match cmd {
        Command::Converge => {
            let r = scenarios::run_convergence(&cfg)?;
            out.write("convergence.csv", &r.to_csv())?;
            out.write("krylov.csv", &krylov_csv(r.rows.iter().map(|row| &row.report)))?;
            r.summary().into_iter().for_each(|v| out.record(v));
        }
        Command::Cylinders => {
            let r = scenarios::run_cylinders(&cfg)?;
            out.write("field.csv", &field_csv(&r.field.cloud, &r.field.solve.solution))?;
            out.write("lubrication.csv", &r.lubrication_csv())?;
            out.write("krylov.csv", &krylov_csv([&r.field.solve.report]))?;
            r.summary().into_iter().for_each(|v| out.record(v));
        }
        Command::Channel => {
            let r = scenarios::run_channel(&cfg)?;
            out.write("field.csv", &field_csv(&r.free.cloud, &r.free.solve.solution))?;
            out.write("krylov.csv", &krylov_csv([&r.free.solve.report]))?;
            r.summary().into_iter().for_each(|v| out.record(v));
        }
        Command::Shear => {
            let r = scenarios::run_shear(&cfg)?;
            write_trajectory(&out, &r.trajectory)?;
            r.summary().into_iter().for_each(|v| out.record(v));
            if let RunStatus::Failed(e) = &r.trajectory.status {
                failure = Some(e.clone());
            }
        }
        Command::Notch => {
            let r = scenarios::run_notch(&cfg)?;
            write_trajectory(&out, &r.trajectory)?;
            r.summary().into_iter().for_each(|v| out.record(v));
            if let RunStatus::Failed(e) = &r.trajectory.status {
                failure = Some(e.clone());
            }
        }
        Command::CloudDump => {
            let cloud = match common.seed {
                Some(seed) => {
                    let n = (1.0 / cfg.refinement.dx_inf).round().max(2.0) as usize;
                    let mut c = jittered_unit_square(n, 0.25, seed);
                    c.prepare(cfg.order)?;
                    c
                }
                None => build_cloud(&cfg.geometry.outer, &cfg.geometry.colloids, &cfg.refinement, cfg.order)?,
            };
            out.write("cloud.csv", &cloud.to_csv())?;
            out.record(json!({"scenario": "cloud-dump", "points": cloud.len(), "seed": common.seed}));
        }
        Command::SolveOnce => {
            let r = scenarios::solve_once(&cfg)?;
            out.write("field.csv", &field_csv(&r.cloud, &r.solve.solution))?;
            out.write("krylov.csv", &krylov_csv([&r.solve.report]))?;
            out.record(r.summary("solve-once", "configured"));
        }
    }
    out.finish()?;
    match failure {
        Some(e) => Err(Error::Usage(format!("run ended early: {e}"))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
