//! Command-line front end: forward simulation, reconstruction, error sweeps,
//! ray diagnostics, and run manifests.

// parameter checks are written as `!(x > 0.0)` so NaN is rejected along with
// out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use config::RunConfig;
use manifest::ManifestBuilder;
use tatrec::{
    build_sensor_ring, classify_trapping, default_seed_lattice, error_sweep, io, reverse,
    sample_field, simulate_forward, trace_ray, DiscMask, Grid, ReversalParams, SimParams, Snapshot,
    SweepParams, Verdict,
};

/// Exit codes: 0 ok, 2 configuration, 3 instability, 4 insufficient data,
/// 5 trapping detected.
const EXIT_CONFIG: u8 = 2;
const EXIT_INSTABILITY: u8 = 3;
const EXIT_INSUFFICIENT: u8 = 4;
const EXIT_TRAPPING: u8 = 5;

#[derive(Parser)]
#[command(
    name = "tatrec",
    version,
    about = "2D thermoacoustic tomography: forward simulation and time-reversal reconstruction"
)]
struct Cli {
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and record the boundary trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write CSV views.
        #[arg(long)]
        csv: bool,
    },
    /// Reconstruct the initial pressure from a recorded trace.
    Reconstruct {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Cutoff time (overrides the config).
        #[arg(long = "T")]
        t: Option<f64>,
        /// Cutoff width (overrides the config).
        #[arg(long)]
        eps: Option<f64>,
        /// Snapshot metadata file for exact-mode reversal.
        #[arg(long)]
        exact_snapshot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Reconstruct at a list of cutoff times and fit the error decay rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Comma-separated cutoff times (overrides the config).
        #[arg(long = "T-list", value_delimiter = ',')]
        t_list: Option<Vec<f64>>,
        #[arg(long)]
        eps: Option<f64>,
        /// "l2" or "h1" (overrides the config).
        #[arg(long)]
        norm: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the configured speed as trapping or non-trapping by tracing
    /// a deterministic lattice of rays.
    Rays {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2.0)]
        r_escape: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a complete run configuration with every default spelled out.
    PrintDefaultConfig {
        /// One of: fig2, fig3, fig4, fig5.
        #[arg(long)]
        preset: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify_error(&err))
        }
    }
}

fn classify_error(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<tatrec::Error>() {
        Some(tatrec::Error::Instability { .. }) => EXIT_INSTABILITY,
        Some(tatrec::Error::InsufficientData(_)) => EXIT_INSUFFICIENT,
        _ => EXIT_CONFIG,
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Simulate { config, out, csv } => cmd_simulate(&config, out, csv),
        Command::Reconstruct {
            config,
            trace,
            t,
            eps,
            exact_snapshot,
            out,
            csv,
        } => cmd_reconstruct(&config, &trace, t, eps, exact_snapshot, out, csv),
        Command::Sweep {
            config,
            trace,
            t_list,
            eps,
            norm,
            seed,
            out,
        } => cmd_sweep(&config, &trace, t_list, eps, norm, seed, out),
        Command::Rays {
            config,
            t_max,
            dt,
            r_escape,
            out,
        } => cmd_rays(&config, t_max, dt, r_escape, out),
        Command::PrintDefaultConfig { preset } => {
            let cfg = match preset {
                None => config::default_config(),
                Some(name) => config::preset(&name)?,
            };
            print!("{}", cfg.to_toml());
            Ok(0)
        }
    }
}

fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = flag.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotMeta {
    step: usize,
    time: f64,
}

fn snapshot_paths(meta_path: &Path) -> (PathBuf, PathBuf) {
    let stem = meta_path.with_extension("");
    (
        stem.with_file_name(format!(
            "{}_p.tatfield",
            stem.file_name().unwrap_or_default().to_string_lossy()
        )),
        stem.with_file_name(format!(
            "{}_pt.tatfield",
            stem.file_name().unwrap_or_default().to_string_lossy()
        )),
    )
}

fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<Vec<PathBuf>> {
    let meta_path = dir.join(format!("snapshot_{}.toml", snap.step));
    let (p_path, pt_path) = snapshot_paths(&meta_path);
    std::fs::write(
        &meta_path,
        toml::to_string_pretty(&SnapshotMeta {
            step: snap.step,
            time: snap.time,
        })?,
    )?;
    io::write_field(&p_path, &snap.p)?;
    io::write_field(&pt_path, &snap.p_t)?;
    Ok(vec![meta_path, p_path, pt_path])
}

fn load_snapshot(meta_path: &Path) -> Result<Snapshot> {
    let meta: SnapshotMeta = toml::from_str(
        &std::fs::read_to_string(meta_path)
            .with_context(|| format!("reading snapshot metadata {}", meta_path.display()))?,
    )?;
    let (p_path, pt_path) = snapshot_paths(meta_path);
    Ok(Snapshot {
        step: meta.step,
        time: meta.time,
        p: io::read_field(&p_path)?,
        p_t: io::read_field(&pt_path)?,
    })
}

fn cmd_simulate(config_path: &Path, out: Option<PathBuf>, csv: bool) -> Result<u8> {
    let cfg = RunConfig::load(config_path)?;
    let dir = out_dir(&cfg, out)?;
    let speed = cfg.speed_profile()?;
    let phantom = cfg.phantom_spec()?;
    let params = SimParams::auto(cfg.forward.h, cfg.cfl, cfg.forward.t_end, &speed)?
        .with_snapshot_times(&cfg.forward.snapshot_times)?;
    let ring = build_sensor_ring(*params.grid(), 1.0)?;
    println!(
        "sensors: {}   half-width: {:.4}   dt: {:.6}   steps: {}",
        ring.len(),
        -params.grid().origin().0,
        params.dt(),
        params.n_steps()
    );

    let (trace, snapshots) = simulate_forward(&params, &speed, &phantom, &ring)?;

    let mut mb = ManifestBuilder::new("simulate", &cfg.to_toml());
    let trace_path = dir.join("trace.tattrace");
    io::write_trace(&trace_path, &trace)?;
    mb.record(&trace_path)?;
    if csv {
        let csv_path = dir.join("trace.csv");
        io::trace_to_csv(&csv_path, &trace)?;
        mb.record(&csv_path)?;
    }
    for snap in &snapshots {
        for p in write_snapshot(&dir, snap)? {
            mb.record(&p)?;
        }
    }
    mb.write(&dir)?;
    println!("trace: {}", trace_path.display());
    Ok(0)
}

fn cmd_reconstruct(
    config_path: &Path,
    trace_path: &Path,
    t_flag: Option<f64>,
    eps_flag: Option<f64>,
    exact_snapshot: Option<PathBuf>,
    out: Option<PathBuf>,
    csv: bool,
) -> Result<u8> {
    let cfg = RunConfig::load(config_path)?;
    let dir = out_dir(&cfg, out)?;
    let trace = io::read_trace(trace_path)?;
    let eps = eps_flag.unwrap_or(cfg.eps);
    let speed = cfg.speed_profile()?;
    let phantom = cfg.phantom_spec()?;

    let (params, ring, label) = match &exact_snapshot {
        Some(meta_path) => {
            let snap = load_snapshot(meta_path)?;
            let params = ReversalParams::exact(snap, &trace)?;
            let ring = build_sensor_ring(*params.grid(), 1.0)?;
            let label = format!("exact_T{:.3}", params.t_cut());
            (params, ring, label)
        }
        None => {
            let t_cut = t_flag
                .or(cfg.reconstruct.t)
                .ok_or_else(|| anyhow!("no cutoff time: pass --T or set [reconstruct] t"))?;
            let params =
                ReversalParams::approximate(cfg.reconstruct.h, t_cut, eps, cfg.cfl, &speed)?;
            let ring = build_sensor_ring(*params.grid(), 1.0)?;
            let label = format!("T{:.3}", params.t_cut());
            (params, ring, label)
        }
    };

    let rec = reverse(&params, &trace, &speed, &ring)?;

    // error report against the configured phantom
    let f_ref = sample_field(&phantom, *params.grid());
    let mask = DiscMask::reconstruction(&ring);
    let diff = rec.field.sub(&f_ref);
    println!(
        "T: {}   eps: {}   l2 error: {:.6e}   h1 error: {:.6e}",
        params.t_cut(),
        params.eps(),
        tatrec::l2_norm(&diff, &mask),
        tatrec::h1_norm(&diff, &mask),
    );
    if exact_snapshot.is_some() {
        let g = params.grid();
        let mut worst = 0.0f64;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let (x, y) = g.node(i, j);
                if x.hypot(y) < 1.0 - 2.0 * g.h() {
                    worst = worst.max((rec.field.at(i, j) - f_ref.at(i, j)).abs());
                }
            }
        }
        println!("round-trip interior max error: {worst:.3e}");
    }

    let mut mb = ManifestBuilder::new("reconstruct", &cfg.to_toml());
    let field_path = dir.join(format!("recon_{label}.tatfield"));
    io::write_field(&field_path, &rec.field)?;
    mb.record(&field_path)?;
    let pgm_path = dir.join(format!("recon_{label}.pgm"));
    io::field_to_pgm(&pgm_path, &rec.field)?;
    mb.record(&pgm_path)?;
    if csv {
        let csv_path = dir.join(format!("recon_{label}.csv"));
        io::field_to_csv(&csv_path, &rec.field)?;
        mb.record(&csv_path)?;
    }
    mb.write(&dir)?;
    println!("field: {}", field_path.display());
    Ok(0)
}

fn cmd_sweep(
    config_path: &Path,
    trace_path: &Path,
    t_list_flag: Option<Vec<f64>>,
    eps_flag: Option<f64>,
    norm_flag: Option<String>,
    seed_flag: Option<u64>,
    out: Option<PathBuf>,
) -> Result<u8> {
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(norm) = norm_flag {
        cfg.reconstruct.norm = norm;
    }
    if let Some(seed) = seed_flag {
        cfg.seed = seed;
    }
    let dir = out_dir(&cfg, out)?;
    let trace = io::read_trace(trace_path)?;
    let speed = cfg.speed_profile()?;
    let phantom = cfg.phantom_spec()?;
    let grid = Grid::make_grid(-1.2, 1.2, cfg.reconstruct.h)?;
    let ring = build_sensor_ring(grid, 1.0)?;
    let t_list = t_list_flag.unwrap_or_else(|| cfg.reconstruct.t_list.clone());
    if t_list.is_empty() {
        bail!("no cutoff times: pass --T-list or set [reconstruct] t_list");
    }
    let params = SweepParams {
        t_list,
        eps: eps_flag.unwrap_or(cfg.eps),
        cfl: cfg.cfl,
        norm: cfg.norm_kind()?,
    };
    let sweep = error_sweep(&trace, &speed, &phantom, &ring, &params)?;
    println!(
        "norm: {}   slope: {:.4}   intercept: {:.4}   r2: {:.4}   usable: {}/{}",
        sweep.norm.as_str(),
        sweep.slope,
        sweep.intercept,
        sweep.r_squared,
        sweep.usable,
        sweep.points.len()
    );

    let mut mb = ManifestBuilder::new("sweep", &cfg.to_toml());
    let csv_path = dir.join("sweep.csv");
    io::sweep_to_csv(&csv_path, &sweep)?;
    mb.record(&csv_path)?;
    let summary_path = dir.join("sweep_summary.txt");
    io::sweep_summary(&summary_path, &sweep)?;
    mb.record(&summary_path)?;
    let svg_path = dir.join("sweep.svg");
    io::sweep_to_svg(&svg_path, &sweep)?;
    mb.record(&svg_path)?;
    mb.write(&dir)?;
    println!("sweep: {}", csv_path.display());
    Ok(0)
}

fn cmd_rays(
    config_path: &Path,
    t_max: f64,
    dt: f64,
    r_escape: f64,
    out: Option<PathBuf>,
) -> Result<u8> {
    let cfg = RunConfig::load(config_path)?;
    let dir = out_dir(&cfg, out)?;
    let speed = cfg.speed_profile()?;
    let seeds = default_seed_lattice();
    let report = classify_trapping(&speed, &seeds, t_max, dt, r_escape)?;
    print!("{}", io::trapping_report_table(&report));

    let mut mb = ManifestBuilder::new("rays", &cfg.to_toml());
    let csv_path = dir.join("trapping_report.csv");
    io::trapping_report_to_csv(&csv_path, &report)?;
    mb.record(&csv_path)?;

    // path exports for the first few trapped seeds (diagnostic views)
    let mut written = 0;
    for (seed, verdict, _) in &report.verdicts {
        if written >= 16 {
            break;
        }
        if matches!(verdict, Verdict::Trapped { .. }) {
            let path = trace_ray(seed, &speed, t_max, dt, r_escape)?;
            let p = dir.join(format!("trapped_ray_{written}.csv"));
            io::ray_path_to_csv(&p, &path)?;
            mb.record(&p)?;
            written += 1;
        }
    }
    mb.write(&dir)?;

    if report.all_escaped() {
        Ok(0)
    } else {
        Ok(EXIT_TRAPPING)
    }
}
