//! `ablmini`: run, benchmark and post-process the stable boundary-layer
//! mini-app.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use ablm::case::prepare;
use ablm::io::{self, RunMetadata};
use ablm::perf::{measure_tstep, real_time_ratio, scaling_sweep, timer_overhead, write_scaling_csv, ScalingMode};
use ablm::se::{self, BenchSettings, ElementBatch, Kernel};
use ablm::wall::compute_surface_state;
use ablm::{CaseConfig, Error, Result, State64, Stepper64};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ablmini", version, about = "Stable atmospheric boundary-layer LES mini-app")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance a case and write its outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Number of steps (overrides run.steps).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Restart file written after the last step.
        #[arg(long)]
        checkpoint_out: Option<PathBuf>,
        /// Continue from this restart file instead of the initial condition.
        #[arg(long)]
        restart: Option<PathBuf>,
        /// Mean profiles after the last step.
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Per-step timing breakdown.
        #[arg(long)]
        timings: Option<PathBuf>,
        /// Directory for the periodic profile files (run.output_interval).
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Time the spectral-element kernels.
    Bench {
        #[arg(long, value_enum, default_value = "all")]
        kernel: KernelArg,
        #[arg(long, default_value_t = 8)]
        order: usize,
        #[arg(long, default_value_t = 512)]
        elements: usize,
        #[arg(long, value_parser = ["32", "64"], default_value = "64")]
        precision: String,
        /// Timed repetitions (best one is reported).
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        #[arg(long)]
        threads: Option<usize>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strong or weak scaling of a case over several worker counts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', required = true)]
        workers: Vec<usize>,
        #[arg(long, value_enum, default_value = "strong")]
        mode: ModeArg,
        /// Steps per run (at least 200 for the measurement window).
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value = "scaling.csv")]
        out: PathBuf,
    },
    /// Profiles and slices from a restart file.
    Post {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        /// Height of a θ slice (snapped to the nearest level).
        #[arg(long)]
        slice_z: Option<f64>,
        /// Slice destination; defaults to slice.csv next to the profiles.
        #[arg(long)]
        slice_out: Option<PathBuf>,
        /// Case file the checkpoint came from; defaults are assumed otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Ax,
    Adv,
    Fdm,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strong,
    Weak,
}

/// `--threads`, else `ABLMINI_THREADS`, else every hardware thread.
fn worker_count(flag: Option<usize>) -> Result<usize> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var("ABLMINI_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("ABLMINI_THREADS must be a positive integer, got '{v}'")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(Error::Config("thread count must be at least 1".into()));
    }
    Ok(n)
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?
        .install(f)
}

struct RunArgs {
    config: PathBuf,
    steps: Option<usize>,
    threads: Option<usize>,
    checkpoint_out: Option<PathBuf>,
    restart: Option<PathBuf>,
    profiles: Option<PathBuf>,
    timings: Option<PathBuf>,
    output_dir: PathBuf,
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = io::parse_config(&a.config)?;
    let threads = worker_count(a.threads)?;
    let steps = a.steps.unwrap_or(cfg.steps);
    let dt = cfg.dt();
    let mut meta = RunMetadata::new(&cfg, threads, timer_overhead());
    meta.extra.push(("command".into(), "run".into()));
    in_pool(threads, || {
        let (mut state, mut stepper) = match &a.restart {
            Some(path) => {
                let state = io::read_checkpoint(path)?.into_state(&cfg.grid()?)?;
                (state, Stepper64::new(&cfg.grid()?, cfg.step_config()?))
            }
            None => prepare::<f64>(&cfg)?,
        };
        let start = Instant::now();
        let mut rows = Vec::with_capacity(steps);
        for n in 0..steps {
            let tm = stepper.step(&mut state)?;
            let d = state.diagnostics;
            if d.cfl_warning {
                eprintln!("warning: step {} ran at CFL {:.3}", state.step_index, d.cfl);
            }
            rows.push((state.step_index, tm, d));
            if (n + 1) % 100 == 0 || n + 1 == steps {
                eprintln!(
                    "step {:>6}  t = {:>9.1} s  u_tau = {:.4}  theta1 = {:.4}  cfl = {:.3}",
                    state.step_index, state.t, d.u_tau, d.theta_first_level, d.cfl
                );
            }
            if cfg.output_interval > 0 && state.step_index % cfg.output_interval as u64 == 0 {
                let path = a.output_dir.join(format!("profiles_{:06}.csv", state.step_index));
                io::write_profiles(&state, &meta, &path)?;
            }
        }
        let wall = start.elapsed().as_secs_f64();
        println!("steps = {steps}");
        println!("simulated_time = {} s", state.t);
        println!("wall_time = {wall:.3} s");
        let times: Vec<f64> = rows.iter().map(|r| r.1.total).collect();
        match measure_tstep(&times) {
            Ok(t_step) => {
                println!("t_step = {t_step:.6e} s (steps 101-200)");
                println!("r_t = {:.6e}", real_time_ratio(t_step, dt));
            }
            Err(_) => println!("t_step = n/a (fewer than 200 steps)"),
        }
        if let Some(path) = &a.checkpoint_out {
            io::write_checkpoint(&state, dt, path)?;
        }
        if let Some(path) = &a.profiles {
            io::write_profiles(&state, &meta, path)?;
        }
        if let Some(path) = &a.timings {
            std::fs::write(path, io::step_timing_csv(&rows, &meta))?;
        }
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn bench(
    kernel: KernelArg,
    order: usize,
    elements: usize,
    precision: &str,
    reps: usize,
    warmup: usize,
    threads: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let batch = ElementBatch::new(elements, order)?;
    let threads = worker_count(threads)?;
    let settings = BenchSettings {
        warmup,
        repetitions: reps,
        ..BenchSettings::default()
    };
    let kernels = match kernel {
        KernelArg::Ax => vec![Kernel::Ax],
        KernelArg::Adv => vec![Kernel::Adv],
        KernelArg::Fdm => vec![Kernel::Fdm],
        KernelArg::All => Kernel::ALL.to_vec(),
    };
    let reports = in_pool(threads, || {
        kernels
            .iter()
            .map(|&k| match precision {
                "32" => se::bench::<f32>(k, batch, &settings),
                _ => se::bench::<f64>(k, batch, &settings),
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let meta = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("threads".to_string(), threads.to_string()),
        ("warmup".to_string(), warmup.to_string()),
        ("repetitions".to_string(), reps.to_string()),
        ("timing".to_string(), "best of repetitions".to_string()),
    ];
    let csv = se::bench_csv(&reports, &meta);
    match out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn sweep(config: &Path, workers: &[usize], mode: ModeArg, steps: usize, out: &Path) -> Result<()> {
    let cfg = io::parse_config(config)?;
    if workers.contains(&0) {
        return Err(Error::Config("worker counts must be at least 1".into()));
    }
    let mode = match mode {
        ModeArg::Strong => ScalingMode::Strong,
        ModeArg::Weak => ScalingMode::Weak,
    };
    let report = scaling_sweep::<f64>(&cfg, workers, mode, steps)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let mut meta = RunMetadata::new(&cfg, workers.iter().copied().max().unwrap_or(1), report.timer_overhead);
    meta.extra.push(("command".into(), "sweep".into()));
    write_scaling_csv(&report, &meta.entries(), out)?;
    for r in &report.records {
        println!(
            "workers = {:>3}  t_step = {:.4e} s  p_eff = {:.3}  r_t = {:.4e}",
            r.workers, r.t_step, r.p_eff, r.r_t
        );
    }
    Ok(())
}

fn post(
    checkpoint: &Path,
    profiles: &Path,
    slice_z: Option<f64>,
    slice_out: Option<&Path>,
    config: Option<&Path>,
) -> Result<()> {
    let chk = io::read_checkpoint(checkpoint)?;
    let cfg = match config {
        Some(p) => io::parse_config(p)?,
        None => CaseConfig {
            nx: chk.nx,
            ny: chk.ny,
            nz: chk.nz,
            dt: Some(chk.dt),
            ..CaseConfig::default()
        },
    };
    let step_cfg = cfg.step_config()?;
    let mut state: State64 = chk.into_state(&cfg.grid()?)?;
    if cfg.wall_model {
        let tw = step_cfg.theta_wall(state.t)?;
        state.surface = compute_surface_state(state.u.u(), state.u.v(), &state.theta, tw, &step_cfg.most)?;
    }
    let mut meta = RunMetadata::new(&cfg, 1, 0.0);
    meta.extra.push(("command".into(), "post".into()));
    meta.extra.push(("checkpoint".into(), checkpoint.display().to_string()));
    io::write_profiles(&state, &meta, profiles)?;
    if let Some(z) = slice_z {
        let path = match slice_out {
            Some(p) => p.to_path_buf(),
            None => profiles.with_file_name("slice.csv"),
        };
        io::write_slice(&state, z, &meta, &path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            steps,
            threads,
            checkpoint_out,
            restart,
            profiles,
            timings,
            output_dir,
        } => run(RunArgs {
            config,
            steps,
            threads,
            checkpoint_out,
            restart,
            profiles,
            timings,
            output_dir,
        }),
        Command::Bench {
            kernel,
            order,
            elements,
            precision,
            reps,
            warmup,
            threads,
            out,
        } => bench(kernel, order, elements, &precision, reps, warmup, threads, out.as_deref()),
        Command::Sweep {
            config,
            workers,
            mode,
            steps,
            out,
        } => sweep(&config, &workers, mode, steps, &out),
        Command::Post {
            checkpoint,
            profiles,
            slice_z,
            slice_out,
            config,
        } => post(&checkpoint, &profiles, slice_z, slice_out.as_deref(), config.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_failure() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
