//! Timing breakdown per step, the t_step measurement window, parallel
//! efficiency and scaling sweeps.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::case::{weak_scale_domain, CaseConfig};
use crate::elliptic::SolveStats;
use crate::error::{Error, Result};
use crate::real::Real;

/// Cost categories of one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Fillpatch,
    SgsWall,
    Advection,
    MacProjection,
    ScalarSolve,
    VelocitySolve,
    PressureSolve,
    Diagnostics,
    Other,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Fillpatch,
        Category::SgsWall,
        Category::Advection,
        Category::MacProjection,
        Category::ScalarSolve,
        Category::VelocitySolve,
        Category::PressureSolve,
        Category::Diagnostics,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Fillpatch => "fillpatch",
            Category::SgsWall => "sgs_wall",
            Category::Advection => "advection",
            Category::MacProjection => "mac_projection",
            Category::ScalarSolve => "scalar_solve",
            Category::VelocitySolve => "velocity_solve",
            Category::PressureSolve => "pressure_solve",
            Category::Diagnostics => "diagnostics",
            Category::Other => "other",
        }
    }

    fn index(self) -> usize {
        Category::ALL.iter().position(|&c| c == self).unwrap()
    }
}

/// Wall-clock breakdown and solver statistics of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepTimers {
    seconds: [f64; 9],
    /// Wall time of the whole step.
    pub total: f64,
    pub mac: SolveStats,
    pub scalar: SolveStats,
    pub velocity: [SolveStats; 3],
    pub pressure: SolveStats,
}

impl StepTimers {
    pub fn get(&self, c: Category) -> f64 {
        self.seconds[c.index()]
    }

    pub fn add(&mut self, c: Category, secs: f64) {
        self.seconds[c.index()] += secs;
    }

    /// Runs `f` and charges its wall time to `c`.
    pub fn time<R>(&mut self, c: Category, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.add(c, start.elapsed().as_secs_f64());
        r
    }

    /// Sets the step total and books whatever no category claimed as `other`.
    pub fn finish(&mut self, total: f64) {
        self.total = total;
        let named: f64 = Category::ALL[..8].iter().map(|&c| self.get(c)).sum();
        self.seconds[Category::Other.index()] = (total - named).max(0.0);
    }

    /// Sum over the named categories (everything but `other`).
    pub fn attributed(&self) -> f64 {
        Category::ALL[..8].iter().map(|&c| self.get(c)).sum()
    }

    pub fn velocity_iterations(&self) -> usize {
        self.velocity.iter().map(|s| s.iterations).sum()
    }

    /// Largest of the three velocity-component iteration counts.
    pub fn max_velocity_iterations(&self) -> usize {
        self.velocity.iter().map(|s| s.iterations).max().unwrap_or(0)
    }
}

/// Cost of one `Instant::now()` pair, averaged over many reads.
pub fn timer_overhead() -> f64 {
    const N: u32 = 10_000;
    let start = Instant::now();
    let mut last = start;
    for _ in 0..N {
        last = Instant::now();
    }
    (last - start).as_secs_f64() / N as f64
}

pub const WINDOW_START: usize = 101;
pub const WINDOW_END: usize = 200;

/// Mean wall time over steps 101..=200 of `step_times` (entry `k-1` is
/// step `k`); steps 1..=100 are warm-up.
pub fn measure_tstep(step_times: &[f64]) -> Result<f64> {
    if step_times.len() < WINDOW_END {
        return Err(Error::ShortRun {
            needed: WINDOW_END,
            got: step_times.len(),
        });
    }
    let w = &step_times[WINDOW_START - 1..WINDOW_END];
    Ok(w.iter().sum::<f64>() / w.len() as f64)
}

/// Wall-clock to physical-time ratio.
pub fn real_time_ratio(t_step: f64, dt: f64) -> f64 {
    t_step / dt
}

/// One point of a scaling study.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRecord {
    pub workers: usize,
    pub points: usize,
    pub t_step: f64,
    pub p_eff: f64,
    pub r_t: f64,
    /// Mean velocity, pressure and scalar iterations per step in the window.
    pub v_iters: f64,
    pub p_iters: f64,
    pub t_iters: f64,
}

impl ScalingRecord {
    pub fn new(workers: usize, points: usize, t_step: f64, dt: f64) -> Self {
        ScalingRecord {
            workers,
            points,
            t_step,
            p_eff: 1.0,
            r_t: real_time_ratio(t_step, dt),
            v_iters: 0.0,
            p_iters: 0.0,
            t_iters: 0.0,
        }
    }
}

/// Fills `p_eff = t0 P0 / (t P)` relative to the record with the fewest
/// workers.
pub fn parallel_efficiency(records: &mut [ScalingRecord]) {
    let Some(base) = records.iter().min_by_key(|r| r.workers).cloned() else {
        return;
    };
    for r in records.iter_mut() {
        r.p_eff = if r.workers == base.workers {
            1.0
        } else {
            base.t_step * base.workers as f64 / (r.t_step * r.workers as f64)
        };
    }
}

/// Points per worker at which efficiency first falls below 80%, linearly
/// interpolated between neighbouring records (sorted by worker count).
pub fn efficiency_crossover(records: &[ScalingRecord]) -> Option<f64> {
    let mut rs: Vec<&ScalingRecord> = records.iter().collect();
    rs.sort_by_key(|r| r.workers);
    for w in rs.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.p_eff >= 0.8 && b.p_eff < 0.8 {
            let na = a.points as f64 / a.workers as f64;
            let nb = b.points as f64 / b.workers as f64;
            let s = (a.p_eff - 0.8) / (a.p_eff - b.p_eff);
            return Some(na + s * (nb - na));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    Strong,
    Weak,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::Strong => "strong",
            ScalingMode::Weak => "weak",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub mode: ScalingMode,
    pub records: Vec<ScalingRecord>,
    pub warnings: Vec<String>,
    pub crossover: Option<f64>,
    pub timer_overhead: f64,
}

/// Step times and solver statistics of a fixed-length run.
pub struct RunTimings {
    pub step_times: Vec<f64>,
    pub timers: Vec<StepTimers>,
}

/// Runs `steps` steps of the case on a private pool of `workers` threads.
pub fn timed_run<T: Real>(cfg: &CaseConfig, workers: usize, steps: usize) -> Result<RunTimings> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        let (mut state, mut stepper) = crate::case::prepare::<T>(cfg)?;
        let mut out = RunTimings {
            step_times: Vec::with_capacity(steps),
            timers: Vec::with_capacity(steps),
        };
        for _ in 0..steps {
            let tm = stepper.step(&mut state)?;
            out.step_times.push(tm.total);
            out.timers.push(tm);
        }
        Ok(out)
    })
}

/// Strong or weak scaling over `worker_counts`, `steps` (≥ 200) steps each.
///
/// Strong runs use `cfg` unchanged; weak runs scale the domain so the points
/// per worker stay at the `cfg` value.
pub fn scaling_sweep<T: Real>(
    cfg: &CaseConfig,
    worker_counts: &[usize],
    mode: ScalingMode,
    steps: usize,
) -> Result<SweepReport> {
    if steps < WINDOW_END {
        return Err(Error::ShortRun {
            needed: WINDOW_END,
            got: steps,
        });
    }
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut warnings = Vec::new();
    let mut records = Vec::with_capacity(worker_counts.len());
    for &p in worker_counts {
        if p == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        if p > hw {
            warnings.push(format!("{p} workers oversubscribe {hw} hardware threads"));
        }
        let case = match mode {
            ScalingMode::Strong => cfg.clone(),
            ScalingMode::Weak => weak_scale_domain(cfg, cfg.cells() * p)?,
        };
        let run = timed_run::<T>(&case, p, steps)?;
        let t_step = measure_tstep(&run.step_times)?;
        let mut rec = ScalingRecord::new(p, case.cells(), t_step, case.dt());
        let w = &run.timers[WINDOW_START - 1..WINDOW_END];
        let n = w.len() as f64;
        rec.v_iters = w.iter().map(|t| t.velocity_iterations() as f64).sum::<f64>() / n;
        rec.p_iters = w.iter().map(|t| t.pressure.iterations as f64).sum::<f64>() / n;
        rec.t_iters = w.iter().map(|t| t.scalar.iterations as f64).sum::<f64>() / n;
        records.push(rec);
    }
    match mode {
        ScalingMode::Strong => parallel_efficiency(&mut records),
        ScalingMode::Weak => {
            // Weak efficiency: t0 / t at fixed work per worker.
            let t0 = records.iter().min_by_key(|r| r.workers).map(|r| r.t_step);
            if let Some(t0) = t0 {
                records.iter_mut().for_each(|r| r.p_eff = t0 / r.t_step);
            }
        }
    }
    let crossover = efficiency_crossover(&records);
    Ok(SweepReport {
        mode,
        records,
        warnings,
        crossover,
        timer_overhead: timer_overhead(),
    })
}

pub const SCALING_HEADER: &str = "workers,points,points_per_worker,t_step,p_eff,r_t,v_iters,p_iters,t_iters";

/// CSV text of a sweep: `# key=value` metadata, a header line, one row per
/// record in input order.
pub fn scaling_csv(report: &SweepReport, meta: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k}={v}");
    }
    let _ = writeln!(s, "# mode={}", report.mode.name());
    let _ = writeln!(s, "# timer_overhead={:e}", report.timer_overhead);
    let _ = writeln!(s, "# interconnect=N/A (shared-memory threads)");
    match report.crossover {
        Some(c) => {
            let _ = writeln!(s, "# crossover_points_per_worker_80pct={c}");
        }
        None => {
            let _ = writeln!(s, "# crossover_points_per_worker_80pct=none");
        }
    }
    for w in &report.warnings {
        let _ = writeln!(s, "# warning={w}");
    }
    s.push_str(SCALING_HEADER);
    s.push('\n');
    for r in &report.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.workers,
            r.points,
            r.points as f64 / r.workers as f64,
            r.t_step,
            r.p_eff,
            r.r_t,
            r.v_iters,
            r.p_iters,
            r.t_iters
        );
    }
    s
}

pub fn write_scaling_csv(
    report: &SweepReport,
    meta: &[(String, String)],
    path: &Path,
) -> Result<()> {
    std::fs::write(path, scaling_csv(report, meta))?;
    Ok(())
}
