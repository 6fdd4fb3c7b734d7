//! Text outputs: run metadata, mean profiles and horizontal θ slices.

use std::fmt::Write;
use std::path::Path;

use crate::case::CaseConfig;
use crate::error::{Error, Result};
use crate::field::plane_average;
use crate::perf::{Category, StepTimers};
use crate::timestep::{Diagnostics, State};

use super::config::config_entries;

/// Everything needed to identify and re-run the case that produced an
/// output file, written as a `# key=value` comment block.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config: CaseConfig,
    pub version: String,
    pub threads: usize,
    /// Cost of one timer start/stop pair (s).
    pub timer_overhead: f64,
    /// Extra entries, e.g. the command that ran.
    pub extra: Vec<(String, String)>,
}

/// Discretisation choices with their active values.
pub fn design_decisions(cfg: &CaseConfig) -> Vec<(String, String)> {
    let pairs: [(&str, String); 16] = [
        ("predictor_source", "forces(theta^n) - grad p^(n-1/2)".into()),
        ("advection_slopes", "monotonized central".into()),
        ("advection_transverse", "corner transport upwind".into()),
        ("face_velocity", "time-centred traced cell velocities, MAC projected".into()),
        ("mean_sgs_tendency", "velocity corrector only".into()),
        ("sgs_model", if cfg.sgs.enabled { cfg.sgs.model.name().into() } else { "off".into() }),
        ("sgs_gamma_mode", cfg.sgs.gamma_mode.name().into()),
        ("sgs_cs", format!("{:?}", cfg.sgs.cs)),
        ("sgs_pr_t", format!("{:?}", cfg.sgs.pr_t)),
        ("sgs_h_blend", format!("{:?}", cfg.sgs.h_blend)),
        ("most_psi_h", "integrated".into()),
        ("wall_flux_sign", "q_wall = -u_tau theta_star (negative when cooling)".into()),
        ("pressure_start", format!("{} start-up iterations", cfg.init_iterations)),
        ("perturbation", "uniform, zero plane mean, rescaled to the amplitude".into()),
        ("checkpoint_step_index", "round(t/dt)".into()),
        ("fdm_box", "(order+3)^3 points".into()),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl RunMetadata {
    pub fn new(config: &CaseConfig, threads: usize, timer_overhead: f64) -> Self {
        RunMetadata {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads,
            timer_overhead,
            extra: Vec::new(),
        }
    }

    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("version".to_string(), self.version.clone()),
            ("seed".to_string(), self.config.seed.to_string()),
            ("threads".to_string(), self.threads.to_string()),
            ("timer_overhead".to_string(), format!("{:e}", self.timer_overhead)),
        ];
        out.extend(self.extra.iter().cloned());
        out.extend(config_entries(&self.config));
        out.extend(design_decisions(&self.config).into_iter().map(|(k, v)| (format!("decision.{k}"), v)));
        out
    }

    pub fn comment_block(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "# {k}={v}");
        }
        s
    }
}

pub const PROFILE_HEADER: &str = "z,u_mean,v_mean,theta_mean,u_tau,q_wall,t";

/// Plane-averaged `u`, `v`, `θ` per level with the surface scalars repeated
/// on every row.
pub fn profiles_csv(state: &State<f64>, meta: &RunMetadata) -> String {
    let (u, v, th) = (
        plane_average(state.u.u()),
        plane_average(state.u.v()),
        plane_average(&state.theta),
    );
    let mut s = meta.comment_block();
    s.push_str(PROFILE_HEADER);
    s.push('\n');
    for k in 0..u.z.len() {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            u.z[k], u.values[k], v.values[k], th.values[k], state.surface.u_tau, state.surface.q_wall, state.t
        );
    }
    s
}

pub fn write_profiles(state: &State<f64>, meta: &RunMetadata, path: &Path) -> Result<()> {
    std::fs::write(path, profiles_csv(state, meta))?;
    Ok(())
}

/// Index of the cell-centre level nearest to `z` (ties go down).
pub fn snap_level(state: &State<f64>, z: f64) -> Result<usize> {
    let g = state.grid();
    let top = g.nz as f64 * g.dz;
    if !(0.0..=top).contains(&z) {
        return Err(Error::Config(format!("slice height {z} m lies outside [0, {top}] m")));
    }
    let k = ((z / g.dz - 1.0).ceil().max(0.0) as usize).min(g.nz - 1);
    Ok(k)
}

/// θ on the level nearest `z`, one row per cell with x varying fastest.
pub fn slice_csv(state: &State<f64>, z: f64, meta: &RunMetadata) -> Result<String> {
    let g = *state.grid();
    let k = snap_level(state, z)?;
    let mut s = meta.comment_block();
    let _ = writeln!(s, "# slice_z_requested={z:?}");
    let _ = writeln!(s, "# slice_z={:?}", g.z_center(k));
    let _ = writeln!(s, "# slice_level={k}");
    let _ = writeln!(s, "# t={:?}", state.t);
    s.push_str("x,y,theta\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let _ = writeln!(s, "{:?},{:?},{:?}", g.x_center(i), g.y_center(j), state.theta.get(i, j, k));
        }
    }
    Ok(s)
}

pub fn write_slice(state: &State<f64>, z: f64, meta: &RunMetadata, path: &Path) -> Result<()> {
    std::fs::write(path, slice_csv(state, z, meta)?)?;
    Ok(())
}

/// One row per step: the wall-time breakdown, solver iteration counts and
/// the step diagnostics.
pub fn step_timing_csv(steps: &[(u64, StepTimers, Diagnostics)], meta: &RunMetadata) -> String {
    let mut s = meta.comment_block();
    s.push_str("step,total");
    for c in Category::ALL {
        s.push(',');
        s.push_str(c.name());
    }
    s.push_str(",mac_iters,t_iters,v_iters_max,p_iters,cfl,u_tau,theta_first_level\n");
    for (n, tm, d) in steps {
        let _ = write!(s, "{n},{:e}", tm.total);
        for c in Category::ALL {
            let _ = write!(s, ",{:e}", tm.get(c));
        }
        let _ = writeln!(
            s,
            ",{},{},{},{},{:?},{:?},{:?}",
            tm.mac.iterations,
            tm.scalar.iterations,
            tm.max_velocity_iterations(),
            tm.pressure.iterations,
            d.cfl,
            d.u_tau,
            d.theta_first_level
        );
    }
    s
}
