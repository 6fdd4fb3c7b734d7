//! The GABLS stable boundary-layer case: configuration, initial state and
//! boundary conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::MgSettings;
use crate::error::{Error, Result};
use crate::field::{CellField, CellVector};
use crate::grid::GridSpec;
use crate::real::Real;
use crate::sgs::SgsConfig;
use crate::timestep::{BoundarySpec, Coriolis, State, StepConfig, Stepper, CFL_HARD_CAP};
use crate::wall::{MostParams, SurfaceState};

/// Height of the box (m); also the horizontal length per domain multiplier.
pub const DOMAIN_HEIGHT: f64 = 400.0;

/// CFL number at the geostrophic speed used when no time step is given.
pub const DEFAULT_CFL: f64 = 0.65;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseConfig {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Horizontal domain multipliers: `Lx = mx 400 m`, `Ly = my 400 m`.
    pub mx: usize,
    pub my: usize,

    pub ug: f64,
    pub vg: f64,
    pub theta0: f64,
    pub surface_theta: f64,
    /// Surface cooling (K/h).
    pub cooling_rate: f64,
    pub inversion_height: f64,
    /// Lapse rate above the inversion (K/m); also the lid gradient.
    pub lapse_rate: f64,
    pub perturbation_amplitude: f64,
    pub perturbation_height: f64,
    pub reynolds: f64,
    /// Length scale of the Reynolds number (m).
    pub length_scale: f64,
    pub prandtl: f64,
    pub fc: f64,
    pub buoyancy: bool,
    pub coriolis: bool,

    pub sgs: SgsConfig,

    pub wall_model: bool,
    pub most: MostParams,

    pub pressure_tol: f64,
    pub helmholtz_tol: f64,
    pub cfl_max: f64,
    /// Start-up pressure iterations before the first step.
    pub init_iterations: usize,
    pub mg: MgSettings,

    /// Time step (s); `None` picks [`DEFAULT_CFL`] at the geostrophic speed.
    pub dt: Option<f64>,
    pub steps: usize,
    pub seed: u64,
    /// Steps between profile outputs (0 disables).
    pub output_interval: usize,
}

impl Default for CaseConfig {
    fn default() -> Self {
        CaseConfig {
            nx: 64,
            ny: 64,
            nz: 64,
            mx: 1,
            my: 1,
            ug: 8.0,
            vg: 0.0,
            theta0: 263.5,
            surface_theta: 265.0,
            cooling_rate: 0.25,
            inversion_height: 100.0,
            lapse_rate: 0.01,
            perturbation_amplitude: 0.1,
            perturbation_height: 50.0,
            reynolds: 5e7,
            length_scale: 100.0,
            prandtl: 0.7,
            fc: 1.39e-4,
            buoyancy: true,
            coriolis: true,
            sgs: SgsConfig::default(),
            wall_model: true,
            most: MostParams::default(),
            pressure_tol: 1e-4,
            helmholtz_tol: 1e-6,
            cfl_max: 0.9,
            init_iterations: 3,
            mg: MgSettings::default(),
            dt: None,
            steps: 7200,
            seed: 1,
            output_interval: 0,
        }
    }
}

fn invariant(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl CaseConfig {
    pub fn lx(&self) -> f64 {
        self.mx as f64 * DOMAIN_HEIGHT
    }

    pub fn ly(&self) -> f64 {
        self.my as f64 * DOMAIN_HEIGHT
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn speed(&self) -> f64 {
        self.ug.hypot(self.vg)
    }

    /// Molecular viscosity `U L / Re`.
    pub fn nu(&self) -> f64 {
        self.speed() * self.length_scale / self.reynolds
    }

    /// Time step in use.
    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| {
            let dx = self.lx() / self.nx as f64;
            DEFAULT_CFL * dx / self.speed().max(f64::MIN_POSITIVE)
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("grid.nx", self.nx), ("grid.ny", self.ny), ("grid.nz", self.nz)] {
            invariant(n >= 4, || format!("{name} = {n} must be at least 4"))?;
        }
        for (name, m) in [("grid.mx", self.mx), ("grid.my", self.my)] {
            invariant(m >= 1, || format!("{name} = {m} must be a positive integer"))?;
        }
        let pos = |name: &str, v: f64| invariant(v > 0.0 && v.is_finite(), || format!("{name} = {v} must be positive"));
        pos("physics.theta0", self.theta0)?;
        pos("physics.reynolds", self.reynolds)?;
        pos("physics.length_scale", self.length_scale)?;
        pos("physics.prandtl", self.prandtl)?;
        pos("physics.inversion_height", self.inversion_height)?;
        invariant(self.speed() > 0.0, || "geostrophic wind must be non-zero".into())?;
        invariant(self.perturbation_amplitude >= 0.0, || {
            format!("physics.perturbation_amplitude = {} must be >= 0", self.perturbation_amplitude)
        })?;
        invariant(self.cooling_rate.is_finite(), || "physics.cooling_rate must be finite".into())?;
        pos("sgs.cs", self.sgs.cs)?;
        pos("sgs.pr_t", self.sgs.pr_t)?;
        pos("sgs.h_blend", self.sgs.h_blend)?;
        pos("wall.z0", self.most.z0)?;
        pos("wall.gravity", self.most.gravity)?;
        invariant(self.most.kappa > 0.3 && self.most.kappa < 0.45, || {
            format!("wall.kappa = {} must lie in (0.3, 0.45)", self.most.kappa)
        })?;
        invariant(self.most.beta_m >= 0.0 && self.most.beta_h >= 0.0, || {
            "wall.beta_m and wall.beta_h must be >= 0".into()
        })?;
        let z1 = 0.5 * DOMAIN_HEIGHT / self.nz as f64;
        invariant(z1 > self.most.z0, || {
            format!("first cell centre {z1} m must lie above wall.z0 = {}", self.most.z0)
        })?;
        for (name, t) in [
            ("solver.pressure_tol", self.pressure_tol),
            ("solver.helmholtz_tol", self.helmholtz_tol),
        ] {
            invariant(t > 0.0 && t < 1.0, || format!("{name} = {t} must lie in (0, 1)"))?;
        }
        invariant(self.cfl_max > 0.0 && self.cfl_max <= CFL_HARD_CAP, || {
            format!("solver.cfl_max = {} must lie in (0, {CFL_HARD_CAP}]", self.cfl_max)
        })?;
        invariant(self.mg.max_vcycles >= 1, || "solver.max_vcycles must be >= 1".into())?;
        if let Some(dt) = self.dt {
            pos("run.dt", dt)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.validate()?;
        GridSpec::new(
            [self.nx, self.ny, self.nz],
            [self.lx(), self.ly(), DOMAIN_HEIGHT],
            [true, true],
        )
    }

    pub fn step_config(&self) -> Result<StepConfig> {
        self.validate()?;
        Ok(StepConfig {
            dt: self.dt(),
            rho: 1.0,
            nu: self.nu(),
            prandtl: self.prandtl,
            sgs: self.sgs,
            most: MostParams {
                theta0: self.theta0,
                ..self.most
            },
            bc: boundary_spec(self),
            buoyancy: self.buoyancy,
            coriolis: self.coriolis.then_some(Coriolis {
                fc: self.fc,
                ug: self.ug,
                vg: self.vg,
            }),
            surface_theta: self.surface_theta,
            cooling_rate: self.cooling_rate,
            pressure_tol: self.pressure_tol,
            helmholtz_tol: self.helmholtz_tol,
            cfl_max: self.cfl_max,
            mg: self.mg,
        })
    }

    /// Unperturbed initial temperature at height `z`.
    pub fn theta_profile(&self, z: f64) -> f64 {
        if z <= self.inversion_height {
            self.surface_theta
        } else {
            self.surface_theta + self.lapse_rate * (z - self.inversion_height)
        }
    }
}

/// Periodic sides, a stress-free lid with the inversion lapse rate, and the
/// similarity wall at the bottom.
pub fn boundary_spec(cfg: &CaseConfig) -> BoundarySpec {
    BoundarySpec {
        periodic_x: true,
        periodic_y: true,
        wall_model: cfg.wall_model,
        theta_top_gradient: cfg.lapse_rate,
    }
}

/// Seeded temperature perturbation on the levels at or below
/// `perturbation_height`, uniform in `[-a, a]`, recentred to zero plane
/// mean and rescaled if the recentring pushed it past `a`. Interior values,
/// x-fastest.
pub fn temperature_perturbation(cfg: &CaseConfig, grid: &GridSpec) -> Vec<f64> {
    let a = cfg.perturbation_amplitude;
    let mut out = vec![0.0; grid.cells()];
    if a == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let plane = grid.nx * grid.ny;
    let levels = (0..grid.nz).take_while(|&k| grid.z_center(k) <= cfg.perturbation_height);
    let mut peak = 0.0f64;
    let mut touched = 0;
    for k in levels {
        let row = &mut out[k * plane..(k + 1) * plane];
        for v in row.iter_mut() {
            *v = rng.random_range(-a..=a);
        }
        let mean = crate::reduce::pairwise_sum(row) / plane as f64;
        for v in row.iter_mut() {
            *v -= mean;
            peak = peak.max(v.abs());
        }
        touched = k + 1;
    }
    if peak > a {
        let s = a / peak;
        out[..touched * plane].iter_mut().for_each(|v| *v *= s);
    }
    out
}

/// Initial state: uniform geostrophic wind, the two-layer temperature
/// profile plus the near-surface perturbation, no pressure.
pub fn initialize<T: Real>(cfg: &CaseConfig) -> Result<State<T>> {
    let grid = cfg.grid()?;
    let dtheta = temperature_perturbation(cfg, &grid);
    let (nx, ny) = (grid.nx, grid.ny);
    let theta = CellField::from_fn(&grid, |i, j, k| {
        T::lit(cfg.theta_profile(grid.z_center(k)) + dtheta[i + nx * (j + ny * k)])
    });
    let (ug, vg) = (T::lit(cfg.ug), T::lit(cfg.vg));
    let mut state = State::rest(&grid, cfg.surface_theta);
    state.u = CellVector::from_fn(&grid, |_, _, _| [ug, vg, T::zero()]);
    state.theta = theta;
    state.surface = SurfaceState::calm(cfg.surface_theta, 0.5 * grid.dz);
    Ok(state)
}

/// Initial state and a stepper for it, with the start-up pressure
/// iterations already taken.
pub fn prepare<T: Real>(cfg: &CaseConfig) -> Result<(State<T>, Stepper<T>)> {
    let mut state = initialize::<T>(cfg)?;
    let mut stepper = Stepper::new(&cfg.grid()?, cfg.step_config()?);
    stepper.initial_iterations(&mut state, cfg.init_iterations)?;
    Ok((state, stepper))
}

/// Widens the domain in x and y (powers of two, `mx >= my`) so the case has
/// `target_n` cells at the original spacing.
pub fn weak_scale_domain(cfg: &CaseConfig, target_n: usize) -> Result<CaseConfig> {
    cfg.validate()?;
    if !cfg.nx.is_multiple_of(cfg.mx) || !cfg.ny.is_multiple_of(cfg.my) {
        return Err(Error::Config(format!(
            "grid {}x{} is not divisible by the multipliers {}x{}",
            cfg.nx, cfg.ny, cfg.mx, cfg.my
        )));
    }
    let (bx, by) = (cfg.nx / cfg.mx, cfg.ny / cfg.my);
    let base = bx * by * cfg.nz;
    if !target_n.is_multiple_of(base) || !(target_n / base).is_power_of_two() {
        return Err(Error::Config(format!(
            "target of {target_n} cells is not a power-of-two multiple of {base}"
        )));
    }
    let e = (target_n / base).trailing_zeros();
    let (mx, my) = (1usize << e.div_ceil(2), 1usize << (e / 2));
    let mut out = cfg.clone();
    out.mx = mx;
    out.my = my;
    out.nx = bx * mx;
    out.ny = by * my;
    Ok(out)
}
