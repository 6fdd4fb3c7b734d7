//! One step of the fractional-step scheme: Godunov advection with a MAC
//! projection, implicit diffusion, and an approximate nodal projection.

use std::time::Instant;

use crate::advection::{advect, advect_vector, predict_face_velocities};
use crate::bc::{fill_ghost, fill_ghost_vector, AxisBc, FaceBc, ScalarBc, VectorBc};
use crate::elliptic::{
    helmholtz_solve, mac_project, nodal_divergence, nodal_project, CellMultigrid, HelmholtzBc,
    MgSettings, NodeMultigrid, SolveStats, WallBc,
};
use crate::error::{Error, Result};
use crate::field::{plane_average, CellField, CellVector, NodeField, Profile};
use crate::grid::{Axis, GridSpec};
use crate::perf::{Category, StepTimers};
use crate::real::Real;
use crate::reduce::norm2;
use crate::sgs::{
    face_heights, fluctuating_strain, isotropy_gamma, mean_shear_at_faces, mfev_nu_t,
    sgs_contributions, smagorinsky_nut, strain_rate, SgsConfig, SgsContributions, SgsModel,
};
use crate::wall::{
    compute_surface_state, moeng_stress, surface_heat_flux, MostParams, SurfaceState,
};

/// CFL number above which a step is refused outright.
pub const CFL_HARD_CAP: f64 = 2.0;

/// f-plane rotation towards a geostrophic wind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coriolis {
    pub fc: f64,
    pub ug: f64,
    pub vg: f64,
}

/// Boundary conditions of the box. Lateral sides follow the grid; the top is
/// a stress-free rigid lid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySpec {
    pub periodic_x: bool,
    pub periodic_y: bool,
    /// Monin-Obukhov stress and heat flux at the bottom. When false the
    /// bottom is free-slip and adiabatic.
    pub wall_model: bool,
    /// `dθ/dz` imposed at the lid (K/m).
    pub theta_top_gradient: f64,
}

impl BoundarySpec {
    pub fn free_slip(grid: &GridSpec) -> Self {
        BoundarySpec {
            periodic_x: grid.periodic_x,
            periodic_y: grid.periodic_y,
            wall_model: false,
            theta_top_gradient: 0.0,
        }
    }

    /// Ghost treatment of θ for advection and diagnostics.
    pub fn theta_ghosts(&self) -> ScalarBc {
        let lat = |p: bool| if p { AxisBc::PERIODIC } else { AxisBc::EVEN };
        ScalarBc::new(
            lat(self.periodic_x),
            lat(self.periodic_y),
            AxisBc::new(FaceBc::Even, FaceBc::Gradient(self.theta_top_gradient)),
        )
    }

    /// Ghost treatment of the cell velocity: impenetrable walls, tangential
    /// components extended evenly.
    pub fn velocity_ghosts(&self, grid: &GridSpec) -> VectorBc {
        VectorBc::free_slip(grid)
    }
}

/// Everything one step needs besides the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub rho: f64,
    /// Molecular viscosity (m²/s).
    pub nu: f64,
    /// Molecular Prandtl number, used when the SGS model is off.
    pub prandtl: f64,
    pub sgs: SgsConfig,
    pub most: MostParams,
    pub bc: BoundarySpec,
    /// Boussinesq buoyancy about `most.theta0`.
    pub buoyancy: bool,
    pub coriolis: Option<Coriolis>,
    /// Surface temperature at `t = 0` (K) and its cooling rate (K/h).
    pub surface_theta: f64,
    pub cooling_rate: f64,
    pub pressure_tol: f64,
    pub helmholtz_tol: f64,
    pub cfl_max: f64,
    pub mg: MgSettings,
}

impl StepConfig {
    /// A periodic-box configuration with free-slip walls and nothing but
    /// molecular viscosity.
    pub fn viscous(grid: &GridSpec, dt: f64, nu: f64) -> Self {
        StepConfig {
            dt,
            rho: 1.0,
            nu,
            prandtl: 1.0,
            sgs: SgsConfig {
                enabled: false,
                ..SgsConfig::default()
            },
            most: MostParams::default(),
            bc: BoundarySpec::free_slip(grid),
            buoyancy: false,
            coriolis: None,
            surface_theta: 265.0,
            cooling_rate: 0.0,
            pressure_tol: 1e-4,
            helmholtz_tol: 1e-6,
            cfl_max: 0.9,
            mg: MgSettings::default(),
        }
    }

    /// Surface temperature at `t` seconds.
    pub fn theta_wall(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Config(format!("surface temperature requested at t = {t} s")));
        }
        Ok(self.surface_theta - self.cooling_rate * (t / 3600.0))
    }
}

/// Per-step monitors recorded alongside the state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub cfl: f64,
    /// Norm of the nodal divergence before and after the nodal projection.
    pub divergence_before: f64,
    pub divergence_after: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Plane-mean θ of the first level.
    pub theta_first_level: f64,
    pub u_tau: f64,
    /// Set when the step ran above `cfl_max` (but below the hard cap).
    pub cfl_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub t: f64,
    pub step_index: u64,
    pub u: CellVector<T>,
    pub theta: CellField<T>,
    /// Kinematic pressure at nodes, time level `n - 1/2`.
    pub p: NodeField<T>,
    /// Its cell-centred gradient.
    pub gp: CellVector<T>,
    pub nu_t: CellField<T>,
    pub surface: SurfaceState,
    pub diagnostics: Diagnostics,
}

impl<T: Real> State<T> {
    /// Fluid at rest with uniform temperature.
    pub fn rest(grid: &GridSpec, theta: f64) -> Self {
        State {
            t: 0.0,
            step_index: 0,
            u: CellVector::zeros(grid),
            theta: CellField::constant(grid, T::lit(theta)),
            p: NodeField::zeros(grid),
            gp: CellVector::zeros(grid),
            nu_t: CellField::zeros(grid),
            surface: SurfaceState::calm(theta, 0.5 * grid.dz),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.theta.grid()
    }
}

/// Vertical buoyancy `g (θ_half - θ0)/θ0` with `θ_half` the average of the
/// two time levels.
pub fn boussinesq_source<T: Real>(
    theta_n: &CellField<T>,
    theta_np1: &CellField<T>,
    theta0: f64,
    g: f64,
) -> CellVector<T> {
    let grid = *theta_n.grid();
    let (half, t0, c) = (T::lit(0.5), T::lit(theta0), T::lit(g / theta0));
    let mut out = CellVector::zeros(&grid);
    out.comps[2] = CellField::from_fn(&grid, |i, j, k| {
        c * (half * (theta_n.get(i, j, k) + theta_np1.get(i, j, k)) - t0)
    });
    out
}

/// f-plane Coriolis force relative to the geostrophic wind:
/// `(fc (v - vg), -fc (u - ug), 0)`.
pub fn coriolis_source<T: Real>(u: &CellVector<T>, ug: f64, vg: f64, fc: f64) -> CellVector<T> {
    let grid = *u.grid();
    let (f, ug, vg) = (T::lit(fc), T::lit(ug), T::lit(vg));
    let mut out = CellVector::zeros(&grid);
    out.comps[0] = CellField::from_fn(&grid, |i, j, k| f * (u.v().get(i, j, k) - vg));
    out.comps[1] = CellField::from_fn(&grid, |i, j, k| -f * (u.u().get(i, j, k) - ug));
    out
}

/// `max |u| dt/dx + |v| dt/dy + |w| dt/dz` over cells.
pub fn velocity_cfl<T: Real>(u: &CellVector<T>, dt: f64) -> f64 {
    let g = *u.grid();
    let (cx, cy, cz) = (dt / g.dx, dt / g.dy, dt / g.dz);
    let mut m = 0.0f64;
    for k in 0..g.nz {
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = u.u().get(i, j, k).to_f64_lossy().abs() * cx
                    + u.v().get(i, j, k).to_f64_lossy().abs() * cy
                    + u.w().get(i, j, k).to_f64_lossy().abs() * cz;
                m = m.max(c);
            }
        }
    }
    m
}

pub fn compute_cfl<T: Real>(state: &State<T>, dt: f64) -> f64 {
    velocity_cfl(&state.u, dt)
}

fn add_into<T: Real>(acc: &mut CellVector<T>, other: &CellVector<T>, a: T) {
    for ax in Axis::ALL {
        acc.comp_mut(ax).axpy(a, other.comp(ax));
    }
}

fn top_level<T: Real>(f: &CellField<T>) -> Vec<T> {
    let g = f.grid();
    let mut out = Vec::with_capacity(g.nx * g.ny);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.push(f.get(i, j, g.nz - 1));
        }
    }
    out
}

/// Holds the multigrid hierarchies between steps.
pub struct Stepper<T> {
    pub cfg: StepConfig,
    grid: GridSpec,
    cell_mg: CellMultigrid<T>,
    node_mg: NodeMultigrid<T>,
}

struct Closure<T> {
    contrib: SgsContributions<T>,
    nu_t: CellField<T>,
    surface: SurfaceState,
    stress: Option<[Vec<T>; 2]>,
    heat: Option<Vec<T>>,
}

impl<T: Real> Stepper<T> {
    pub fn new(grid: &GridSpec, cfg: StepConfig) -> Self {
        Stepper {
            cfg,
            grid: *grid,
            cell_mg: CellMultigrid::new(grid, 1.0 / cfg.rho, cfg.mg),
            node_mg: NodeMultigrid::new(grid, cfg.dt / cfg.rho, cfg.mg),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Eddy viscosities and surface fluxes from the state at time `n`.
    fn closure(&self, u: &CellVector<T>, theta: &CellField<T>, t_half: f64) -> Result<Closure<T>> {
        let cfg = &self.cfg;
        let grid = self.grid;
        let z1 = 0.5 * grid.dz;
        let surface = if cfg.bc.wall_model {
            let tw = cfg.theta_wall(t_half)?;
            compute_surface_state(u.u(), u.v(), theta, tw, &cfg.most)?
        } else {
            SurfaceState::calm(cfg.surface_theta, z1)
        };
        let (stress, heat) = if cfg.bc.wall_model {
            (
                Some(moeng_stress(u.u(), u.v(), &surface)),
                Some(surface_heat_flux(u.u(), u.v(), theta, &surface, &cfg.most)),
            )
        } else {
            (None, None)
        };
        let no_mean = vec![0.0; grid.nz + 1];
        let zero_shear = [vec![T::zero(); grid.nz + 1], vec![T::zero(); grid.nz + 1]];
        let (nu_t, contrib) = if !cfg.sgs.enabled {
            let nu_t = CellField::zeros(&grid);
            let c = sgs_contributions(
                &nu_t,
                &Profile::constant(&grid, T::one()),
                cfg.nu,
                cfg.prandtl,
                &no_mean,
                &zero_shear,
            );
            (nu_t, c)
        } else {
            let sf = strain_rate(u);
            let delta = grid.filter_width();
            match cfg.sgs.model {
                SgsModel::Smagorinsky => {
                    let nu_t = smagorinsky_nut(&sf, cfg.sgs.cs, delta);
                    let c = sgs_contributions(
                        &nu_t,
                        &Profile::constant(&grid, T::one()),
                        cfg.nu,
                        cfg.sgs.pr_t,
                        &no_mean,
                        &zero_shear,
                    );
                    (nu_t, c)
                }
                SgsModel::MfevSmagorinsky => {
                    let nu_t = smagorinsky_nut(&fluctuating_strain(&sf), cfg.sgs.cs, delta);
                    let gamma = isotropy_gamma(&sf, cfg.sgs.gamma_mode);
                    let nu_big = if cfg.bc.wall_model {
                        mfev_nu_t(
                            &face_heights(&grid),
                            surface.u_tau,
                            surface.l_obukhov,
                            &cfg.most,
                            cfg.sgs.h_blend,
                        )
                    } else {
                        no_mean.clone()
                    };
                    let shear = mean_shear_at_faces(
                        &plane_average(u.u()),
                        &plane_average(u.v()),
                        grid.dz,
                    );
                    let c = sgs_contributions(&nu_t, &gamma, cfg.nu, cfg.sgs.pr_t, &nu_big, &shear);
                    (nu_t, c)
                }
            }
        };
        Ok(Closure {
            contrib,
            nu_t,
            surface,
            stress,
            heat,
        })
    }

    /// Advances `state` by one step. On error the state is left untouched.
    pub fn step(&mut self, state: &mut State<T>) -> Result<StepTimers> {
        let start = Instant::now();
        let cfg = self.cfg;
        let grid = self.grid;
        let dt = cfg.dt;
        let mut tm = StepTimers::default();

        let cfl = compute_cfl(state, dt);
        if cfl > CFL_HARD_CAP {
            return Err(Error::Cfl {
                cfl,
                limit: CFL_HARD_CAP,
            });
        }

        // (1) ghost fills
        let vbc = cfg.bc.velocity_ghosts(&grid);
        let tbc = cfg.bc.theta_ghosts();
        let (u, theta, gp) = tm.time(Category::Fillpatch, || -> Result<_> {
            let mut u = state.u.clone();
            fill_ghost_vector(&mut u, &vbc)?;
            let mut theta = state.theta.clone();
            fill_ghost(&mut theta, &tbc)?;
            let mut gp = state.gp.clone();
            fill_ghost_vector(&mut gp, &vbc)?;
            Ok((u, theta, gp))
        })?;

        // (2) closure and surface layer at t + dt/2
        let cl = tm.time(Category::SgsWall, || self.closure(&u, &theta, state.t + 0.5 * dt))?;

        // (3) advection: face prediction, MAC projection, fluxes
        let inv_rho = T::lit(1.0 / cfg.rho);
        let forces = |theta_np1: &CellField<T>| -> CellVector<T> {
            let mut f = CellVector::zeros(&grid);
            if cfg.buoyancy {
                let b = boussinesq_source(&theta, theta_np1, cfg.most.theta0, cfg.most.gravity);
                add_into(&mut f, &b, T::one());
            }
            if let Some(c) = cfg.coriolis {
                add_into(&mut f, &coriolis_source(&u, c.ug, c.vg, c.fc), T::one());
            }
            f
        };
        let src = tm.time(Category::Advection, || -> Result<_> {
            let mut src = forces(&theta);
            add_into(&mut src, &gp, -inv_rho);
            fill_ghost_vector(&mut src, &vbc)?;
            Ok(src)
        })?;
        let faces = tm.time(Category::Advection, || predict_face_velocities(&u, dt, &src))?;
        let mac = tm.time(Category::MacProjection, || {
            mac_project(&faces, cfg.rho, cfg.pressure_tol, &mut self.cell_mg)
        })?;
        tm.mac = mac.stats;
        let (adv_t, adv_u) = tm.time(Category::Advection, || {
            (
                advect(&theta, &mac.faces, dt, None),
                advect_vector(&u, &mac.faces, dt, Some(&src)),
            )
        });

        // (4) scalar
        let rdt = T::lit(1.0 / dt);
        let kappa = &cl.contrib.kappa_eff;
        let (theta_new, st) = tm.time(Category::ScalarSolve, || {
            let rhs = CellField::from_fn(&grid, |i, j, k| {
                theta.get(i, j, k) * rdt + adv_t.get(i, j, k)
            });
            let bottom = match &cl.heat {
                Some(q) => WallBc::Neumann(q.clone()),
                None => WallBc::NeumannZero,
            };
            let top = if cfg.bc.theta_top_gradient != 0.0 {
                let gr = T::lit(cfg.bc.theta_top_gradient);
                WallBc::Neumann(top_level(kappa).into_iter().map(|k| k * gr).collect())
            } else {
                WallBc::NeumannZero
            };
            let bc = HelmholtzBc { bottom, top };
            helmholtz_solve(1.0 / dt, kappa, &rhs, &bc, cfg.helmholtz_tol, Some(&state.theta))
        })?;
        tm.scalar = st;

        // (5) momentum
        let mut vstats = [SolveStats::default(); 3];
        let u_star = tm.time(Category::VelocitySolve, || -> Result<_> {
            let mut rhs = forces(&theta_new);
            add_into(&mut rhs, &gp, -inv_rho);
            add_into(&mut rhs, &adv_u, T::one());
            add_into(&mut rhs, &u, rdt);
            for (c, prof) in cl.contrib.mean_tendency.iter().enumerate() {
                if prof.values.iter().any(|v| *v != T::zero()) {
                    let f = rhs.comps[c].clone();
                    rhs.comps[c] = CellField::from_fn(&grid, |i, j, k| f.get(i, j, k) + prof.values[k]);
                }
            }
            let mut out = CellVector::zeros(&grid);
            for a in Axis::ALL {
                let bc = match a {
                    Axis::Z => HelmholtzBc {
                        bottom: WallBc::Dirichlet(0.0),
                        top: WallBc::Dirichlet(0.0),
                    },
                    _ => HelmholtzBc {
                        bottom: match &cl.stress {
                            Some(s) => WallBc::Neumann(s[a.index()].clone()),
                            None => WallBc::NeumannZero,
                        },
                        top: WallBc::NeumannZero,
                    },
                };
                let (x, st) = helmholtz_solve(
                    1.0 / dt,
                    &cl.contrib.nu_eff,
                    rhs.comp(a),
                    &bc,
                    cfg.helmholtz_tol,
                    Some(u.comp(a)),
                )?;
                vstats[a.index()] = st;
                out.comps[a.index()] = x;
            }
            Ok(out)
        })?;
        tm.velocity = vstats;

        // (6) nodal projection
        let proj = tm.time(Category::PressureSolve, || {
            nodal_project(
                &u_star,
                &state.gp,
                Some(&state.p),
                cfg.rho,
                dt,
                cfg.pressure_tol,
                &mut self.node_mg,
            )
        })?;
        tm.pressure = proj.stats;

        // (7) diagnostics
        let diag = tm.time(Category::Diagnostics, || -> Result<_> {
            let div_norm = |v: &CellVector<T>| -> Result<f64> {
                let mut v = v.clone();
                fill_ghost_vector(&mut v, &vbc)?;
                Ok(norm2(&nodal_divergence(&v).data).to_f64_lossy())
            };
            let mut before = u_star.clone();
            add_into(&mut before, &state.gp, T::lit(dt / cfg.rho));
            let (tmin, tmax) = theta_new.min_max();
            Ok(Diagnostics {
                cfl,
                divergence_before: div_norm(&before)?,
                divergence_after: div_norm(&proj.u)?,
                theta_min: tmin.to_f64_lossy(),
                theta_max: tmax.to_f64_lossy(),
                theta_first_level: plane_average(&theta_new).values[0].to_f64_lossy(),
                u_tau: cl.surface.u_tau,
                cfl_warning: cfl > cfg.cfl_max,
            })
        })?;

        if !(diag.theta_min.is_finite() && diag.theta_max.is_finite()) {
            return Err(Error::NotConverged {
                solver: "time_step",
                stats: proj.stats,
            });
        }

        state.u = proj.u;
        state.p = proj.p;
        state.gp = proj.gp;
        state.theta = theta_new;
        state.nu_t = cl.nu_t;
        state.surface = cl.surface;
        state.diagnostics = diag;
        state.t += dt;
        state.step_index += 1;
        tm.finish(start.elapsed().as_secs_f64());
        Ok(tm)
    }

    /// Start-up pressure iterations: take a trial step, then roll the
    /// velocity, temperature and clock back while keeping the pressure,
    /// so the first real step is not driven by a zero pressure gradient.
    pub fn initial_iterations(&mut self, state: &mut State<T>, count: usize) -> Result<()> {
        for _ in 0..count {
            let mut trial = state.clone();
            self.step(&mut trial)?;
            state.p = trial.p;
            state.gp = trial.gp;
        }
        Ok(())
    }
}
