//! Monin-Obukhov surface layer: friction velocity, local wall stress and
//! surface heat flux, and the surface cooling schedule.

use crate::error::{Error, Result};
use crate::field::CellField;
use crate::real::Real;
use crate::reduce::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MostParams {
    pub kappa: f64,
    pub z0: f64,
    pub beta_m: f64,
    pub beta_h: f64,
    pub gravity: f64,
    pub theta0: f64,
}

impl Default for MostParams {
    fn default() -> Self {
        MostParams {
            kappa: 0.4,
            z0: 0.1,
            beta_m: 4.8,
            beta_h: 7.8,
            gravity: 9.81,
            theta0: 263.5,
        }
    }
}

/// Surface temperature (K) at time `t` (s): 265 K cooling at 0.25 K/h.
pub fn surface_temperature(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Config(format!("surface temperature requested at t = {t} s")));
    }
    Ok(265.0 - 0.25 * (t / 3600.0))
}

/// Converged surface-layer similarity state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MostSolution {
    pub u_tau: f64,
    pub theta_star: f64,
    /// Obukhov length; `+inf` when neutral.
    pub l_obukhov: f64,
    /// `ln(z1/z0) + beta_m z1/L`.
    pub psi_m: f64,
    /// `ln(z1/z0) + beta_h z1/L`.
    pub psi_h: f64,
    pub iterations: usize,
}

impl MostSolution {
    /// Local stability function `1 + beta_h z1/L`.
    pub fn phi_h(&self, z1: f64, p: &MostParams) -> f64 {
        if self.l_obukhov.is_finite() {
            1.0 + p.beta_h * z1 / self.l_obukhov
        } else {
            1.0
        }
    }

    /// Residuals of the two similarity relations.
    pub fn residuals(&self, sbar: f64, dtheta: f64, z1: f64, p: &MostParams) -> (f64, f64) {
        let ln = (z1 / p.z0).ln();
        let zl = if self.l_obukhov.is_finite() { z1 / self.l_obukhov } else { 0.0 };
        (
            self.u_tau - p.kappa * sbar / (ln + p.beta_m * zl),
            self.theta_star - p.kappa * dtheta / (ln + p.beta_h * zl),
        )
    }
}

const MOST_TOL: f64 = 1e-10;
const MOST_MAX_ITER: usize = 500;
const NEUTRAL_DTHETA: f64 = 1e-9;

fn obukhov(u: f64, ts: f64, p: &MostParams) -> f64 {
    if ts <= 0.0 {
        f64::INFINITY
    } else {
        u * u * p.theta0 / (p.kappa * p.gravity * ts)
    }
}

/// Solves the stable similarity relations for `u_tau` and `theta_*` by a
/// damped fixed point started from the neutral solution.
pub fn friction_velocity(sbar: f64, dtheta: f64, z1: f64, p: &MostParams) -> Result<MostSolution> {
    if z1 <= p.z0 {
        return Err(Error::Config(format!(
            "first cell height {z1} m must exceed the roughness length {} m",
            p.z0
        )));
    }
    if dtheta < -NEUTRAL_DTHETA {
        return Err(Error::Unstable(dtheta));
    }
    let ln = (z1 / p.z0).ln();
    if sbar <= 0.0 {
        return Ok(MostSolution {
            u_tau: 0.0,
            theta_star: 0.0,
            l_obukhov: f64::INFINITY,
            psi_m: ln,
            psi_h: ln,
            iterations: 0,
        });
    }
    let mut u = p.kappa * sbar / ln;
    if dtheta.abs() <= NEUTRAL_DTHETA {
        return Ok(MostSolution {
            u_tau: u,
            theta_star: 0.0,
            l_obukhov: f64::INFINITY,
            psi_m: ln,
            psi_h: ln,
            iterations: 0,
        });
    }
    let mut ts = p.kappa * dtheta / ln;
    for it in 1..=MOST_MAX_ITER {
        let l = obukhov(u, ts, p);
        let psi_m = ln + p.beta_m * z1 / l;
        let psi_h = ln + p.beta_h * z1 / l;
        let un = 0.5 * u + 0.5 * p.kappa * sbar / psi_m;
        let tn = 0.5 * ts + 0.5 * p.kappa * dtheta / psi_h;
        let done = (un - u).abs() <= MOST_TOL && (tn - ts).abs() <= MOST_TOL;
        u = un;
        ts = tn;
        if !u.is_finite() || u <= 0.0 {
            break;
        }
        if done {
            let l = obukhov(u, ts, p);
            return Ok(MostSolution {
                u_tau: u,
                theta_star: ts,
                l_obukhov: l,
                psi_m: ln + p.beta_m * z1 / l,
                psi_h: ln + p.beta_h * z1 / l,
                iterations: it,
            });
        }
    }
    Err(Error::SurfaceLayer {
        iterations: MOST_MAX_ITER,
        u_tau: u,
    })
}

/// Surface state for one step, computed once and then read-only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceState {
    pub u_tau: f64,
    pub theta_star: f64,
    /// Kinematic heat flux, `-u_tau theta_*` (negative when cooling).
    pub q_wall: f64,
    pub l_obukhov: f64,
    pub theta_wall: f64,
    /// Plane average of the local horizontal speed at `z1`.
    pub sbar: f64,
    pub u_bar: f64,
    pub v_bar: f64,
    pub theta_bar: f64,
    pub z1: f64,
    pub psi_h: f64,
}

impl SurfaceState {
    /// A state with no surface exchange.
    pub fn calm(theta_wall: f64, z1: f64) -> Self {
        SurfaceState {
            u_tau: 0.0,
            theta_star: 0.0,
            q_wall: 0.0,
            l_obukhov: f64::INFINITY,
            theta_wall,
            sbar: 0.0,
            u_bar: 0.0,
            v_bar: 0.0,
            theta_bar: theta_wall,
            z1,
            psi_h: 1.0,
        }
    }
}

fn first_level<T: Real>(f: &CellField<T>) -> Vec<f64> {
    let g = f.grid();
    let mut out = Vec::with_capacity(g.nx * g.ny);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.push(f.get(i, j, 0).to_f64_lossy());
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    pairwise_sum(v) / v.len() as f64
}

/// Plane averages at the first level and the similarity solution.
pub fn compute_surface_state<T: Real>(
    u: &CellField<T>,
    v: &CellField<T>,
    theta: &CellField<T>,
    theta_wall: f64,
    p: &MostParams,
) -> Result<SurfaceState> {
    let z1 = 0.5 * u.grid().dz;
    let (u1, v1, t1) = (first_level(u), first_level(v), first_level(theta));
    let s: Vec<f64> = u1.iter().zip(&v1).map(|(a, b)| a.hypot(*b)).collect();
    let (sbar, u_bar, v_bar, theta_bar) = (mean(&s), mean(&u1), mean(&v1), mean(&t1));
    let sol = friction_velocity(sbar, theta_bar - theta_wall, z1, p)?;
    Ok(SurfaceState {
        u_tau: sol.u_tau,
        theta_star: sol.theta_star,
        q_wall: -sol.u_tau * sol.theta_star,
        l_obukhov: sol.l_obukhov,
        theta_wall,
        sbar,
        u_bar,
        v_bar,
        theta_bar,
        z1,
        psi_h: sol.psi_h,
    })
}

/// Local wall stress `tau_13, tau_23` per first-level column (x-fastest),
/// directed along the flow.
pub fn moeng_stress<T: Real>(u: &CellField<T>, v: &CellField<T>, sf: &SurfaceState) -> [Vec<T>; 2] {
    let (u1, v1) = (first_level(u), first_level(v));
    if sf.sbar <= 0.0 || sf.u_tau == 0.0 {
        return [vec![T::zero(); u1.len()], vec![T::zero(); u1.len()]];
    }
    let c = sf.u_tau * sf.u_tau / (sf.sbar * sf.sbar);
    let mut tx = Vec::with_capacity(u1.len());
    let mut ty = Vec::with_capacity(u1.len());
    for (&a, &b) in u1.iter().zip(&v1) {
        let s = a.hypot(b);
        tx.push(T::lit((sf.u_bar * s + sf.sbar * (a - sf.u_bar)) * c));
        ty.push(T::lit((sf.v_bar * s + sf.sbar * (b - sf.v_bar)) * c));
    }
    [tx, ty]
}

/// Local surface heat flux per first-level column, positive when the
/// surface is colder than the air:
/// `[(theta - theta_bar) sbar + (theta_bar - theta_w) s] u_tau kappa / (sbar psi_h)`.
///
/// `psi_h = ln(z1/z0) + beta_h z1/L` is the integrated similarity function,
/// which makes the plane average equal `u_tau theta_*`.
pub fn surface_heat_flux<T: Real>(
    u: &CellField<T>,
    v: &CellField<T>,
    theta: &CellField<T>,
    sf: &SurfaceState,
    p: &MostParams,
) -> Vec<T> {
    let (u1, v1, t1) = (first_level(u), first_level(v), first_level(theta));
    if sf.sbar <= 0.0 || sf.u_tau == 0.0 {
        return vec![T::zero(); t1.len()];
    }
    let c = sf.u_tau * p.kappa / (sf.sbar * sf.psi_h);
    u1.iter()
        .zip(&v1)
        .zip(&t1)
        .map(|((&a, &b), &t)| {
            let s = a.hypot(b);
            T::lit(((t - sf.theta_bar) * sf.sbar + (sf.theta_bar - sf.theta_wall) * s) * c)
        })
        .collect()
}
