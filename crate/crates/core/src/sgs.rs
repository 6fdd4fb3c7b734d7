//! Subgrid-scale closure: strain rates, Smagorinsky viscosity on the
//! fluctuating strain, isotropy factor and the mean-field eddy viscosity.

use crate::field::{plane_average, CellField, CellVector, Profile};
use crate::grid::GridSpec;
use crate::real::Real;
use crate::wall::MostParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgsModel {
    /// Smagorinsky on the full strain.
    Smagorinsky,
    /// Smagorinsky on the fluctuating strain plus a mean-field eddy
    /// viscosity acting on the mean shear.
    MfevSmagorinsky,
}

impl SgsModel {
    pub fn name(self) -> &'static str {
        match self {
            SgsModel::Smagorinsky => "smagorinsky",
            SgsModel::MfevSmagorinsky => "mfev_smagorinsky",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smagorinsky" => Some(SgsModel::Smagorinsky),
            "mfev_smagorinsky" => Some(SgsModel::MfevSmagorinsky),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMode {
    Unity,
    Sullivan,
}

impl GammaMode {
    pub fn name(self) -> &'static str {
        match self {
            GammaMode::Unity => "unity",
            GammaMode::Sullivan => "sullivan",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unity" => Some(GammaMode::Unity),
            "sullivan" => Some(GammaMode::Sullivan),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgsConfig {
    pub enabled: bool,
    pub model: SgsModel,
    pub cs: f64,
    pub pr_t: f64,
    pub gamma_mode: GammaMode,
    /// Height (m) above which the mean-field viscosity vanishes; infinite
    /// disables the taper.
    pub h_blend: f64,
}

impl Default for SgsConfig {
    fn default() -> Self {
        SgsConfig {
            enabled: true,
            model: SgsModel::MfevSmagorinsky,
            cs: 0.135,
            pr_t: 0.7,
            gamma_mode: GammaMode::Unity,
            h_blend: 100.0,
        }
    }
}

/// Resolved strain-rate tensor at cell centres.
#[derive(Debug, Clone)]
pub struct StrainField<T> {
    /// `S11, S22, S33, S12, S13, S23`.
    pub s: [CellField<T>; 6],
    /// `sqrt(2 S_ij S_ij)`.
    pub mag: CellField<T>,
}

pub const S11: usize = 0;
pub const S22: usize = 1;
pub const S33: usize = 2;
pub const S12: usize = 3;
pub const S13: usize = 4;
pub const S23: usize = 5;

#[inline(always)]
fn magnitude<T: Real>(s: [T; 6]) -> T {
    let two = T::lit(2.0);
    let diag = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
    let off = s[3] * s[3] + s[4] * s[4] + s[5] * s[5];
    (two * diag + two * two * off).sqrt()
}

fn magnitude_field<T: Real>(s: &[CellField<T>; 6]) -> CellField<T> {
    let grid = *s[0].grid();
    CellField::from_fn(&grid, |i, j, k| magnitude(std::array::from_fn(|c| s[c].get(i, j, k))))
}

/// Central-difference strain rates; ghosts of `u` must be filled.
pub fn strain_rate<T: Real>(u: &CellVector<T>) -> StrainField<T> {
    let grid = *u.grid();
    let half = T::lit(0.5);
    let r = [
        T::lit(0.5 / grid.dx),
        T::lit(0.5 / grid.dy),
        T::lit(0.5 / grid.dz),
    ];
    // d u_c / d x_a at a cell.
    let grad = |c: usize, a: usize, i: usize, j: usize, k: usize| {
        let f = &u.comps[c];
        let (i, j, k) = (i as isize, j as isize, k as isize);
        let (p, m) = match a {
            0 => (f.at(i + 1, j, k), f.at(i - 1, j, k)),
            1 => (f.at(i, j + 1, k), f.at(i, j - 1, k)),
            _ => (f.at(i, j, k + 1), f.at(i, j, k - 1)),
        };
        (p - m) * r[a]
    };
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let s: [CellField<T>; 6] = std::array::from_fn(|c| {
        let (a, b) = pairs[c];
        CellField::from_fn(&grid, |i, j, k| {
            if a == b {
                grad(a, a, i, j, k)
            } else {
                half * (grad(a, b, i, j, k) + grad(b, a, i, j, k))
            }
        })
    });
    let mag = magnitude_field(&s);
    StrainField { s, mag }
}

/// Plane averages of the six components.
pub fn mean_strain<T: Real>(s: &StrainField<T>) -> [Profile<T>; 6] {
    std::array::from_fn(|c| plane_average(&s.s[c]))
}

/// `S' = S - <S>` per component, with the magnitude recomputed.
pub fn fluctuating_strain<T: Real>(s: &StrainField<T>) -> StrainField<T> {
    let means = mean_strain(s);
    let out: [CellField<T>; 6] = std::array::from_fn(|c| {
        let grid = *s.s[c].grid();
        let m = &means[c].values;
        CellField::from_fn(&grid, |i, j, k| s.s[c].get(i, j, k) - m[k])
    });
    let mag = magnitude_field(&out);
    StrainField { s: out, mag }
}

/// `(Cs Δ)^2 |S|` on interior cells.
pub fn smagorinsky_nut<T: Real>(sf: &StrainField<T>, cs: f64, delta: f64) -> CellField<T> {
    let c = T::lit((cs * delta).powi(2));
    let grid = *sf.mag.grid();
    CellField::from_fn(&grid, |i, j, k| c * sf.mag.get(i, j, k))
}

/// Isotropy factor per level.
pub fn isotropy_gamma<T: Real>(s: &StrainField<T>, mode: GammaMode) -> Profile<T> {
    let grid = *s.mag.grid();
    match mode {
        GammaMode::Unity => Profile::constant(&grid, T::one()),
        GammaMode::Sullivan => {
            let means = mean_strain(s);
            let fl = fluctuating_strain(s);
            let sprime = plane_average(&fl.mag);
            let values = (0..grid.nz)
                .map(|k| {
                    let sbar = magnitude(std::array::from_fn(|c| means[c].values[k]));
                    let sp = sprime.values[k];
                    if sp + sbar == T::zero() {
                        T::one()
                    } else {
                        (sp / (sp + sbar)).max(T::epsilon()).min(T::one())
                    }
                })
                .collect();
            Profile {
                z: grid.z_centers(),
                values,
            }
        }
    }
}

/// Stability function for momentum, `1 + beta_m z / L` (1 when neutral).
pub fn phi_m(z: f64, l_obukhov: f64, beta_m: f64) -> f64 {
    if l_obukhov.is_finite() {
        1.0 + beta_m * z / l_obukhov
    } else {
        1.0
    }
}

/// Mean-field eddy viscosity at heights `z`:
/// `kappa u_tau z / phi_m(z/L) * max(0, 1 - z/h_blend)^2`.
pub fn mfev_nu_t(z: &[f64], u_tau: f64, l_obukhov: f64, most: &MostParams, h_blend: f64) -> Vec<f64> {
    z.iter()
        .map(|&z| {
            if u_tau <= 0.0 {
                return 0.0;
            }
            let taper = if h_blend.is_finite() {
                (1.0 - z / h_blend).max(0.0).powi(2)
            } else {
                1.0
            };
            most.kappa * u_tau * z / phi_m(z, l_obukhov, most.beta_m) * taper
        })
        .collect()
}

/// Horizontal-face heights `k dz`, `k = 0..=nz`.
pub fn face_heights(grid: &GridSpec) -> Vec<f64> {
    (0..=grid.nz).map(|k| k as f64 * grid.dz).collect()
}

/// Mean shear `<S_i3>` for `i = x, y` on the horizontal faces, from the mean
/// velocity profiles; zero on the two wall faces.
pub fn mean_shear_at_faces<T: Real>(mean_u: &Profile<T>, mean_v: &Profile<T>, dz: f64) -> [Vec<T>; 2] {
    let nz = mean_u.len();
    let c = T::lit(0.5 / dz);
    let f = |p: &Profile<T>| {
        (0..=nz)
            .map(|k| {
                if k == 0 || k == nz {
                    T::zero()
                } else {
                    c * (p.values[k] - p.values[k - 1])
                }
            })
            .collect()
    };
    [f(mean_u), f(mean_v)]
}

/// Output of [`sgs_contributions`].
#[derive(Debug, Clone)]
pub struct SgsContributions<T> {
    /// Momentum diffusivity `nu + gamma nu_t` on cells.
    pub nu_eff: CellField<T>,
    /// Scalar diffusivity `nu_eff / Pr_t`.
    pub kappa_eff: CellField<T>,
    /// Explicit mean-stress tendency per velocity component (z only).
    pub mean_tendency: [Profile<T>; 3],
}

/// Assembles the diffusivities and the mean-stress tendency
/// `d/dz (2 nu_T <S_i3>)` from face values of `nu_T` and `<S_i3>`.
pub fn sgs_contributions<T: Real>(
    nu_t: &CellField<T>,
    gamma: &Profile<T>,
    nu_mol: f64,
    pr_t: f64,
    nu_big_faces: &[f64],
    mean_shear_faces: &[Vec<T>; 2],
) -> SgsContributions<T> {
    let grid = *nu_t.grid();
    let nu = T::lit(nu_mol);
    let nu_eff = CellField::from_fn(&grid, |i, j, k| nu + gamma.values[k] * nu_t.get(i, j, k));
    let rp = T::lit(1.0 / pr_t);
    let kappa_eff = CellField::from_fn(&grid, |i, j, k| nu_eff.get(i, j, k) * rp);
    let two = T::lit(2.0);
    let rdz = T::lit(1.0 / grid.dz);
    let tend = |c: usize| {
        let s = &mean_shear_faces[c];
        let flux: Vec<T> = (0..=grid.nz)
            .map(|k| {
                if k == 0 || k == grid.nz {
                    T::zero()
                } else {
                    two * T::lit(nu_big_faces[k]) * s[k]
                }
            })
            .collect();
        Profile {
            z: grid.z_centers(),
            values: (0..grid.nz).map(|k| (flux[k + 1] - flux[k]) * rdz).collect(),
        }
    };
    SgsContributions {
        nu_eff,
        kappa_eff,
        mean_tendency: [tend(0), tend(1), Profile::constant(&grid, T::zero())],
    }
}
