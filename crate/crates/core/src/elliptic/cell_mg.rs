//! Cell-centred geometric multigrid and the MAC projection built on it.

use std::time::Instant;

use rayon::prelude::*;

use super::{cg, MgSettings, SolveStats};
use crate::bc::{fill_ghost_unchecked, ScalarBc};
use crate::error::{Error, Result};
use crate::field::{divergence_mac, CellField, FaceVelocitySet};
use crate::grid::{Axis, GridSpec};
use crate::real::Real;
use crate::reduce::pairwise_sum;

/// `(coarse index, weight)` pairs giving one fine cell under linear
/// cell-centred interpolation.
type Prolong1d = Vec<[(usize, f64); 2]>;
/// Fine cells (and weights) gathered by one coarse cell; the exact transpose
/// of [`Prolong1d`] scaled by one half.
type Restrict1d = Vec<Vec<(usize, f64)>>;

fn prolong_1d(nf: usize, periodic: bool) -> Prolong1d {
    let nc = nf / 2;
    (0..nf)
        .map(|f| {
            let parent = f / 2;
            let other = if f % 2 == 0 {
                parent as isize - 1
            } else {
                parent as isize + 1
            };
            let other = if periodic {
                other.rem_euclid(nc as isize) as usize
            } else if other < 0 || other >= nc as isize {
                parent
            } else {
                other as usize
            };
            [(parent, 0.75), (other, 0.25)]
        })
        .collect()
}

fn restrict_1d(prolong: &Prolong1d, nc: usize, periodic: bool) -> Restrict1d {
    let nf = prolong.len() as isize;
    (0..nc)
        .map(|c| {
            let mut list = Vec::with_capacity(4);
            for off in -1..=2 {
                let f = 2 * c as isize + off;
                let f = if periodic {
                    f.rem_euclid(nf)
                } else if f < 0 || f >= nf {
                    continue;
                } else {
                    f
                } as usize;
                let w: f64 = prolong[f].iter().filter(|(p, _)| *p == c).map(|(_, w)| w).sum();
                if w != 0.0 && !list.iter().any(|(g, _)| *g == f) {
                    list.push((f, 0.5 * w));
                }
            }
            list
        })
        .collect()
}

/// Applies `A x = coef (-∇²) x` with the 7-point stencil; `x` ghosts must be
/// filled.
fn apply_into<T: Real>(c: [T; 3], diag: T, x: &CellField<T>, out: &mut CellField<T>) {
    let grid = *x.grid();
    let (sx, sxy) = (x.stride_y() as isize, x.stride_z() as isize);
    let xd = x.data();
    out.par_interior_planes_mut(|k, plane, psx, g| {
        for j in 0..grid.ny {
            let base = x.idx(0, j as isize, k as isize);
            let row = (j + g) * psx + g;
            for i in 0..grid.nx {
                let n = base + i;
                let ni = n as isize;
                let v = diag * xd[n]
                    - c[0] * (xd[n + 1] + xd[n - 1])
                    - c[1] * (xd[(ni + sx) as usize] + xd[(ni - sx) as usize])
                    - c[2] * (xd[(ni + sxy) as usize] + xd[(ni - sxy) as usize]);
                plane[row + i] = v;
            }
        }
    });
}

fn interior_dot<T: Real>(a: &CellField<T>, b: &CellField<T>) -> T {
    let grid = *a.grid();
    let parts: Vec<T> = (0..grid.nz)
        .into_par_iter()
        .map(|k| {
            let rows: Vec<T> = (0..grid.ny)
                .map(|j| {
                    let base = a.idx(0, j as isize, k as isize);
                    let mut s = T::zero();
                    for i in 0..grid.nx {
                        s += a.data()[base + i] * b.data()[base + i];
                    }
                    s
                })
                .collect();
            pairwise_sum(&rows)
        })
        .collect();
    pairwise_sum(&parts)
}

fn remove_interior_mean<T: Real>(f: &mut CellField<T>) {
    let grid = *f.grid();
    let mean = f.sum() / T::from_usize_lossy(grid.cells());
    f.par_interior_planes_mut(|_, plane, sx, g| {
        for j in 0..grid.ny {
            let row = (j + g) * sx + g;
            for v in &mut plane[row..row + grid.nx] {
                *v -= mean;
            }
        }
    });
}

struct CellLevel<T> {
    grid: GridSpec,
    bc: ScalarBc,
    c: [T; 3],
    diag: T,
    x: CellField<T>,
    b: CellField<T>,
    r: CellField<T>,
    tmp: CellField<T>,
    prolong: [Prolong1d; 3],
    restrict: [Restrict1d; 3],
}

impl<T: Real> CellLevel<T> {
    fn new(grid: GridSpec, coef: f64) -> Self {
        let c = [
            T::lit(coef / (grid.dx * grid.dx)),
            T::lit(coef / (grid.dy * grid.dy)),
            T::lit(coef / (grid.dz * grid.dz)),
        ];
        let diag = (c[0] + c[1] + c[2]) * T::lit(2.0);
        CellLevel {
            bc: ScalarBc::neumann(&grid),
            c,
            diag,
            x: CellField::zeros(&grid),
            b: CellField::zeros(&grid),
            r: CellField::zeros(&grid),
            tmp: CellField::zeros(&grid),
            prolong: Default::default(),
            restrict: Default::default(),
            grid,
        }
    }

    fn residual(&mut self) {
        fill_ghost_unchecked(&mut self.x, &self.bc);
        apply_into(self.c, self.diag, &self.x, &mut self.r);
        let grid = self.grid;
        let b = &self.b;
        self.r.par_interior_planes_mut(|k, plane, sx, g| {
            for j in 0..grid.ny {
                let row = (j + g) * sx + g;
                let bb = b.idx(0, j as isize, k as isize);
                for i in 0..grid.nx {
                    plane[row + i] = b.data()[bb + i] - plane[row + i];
                }
            }
        });
    }

    /// One red-black Gauss-Seidel sweep; `reverse` flips the colour order.
    fn smooth(&mut self, reverse: bool) {
        let colors: [usize; 2] = if reverse { [1, 0] } else { [0, 1] };
        for color in colors {
            fill_ghost_unchecked(&mut self.x, &self.bc);
            let (c, diag, grid) = (self.c, self.diag, self.grid);
            let inv = T::one() / diag;
            let x = &self.x;
            let b = &self.b;
            let (sx, sxy) = (x.stride_y() as isize, x.stride_z() as isize);
            self.tmp.par_interior_planes_mut(|k, plane, psx, g| {
                for j in 0..grid.ny {
                    let base = x.idx(0, j as isize, k as isize);
                    let row = (j + g) * psx + g;
                    let xd = x.data();
                    for i in 0..grid.nx {
                        let n = base + i;
                        plane[row + i] = if (i + j + k) % 2 == color {
                            let ni = n as isize;
                            (b.data()[n]
                                + c[0] * (xd[n + 1] + xd[n - 1])
                                + c[1] * (xd[(ni + sx) as usize] + xd[(ni - sx) as usize])
                                + c[2] * (xd[(ni + sxy) as usize] + xd[(ni - sxy) as usize]))
                                * inv
                        } else {
                            xd[n]
                        };
                    }
                }
            });
            std::mem::swap(&mut self.x, &mut self.tmp);
        }
    }
}

/// Geometric multigrid hierarchy for `coef (-∇²) x = b` on cell centres with
/// periodic or zero-gradient boundaries (a singular system; the constant mode
/// is pinned by removing means).
pub struct CellMultigrid<T> {
    levels: Vec<CellLevel<T>>,
    settings: MgSettings,
    /// Per-cycle residual reduction factors of the last solve.
    pub last_factors: Vec<f64>,
}

impl<T: Real> CellMultigrid<T> {
    pub fn new(grid: &GridSpec, coef: f64, settings: MgSettings) -> Self {
        let mut g = GridSpec::unchecked(
            grid.dims(),
            [grid.lx, grid.ly, grid.lz],
            [grid.periodic_x, grid.periodic_y],
            1,
        );
        let mut levels = vec![CellLevel::new(g, coef)];
        while g.dims().iter().all(|&n| n % 2 == 0 && n >= 4) {
            let coarse = GridSpec::unchecked(
                [g.nx / 2, g.ny / 2, g.nz / 2],
                [g.lx, g.ly, g.lz],
                [g.periodic_x, g.periodic_y],
                1,
            );
            let fine = levels.last_mut().unwrap();
            for a in Axis::ALL {
                let p = prolong_1d(g.n(a), g.periodic(a));
                fine.restrict[a.index()] = restrict_1d(&p, coarse.n(a), g.periodic(a));
                fine.prolong[a.index()] = p;
            }
            levels.push(CellLevel::new(coarse, coef));
            g = coarse;
        }
        CellMultigrid {
            levels,
            settings,
            last_factors: Vec::new(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_dims(&self) -> Vec<[usize; 3]> {
        self.levels.iter().map(|l| l.grid.dims()).collect()
    }

    /// Applies the finest-level operator to interior values (x-fastest).
    pub fn apply(&mut self, x: &[T]) -> Vec<T> {
        let l = &mut self.levels[0];
        let g = l.grid;
        l.x = CellField::from_interior(&g, x);
        fill_ghost_unchecked(&mut l.x, &l.bc);
        apply_into(l.c, l.diag, &l.x, &mut l.r);
        l.r.interior()
    }

    /// Restriction of an interior vector from level 0 to level 1.
    pub fn restrict_vec(&mut self, fine: &[T]) -> Vec<T> {
        let (f, c) = self.levels.split_at_mut(1);
        f[0].r = CellField::from_interior(&f[0].grid, fine);
        restrict(&f[0], &mut c[0].b);
        c[0].b.interior()
    }

    /// Prolongation of an interior vector from level 1 to level 0.
    pub fn prolong_vec(&mut self, coarse: &[T]) -> Vec<T> {
        let (f, c) = self.levels.split_at_mut(1);
        c[0].x = CellField::from_interior(&c[0].grid, coarse);
        f[0].x = CellField::zeros(&f[0].grid);
        prolong_add(&mut f[0], &mut c[0]);
        f[0].x.interior()
    }

    fn vcycle(levels: &mut [CellLevel<T>], s: &MgSettings) {
        if levels.len() == 1 {
            let l = &mut levels[0];
            let b = l.b.interior();
            let mut x = vec![T::zero(); b.len()];
            let g = l.grid;
            let (c, diag, bc) = (l.c, l.diag, l.bc);
            let mut xf = CellField::zeros(&g);
            let mut yf = CellField::zeros(&g);
            cg(
                |v, out| {
                    xf = CellField::from_interior(&g, v);
                    fill_ghost_unchecked(&mut xf, &bc);
                    apply_into(c, diag, &xf, &mut yf);
                    out.copy_from_slice(&yf.interior());
                },
                &b,
                &mut x,
                s.coarse_tol,
                10 * b.len() + 100,
                true,
            );
            l.x = CellField::from_interior(&g, &x);
            return;
        }
        let (fine, rest) = levels.split_at_mut(1);
        let f = &mut fine[0];
        for _ in 0..s.pre_sweeps {
            f.smooth(false);
        }
        f.residual();
        let c = &mut rest[0];
        restrict(f, &mut c.b);
        remove_interior_mean(&mut c.b);
        c.x.fill(T::zero());
        Self::vcycle(rest, s);
        prolong_add(f, &mut rest[0]);
        for _ in 0..s.post_sweeps {
            f.smooth(true);
        }
    }

    /// Solves with interior right-hand side `b` (mean removed internally),
    /// starting from and overwriting `x`.
    pub fn solve(&mut self, b: &[T], x: &mut [T], tol: f64) -> SolveStats {
        let start = Instant::now();
        let s = self.settings;
        let g = self.levels[0].grid;
        {
            let l = &mut self.levels[0];
            l.b = CellField::from_interior(&g, b);
            remove_interior_mean(&mut l.b);
            l.x = CellField::from_interior(&g, x);
        }
        let bnorm = {
            let l = &self.levels[0];
            interior_dot(&l.b, &l.b).sqrt().to_f64_lossy()
        };
        self.last_factors.clear();
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = T::zero());
            return SolveStats {
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
                ..Default::default()
            };
        }
        let rnorm = |l: &mut CellLevel<T>| {
            l.residual();
            interior_dot(&l.r, &l.r).sqrt().to_f64_lossy()
        };
        let mut res = rnorm(&mut self.levels[0]) / bnorm;
        let initial = res;
        let mut it = 0;
        while res > tol && it < s.max_vcycles {
            Self::vcycle(&mut self.levels, &s);
            let new = rnorm(&mut self.levels[0]) / bnorm;
            self.last_factors.push(new / res);
            res = new;
            it += 1;
        }
        remove_interior_mean(&mut self.levels[0].x);
        x.copy_from_slice(&self.levels[0].x.interior());
        SolveStats {
            iterations: it,
            initial_relative_residual: initial,
            final_relative_residual: res,
            converged: res <= tol,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }
}

fn restrict<T: Real>(fine: &CellLevel<T>, coarse_b: &mut CellField<T>) {
    let [rx, ry, rz] = &fine.restrict;
    let r = &fine.r;
    let cg = *coarse_b.grid();
    coarse_b.par_interior_planes_mut(|kc, plane, sx, g| {
        for jc in 0..cg.ny {
            for ic in 0..cg.nx {
                let mut acc = T::zero();
                for &(kf, wz) in &rz[kc] {
                    for &(jf, wy) in &ry[jc] {
                        let wyz = wy * wz;
                        let base = r.idx(0, jf as isize, kf as isize);
                        for &(if_, wx) in &rx[ic] {
                            acc += T::lit(wx * wyz) * r.data()[base + if_];
                        }
                    }
                }
                plane[(jc + g) * sx + ic + g] = acc;
            }
        }
    });
}

fn prolong_add<T: Real>(fine: &mut CellLevel<T>, coarse: &mut CellLevel<T>) {
    let [px, py, pz] = &fine.prolong;
    let xc = &coarse.x;
    let fg = fine.grid;
    fine.x.par_interior_planes_mut(|k, plane, sx, g| {
        for j in 0..fg.ny {
            for i in 0..fg.nx {
                let mut acc = T::zero();
                for &(kc, wz) in &pz[k] {
                    for &(jc, wy) in &py[j] {
                        let base = xc.idx(0, jc as isize, kc as isize);
                        for &(ic, wx) in &px[i] {
                            acc += T::lit(wx * wy * wz) * xc.data()[base + ic];
                        }
                    }
                }
                plane[(j + g) * sx + i + g] += acc;
            }
        }
    });
}

/// Applies `(1/rho)(-∇²)` with zero-gradient walls to an interior vector;
/// exposed as an operator oracle for manufactured-solution checks.
pub fn apply_cell_poisson<T: Real>(grid: &GridSpec, coef: f64, x: &[T]) -> Vec<T> {
    let g = GridSpec::unchecked(
        grid.dims(),
        [grid.lx, grid.ly, grid.lz],
        [grid.periodic_x, grid.periodic_y],
        1,
    );
    let mut l = CellLevel::<T>::new(g, coef);
    l.x = CellField::from_interior(&g, x);
    fill_ghost_unchecked(&mut l.x, &l.bc);
    apply_into(l.c, l.diag, &l.x, &mut l.r);
    l.r.interior()
}

/// Result of a MAC projection.
pub struct MacProjection<T> {
    pub faces: FaceVelocitySet<T>,
    pub psi: CellField<T>,
    pub stats: SolveStats,
}

/// Projects face velocities onto the discretely divergence-free space.
///
/// Solves `∇·((1/rho)∇ψ) = ∇·u_f` and returns `u_f - (1/rho)∇ψ`. Wall faces
/// are left untouched.
pub fn mac_project<T: Real>(
    faces: &FaceVelocitySet<T>,
    rho: f64,
    tol: f64,
    mg: &mut CellMultigrid<T>,
) -> Result<MacProjection<T>> {
    let grid = *faces.grid();
    let div = divergence_mac(faces);
    // A = (1/rho)(-∇²), so the right-hand side is -div.
    let b: Vec<T> = div.interior().into_iter().map(|d| -d).collect();
    let mut psi_v = vec![T::zero(); b.len()];
    let stats = mg.solve(&b, &mut psi_v, tol);
    let mut psi = CellField::from_interior(&grid, &psi_v);
    fill_ghost_unchecked(&mut psi, &ScalarBc::neumann(&grid));

    let mut out = faces.clone();
    let inv_rho = T::lit(1.0 / rho);
    let (rdx, rdy, rdz) = (
        T::lit(1.0 / grid.dx),
        T::lit(1.0 / grid.dy),
        T::lit(1.0 / grid.dz),
    );
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let (ilo, ihi) = if grid.periodic_x { (0, nx) } else { (1, nx) };
    let (jlo, jhi) = if grid.periodic_y { (0, ny) } else { (1, ny) };
    for k in 0..nz {
        for j in 0..ny {
            for i in ilo..ihi {
                let n = out.iu(i, j, k);
                let gr = (psi.at(i as isize, j as isize, k as isize)
                    - psi.at(i as isize - 1, j as isize, k as isize))
                    * rdx;
                out.uf[n] -= inv_rho * gr;
            }
        }
        for j in jlo..jhi {
            for i in 0..nx {
                let n = out.iv(i, j, k);
                let gr = (psi.at(i as isize, j as isize, k as isize)
                    - psi.at(i as isize, j as isize - 1, k as isize))
                    * rdy;
                out.vf[n] -= inv_rho * gr;
            }
        }
    }
    for k in 1..nz {
        for j in 0..ny {
            for i in 0..nx {
                let n = out.iw(i, j, k);
                let gr = (psi.at(i as isize, j as isize, k as isize)
                    - psi.at(i as isize, j as isize, k as isize - 1))
                    * rdz;
                out.wf[n] -= inv_rho * gr;
            }
        }
    }
    out.sync_periodic();
    if !stats.converged {
        return Err(Error::NotConverged {
            solver: "mac_projection",
            stats,
        });
    }
    Ok(MacProjection {
        faces: out,
        psi,
        stats,
    })
}
