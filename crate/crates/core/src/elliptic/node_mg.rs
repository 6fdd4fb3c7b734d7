//! Node-centred variational Poisson operator and the approximate projection.
//!
//! The operator is the trilinear finite-element stiffness matrix divided by
//! the cell volume: a 27-point stencil on interior nodes. Wall nodes carry a
//! weight of one half per wall axis, which together with mirrored ghosts
//! reproduces the one-sided element rows exactly.

use std::time::Instant;

use rayon::prelude::*;

use super::{cg, MgSettings, SolveStats};
use crate::bc::{fill_ghost_vector, VectorBc};
use crate::error::{Error, Result};
use crate::field::{CellVector, NodeField};
use crate::grid::{Axis, GridSpec};
use crate::real::Real;
use crate::reduce::pairwise_sum;

type Transfer1d = Vec<Vec<(usize, f64)>>;

/// Fine node -> coarse nodes under linear vertex interpolation.
fn prolong_1d(mf: usize, mc: usize, periodic: bool) -> Transfer1d {
    (0..mf)
        .map(|f| {
            if f % 2 == 0 {
                vec![(f / 2, 1.0)]
            } else {
                let hi = if periodic { f.div_ceil(2) % mc } else { f.div_ceil(2) };
                vec![((f - 1) / 2, 0.5), (hi, 0.5)]
            }
        })
        .collect()
}

/// Coarse node -> fine nodes, transpose of [`prolong_1d`] halved.
fn restrict_1d(p: &Transfer1d, mc: usize) -> Transfer1d {
    let mut out: Transfer1d = vec![Vec::new(); mc];
    for (f, list) in p.iter().enumerate() {
        for &(c, w) in list {
            out[c].push((f, 0.5 * w));
        }
    }
    out
}

struct NodeLevel<T> {
    m: [usize; 3],
    periodic: [bool; 3],
    sx: usize,
    sxy: usize,
    stencil: [T; 27],
    offsets: [isize; 27],
    wts: [Vec<T>; 3],
    x: Vec<T>,
    b: Vec<T>,
    r: Vec<T>,
    prolong: [Transfer1d; 3],
    restrict: [Transfer1d; 3],
}

impl<T: Real> NodeLevel<T> {
    fn new(cells: [usize; 3], periodic: [bool; 3], h: [f64; 3], coef: f64) -> Self {
        let m = [0, 1, 2].map(|a| if periodic[a] { cells[a] } else { cells[a] + 1 });
        let sx = m[0] + 2;
        let sxy = sx * (m[1] + 2);
        let len = sxy * (m[2] + 2);
        let kk = [-1.0, 2.0, -1.0];
        let mm = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        let mut stencil = [T::zero(); 27];
        let mut offsets = [0isize; 27];
        for dz in 0..3 {
            for dy in 0..3 {
                for dx in 0..3 {
                    let d = [dx, dy, dz];
                    let mut s = 0.0;
                    for a in 0..3 {
                        let mut t = kk[d[a]] / (h[a] * h[a]);
                        for (o, &dd) in d.iter().enumerate() {
                            if o != a {
                                t *= mm[dd];
                            }
                        }
                        s += t;
                    }
                    let n = dz * 9 + dy * 3 + dx;
                    stencil[n] = T::lit(coef * s);
                    offsets[n] = (dx as isize - 1)
                        + (dy as isize - 1) * sx as isize
                        + (dz as isize - 1) * sxy as isize;
                }
            }
        }
        let wts = [0, 1, 2].map(|a| {
            (0..m[a])
                .map(|i| {
                    if !periodic[a] && (i == 0 || i + 1 == m[a]) {
                        T::lit(0.5)
                    } else {
                        T::one()
                    }
                })
                .collect()
        });
        NodeLevel {
            m,
            periodic,
            sx,
            sxy,
            stencil,
            offsets,
            wts,
            x: vec![T::zero(); len],
            b: vec![T::zero(); len],
            r: vec![T::zero(); len],
            prolong: Default::default(),
            restrict: Default::default(),
        }
    }

    #[inline(always)]
    fn pidx(&self, i: usize, j: usize, k: usize) -> usize {
        (i + 1) + self.sx * (j + 1) + self.sxy * (k + 1)
    }

    fn count(&self) -> usize {
        self.m[0] * self.m[1] * self.m[2]
    }

    fn fill_ghosts(&self, v: &mut [T]) {
        let [mx, my, mz] = self.m;
        let (sx, sxy) = (self.sx, self.sxy);
        // (ghost low, source for low, ghost high, source for high), padded.
        let src = |a: usize, n: usize| -> (usize, usize, usize, usize) {
            if self.periodic[a] {
                (0, n, n + 1, 1)
            } else {
                (0, 2, n + 1, n - 1)
            }
        };
        let (gl, sl, gh, sh) = src(0, mx);
        for k in 1..=mz {
            for j in 1..=my {
                let row = k * sxy + j * sx;
                v[row + gl] = v[row + sl];
                v[row + gh] = v[row + sh];
            }
        }
        let (gl, sl, gh, sh) = src(1, my);
        for k in 1..=mz {
            for i in 0..sx {
                let p = k * sxy + i;
                v[p + gl * sx] = v[p + sl * sx];
                v[p + gh * sx] = v[p + sh * sx];
            }
        }
        let (gl, sl, gh, sh) = src(2, mz);
        v.copy_within(sl * sxy..(sl + 1) * sxy, gl * sxy);
        v.copy_within(sh * sxy..(sh + 1) * sxy, gh * sxy);
    }

    /// `out = A x` on distinct nodes; `x` ghosts must be filled.
    fn apply_into(&self, x: &[T], out: &mut [T]) {
        let [mx, my, mz] = self.m;
        let sxy = self.sxy;
        out.par_chunks_mut(sxy)
            .enumerate()
            .filter(|(kk, _)| *kk >= 1 && *kk <= mz)
            .for_each(|(kk, plane)| {
                let k = kk - 1;
                let wk = self.wts[2][k];
                for j in 0..my {
                    let wjk = wk * self.wts[1][j];
                    for i in 0..mx {
                        let n = self.pidx(i, j, k);
                        let mut acc = T::zero();
                        for (s, &o) in self.stencil.iter().zip(&self.offsets) {
                            acc += *s * x[(n as isize + o) as usize];
                        }
                        plane[n - kk * sxy] = wjk * self.wts[0][i] * acc;
                    }
                }
            });
    }

    fn residual(&mut self) {
        let mut x = std::mem::take(&mut self.x);
        self.fill_ghosts(&mut x);
        let mut r = std::mem::take(&mut self.r);
        self.apply_into(&x, &mut r);
        let b = &self.b;
        r.par_iter_mut().zip(b.par_iter()).for_each(|(r, &b)| *r = b - *r);
        self.x = x;
        self.r = r;
    }

    /// Sum of `f(v)` over distinct nodes, deterministic.
    fn sum_by(&self, v: &[T], f: impl Fn(T) -> T + Sync) -> T {
        let [mx, my, mz] = self.m;
        let parts: Vec<T> = (0..mz)
            .into_par_iter()
            .map(|k| {
                let rows: Vec<T> = (0..my)
                    .map(|j| {
                        let b = self.pidx(0, j, k);
                        let vals: Vec<T> = v[b..b + mx].iter().map(|&x| f(x)).collect();
                        pairwise_sum(&vals)
                    })
                    .collect();
                pairwise_sum(&rows)
            })
            .collect();
        pairwise_sum(&parts)
    }

    fn remove_mean(&self, v: &mut [T]) {
        let mean = self.sum_by(v, |x| x) / T::from_usize_lossy(self.count());
        let [mx, my, mz] = self.m;
        for k in 0..mz {
            for j in 0..my {
                let b = self.pidx(0, j, k);
                v[b..b + mx].iter_mut().for_each(|x| *x -= mean);
            }
        }
    }

    /// Gauss-Seidel over the 8 parity classes of `(i, j, k)`; nodes of one
    /// class never neighbour each other, so each class updates in parallel.
    fn smooth(&mut self, reverse: bool) {
        let [mx, my, mz] = self.m;
        let mut x = std::mem::take(&mut self.x);
        let diag = self.stencil[13];
        for c in 0..8 {
            let c = if reverse { 7 - c } else { c };
            let (ci, cj, ck) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
            self.fill_ghosts(&mut x);
            let xr = &x;
            let updates: Vec<Vec<T>> = (0..mz)
                .into_par_iter()
                .map(|k| {
                    let mut out = Vec::new();
                    if k % 2 != ck {
                        return out;
                    }
                    for j in (cj..my).step_by(2) {
                        for i in (ci..mx).step_by(2) {
                            let n = self.pidx(i, j, k);
                            let mut acc = T::zero();
                            for (s, &o) in self.stencil.iter().zip(&self.offsets) {
                                acc += *s * xr[(n as isize + o) as usize];
                            }
                            let w = self.wts[0][i] * self.wts[1][j] * self.wts[2][k];
                            out.push(xr[n] + (self.b[n] - w * acc) / (w * diag));
                        }
                    }
                    out
                })
                .collect();
            for (k, vals) in updates.into_iter().enumerate() {
                let mut it = vals.into_iter();
                if k % 2 != ck {
                    continue;
                }
                for j in (cj..my).step_by(2) {
                    for i in (ci..mx).step_by(2) {
                        let n = self.pidx(i, j, k);
                        x[n] = it.next().unwrap();
                    }
                }
            }
        }
        self.x = x;
    }

    fn gather(&self, v: &[T]) -> Vec<T> {
        let [mx, my, mz] = self.m;
        let mut out = Vec::with_capacity(self.count());
        for k in 0..mz {
            for j in 0..my {
                let b = self.pidx(0, j, k);
                out.extend_from_slice(&v[b..b + mx]);
            }
        }
        out
    }

    fn scatter(&self, flat: &[T], v: &mut [T]) {
        let [mx, my, mz] = self.m;
        for k in 0..mz {
            for j in 0..my {
                let b = self.pidx(0, j, k);
                let f = mx * (j + my * k);
                v[b..b + mx].copy_from_slice(&flat[f..f + mx]);
            }
        }
    }
}

fn restrict<T: Real>(fine: &NodeLevel<T>, coarse: &mut NodeLevel<T>) {
    let [rx, ry, rz] = &fine.restrict;
    let [cx, cy, _] = coarse.m;
    let (csx, csxy) = (coarse.sx, coarse.sxy);
    let r = &fine.r;
    coarse
        .b
        .par_chunks_mut(csxy)
        .enumerate()
        .filter(|(kk, _)| *kk >= 1 && *kk <= rz.len())
        .for_each(|(kk, plane)| {
            let kc = kk - 1;
            for jc in 0..cy {
                for ic in 0..cx {
                    let mut acc = T::zero();
                    for &(kf, wz) in &rz[kc] {
                        for &(jf, wy) in &ry[jc] {
                            let base = fine.pidx(0, jf, kf);
                            for &(if_, wx) in &rx[ic] {
                                acc += T::lit(wx * wy * wz) * r[base + if_];
                            }
                        }
                    }
                    plane[(jc + 1) * csx + ic + 1] = acc;
                }
            }
        });
}

fn prolong_add<T: Real>(fine: &mut NodeLevel<T>, coarse: &NodeLevel<T>) {
    let [px, py, pz] = &fine.prolong;
    let [mx, my, mz] = fine.m;
    let (sx, sxy) = (fine.sx, fine.sxy);
    let xc = &coarse.x;
    fine.x
        .par_chunks_mut(sxy)
        .enumerate()
        .filter(|(kk, _)| *kk >= 1 && *kk <= mz)
        .for_each(|(kk, plane)| {
            let k = kk - 1;
            for j in 0..my {
                for i in 0..mx {
                    let mut acc = T::zero();
                    for &(kc, wz) in &pz[k] {
                        for &(jc, wy) in &py[j] {
                            let base = coarse.pidx(0, jc, kc);
                            for &(ic, wx) in &px[i] {
                                acc += T::lit(wx * wy * wz) * xc[base + ic];
                            }
                        }
                    }
                    plane[(j + 1) * sx + i + 1] += acc;
                }
            }
        });
}

/// Multigrid hierarchy for the nodal operator `A = coef (-∇²)` in variational
/// form, with `coef = dt / rho`.
pub struct NodeMultigrid<T> {
    grid: GridSpec,
    coef: f64,
    levels: Vec<NodeLevel<T>>,
    settings: MgSettings,
    pub last_factors: Vec<f64>,
}

impl<T: Real> NodeMultigrid<T> {
    pub fn new(grid: &GridSpec, coef: f64, settings: MgSettings) -> Self {
        let periodic = [grid.periodic_x, grid.periodic_y, false];
        let mut cells = grid.dims();
        let mut h = grid.spacing();
        let mut levels = vec![NodeLevel::new(cells, periodic, h, coef)];
        while cells.iter().all(|&n| n % 2 == 0 && n >= 4) {
            let cc = cells.map(|n| n / 2);
            let ch = h.map(|x| 2.0 * x);
            let coarse = NodeLevel::new(cc, periodic, ch, coef);
            let fine = levels.last_mut().unwrap();
            for (a, &per) in periodic.iter().enumerate() {
                let p = prolong_1d(fine.m[a], coarse.m[a], per);
                fine.restrict[a] = restrict_1d(&p, coarse.m[a]);
                fine.prolong[a] = p;
            }
            levels.push(coarse);
            cells = cc;
            h = ch;
        }
        NodeMultigrid {
            grid: *grid,
            coef,
            levels,
            settings,
            last_factors: Vec::new(),
        }
    }

    pub fn coef(&self) -> f64 {
        self.coef
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    fn to_level0(&self, f: &NodeField<T>, dst: &mut [T]) {
        let l = &self.levels[0];
        let [mx, my, mz] = l.m;
        for k in 0..mz {
            for j in 0..my {
                for i in 0..mx {
                    dst[l.pidx(i, j, k)] = f.get(i, j, k);
                }
            }
        }
    }

    fn level0_field(&self, src: &[T]) -> NodeField<T> {
        let l = &self.levels[0];
        let [mx, my, _] = l.m;
        NodeField::from_fn(&self.grid, |i, j, k| src[l.pidx(i % mx, j % my, k)])
    }

    /// Applies the operator (including wall weights) to a node field.
    pub fn apply(&mut self, x: &NodeField<T>) -> NodeField<T> {
        let mut xp = std::mem::take(&mut self.levels[0].x);
        self.to_level0(x, &mut xp);
        let l = &self.levels[0];
        l.fill_ghosts(&mut xp);
        let mut out = vec![T::zero(); xp.len()];
        l.apply_into(&xp, &mut out);
        self.levels[0].x = xp;
        self.level0_field(&out)
    }

    fn vcycle(levels: &mut [NodeLevel<T>], s: &MgSettings) {
        if levels.len() == 1 {
            let l = &mut levels[0];
            let b = l.gather(&l.b);
            let mut x = vec![T::zero(); b.len()];
            let mut pad = vec![T::zero(); l.x.len()];
            let mut out = vec![T::zero(); l.x.len()];
            let lr = &*l;
            cg(
                |v, o| {
                    lr.scatter(v, &mut pad);
                    lr.fill_ghosts(&mut pad);
                    lr.apply_into(&pad, &mut out);
                    o.copy_from_slice(&lr.gather(&out));
                },
                &b,
                &mut x,
                s.coarse_tol,
                10 * b.len() + 100,
                true,
            );
            let mut xp = std::mem::take(&mut l.x);
            l.scatter(&x, &mut xp);
            l.x = xp;
            return;
        }
        let (fine, rest) = levels.split_at_mut(1);
        let f = &mut fine[0];
        for _ in 0..s.pre_sweeps {
            f.smooth(false);
        }
        f.residual();
        let c = &mut rest[0];
        restrict(f, c);
        let mut cb = std::mem::take(&mut c.b);
        c.remove_mean(&mut cb);
        c.b = cb;
        c.x.iter_mut().for_each(|v| *v = T::zero());
        Self::vcycle(rest, s);
        prolong_add(f, &rest[0]);
        for _ in 0..s.post_sweeps {
            f.smooth(true);
        }
    }

    /// Solves `A x = b` (both as node fields; `b` mean removed internally)
    /// starting from `x`.
    pub fn solve(&mut self, b: &NodeField<T>, x: &mut NodeField<T>, tol: f64) -> SolveStats {
        let start = Instant::now();
        let s = self.settings;
        let mut bp = std::mem::take(&mut self.levels[0].b);
        let mut xp = std::mem::take(&mut self.levels[0].x);
        self.to_level0(b, &mut bp);
        self.to_level0(x, &mut xp);
        {
            let l = &self.levels[0];
            l.remove_mean(&mut bp);
        }
        self.levels[0].b = bp;
        self.levels[0].x = xp;
        let bnorm = {
            let l = &self.levels[0];
            l.sum_by(&l.b, |v| v * v).sqrt().to_f64_lossy()
        };
        self.last_factors.clear();
        if bnorm == 0.0 {
            *x = NodeField::zeros(&self.grid);
            return SolveStats {
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
                ..Default::default()
            };
        }
        let rnorm = |l: &mut NodeLevel<T>| {
            l.residual();
            l.sum_by(&l.r, |v| v * v).sqrt().to_f64_lossy()
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
        let mut xp = std::mem::take(&mut self.levels[0].x);
        self.levels[0].remove_mean(&mut xp);
        *x = self.level0_field(&xp);
        self.levels[0].x = xp;
        SolveStats {
            iterations: it,
            initial_relative_residual: initial,
            final_relative_residual: res,
            converged: res <= tol,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }
}

/// Node divergence of a cell vector: in each direction, cell differences
/// across the node averaged over the four cell pairs that share it. Ghosts
/// of `v` must be filled.
pub fn nodal_divergence<T: Real>(v: &CellVector<T>) -> NodeField<T> {
    let grid = *v.grid();
    let (u, vv, w) = (v.u(), v.v(), v.w());
    let q = T::lit(0.25);
    let (rdx, rdy, rdz) = (
        T::lit(1.0 / grid.dx),
        T::lit(1.0 / grid.dy),
        T::lit(1.0 / grid.dz),
    );
    NodeField::from_fn(&grid, |i, j, k| {
        let (i, j, k) = (i as isize, j as isize, k as isize);
        let mut dx = T::zero();
        let mut dy = T::zero();
        let mut dz = T::zero();
        for a in 0..2 {
            for b in 0..2 {
                dx += u.at(i, j - a, k - b) - u.at(i - 1, j - a, k - b);
                dy += vv.at(i - a, j, k - b) - vv.at(i - a, j - 1, k - b);
                dz += w.at(i - a, j - b, k) - w.at(i - a, j - b, k - 1);
            }
        }
        q * (dx * rdx + dy * rdy + dz * rdz)
    })
}

/// Cell-centred gradient of a node field: edge differences averaged over the
/// four edges of the cell in each direction.
pub fn cell_gradient_of_nodes<T: Real>(p: &NodeField<T>) -> CellVector<T> {
    let grid = *p.grid();
    let q = T::lit(0.25);
    let (rdx, rdy, rdz) = (
        T::lit(1.0 / grid.dx),
        T::lit(1.0 / grid.dy),
        T::lit(1.0 / grid.dz),
    );
    CellVector::from_fn(&grid, |i, j, k| {
        let mut g = [T::zero(); 3];
        for a in 0..2 {
            for b in 0..2 {
                g[0] += p.get(i + 1, j + a, k + b) - p.get(i, j + a, k + b);
                g[1] += p.get(i + a, j + 1, k + b) - p.get(i + a, j, k + b);
                g[2] += p.get(i + a, j + b, k + 1) - p.get(i + a, j + b, k);
            }
        }
        [g[0] * q * rdx, g[1] * q * rdy, g[2] * q * rdz]
    })
}

/// Result of a nodal projection.
pub struct NodalProjection<T> {
    pub u: CellVector<T>,
    pub p: NodeField<T>,
    pub gp: CellVector<T>,
    pub stats: SolveStats,
}

/// Approximate projection of the intermediate velocity `u_star`.
///
/// Forms `v = u* + (dt/rho) gp_old`, solves `A φ = -D(v)` with the 27-point
/// operator and returns `u = v - (dt/rho) Gφ`, `p = φ`, `gp = Gφ`. `p_guess`
/// seeds the iteration.
pub fn nodal_project<T: Real>(
    u_star: &CellVector<T>,
    gp_old: &CellVector<T>,
    p_guess: Option<&NodeField<T>>,
    rho: f64,
    dt: f64,
    tol: f64,
    mg: &mut NodeMultigrid<T>,
) -> Result<NodalProjection<T>> {
    let grid = *u_star.grid();
    let coef = dt / rho;
    if (mg.coef - coef).abs() > 1e-14 * coef.abs() || mg.grid != grid {
        *mg = NodeMultigrid::new(&grid, coef, mg.settings);
    }
    let mut v = u_star.clone();
    let c = T::lit(coef);
    for a in Axis::ALL {
        v.comp_mut(a).axpy(c, gp_old.comp(a));
    }
    fill_ghost_vector(&mut v, &VectorBc::free_slip(&grid))?;
    let div = nodal_divergence(&v);
    let mut wb = mg.levels[0].wts.clone();
    // Periodic duplicates take the weight of their partner.
    for (a, w) in wb.iter_mut().enumerate() {
        let n = grid.dims()[a];
        if w.len() == n {
            w.push(w[0]);
        }
    }
    let b = NodeField::from_fn(&grid, |i, j, k| {
        -(wb[0][i] * wb[1][j] * wb[2][k]) * div.get(i, j, k)
    });
    let mut phi = p_guess.cloned().unwrap_or_else(|| NodeField::zeros(&grid));
    let stats = mg.solve(&b, &mut phi, tol);
    if !stats.converged {
        return Err(Error::NotConverged {
            solver: "nodal_projection",
            stats,
        });
    }
    let gp = cell_gradient_of_nodes(&phi);
    let mut u = v;
    for a in Axis::ALL {
        u.comp_mut(a).axpy(-c, gp.comp(a));
    }
    Ok(NodalProjection {
        u,
        p: phi,
        gp,
        stats,
    })
}
