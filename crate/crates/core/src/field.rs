//! Cell-, face- and node-centred field containers.
//!
//! All arrays are stored x-fastest. Cell fields carry `ghost` layers on every
//! side; face and node fields store only the physical entities.

use rayon::prelude::*;

use crate::grid::{Axis, GridSpec};
use crate::real::Real;
use crate::reduce::pairwise_sum;

/// A cell-centred scalar with ghost layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField<T> {
    grid: GridSpec,
    sx: usize,
    sxy: usize,
    data: Vec<T>,
}

impl<T: Real> CellField<T> {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self::constant(grid, T::zero())
    }

    /// Every cell, ghosts included, set to `c`.
    pub fn constant(grid: &GridSpec, c: T) -> Self {
        let g = grid.ghost;
        let sx = grid.nx + 2 * g;
        let sxy = sx * (grid.ny + 2 * g);
        let len = sxy * (grid.nz + 2 * g);
        CellField {
            grid: *grid,
            sx,
            sxy,
            data: vec![c; len],
        }
    }

    /// Interior cells from `f(i, j, k)`; ghosts are zero.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize, usize, usize) -> T + Sync) -> Self {
        let mut out = Self::zeros(grid);
        out.par_interior_planes_mut(|k, plane, sx, g| {
            for j in 0..grid.ny {
                let row = (j + g) * sx + g;
                for i in 0..grid.nx {
                    plane[row + i] = f(i, j, k);
                }
            }
        });
        out
    }

    /// Interior cells from a flat x-fastest slice of length `nx ny nz`.
    pub fn from_interior(grid: &GridSpec, values: &[T]) -> Self {
        assert_eq!(values.len(), grid.cells());
        let (nx, ny) = (grid.nx, grid.ny);
        Self::from_fn(grid, |i, j, k| values[i + nx * (j + ny * k)])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn ghost(&self) -> usize {
        self.grid.ghost
    }

    pub fn stride_y(&self) -> usize {
        self.sx
    }

    pub fn stride_z(&self) -> usize {
        self.sxy
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Flat index of cell `(i, j, k)`; ghosts have negative or `>= n` indices.
    #[inline(always)]
    pub fn idx(&self, i: isize, j: isize, k: isize) -> usize {
        let g = self.grid.ghost as isize;
        ((k + g) as usize) * self.sxy + ((j + g) as usize) * self.sx + (i + g) as usize
    }

    #[inline(always)]
    pub fn at(&self, i: isize, j: isize, k: isize) -> T {
        self.data[self.idx(i, j, k)]
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.at(i as isize, j as isize, k as isize)
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let n = self.idx(i as isize, j as isize, k as isize);
        self.data[n] = v;
    }

    #[inline(always)]
    pub fn set_at(&mut self, i: isize, j: isize, k: isize, v: T) {
        let n = self.idx(i, j, k);
        self.data[n] = v;
    }

    /// Runs `f(k, plane, stride_y, ghost)` over every interior z-plane in
    /// parallel. `plane` spans the full padded x-y plane of level `k`.
    pub fn par_interior_planes_mut<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [T], usize, usize) + Sync + Send,
    {
        let g = self.grid.ghost;
        let nz = self.grid.nz;
        let sx = self.sx;
        self.data
            .par_chunks_mut(self.sxy)
            .enumerate()
            .filter(|(kk, _)| *kk >= g && *kk < nz + g)
            .for_each(|(kk, plane)| f(kk - g, plane, sx, g));
    }

    /// Interior values, x-fastest.
    pub fn interior(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.grid.cells());
        for k in 0..self.grid.nz {
            for j in 0..self.grid.ny {
                let base = self.idx(0, j as isize, k as isize);
                out.extend_from_slice(&self.data[base..base + self.grid.nx]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.interior()
            .into_iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (T, T) {
        self.interior().into_iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    /// Deterministic sum over interior cells.
    pub fn sum(&self) -> T {
        let rows: Vec<T> = (0..self.grid.nz)
            .into_par_iter()
            .map(|k| {
                let s: Vec<T> = (0..self.grid.ny)
                    .map(|j| {
                        let b = self.idx(0, j as isize, k as isize);
                        pairwise_sum(&self.data[b..b + self.grid.nx])
                    })
                    .collect();
                pairwise_sum(&s)
            })
            .collect();
        pairwise_sum(&rows)
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// `self += a * other` over all storage (ghosts included).
    pub fn axpy(&mut self, a: T, other: &CellField<T>) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .par_iter_mut()
            .zip(other.data.par_iter())
            .for_each(|(x, &y)| *x += a * y);
    }

    pub fn all_finite(&self) -> bool {
        self.interior().iter().all(|v| v.is_finite())
    }
}

/// Three cell-centred components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVector<T> {
    pub comps: [CellField<T>; 3],
}

impl<T: Real> CellVector<T> {
    pub fn zeros(grid: &GridSpec) -> Self {
        CellVector {
            comps: [
                CellField::zeros(grid),
                CellField::zeros(grid),
                CellField::zeros(grid),
            ],
        }
    }

    pub fn from_fn(
        grid: &GridSpec,
        f: impl Fn(usize, usize, usize) -> [T; 3] + Sync,
    ) -> Self {
        CellVector {
            comps: [
                CellField::from_fn(grid, |i, j, k| f(i, j, k)[0]),
                CellField::from_fn(grid, |i, j, k| f(i, j, k)[1]),
                CellField::from_fn(grid, |i, j, k| f(i, j, k)[2]),
            ],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.comps[0].grid()
    }

    pub fn u(&self) -> &CellField<T> {
        &self.comps[0]
    }
    pub fn v(&self) -> &CellField<T> {
        &self.comps[1]
    }
    pub fn w(&self) -> &CellField<T> {
        &self.comps[2]
    }

    pub fn comp(&self, axis: Axis) -> &CellField<T> {
        &self.comps[axis.index()]
    }

    pub fn comp_mut(&mut self, axis: Axis) -> &mut CellField<T> {
        &mut self.comps[axis.index()]
    }
}

/// Normal velocities on the faces of every cell.
///
/// `uf` has `(nx+1) ny nz` entries, `vf` `nx (ny+1) nz`, `wf` `nx ny (nz+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVelocitySet<T> {
    grid: GridSpec,
    pub uf: Vec<T>,
    pub vf: Vec<T>,
    pub wf: Vec<T>,
}

impl<T: Real> FaceVelocitySet<T> {
    pub fn zeros(grid: &GridSpec) -> Self {
        let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
        FaceVelocitySet {
            grid: *grid,
            uf: vec![T::zero(); (nx + 1) * ny * nz],
            vf: vec![T::zero(); nx * (ny + 1) * nz],
            wf: vec![T::zero(); nx * ny * (nz + 1)],
        }
    }

    /// Builds faces from `f(axis, i, j, k)`, where the index is the face
    /// index along `axis` (face `i` sits at `x = i dx`).
    pub fn from_fn(grid: &GridSpec, f: impl Fn(Axis, usize, usize, usize) -> T) -> Self {
        let mut out = Self::zeros(grid);
        let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..=nx {
                    let n = out.iu(i, j, k);
                    out.uf[n] = f(Axis::X, i, j, k);
                }
            }
        }
        for k in 0..nz {
            for j in 0..=ny {
                for i in 0..nx {
                    let n = out.iv(i, j, k);
                    out.vf[n] = f(Axis::Y, i, j, k);
                }
            }
        }
        for k in 0..=nz {
            for j in 0..ny {
                for i in 0..nx {
                    let n = out.iw(i, j, k);
                    out.wf[n] = f(Axis::Z, i, j, k);
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline(always)]
    pub fn iu(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.grid.nx + 1) * (j + self.grid.ny * k)
    }

    #[inline(always)]
    pub fn iv(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.grid.nx * (j + (self.grid.ny + 1) * k)
    }

    #[inline(always)]
    pub fn iw(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.grid.nx * (j + self.grid.ny * k)
    }

    /// Face value along `axis` at face index `(i, j, k)`.
    #[inline(always)]
    pub fn face(&self, axis: Axis, i: usize, j: usize, k: usize) -> T {
        match axis {
            Axis::X => self.uf[self.iu(i, j, k)],
            Axis::Y => self.vf[self.iv(i, j, k)],
            Axis::Z => self.wf[self.iw(i, j, k)],
        }
    }

    /// Copies the low periodic faces onto their high images so both sides of
    /// a periodic boundary carry one value.
    pub fn sync_periodic(&mut self) {
        let (nx, ny, nz) = (self.grid.nx, self.grid.ny, self.grid.nz);
        if self.grid.periodic_x {
            for k in 0..nz {
                for j in 0..ny {
                    let (lo, hi) = (self.iu(0, j, k), self.iu(nx, j, k));
                    self.uf[hi] = self.uf[lo];
                }
            }
        }
        if self.grid.periodic_y {
            for k in 0..nz {
                for i in 0..nx {
                    let (lo, hi) = (self.iv(i, 0, k), self.iv(i, ny, k));
                    self.vf[hi] = self.vf[lo];
                }
            }
        }
    }

    /// Zeroes the normal velocity on the bottom and top walls.
    pub fn enforce_walls(&mut self) {
        let (nx, ny, nz) = (self.grid.nx, self.grid.ny, self.grid.nz);
        for j in 0..ny {
            for i in 0..nx {
                let lo = self.iw(i, j, 0);
                let hi = self.iw(i, j, nz);
                self.wf[lo] = T::zero();
                self.wf[hi] = T::zero();
            }
        }
        if !self.grid.periodic_x {
            for k in 0..nz {
                for j in 0..ny {
                    let (lo, hi) = (self.iu(0, j, k), self.iu(nx, j, k));
                    self.uf[lo] = T::zero();
                    self.uf[hi] = T::zero();
                }
            }
        }
        if !self.grid.periodic_y {
            for k in 0..nz {
                for i in 0..nx {
                    let (lo, hi) = (self.iv(i, 0, k), self.iv(i, ny, k));
                    self.vf[lo] = T::zero();
                    self.vf[hi] = T::zero();
                }
            }
        }
    }
}

/// Node-centred scalar on the `(nx+1)(ny+1)(nz+1)` cell corners.
///
/// Along periodic directions node `0` and node `n` are the same point and
/// hold identical values.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField<T> {
    grid: GridSpec,
    pub data: Vec<T>,
}

impl<T: Real> NodeField<T> {
    pub fn zeros(grid: &GridSpec) -> Self {
        NodeField {
            grid: *grid,
            data: vec![T::zero(); (grid.nx + 1) * (grid.ny + 1) * (grid.nz + 1)],
        }
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize, usize, usize) -> T) -> Self {
        let mut out = Self::zeros(grid);
        for k in 0..=grid.nz {
            for j in 0..=grid.ny {
                for i in 0..=grid.nx {
                    let n = out.idx(i, j, k);
                    out.data[n] = f(i, j, k);
                }
            }
        }
        out.sync_periodic();
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.grid.nx + 1) * (j + (self.grid.ny + 1) * k)
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.idx(i, j, k)]
    }

    /// Copies node 0 onto node `n` along each periodic direction.
    pub fn sync_periodic(&mut self) {
        let (nx, ny, nz) = (self.grid.nx, self.grid.ny, self.grid.nz);
        if self.grid.periodic_x {
            for k in 0..=nz {
                for j in 0..=ny {
                    let v = self.get(0, j, k);
                    let n = self.idx(nx, j, k);
                    self.data[n] = v;
                }
            }
        }
        if self.grid.periodic_y {
            for k in 0..=nz {
                for i in 0..=nx {
                    let v = self.get(i, 0, k);
                    let n = self.idx(i, ny, k);
                    self.data[n] = v;
                }
            }
        }
    }
}

/// A horizontally averaged quantity at each cell-centre height.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub z: Vec<f64>,
    pub values: Vec<T>,
}

impl<T: Real> Profile<T> {
    pub fn constant(grid: &GridSpec, c: T) -> Self {
        Profile {
            z: grid.z_centers(),
            values: vec![c; grid.nz],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Horizontal average of every interior level, summed pairwise row by row so
/// the result is independent of the worker count.
pub fn plane_average<T: Real>(field: &CellField<T>) -> Profile<T> {
    let grid = field.grid();
    let inv = T::one() / T::from_usize_lossy(grid.nx * grid.ny);
    let values = (0..grid.nz)
        .into_par_iter()
        .map(|k| {
            // deviations from the first cell, so a uniform level is exact
            let c0 = field.get(0, 0, k);
            let rows: Vec<T> = (0..grid.ny)
                .map(|j| {
                    let b = field.idx(0, j as isize, k as isize);
                    let dev: Vec<T> = field.data()[b..b + grid.nx].iter().map(|&v| v - c0).collect();
                    pairwise_sum(&dev)
                })
                .collect();
            c0 + pairwise_sum(&rows) * inv
        })
        .collect();
    Profile {
        z: grid.z_centers(),
        values,
    }
}

/// Cell divergence of a face-velocity set.
pub fn divergence_mac<T: Real>(f: &FaceVelocitySet<T>) -> CellField<T> {
    let grid = *f.grid();
    let (rdx, rdy, rdz) = (
        T::lit(1.0 / grid.dx),
        T::lit(1.0 / grid.dy),
        T::lit(1.0 / grid.dz),
    );
    let mut out = CellField::zeros(&grid);
    out.par_interior_planes_mut(|k, plane, sx, g| {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let d = (f.uf[f.iu(i + 1, j, k)] - f.uf[f.iu(i, j, k)]) * rdx
                    + (f.vf[f.iv(i, j + 1, k)] - f.vf[f.iv(i, j, k)]) * rdy
                    + (f.wf[f.iw(i, j, k + 1)] - f.wf[f.iw(i, j, k)]) * rdz;
                plane[(j + g) * sx + i + g] = d;
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid(n: usize) -> GridSpec {
        build_grid(n, n, n, 1.0, 1.0, 1.0, true, true).unwrap()
    }

    #[test]
    fn plane_average_of_constant_is_exact() {
        let g = grid(8);
        let f = CellField::constant(&g, 265.0);
        assert!(plane_average(&f).values.iter().all(|&v| v == 265.0));
    }

    #[test]
    fn plane_average_of_height() {
        let g = build_grid(4, 6, 8, 1.0, 1.0, 400.0, true, true).unwrap();
        let f = CellField::from_fn(&g, |_, _, k| g.z_center(k));
        let p = plane_average(&f);
        for k in 0..8 {
            assert_eq!(p.values[k], (k as f64 + 0.5) * g.dz);
            assert_eq!(p.z[k], g.z_center(k));
        }
    }

    #[test]
    fn plane_average_of_periodic_sine_vanishes() {
        let g = grid(32);
        let f = CellField::from_fn(&g, |i, _, _| (2.0 * std::f64::consts::PI * g.x_center(i)).sin());
        assert!(plane_average(&f).values.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn divergence_of_uniform_and_linear_faces() {
        let g = grid(8);
        let f = FaceVelocitySet::from_fn(&g, |a, _, _, _| if a == Axis::X { 1.0 } else { 0.0 });
        assert!(divergence_mac(&f).max_abs() == 0.0);
        let f = FaceVelocitySet::from_fn(&g, |a, i, _, _| {
            if a == Axis::X {
                i as f64 * g.dx
            } else {
                0.0
            }
        });
        let d = divergence_mac(&f);
        assert!(d.interior().iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn node_field_periodic_identity() {
        let g = grid(4);
        let n = NodeField::from_fn(&g, |i, j, k| (i + 10 * j + 100 * k) as f64);
        for k in 0..=4 {
            for j in 0..=4 {
                assert_eq!(n.get(0, j, k), n.get(4, j, k));
            }
        }
    }
}
