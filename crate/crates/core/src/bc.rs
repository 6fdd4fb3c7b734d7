//! Boundary descriptions and ghost-cell filling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{CellField, CellVector};
use crate::grid::{Axis, GridSpec};
use crate::real::Real;

/// Treatment of one side of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceBc {
    Periodic,
    /// Zero-gradient (even) extension.
    Even,
    /// Odd extension about a boundary value.
    Dirichlet(f64),
    /// Extension with a prescribed outward-increasing gradient `d/dn`
    /// measured along the positive axis direction.
    Gradient(f64),
    /// Linear extrapolation from the two nearest interior cells.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBc {
    pub lo: FaceBc,
    pub hi: FaceBc,
}

impl AxisBc {
    pub const PERIODIC: AxisBc = AxisBc {
        lo: FaceBc::Periodic,
        hi: FaceBc::Periodic,
    };
    pub const EVEN: AxisBc = AxisBc {
        lo: FaceBc::Even,
        hi: FaceBc::Even,
    };

    pub fn new(lo: FaceBc, hi: FaceBc) -> Self {
        AxisBc { lo, hi }
    }

    pub fn is_periodic(&self) -> bool {
        self.lo == FaceBc::Periodic
    }
}

/// Boundary treatment of a scalar on all six faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarBc {
    pub axes: [AxisBc; 3],
}

impl ScalarBc {
    pub fn new(x: AxisBc, y: AxisBc, z: AxisBc) -> Self {
        ScalarBc { axes: [x, y, z] }
    }

    /// Periodic laterally, zero-gradient at the walls; matches `grid`.
    pub fn neumann(grid: &GridSpec) -> Self {
        let lat = |p: bool| if p { AxisBc::PERIODIC } else { AxisBc::EVEN };
        ScalarBc::new(lat(grid.periodic_x), lat(grid.periodic_y), AxisBc::EVEN)
    }

    pub fn axis(&self, a: Axis) -> &AxisBc {
        &self.axes[a.index()]
    }

    pub fn with_z(mut self, z: AxisBc) -> Self {
        self.axes[2] = z;
        self
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        for a in Axis::ALL {
            let bc = self.axis(a);
            let lo_p = bc.lo == FaceBc::Periodic;
            let hi_p = bc.hi == FaceBc::Periodic;
            if lo_p != hi_p {
                return Err(Error::Boundary(format!(
                    "{a:?}: periodic must be set on both sides"
                )));
            }
            if a == Axis::Z && lo_p {
                return Err(Error::Boundary(
                    "the vertical direction is bounded by walls and cannot be periodic".into(),
                ));
            }
            if lo_p != grid.periodic(a) {
                return Err(Error::Boundary(format!(
                    "{a:?}: boundary periodicity does not match the grid"
                )));
            }
        }
        Ok(())
    }
}

/// Per-component boundary treatment of a cell vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorBc {
    pub comps: [ScalarBc; 3],
}

impl VectorBc {
    /// Impenetrable free-slip walls: tangential components even, normal odd.
    pub fn free_slip(grid: &GridSpec) -> Self {
        let base = ScalarBc::neumann(grid);
        let wall = AxisBc::new(FaceBc::Dirichlet(0.0), FaceBc::Dirichlet(0.0));
        let mut comps = [base; 3];
        if !grid.periodic_x {
            comps[0].axes[0] = wall;
        }
        if !grid.periodic_y {
            comps[1].axes[1] = wall;
        }
        comps[2].axes[2] = wall;
        VectorBc { comps }
    }
}

/// Fills the ghost layers of `field` according to `bc`; interior unchanged.
pub fn fill_ghost<T: Real>(field: &mut CellField<T>, bc: &ScalarBc) -> Result<()> {
    bc.validate(field.grid())?;
    fill_ghost_unchecked(field, bc);
    Ok(())
}

pub fn fill_ghost_vector<T: Real>(v: &mut CellVector<T>, bc: &VectorBc) -> Result<()> {
    for (c, b) in v.comps.iter_mut().zip(bc.comps.iter()) {
        fill_ghost(c, b)?;
    }
    Ok(())
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn ghost_value<T: Real>(
    bc: FaceBc,
    m: usize,
    h: f64,
    near: T,
    mirror: T,
    second: T,
    wrap: T,
    outward: f64,
) -> T {
    match bc {
        FaceBc::Periodic => wrap,
        FaceBc::Even => mirror,
        FaceBc::Dirichlet(v) => T::lit(2.0 * v) - mirror,
        FaceBc::Gradient(gr) => mirror + T::lit(outward * gr * (2 * m - 1) as f64 * h),
        FaceBc::Linear => near + T::from_usize_lossy(m) * (near - second),
    }
}

/// Ghost fill without validation; x first, then y, then z so that edge and
/// corner ghosts are consistent.
pub(crate) fn fill_ghost_unchecked<T: Real>(field: &mut CellField<T>, bc: &ScalarBc) {
    let grid = *field.grid();
    let g = grid.ghost as isize;
    let (nx, ny, nz) = (grid.nx as isize, grid.ny as isize, grid.nz as isize);
    let sx = field.stride_y();
    let sxy = field.stride_z();

    // x and y ghosts live inside each z-plane.
    let bx = *bc.axis(Axis::X);
    let by = *bc.axis(Axis::Y);
    let (hx, hy, hz) = (grid.dx, grid.dy, grid.dz);
    let gu = grid.ghost;
    field
        .data_mut()
        .par_chunks_mut(sxy)
        .enumerate()
        .filter(|(kk, _)| *kk >= gu && *kk < grid.nz + gu)
        .for_each(|(_, plane)| {
            let at = |i: isize, j: isize| ((j + g) as usize) * sx + (i + g) as usize;
            for j in 0..ny {
                for m in 1..=g {
                    let mu = m as usize;
                    let lo = ghost_value(
                        bx.lo,
                        mu,
                        hx,
                        plane[at(0, j)],
                        plane[at(m - 1, j)],
                        plane[at(1.min(nx - 1), j)],
                        plane[at((nx - m).rem_euclid(nx), j)],
                        -1.0,
                    );
                    let hi = ghost_value(
                        bx.hi,
                        mu,
                        hx,
                        plane[at(nx - 1, j)],
                        plane[at(nx - m, j)],
                        plane[at((nx - 2).max(0), j)],
                        plane[at((m - 1).rem_euclid(nx), j)],
                        1.0,
                    );
                    plane[at(-m, j)] = lo;
                    plane[at(nx - 1 + m, j)] = hi;
                }
            }
            for i in -g..nx + g {
                for m in 1..=g {
                    let mu = m as usize;
                    let lo = ghost_value(
                        by.lo,
                        mu,
                        hy,
                        plane[at(i, 0)],
                        plane[at(i, m - 1)],
                        plane[at(i, 1.min(ny - 1))],
                        plane[at(i, (ny - m).rem_euclid(ny))],
                        -1.0,
                    );
                    let hi = ghost_value(
                        by.hi,
                        mu,
                        hy,
                        plane[at(i, ny - 1)],
                        plane[at(i, ny - m)],
                        plane[at(i, (ny - 2).max(0))],
                        plane[at(i, (m - 1).rem_euclid(ny))],
                        1.0,
                    );
                    plane[at(i, -m)] = lo;
                    plane[at(i, ny - 1 + m)] = hi;
                }
            }
        });

    // z ghosts are whole planes.
    let bz = *bc.axis(Axis::Z);
    let data = field.data_mut();
    let plane_of = |k: isize| ((k + g) as usize) * sxy;
    for m in 1..=g {
        let mu = m as usize;
        for (dst, near, mirror, second, wrap, face, outward) in [
            (-m, 0, m - 1, 1.min(nz - 1), (nz - m).rem_euclid(nz), bz.lo, -1.0),
            (
                nz - 1 + m,
                nz - 1,
                nz - m,
                (nz - 2).max(0),
                (m - 1).rem_euclid(nz),
                bz.hi,
                1.0,
            ),
        ] {
            let (d, n, mi, s, w) = (
                plane_of(dst),
                plane_of(near),
                plane_of(mirror),
                plane_of(second),
                plane_of(wrap),
            );
            for c in 0..sxy {
                data[d + c] = ghost_value(
                    face,
                    mu,
                    hz,
                    data[n + c],
                    data[mi + c],
                    data[s + c],
                    data[w + c],
                    outward,
                );
            }
        }
    }
}
