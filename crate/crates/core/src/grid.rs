//! Uniform structured-grid geometry.

use crate::error::{Error, Result};

/// Ghost width used by every physics field.
pub const GHOST: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Geometry of a uniform box discretised into `nx × ny × nz` cells.
///
/// The vertical direction is always bounded by walls; `x` and `y` may be
/// periodic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub ghost: usize,
    pub periodic_x: bool,
    pub periodic_y: bool,
}

impl GridSpec {
    pub fn new(
        [nx, ny, nz]: [usize; 3],
        [lx, ly, lz]: [f64; 3],
        [periodic_x, periodic_y]: [bool; 2],
    ) -> Result<Self> {
        Self::with_ghost([nx, ny, nz], [lx, ly, lz], [periodic_x, periodic_y], GHOST)
    }

    pub fn with_ghost(
        [nx, ny, nz]: [usize; 3],
        [lx, ly, lz]: [f64; 3],
        [periodic_x, periodic_y]: [bool; 2],
        ghost: usize,
    ) -> Result<Self> {
        if nx < 4 || ny < 4 || nz < 4 {
            return Err(Error::Grid(format!(
                "cell counts must be >= 4, got {nx}x{ny}x{nz}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lz > 0.0) || !(lx.is_finite() && ly.is_finite() && lz.is_finite())
        {
            return Err(Error::Grid(format!(
                "domain lengths must be positive, got {lx}x{ly}x{lz}"
            )));
        }
        if ghost < 2 {
            return Err(Error::Grid(format!("ghost width must be >= 2, got {ghost}")));
        }
        Ok(Self::unchecked([nx, ny, nz], [lx, ly, lz], [periodic_x, periodic_y], ghost))
    }

    /// Builds a grid without the size checks; used for multigrid levels.
    pub(crate) fn unchecked(
        [nx, ny, nz]: [usize; 3],
        [lx, ly, lz]: [f64; 3],
        [periodic_x, periodic_y]: [bool; 2],
        ghost: usize,
    ) -> Self {
        GridSpec {
            nx,
            ny,
            nz,
            lx,
            ly,
            lz,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            dz: lz / nz as f64,
            ghost,
            periodic_x,
            periodic_y,
        }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn h(&self, axis: Axis) -> f64 {
        self.spacing()[axis.index()]
    }

    pub fn n(&self, axis: Axis) -> usize {
        self.dims()[axis.index()]
    }

    pub fn periodic(&self, axis: Axis) -> bool {
        match axis {
            Axis::X => self.periodic_x,
            Axis::Y => self.periodic_y,
            Axis::Z => false,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// Average grid spacing `(Lx Ly Lz / n)^(1/3)`.
    pub fn avg_dx(&self) -> f64 {
        (self.lx * self.ly * self.lz).cbrt() / (self.cells() as f64).cbrt()
    }

    /// Filter width `(dx dy dz)^(1/3)`.
    pub fn filter_width(&self) -> f64 {
        self.cell_volume().cbrt()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }

    pub fn z_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dz
    }

    pub fn z_centers(&self) -> Vec<f64> {
        (0..self.nz).map(|k| self.z_center(k)).collect()
    }
}

/// Convenience constructor mirroring the usual argument order.
#[allow(clippy::too_many_arguments)]
pub fn build_grid(
    nx: usize,
    ny: usize,
    nz: usize,
    lx: f64,
    ly: f64,
    lz: f64,
    periodic_x: bool,
    periodic_y: bool,
) -> Result<GridSpec> {
    GridSpec::new([nx, ny, nz], [lx, ly, lz], [periodic_x, periodic_y])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_resolutions() {
        let g = build_grid(512, 512, 512, 400.0, 400.0, 400.0, true, true).unwrap();
        assert_eq!(g.dx, 0.78125);
        assert_eq!(g.dz, 0.78125);
        assert_eq!(format!("{:.2}", g.avg_dx()), "0.78");
        let g = build_grid(128, 128, 128, 400.0, 400.0, 400.0, true, true).unwrap();
        assert_eq!(g.dx, 3.125);
        assert!((g.avg_dx() - 3.125).abs() < 1e-12);
    }

    #[test]
    fn unit_box() {
        let g = build_grid(4, 4, 4, 1.0, 1.0, 1.0, true, true).unwrap();
        assert_eq!(g.spacing(), [0.25, 0.25, 0.25]);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(build_grid(0, 4, 4, 1.0, 1.0, 1.0, true, true).is_err());
        assert!(build_grid(4, 4, 4, -1.0, 1.0, 1.0, true, true).is_err());
        assert!(GridSpec::with_ghost([4, 4, 4], [1.0; 3], [true; 2], 1).is_err());
    }
}
