//! Implicit diffusion: `(alpha I - ∇·beta∇) x = rhs` on cell centres.

use std::time::Instant;

use super::{bicgstab, SolveStats};
use crate::bc::{fill_ghost_unchecked, AxisBc, FaceBc, ScalarBc};
use crate::error::{Error, Result};
use crate::field::CellField;
use crate::grid::GridSpec;
use crate::real::Real;
use crate::reduce::pairwise_sum;

/// Condition on a horizontal wall (bottom or top).
#[derive(Debug, Clone, PartialEq)]
pub enum WallBc<T> {
    /// Prescribed flux `beta dx/dz` per wall column (x-fastest, `nx ny`).
    Neumann(Vec<T>),
    NeumannZero,
    Dirichlet(f64),
}

impl<T: Real> WallBc<T> {
    /// Ghost parity used by the homogeneous operator.
    fn face(&self) -> FaceBc {
        match self {
            WallBc::Dirichlet(_) => FaceBc::Dirichlet(0.0),
            _ => FaceBc::Even,
        }
    }

    fn odd(&self) -> bool {
        matches!(self, WallBc::Dirichlet(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzBc<T> {
    pub bottom: WallBc<T>,
    pub top: WallBc<T>,
}

impl<T: Real> HelmholtzBc<T> {
    pub fn zero_flux() -> Self {
        HelmholtzBc {
            bottom: WallBc::NeumannZero,
            top: WallBc::NeumannZero,
        }
    }
}

/// One Helmholtz system; lateral boundaries follow the grid (periodic or
/// zero-flux).
pub struct HelmholtzProblem<'a, T> {
    pub alpha: f64,
    pub beta: CellField<T>,
    pub bc: &'a HelmholtzBc<T>,
    xbc: ScalarBc,
    scratch: CellField<T>,
    out: CellField<T>,
}

impl<'a, T: Real> HelmholtzProblem<'a, T> {
    pub fn new(alpha: f64, beta: &CellField<T>, bc: &'a HelmholtzBc<T>) -> Self {
        let grid = *beta.grid();
        let mut b = beta.clone();
        fill_ghost_unchecked(&mut b, &ScalarBc::neumann(&grid));
        let xbc = ScalarBc::neumann(&grid).with_z(AxisBc::new(bc.bottom.face(), bc.top.face()));
        HelmholtzProblem {
            alpha,
            beta: b,
            bc,
            xbc,
            scratch: CellField::zeros(&grid),
            out: CellField::zeros(&grid),
        }
    }

    pub fn grid(&self) -> GridSpec {
        *self.beta.grid()
    }

    /// Applies the homogeneous operator to a field whose ghosts are filled.
    fn apply_field(alpha: f64, beta: &CellField<T>, x: &CellField<T>, out: &mut CellField<T>) {
        let grid = *beta.grid();
        let alpha = T::lit(alpha);
        let half = T::lit(0.5);
        let r = [
            T::lit(1.0 / (grid.dx * grid.dx)),
            T::lit(1.0 / (grid.dy * grid.dy)),
            T::lit(1.0 / (grid.dz * grid.dz)),
        ];
        let strides = [1isize, x.stride_y() as isize, x.stride_z() as isize];
        let (xd, bd) = (x.data(), beta.data());
        out.par_interior_planes_mut(|k, plane, sx, g| {
            for j in 0..grid.ny {
                let base = x.idx(0, j as isize, k as isize);
                let row = (j + g) * sx + g;
                for i in 0..grid.nx {
                    let n = base + i;
                    let (xc, bc) = (xd[n], bd[n]);
                    let mut acc = alpha * xc;
                    for a in 0..3 {
                        let p = (n as isize + strides[a]) as usize;
                        let m = (n as isize - strides[a]) as usize;
                        let bp = half * (bc + bd[p]);
                        let bm = half * (bc + bd[m]);
                        acc -= r[a] * (bp * (xd[p] - xc) - bm * (xc - xd[m]));
                    }
                    plane[row + i] = acc;
                }
            }
        });
    }

    /// Homogeneous operator on interior values (x-fastest).
    pub fn apply(&mut self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); x.len()];
        self.apply_flat(x, &mut out);
        out
    }

    fn apply_flat(&mut self, x: &[T], out: &mut [T]) {
        let grid = self.grid();
        let (nx, ny) = (grid.nx, grid.ny);
        let s = &mut self.scratch;
        s.par_interior_planes_mut(|k, plane, sx, g| {
            for j in 0..ny {
                let row = (j + g) * sx + g;
                let f = nx * (j + ny * k);
                plane[row..row + nx].copy_from_slice(&x[f..f + nx]);
            }
        });
        fill_ghost_unchecked(s, &self.xbc);
        Self::apply_field(self.alpha, &self.beta, s, &mut self.out);
        let o = &self.out;
        for k in 0..grid.nz {
            for j in 0..ny {
                let b = o.idx(0, j as isize, k as isize);
                let f = nx * (j + ny * k);
                out[f..f + nx].copy_from_slice(&o.data()[b..b + nx]);
            }
        }
    }

    /// Operator diagonal on interior cells.
    pub fn diagonal(&self) -> Vec<T> {
        let grid = self.grid();
        let half = T::lit(0.5);
        let r = [
            1.0 / (grid.dx * grid.dx),
            1.0 / (grid.dy * grid.dy),
            1.0 / (grid.dz * grid.dz),
        ]
        .map(T::lit);
        let b = &self.beta;
        let mut d = Vec::with_capacity(grid.cells());
        for k in 0..grid.nz as isize {
            for j in 0..grid.ny as isize {
                for i in 0..grid.nx as isize {
                    let bc = b.at(i, j, k);
                    let f = |bb: T| half * (bc + bb);
                    // Closed lateral sides carry even ghosts, so the wall
                    // face drops out of the diagonal.
                    let lat = |open: bool, bb: T| if open { f(bb) } else { T::zero() };
                    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
                    let (px, py) = (grid.periodic_x, grid.periodic_y);
                    let mut v = T::lit(self.alpha)
                        + r[0]
                            * (lat(px || i + 1 < nx, b.at(i + 1, j, k))
                                + lat(px || i > 0, b.at(i - 1, j, k)))
                        + r[1]
                            * (lat(py || j + 1 < ny, b.at(i, j + 1, k))
                                + lat(py || j > 0, b.at(i, j - 1, k)));
                    // Wall faces: even ghosts cancel, odd ghosts double.
                    let wall = |w: &WallBc<T>| if w.odd() { T::lit(2.0) } else { T::zero() };
                    v += r[2]
                        * if k == 0 {
                            wall(&self.bc.bottom) * bc
                        } else {
                            f(b.at(i, j, k - 1))
                        };
                    v += r[2]
                        * if k as usize == grid.nz - 1 {
                            wall(&self.bc.top) * bc
                        } else {
                            f(b.at(i, j, k + 1))
                        };
                    d.push(v);
                }
            }
        }
        d
    }

    /// Right-hand side with the boundary data moved in.
    pub fn boundary_rhs(&self, rhs: &CellField<T>) -> Vec<T> {
        let grid = self.grid();
        let mut b = rhs.interior();
        let plane = grid.nx * grid.ny;
        let rdz = T::lit(1.0 / grid.dz);
        let rdz2 = T::lit(2.0 / (grid.dz * grid.dz));
        let top = plane * (grid.nz - 1);
        for c in 0..plane {
            let (i, j) = ((c % grid.nx) as isize, (c / grid.nx) as isize);
            match &self.bc.bottom {
                WallBc::Neumann(g) => b[c] -= g[c] * rdz,
                WallBc::Dirichlet(v) => b[c] += rdz2 * self.beta.at(i, j, 0) * T::lit(*v),
                WallBc::NeumannZero => {}
            }
            match &self.bc.top {
                WallBc::Neumann(g) => b[top + c] += g[c] * rdz,
                WallBc::Dirichlet(v) => {
                    b[top + c] += rdz2 * self.beta.at(i, j, grid.nz as isize - 1) * T::lit(*v)
                }
                WallBc::NeumannZero => {}
            }
        }
        b
    }
}

/// Applies the homogeneous Helmholtz operator to the interior of `x`.
pub fn apply_helmholtz<T: Real>(
    alpha: f64,
    beta: &CellField<T>,
    bc: &HelmholtzBc<T>,
    x: &CellField<T>,
) -> CellField<T> {
    let mut p = HelmholtzProblem::new(alpha, beta, bc);
    let out = p.apply(&x.interior());
    CellField::from_interior(beta.grid(), &out)
}

/// Solves `(alpha I - ∇·beta∇) x = rhs` with Jacobi-preconditioned BiCGStab.
/// `guess` (or `rhs / alpha`) seeds the iteration.
pub fn helmholtz_solve<T: Real>(
    alpha: f64,
    beta: &CellField<T>,
    rhs: &CellField<T>,
    bc: &HelmholtzBc<T>,
    tol: f64,
    guess: Option<&CellField<T>>,
) -> Result<(CellField<T>, SolveStats)> {
    let start = Instant::now();
    let grid = *beta.grid();
    for w in [&bc.bottom, &bc.top] {
        if let WallBc::Neumann(g) = w {
            if g.len() != grid.nx * grid.ny {
                return Err(Error::Boundary(format!(
                    "wall flux has {} entries, expected {}",
                    g.len(),
                    grid.nx * grid.ny
                )));
            }
        }
    }
    let mut prob = HelmholtzProblem::new(alpha, beta, bc);
    let b = prob.boundary_rhs(rhs);
    let inv_diag: Vec<T> = prob.diagonal().into_iter().map(|d| T::one() / d).collect();
    let mut x = match guess {
        Some(g) => g.interior(),
        None => b.iter().map(|&v| v / T::lit(alpha)).collect(),
    };
    let out = bicgstab(
        |v, o| prob.apply_flat(v, o),
        &inv_diag,
        &b,
        &mut x,
        tol,
        200,
    );
    let stats = SolveStats {
        iterations: out.iterations,
        initial_relative_residual: out.initial_relative_residual,
        final_relative_residual: out.relative_residual,
        converged: out.converged,
        wall_time: start.elapsed().as_secs_f64(),
    };
    if !stats.converged {
        return Err(Error::NotConverged {
            solver: "helmholtz",
            stats,
        });
    }
    if !bc.bottom.odd() && !bc.top.odd() {
        conserve_total(&mut prob, &b, &mut x);
    }
    Ok((CellField::from_interior(&grid, &x), stats))
}

/// With no Dirichlet wall the diffusive fluxes cancel in the sum over
/// cells, so `Σ A x = alpha Σ x`. A uniform shift by `Σ r / (alpha N)` makes
/// the residual sum vanish, which keeps the scalar total exact regardless of
/// the iteration tolerance.
fn conserve_total<T: Real>(prob: &mut HelmholtzProblem<'_, T>, b: &[T], x: &mut [T]) {
    let ax = prob.apply(x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let shift = pairwise_sum(&r) / T::lit(prob.alpha * x.len() as f64);
    x.iter_mut().for_each(|v| *v += shift);
}
