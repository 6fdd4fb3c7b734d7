//! Over-integrated advection `∫ φ (c·∇u)` evaluated on a Gauss cubature
//! grid finer than the element basis.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

use super::gll::{derivative_matrix, gauss, gll, interpolation_matrix};
use super::tensor::{contract, contract3, FlopCounter, Matrix};
use super::ElementBatch;

/// Cubature points per direction for order `n`: `max(n + 2, ⌈3n/2⌉ - 1)`,
/// which is 11 at order 8.
pub fn cubature_points(order: usize) -> usize {
    (order + 2).max((3 * order).div_ceil(2).saturating_sub(1))
}

/// Sum-factorised advection operator for a batch of affine cubes.
#[derive(Debug)]
pub struct AdvOperator<T> {
    pub batch: ElementBatch,
    pub nq: usize,
    /// Interpolation from the element basis to the cubature points and back.
    j: Matrix<T>,
    jt: Matrix<T>,
    /// Physical derivative on the cubature points.
    dq: Matrix<T>,
    /// Cubature weights times the Jacobian.
    wq: Vec<T>,
    pub counter: FlopCounter,
}

impl<T: Real> AdvOperator<T> {
    pub fn new(batch: ElementBatch) -> Self {
        let nq = cubature_points(batch.order);
        let basis = gll(batch.order);
        let cub = gauss(nq);
        let j = interpolation_matrix(&basis.nodes, &cub.nodes);
        let mut dq = derivative_matrix(&cub.nodes);
        dq.a.iter_mut().for_each(|v| *v *= 2.0 / batch.h);
        let jac = (batch.h / 2.0).powi(3);
        let mut wq = Vec::with_capacity(nq * nq * nq);
        for k in 0..nq {
            for jj in 0..nq {
                for i in 0..nq {
                    wq.push(T::lit(jac * cub.weights[i] * cub.weights[jj] * cub.weights[k]));
                }
            }
        }
        let j = Matrix::from_op(&j);
        AdvOperator {
            batch,
            nq,
            jt: j.transpose(),
            j,
            dq: Matrix::from_op(&dq),
            wq,
            counter: FlopCounter::default(),
        }
    }

    pub fn with_counter(mut self) -> Self {
        self.counter = FlopCounter::enabled();
        self
    }

    /// Length of one component of the advecting field on the cubature grid.
    pub fn cubature_len(&self) -> usize {
        self.batch.elements * self.nq.pow(3)
    }

    /// `out_m = ∫ φ (c·∇u_m)` for the three components `m`; `c` is given on
    /// the cubature points.
    pub fn apply(&self, u: [&[T]; 3], c: [&[T]; 3], out: [&mut [T]; 3]) -> Result<()> {
        let len = self.batch.len();
        let clen = self.cubature_len();
        if u.iter().any(|v| v.len() != len) || out.iter().any(|v| v.len() != len) {
            return Err(Error::Config(format!("advection expects vectors of length {len}")));
        }
        if c.iter().any(|v| v.len() != clen) {
            return Err(Error::Config(format!(
                "advecting field must have {clen} cubature values per component"
            )));
        }
        let n = self.batch.points_1d();
        let (n3, q, q3) = (n * n * n, self.nq, self.nq.pow(3));
        let [o0, o1, o2] = out;
        o0.par_chunks_mut(n3)
            .zip(o1.par_chunks_mut(n3))
            .zip(o2.par_chunks_mut(n3))
            .enumerate()
            .for_each_init(
                || vec![T::zero(); 7 * q3],
                |scratch, (e, ((a, b), cc))| {
                    let (uq, rest) = scratch.split_at_mut(q3);
                    let (grad, rest) = rest.split_at_mut(3 * q3);
                    let (t1, t2) = rest.split_at_mut(q3);
                    let ce = [
                        &c[0][e * q3..(e + 1) * q3],
                        &c[1][e * q3..(e + 1) * q3],
                        &c[2][e * q3..(e + 1) * q3],
                    ];
                    for (m, dst) in [a, b, cc].into_iter().enumerate() {
                        let src = &u[m][e * n3..(e + 1) * n3];
                        contract3([&self.j; 3], [n; 3], src, uq, (&mut *t1, &mut *t2), &self.counter);
                        for axis in 0..3 {
                            contract(&self.dq, axis, [q; 3], uq, &mut grad[axis * q3..(axis + 1) * q3], &self.counter);
                        }
                        for p in 0..q3 {
                            uq[p] = self.wq[p]
                                * (ce[0][p] * grad[p] + ce[1][p] * grad[q3 + p] + ce[2][p] * grad[2 * q3 + p]);
                        }
                        self.counter.add(6 * q3);
                        contract3([&self.jt; 3], [q; 3], uq, dst, (&mut *t1, &mut *t2), &self.counter);
                    }
                },
            );
        Ok(())
    }
}
