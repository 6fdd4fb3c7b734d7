//! Poisson operator `w = Dᵀ (G ∘ D u)` on each element.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

use super::gll::{derivative_matrix, gll};
use super::tensor::{contract, FlopCounter, Matrix};
use super::ElementBatch;

/// Sum-factorised stiffness operator for a batch of affine cubes.
#[derive(Debug)]
pub struct AxOperator<T> {
    pub batch: ElementBatch,
    d: Matrix<T>,
    dt: Matrix<T>,
    /// Geometric factor times quadrature weight at each point; the same for
    /// all three directions on a cube.
    g: Vec<T>,
    pub counter: FlopCounter,
}

impl<T: Real> AxOperator<T> {
    pub fn new(batch: ElementBatch) -> Self {
        let rule = gll(batch.order);
        let d = derivative_matrix(&rule.nodes);
        let n = batch.points_1d();
        let scale = batch.h / 2.0;
        let mut g = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    g.push(T::lit(scale * rule.weights[i] * rule.weights[j] * rule.weights[k]));
                }
            }
        }
        let d = Matrix::from_op(&d);
        AxOperator {
            batch,
            dt: d.transpose(),
            d,
            g,
            counter: FlopCounter::default(),
        }
    }

    pub fn with_counter(mut self) -> Self {
        self.counter = FlopCounter::enabled();
        self
    }

    /// `w = A u` element by element.
    pub fn apply(&self, u: &[T], w: &mut [T]) -> Result<()> {
        let len = self.batch.len();
        if u.len() != len || w.len() != len {
            return Err(Error::Config(format!(
                "Ax expects vectors of length {len}, got {} and {}",
                u.len(),
                w.len()
            )));
        }
        let n = self.batch.points_1d();
        let n3 = n * n * n;
        let dims = [n; 3];
        w.par_chunks_mut(n3).zip(u.par_chunks(n3)).for_each_init(
            || vec![T::zero(); 4 * n3],
            |scratch, (we, ue)| {
                let (grad, tmp) = scratch.split_at_mut(3 * n3);
                for axis in 0..3 {
                    let gr = &mut grad[axis * n3..(axis + 1) * n3];
                    contract(&self.d, axis, dims, ue, gr, &self.counter);
                    for (v, g) in gr.iter_mut().zip(&self.g) {
                        *v *= *g;
                    }
                }
                self.counter.add(3 * n3);
                contract(&self.dt, 0, dims, &grad[..n3], we, &self.counter);
                for axis in 1..3 {
                    contract(&self.dt, axis, dims, &grad[axis * n3..(axis + 1) * n3], tmp, &self.counter);
                    for (v, t) in we.iter_mut().zip(tmp.iter()) {
                        *v += *t;
                    }
                }
                self.counter.add(2 * n3);
            },
        );
        Ok(())
    }
}

/// Dense stiffness matrix of one element, assembled from the 1-D stiffness
/// `A = (2/h) Dᵀ W D` and mass `B = (h/2) W` as
/// `B⊗B⊗A + B⊗A⊗B + A⊗B⊗B` (x-fastest ordering).
pub fn dense_stiffness(order: usize, h: f64) -> DMatrix<f64> {
    let rule = gll(order);
    let n = order + 1;
    let d = derivative_matrix(&rule.nodes);
    let dm = DMatrix::from_row_slice(n, n, &d.a);
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&rule.weights));
    let a = dm.transpose() * &w * &dm * (2.0 / h);
    let b = w * (h / 2.0);
    b.kronecker(&b).kronecker(&a) + b.kronecker(&a).kronecker(&b) + a.kronecker(&b).kronecker(&b)
}
