//! Fast-diagonalisation solve on the extended element box.
//!
//! The box carries the interior points of a GLL element of order `n + 4`
//! (the two Dirichlet end points removed), i.e. `n + 3` points per
//! direction. With the 1-D stiffness `A` and mass `B` on those points and
//! the generalised eigenpairs `A S = B S Λ`, `SᵀBS = I`, the separable
//! operator `B⊗B⊗A + B⊗A⊗B + A⊗B⊗B` has the inverse
//! `(S⊗S⊗S) diag(1/(λi+λj+λk)) (Sᵀ⊗Sᵀ⊗Sᵀ)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

use super::gll::{derivative_matrix, gll};
use super::tensor::{contract3, FlopCounter, Matrix};
use super::ElementBatch;

/// 1-D stiffness and (diagonal) mass on the extended box of order `order`.
pub fn extended_1d(order: usize, h: f64) -> (DMatrix<f64>, DVector<f64>) {
    let big = order + 4;
    let rule = gll(big);
    let d = derivative_matrix(&rule.nodes);
    let n = big + 1;
    let dm = DMatrix::from_row_slice(n, n, &d.a);
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(&rule.weights));
    let a = dm.transpose() * w * dm * (2.0 / h);
    let m = order + 3;
    let a = a.view((1, 1), (m, m)).into_owned();
    let b = DVector::from_iterator(m, rule.weights[1..=m].iter().map(|w| w * h / 2.0));
    (a, b)
}

#[derive(Debug)]
pub struct FdmOperator<T> {
    pub batch: ElementBatch,
    /// Points per direction of the extended box.
    pub m: usize,
    s: Matrix<T>,
    st: Matrix<T>,
    /// 1-D generalised eigenvalues (all positive).
    pub lambda: Vec<f64>,
    inv: Vec<T>,
    pub counter: FlopCounter,
}

impl<T: Real> FdmOperator<T> {
    pub fn new(batch: ElementBatch) -> Self {
        let (a, b) = extended_1d(batch.order, batch.h);
        let m = b.len();
        let binv_half = DMatrix::from_diagonal(&b.map(|v| 1.0 / v.sqrt()));
        let sym = &binv_half * a * &binv_half;
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let s = binv_half * eig.eigenvectors;
        let lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let mut inv = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    inv.push(T::lit(1.0 / (lambda[i] + lambda[j] + lambda[k])));
                }
            }
        }
        let s = Matrix::from_nalgebra(&s);
        FdmOperator {
            batch,
            m,
            st: s.transpose(),
            s,
            lambda,
            inv,
            counter: FlopCounter::default(),
        }
    }

    pub fn with_counter(mut self) -> Self {
        self.counter = FlopCounter::enabled();
        self
    }

    /// Length of a field on the extended boxes of the batch.
    pub fn len(&self) -> usize {
        self.batch.elements * self.m.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `x = K⁻¹ r` box by box.
    pub fn apply(&self, r: &[T], x: &mut [T]) -> Result<()> {
        let len = self.len();
        if r.len() != len || x.len() != len {
            return Err(Error::Config(format!(
                "fdm expects vectors of length {len}, got {} and {}",
                r.len(),
                x.len()
            )));
        }
        let m3 = self.m.pow(3);
        let dims = [self.m; 3];
        x.par_chunks_mut(m3).zip(r.par_chunks(m3)).for_each_init(
            || vec![T::zero(); 3 * m3],
            |scratch, (xe, re)| {
                let (y, rest) = scratch.split_at_mut(m3);
                let (t1, t2) = rest.split_at_mut(m3);
                contract3([&self.st; 3], dims, re, y, (&mut *t1, &mut *t2), &self.counter);
                for (v, d) in y.iter_mut().zip(&self.inv) {
                    *v *= *d;
                }
                self.counter.add(m3);
                contract3([&self.s; 3], dims, y, xe, (t1, t2), &self.counter);
            },
        );
        Ok(())
    }
}

/// Dense separable operator `B⊗B⊗A + B⊗A⊗B + A⊗B⊗B` on one extended box.
pub fn dense_separable(order: usize, h: f64) -> DMatrix<f64> {
    let (a, b) = extended_1d(order, h);
    let b = DMatrix::from_diagonal(&b);
    b.kronecker(&b).kronecker(&a) + b.kronecker(&a).kronecker(&b) + a.kronecker(&b).kronecker(&b)
}
