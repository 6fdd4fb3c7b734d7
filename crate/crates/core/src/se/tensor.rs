//! Sum-factorised tensor contractions on one element and the operation
//! counter used to check the work models.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::real::Real;

use super::gll::Op1d;

/// One-dimensional operator stored in the kernel precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn from_op(op: &Op1d) -> Self {
        Matrix {
            rows: op.rows,
            cols: op.cols,
            a: op.a.iter().map(|&v| T::lit(v)).collect(),
        }
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut a = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                a.push(T::lit(m[(i, j)]));
            }
        }
        Matrix { rows, cols, a }
    }

    pub fn transpose(&self) -> Self {
        let mut a = vec![T::zero(); self.a.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                a[j * self.rows + i] = self.a[i * self.cols + j];
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            a,
        }
    }
}

/// Counts floating-point operations when enabled; a multiply-add counts two.
#[derive(Debug, Default)]
pub struct FlopCounter {
    enabled: bool,
    count: AtomicU64,
}

impl FlopCounter {
    pub fn enabled() -> Self {
        FlopCounter {
            enabled: true,
            count: AtomicU64::new(0),
        }
    }

    #[inline]
    pub fn add(&self, n: usize) {
        if self.enabled {
            self.count.fetch_add(n as u64, Ordering::Relaxed);
        }
    }

    pub fn get(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

/// Applies `m` along `axis` of the x-fastest block `input` with extents
/// `dims` (`dims[axis] == m.cols`). Returns the new extents.
pub fn contract<T: Real>(
    m: &Matrix<T>,
    axis: usize,
    dims: [usize; 3],
    input: &[T],
    out: &mut [T],
    counter: &FlopCounter,
) -> [usize; 3] {
    debug_assert_eq!(dims[axis], m.cols);
    let mut od = dims;
    od[axis] = m.rows;
    let (n0, n1, n2) = (dims[0], dims[1], dims[2]);
    let (o0, o1) = (od[0], od[1]);
    debug_assert!(input.len() >= n0 * n1 * n2);
    debug_assert!(out.len() >= od[0] * od[1] * od[2]);
    match axis {
        0 => {
            for line in 0..n1 * n2 {
                let src = &input[line * n0..(line + 1) * n0];
                let dst = &mut out[line * o0..(line + 1) * o0];
                for (i, d) in dst.iter_mut().enumerate() {
                    let row = &m.a[i * m.cols..(i + 1) * m.cols];
                    let mut s = T::zero();
                    for (a, b) in row.iter().zip(src) {
                        s += *a * *b;
                    }
                    *d = s;
                }
            }
        }
        1 => {
            for k in 0..n2 {
                for j in 0..o1 {
                    let dst = &mut out[(k * o1 + j) * o0..(k * o1 + j + 1) * o0];
                    dst.iter_mut().for_each(|v| *v = T::zero());
                    for l in 0..n1 {
                        let a = m.a[j * m.cols + l];
                        let src = &input[(k * n1 + l) * n0..(k * n1 + l + 1) * n0];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += a * *s;
                        }
                    }
                }
            }
        }
        _ => {
            let plane = n0 * n1;
            for k in 0..od[2] {
                let dst = &mut out[k * plane..(k + 1) * plane];
                dst.iter_mut().for_each(|v| *v = T::zero());
                for l in 0..n2 {
                    let a = m.a[k * m.cols + l];
                    let src = &input[l * plane..(l + 1) * plane];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += a * *s;
                    }
                }
            }
        }
    }
    counter.add(2 * m.rows * m.cols * dims.iter().product::<usize>() / dims[axis]);
    od
}

/// Applies `mx ⊗ my ⊗ mz` (one matrix per direction) using `tmp1` and
/// `tmp2` as scratch.
pub fn contract3<T: Real>(
    m: [&Matrix<T>; 3],
    dims: [usize; 3],
    input: &[T],
    out: &mut [T],
    scratch: (&mut [T], &mut [T]),
    counter: &FlopCounter,
) -> [usize; 3] {
    let (t1, t2) = scratch;
    let d = contract(m[0], 0, dims, input, t1, counter);
    let d = contract(m[1], 1, d, t1, t2, counter);
    contract(m[2], 2, d, t2, out, counter)
}
