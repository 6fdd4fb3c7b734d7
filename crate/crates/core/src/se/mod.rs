//! Spectral-element kernel microbenchmarks: sum-factorised operators on
//! batches of affine hexahedral elements, dense oracles to check them, and
//! the flop and byte models the benchmark reports against.

pub mod adv;
pub mod ax;
pub mod bench;
pub mod fdm;
pub mod gll;
pub mod tensor;

pub use adv::{cubature_points, AdvOperator};
pub use ax::{dense_stiffness, AxOperator};
pub use bench::{bench, bench_csv, BenchSettings, Kernel, KernelModel, KernelReport};
pub use fdm::FdmOperator;
pub use tensor::FlopCounter;

use crate::error::{Error, Result};

/// A batch of `elements` cubes of side `h`, each carrying a tensor-product
/// basis of polynomial order `order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBatch {
    pub elements: usize,
    pub order: usize,
    pub h: f64,
}

impl ElementBatch {
    pub fn new(elements: usize, order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::Config(format!("polynomial order must be at least 1, got {order}")));
        }
        if elements < 1 {
            return Err(Error::Config("element batch is empty".into()));
        }
        Ok(ElementBatch {
            elements,
            order,
            h: 1.0,
        })
    }

    /// Points per direction of the element basis.
    pub fn points_1d(&self) -> usize {
        self.order + 1
    }

    /// Length of a field with one value per basis point.
    pub fn len(&self) -> usize {
        self.elements * self.points_1d().pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.elements == 0
    }
}

/// `"fp32"` or `"fp64"` for a kernel scalar of `bytes` bytes.
pub fn precision_name(bytes: usize) -> &'static str {
    if bytes == 4 {
        "fp32"
    } else {
        "fp64"
    }
}

#[cfg(test)]
pub(crate) fn random_vec<T: crate::real::Real>(n: usize, seed: u64) -> Vec<T> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect()
}
