//! Best-of-R timing of the element kernels against documented work models.
//!
//! Flops are modelled as `C E (N+1)⁴` and bytes as `C_b E (N+1)³ w` with
//! `w` the word size. The constants, with `r = N_q/(N+1)` and
//! `s = (N+3)/(N+1)`:
//!
//! | kernel | C | C_b |
//! |---|---|---|
//! | ax  | 12 (six contractions of `2(N+1)⁴`) | 2 (read u, write w) |
//! | adv | `3 (4 (r + r² + r³) + 6 r⁴)` | `6 + 3 r³` (u and w, plus c on the cubature grid) |
//! | fdm | `12 s⁴` | `2 s³` |

use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

use super::adv::{cubature_points, AdvOperator};
use super::ax::AxOperator;
use super::fdm::FdmOperator;
use super::{precision_name, ElementBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Ax,
    Adv,
    Fdm,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::Ax, Kernel::Adv, Kernel::Fdm];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Ax => "ax",
            Kernel::Adv => "adv",
            Kernel::Fdm => "fdm",
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown kernel '{s}' (expected ax, adv or fdm)")))
    }
}

/// Work-model constants of a kernel at one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelModel {
    pub c_flops: f64,
    pub c_bytes: f64,
}

pub fn model(kernel: Kernel, order: usize) -> KernelModel {
    let n = (order + 1) as f64;
    match kernel {
        Kernel::Ax => KernelModel {
            c_flops: 12.0,
            c_bytes: 2.0,
        },
        Kernel::Adv => {
            let r = cubature_points(order) as f64 / n;
            KernelModel {
                c_flops: 3.0 * (4.0 * (r + r * r + r * r * r) + 6.0 * r.powi(4)),
                c_bytes: 6.0 + 3.0 * r.powi(3),
            }
        }
        Kernel::Fdm => {
            let s = (order + 3) as f64 / n;
            KernelModel {
                c_flops: 12.0 * s.powi(4),
                c_bytes: 2.0 * s.powi(3),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelReport {
    pub kernel: Kernel,
    pub order: usize,
    pub precision: &'static str,
    pub elements: usize,
    /// Best time of one kernel application (s).
    pub seconds: f64,
    pub model_flops: f64,
    pub model_bytes: f64,
    pub model: KernelModel,
}

impl KernelReport {
    pub fn new(kernel: Kernel, batch: ElementBatch, word_bytes: usize, seconds: f64) -> Self {
        let m = model(kernel, batch.order);
        let n = (batch.order + 1) as f64;
        let e = batch.elements as f64;
        KernelReport {
            kernel,
            order: batch.order,
            precision: precision_name(word_bytes),
            elements: batch.elements,
            seconds,
            model_flops: m.c_flops * e * n.powi(4),
            model_bytes: m.c_bytes * e * n.powi(3) * word_bytes as f64,
            model: m,
        }
    }

    pub fn gflops(&self) -> f64 {
        self.model_flops / self.seconds / 1e9
    }

    pub fn gbs(&self) -> f64 {
        self.model_bytes / self.seconds / 1e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    /// Untimed applications before measuring.
    pub warmup: usize,
    /// Timed applications; the best one is reported.
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            warmup: 3,
            repetitions: 50,
            seed: 1,
        }
    }
}

fn random<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect()
}

fn best_of(settings: &BenchSettings, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    for _ in 0..settings.warmup {
        f()?;
    }
    let mut best = f64::INFINITY;
    for _ in 0..settings.repetitions {
        let t = Instant::now();
        f()?;
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

/// Times one kernel on random input in the current rayon pool.
pub fn bench<T: Real>(kernel: Kernel, batch: ElementBatch, settings: &BenchSettings) -> Result<KernelReport> {
    if settings.repetitions == 0 {
        return Err(Error::Config("bench needs at least one repetition".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let seconds = match kernel {
        Kernel::Ax => {
            let op = AxOperator::<T>::new(batch);
            let u = random::<T>(&mut rng, batch.len());
            let mut w = vec![T::zero(); batch.len()];
            best_of(settings, || op.apply(&u, &mut w))?
        }
        Kernel::Adv => {
            let op = AdvOperator::<T>::new(batch);
            let u: Vec<Vec<T>> = (0..3).map(|_| random(&mut rng, batch.len())).collect();
            let c: Vec<Vec<T>> = (0..3).map(|_| random(&mut rng, op.cubature_len())).collect();
            let mut out = vec![vec![T::zero(); batch.len()]; 3];
            best_of(settings, || {
                let [a, b, d] = &mut out[..] else { unreachable!() };
                op.apply([&u[0], &u[1], &u[2]], [&c[0], &c[1], &c[2]], [a, b, d])
            })?
        }
        Kernel::Fdm => {
            let op = FdmOperator::<T>::new(batch);
            let r = random::<T>(&mut rng, op.len());
            let mut x = vec![T::zero(); op.len()];
            best_of(settings, || op.apply(&r, &mut x))?
        }
    };
    Ok(KernelReport::new(kernel, batch, T::BYTES, seconds))
}

pub const BENCH_HEADER: &str =
    "kernel,order,precision,elements,seconds,model_flops,model_bytes,gflops,gbs,c_flops,c_bytes";

/// CSV of the reports, preceded by `# key=value` metadata lines and a
/// description of the work models.
pub fn bench_csv(reports: &[KernelReport], meta: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("# flops_model=c_flops*elements*(order+1)^4\n");
    out.push_str("# bytes_model=c_bytes*elements*(order+1)^3*word_bytes\n");
    out.push_str("# fdm_box=order+2 extension read as (order+3)^3 points per element\n");
    out.push_str(BENCH_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{:.6e},{:.6e},{:.6e},{:.4},{:.4},{:.6},{:.6}\n",
            r.kernel.name(),
            r.order,
            r.precision,
            r.elements,
            r.seconds,
            r.model_flops,
            r.model_bytes,
            r.gflops(),
            r.gbs(),
            r.model.c_flops,
            r.model.c_bytes
        ));
    }
    out
}
