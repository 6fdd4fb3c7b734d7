use rayon::prelude::*;

use crate::real::Real;
use crate::reduce::{dot, norm2, pairwise_sum};

fn remove_mean<T: Real>(v: &mut [T]) {
    if v.is_empty() {
        return;
    }
    let m = pairwise_sum(v) / T::from_usize_lossy(v.len());
    v.par_iter_mut().for_each(|x| *x -= m);
}

/// Conjugate gradients on a symmetric positive (semi-)definite operator.
///
/// With `singular` set the constant mode is projected out of the right-hand
/// side, the iterates and the solution. Returns `(iterations, relative
/// residual)`.
pub fn cg<T: Real>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    tol: f64,
    max_iter: usize,
    singular: bool,
) -> (usize, f64) {
    let n = b.len();
    let mut rhs = b.to_vec();
    if singular {
        remove_mean(&mut rhs);
        remove_mean(x);
    }
    let bnorm = norm2(&rhs).to_f64_lossy();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return (0, 0.0);
    }
    let mut ax = vec![T::zero(); n];
    apply(x, &mut ax);
    let mut r: Vec<T> = rhs.iter().zip(&ax).map(|(&b, &a)| b - a).collect();
    if singular {
        remove_mean(&mut r);
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut rel = rr.sqrt().to_f64_lossy() / bnorm;
    let mut it = 0;
    while rel > tol && it < max_iter {
        apply(&p, &mut ax);
        let pap = dot(&p, &ax);
        if pap <= T::zero() {
            break;
        }
        let alpha = rr / pap;
        x.par_iter_mut().zip(p.par_iter()).for_each(|(x, &p)| *x += alpha * p);
        r.par_iter_mut().zip(ax.par_iter()).for_each(|(r, &a)| *r -= alpha * a);
        if singular {
            remove_mean(&mut r);
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p.par_iter_mut().zip(r.par_iter()).for_each(|(p, &r)| *p = r + beta * *p);
        it += 1;
        rel = rr.sqrt().to_f64_lossy() / bnorm;
    }
    if singular {
        remove_mean(x);
    }
    (it, rel)
}

/// Outcome of [`bicgstab`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub initial_relative_residual: f64,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Right-preconditioned BiCGStab with a diagonal (Jacobi) preconditioner.
///
/// On breakdown the shadow residual is reset once from the current iterate;
/// a second breakdown ends the solve unconverged.
pub fn bicgstab<T: Real>(
    mut apply: impl FnMut(&[T], &mut [T]),
    inv_diag: &[T],
    b: &[T],
    x: &mut [T],
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm2(b).to_f64_lossy();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return KrylovOutcome {
            iterations: 0,
            initial_relative_residual: 0.0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let tol_abs = T::lit(tol * bnorm);
    let mut tmp = vec![T::zero(); n];
    apply(x, &mut tmp);
    let mut r: Vec<T> = b.iter().zip(&tmp).map(|(&b, &a)| b - a).collect();
    let mut rnorm = norm2(&r);
    let initial = rnorm.to_f64_lossy() / bnorm;
    let mut rhat = r.clone();
    let mut p = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut restarted = false;
    let mut it = 0;
    let tiny = T::lit(1e-300);

    while rnorm > tol_abs && it < max_iter {
        let rho_new = dot(&rhat, &r);
        if rho_new.abs() <= tiny || omega.abs() <= tiny {
            if restarted {
                break;
            }
            restarted = true;
            rhat.copy_from_slice(&r);
            p.iter_mut().for_each(|x| *x = T::zero());
            v.iter_mut().for_each(|x| *x = T::zero());
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(p, (&r, &v))| *p = r + beta * (*p - omega * v));
        y.par_iter_mut()
            .zip(p.par_iter().zip(inv_diag.par_iter()))
            .for_each(|(y, (&p, &d))| *y = p * d);
        apply(&y, &mut v);
        let rv = dot(&rhat, &v);
        if rv.abs() <= tiny {
            if restarted {
                break;
            }
            restarted = true;
            rhat.copy_from_slice(&r);
            rho = T::one();
            alpha = T::one();
            omega = T::one();
            p.iter_mut().for_each(|x| *x = T::zero());
            v.iter_mut().for_each(|x| *x = T::zero());
            continue;
        }
        alpha = rho / rv;
        s.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(s, (&r, &v))| *s = r - alpha * v);
        it += 1;
        let snorm = norm2(&s);
        if snorm <= tol_abs {
            x.par_iter_mut().zip(y.par_iter()).for_each(|(x, &y)| *x += alpha * y);
            r.copy_from_slice(&s);
            rnorm = snorm;
            break;
        }
        z.par_iter_mut()
            .zip(s.par_iter().zip(inv_diag.par_iter()))
            .for_each(|(z, (&s, &d))| *z = s * d);
        apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
        x.par_iter_mut()
            .zip(y.par_iter().zip(z.par_iter()))
            .for_each(|(x, (&y, &z))| *x += alpha * y + omega * z);
        r.par_iter_mut()
            .zip(s.par_iter().zip(t.par_iter()))
            .for_each(|(r, (&s, &t))| *r = s - omega * t);
        rnorm = norm2(&r);
    }
    let rel = rnorm.to_f64_lossy() / bnorm;
    KrylovOutcome {
        iterations: it,
        initial_relative_residual: initial,
        relative_residual: rel,
        converged: rel <= tol,
    }
}
