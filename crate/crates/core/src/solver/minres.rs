//! Preconditioned MINRES for symmetric (possibly indefinite) systems.

use crate::error::{Error, Result};

/// Outcome of a MINRES run.
#[derive(Debug, Clone)]
pub struct MinresResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Preconditioned residual norm relative to its initial value.
    pub relative_residual: f64,
}

/// Solves `K x = b` from `x = 0` with a symmetric positive definite
/// preconditioner applied as `z = P⁻¹ r`.
///
/// Stops once the preconditioned residual has dropped by `tol`.
pub fn minres(
    op: impl Fn(&[f64], &mut [f64]),
    prec: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<MinresResult> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    prec(b, &mut y);
    let beta1 = dot(b, &y);
    if beta1 < 0.0 {
        return Err(Error::InvalidArgument("MINRES preconditioner is not positive definite".into()));
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok(MinresResult { x, iterations: 0, relative_residual: 0.0 });
    }

    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let (mut w, mut w1, mut w2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut v = vec![0.0; n];
    let (mut oldb, mut beta, mut dbar, mut epsln) = (0.0, beta1, 0.0, 0.0);
    let (mut phibar, mut cs, mut sn) = (beta1, -1.0, 0.0);

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        op(&v, &mut y);
        if itn >= 2 {
            let c = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= c * ri;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= c * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        prec(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if bb < 0.0 {
            return Err(Error::InvalidArgument("MINRES preconditioner is not positive definite".into()));
        }
        beta = bb.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        let rel = phibar / beta1;
        if rel <= tol || beta == 0.0 {
            return Ok(MinresResult { x, iterations: itn, relative_residual: rel });
        }
    }
    Err(Error::Stagnation(format!(
        "MINRES reached {max_iter} iterations at relative residual {:e}",
        phibar / beta1
    )))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
