//! Solvers for the saddle-point system
//!
//! ```text
//! [ A  Bᵀ ] [u]   [F]
//! [ B  0  ] [λ] = [G]
//! ```
//!
//! The direct path works on the augmented Lagrangian form. Adding
//! `γ Bᵀ(Bu − G) = 0` to the first block row gives
//! `A_γ u + Bᵀλ = F + γ BᵀG` with `A_γ = A + γ BᵀB` positive definite,
//! because `A` only vanishes on constants and `B` never does. Block
//! elimination then leaves the small dense Schur complement
//! `S = B A_γ⁻¹ Bᵀ` for the multiplier. `S` is inverted through its
//! eigendecomposition, which also covers site layouts where some multiplier
//! vanishes at every site: `u` is still unique and `λ` is taken with minimal
//! norm.
//!
//! The iterative path is MINRES with the block-diagonal preconditioner
//! `diag(A + Σ h_E⁻¹ M_E, Σ h_E M_E)`.

mod cholesky;
mod minres;

pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use minres::{minres, MinresResult};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::SaddleSystem;
use crate::sparse::CsrMatrix;

/// Both relative residuals of an accepted solution are at most this.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Eigenvalues of `S` below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    /// Direct elimination, falling back to MINRES if it fails.
    #[default]
    Auto,
    Direct,
    Minres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    /// Method that produced the solution, never `Auto`.
    pub method: SolverMethod,
    /// Refinement sweeps (direct) or Krylov iterations (MINRES).
    pub iterations: usize,
    /// Numerical rank of the Schur complement (direct only).
    pub multiplier_rank: Option<usize>,
    /// Smallest retained eigenvalue of the Schur complement (direct only).
    pub smallest_eigenvalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `‖Au + Bᵀλ − F‖ / max(1, ‖F‖)`
    pub residual_primal: f64,
    /// `‖Bu − G‖ / max(1, ‖G‖)`
    pub residual_constraint: f64,
    pub stats: SolveStats,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Residual vectors `(F − Au − Bᵀλ, G − Bu)`.
fn residual_vectors(
    a: &CsrMatrix,
    b: &CsrMatrix,
    f: &[f64],
    g: &[f64],
    u: &[f64],
    lambda: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let au = a.mul_vec(u);
    let btl = b.tr_mul_vec(lambda);
    let r1 = f.iter().zip(au).zip(btl).map(|((f, x), y)| f - x - y).collect();
    let bu = b.mul_vec(u);
    let r2 = g.iter().zip(bu).map(|(g, x)| g - x).collect();
    (r1, r2)
}

/// Relative residuals `(primal, constraint)` of a candidate solution.
pub fn relative_residuals(sys: &SaddleSystem, u: &[f64], lambda: &[f64]) -> (f64, f64) {
    let (r1, r2) = residual_vectors(&sys.a, &sys.b, &sys.f, &sys.g, u, lambda);
    (norm(&r1) / norm(&sys.f).max(1.0), norm(&r2) / norm(&sys.g).max(1.0))
}

fn check_shapes(sys: &SaddleSystem) -> Result<()> {
    let (n, m) = (sys.a.nrows(), sys.b.nrows());
    if sys.a.ncols() != n || sys.b.ncols() != n || sys.f.len() != n || sys.g.len() != m {
        return Err(Error::InvalidArgument("inconsistent saddle system dimensions".into()));
    }
    Ok(())
}

/// Factorization of the matrix part of a saddle system, reusable for any
/// number of right-hand sides.
#[derive(Debug, Clone)]
pub struct SaddleFactorization {
    a: CsrMatrix,
    b: CsrMatrix,
    gamma: f64,
    chol: EnvelopeCholesky,
    schur_pinv: DMatrix<f64>,
    rank: usize,
    smallest_eigenvalue: f64,
}

impl SaddleFactorization {
    pub fn new(sys: &SaddleSystem) -> Result<Self> {
        check_shapes(sys)?;
        let btb = sys.b.gram();
        let max_a = sys.a.diagonal().into_iter().fold(0.0, f64::max);
        let max_btb = btb.diagonal().into_iter().fold(0.0, f64::max);
        if !(max_btb > 0.0) {
            return Err(Error::SingularSystem {
                pivot: 0.0,
                detail: "coupling matrix is zero: no measurement site sees the multiplier".into(),
            });
        }
        let gamma = max_a.max(1.0) / max_btb;
        let chol = EnvelopeCholesky::factor(&sys.a.add_scaled(&btb, gamma))?;

        let m = sys.b.nrows();
        let columns = map_columns(m, |k| {
            let mut col = vec![0.0; sys.b.ncols()];
            let (cols, vals) = sys.b.row(k);
            for (&j, &v) in cols.iter().zip(vals) {
                col[j] = v;
            }
            chol.solve_in_place(&mut col);
            sys.b.mul_vec(&col)
        });
        let s = DMatrix::from_fn(m, m, |i, j| 0.5 * (columns[j][i] + columns[i][j]));
        // SVD rather than a symmetric eigensolver: the latter returns NaN on
        // Schur complements with a large numerical null space.
        let svd = s.svd(true, true);
        let sv = &svd.singular_values;
        if sv.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularSystem { pivot: f64::NAN, detail: "Schur complement decomposition failed".into() });
        }
        let largest = sv.max();
        if !(largest > 0.0) {
            return Err(Error::SingularSystem { pivot: largest, detail: "Schur complement is not positive".into() });
        }
        let keep: Vec<usize> = (0..m).filter(|&i| sv[i] > RANK_TOLERANCE * largest).collect();
        let smallest_eigenvalue = keep.iter().map(|&i| sv[i]).fold(f64::INFINITY, f64::min);
        let (u, v_t) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
        let inv = DVector::from_iterator(keep.len(), keep.iter().map(|&i| 1.0 / sv[i]));
        let schur_pinv = v_t.select_rows(&keep).transpose() * DMatrix::from_diagonal(&inv) * u.select_columns(&keep).transpose();
        if keep.len() < m {
            log::debug!("Schur complement has rank {} of {m}; using the minimum-norm multiplier", keep.len());
        }
        Ok(Self {
            a: sys.a.clone(),
            b: sys.b.clone(),
            gamma,
            chol,
            schur_pinv,
            rank: keep.len(),
            smallest_eigenvalue,
        })
    }

    /// Numerical rank of `B`.
    pub fn multiplier_rank(&self) -> usize {
        self.rank
    }

    /// One block-elimination pass.
    fn eliminate(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let btg = self.b.tr_mul_vec(g);
        let f_gamma: Vec<f64> = f.iter().zip(&btg).map(|(f, x)| f + self.gamma * x).collect();
        let w = self.chol.solve(&f_gamma);
        let r: Vec<f64> = self.b.mul_vec(&w).iter().zip(g).map(|(x, g)| x - g).collect();
        let lambda: Vec<f64> = (&self.schur_pinv * DVector::from_vec(r)).data.into();
        let mut corr = self.b.tr_mul_vec(&lambda);
        self.chol.solve_in_place(&mut corr);
        let u = w.iter().zip(corr).map(|(w, c)| w - c).collect();
        (u, lambda)
    }

    /// Solves for right-hand sides `(f, g)`, refining until both relative
    /// residuals are at most [`RESIDUAL_TOLERANCE`].
    pub fn solve(&self, f: &[f64], g: &[f64]) -> Result<SaddleSolution> {
        if f.len() != self.a.nrows() || g.len() != self.b.nrows() {
            return Err(Error::InvalidArgument("right-hand side dimensions do not match".into()));
        }
        let (fs, gs) = (norm(f).max(1.0), norm(g).max(1.0));
        let (mut u, mut lambda) = self.eliminate(f, g);
        let mut sweeps = 0;
        let (mut rp, mut rc);
        loop {
            let (r1, r2) = residual_vectors(&self.a, &self.b, f, g, &u, &lambda);
            rp = norm(&r1) / fs;
            rc = norm(&r2) / gs;
            if (rp <= 1e-3 * RESIDUAL_TOLERANCE && rc <= 1e-3 * RESIDUAL_TOLERANCE) || sweeps == 2 {
                break;
            }
            let (du, dl) = self.eliminate(&r1, &r2);
            u.iter_mut().zip(du).for_each(|(x, d)| *x += d);
            lambda.iter_mut().zip(dl).for_each(|(x, d)| *x += d);
            sweeps += 1;
        }
        if !(rp <= RESIDUAL_TOLERANCE && rc <= RESIDUAL_TOLERANCE) {
            return Err(Error::SingularSystem {
                pivot: self.smallest_eigenvalue,
                detail: format!(
                    "direct solve stalled at residuals {rp:e} / {rc:e}; smallest Schur eigenvalue {:e}. \
                     Increase the number of sites or coarsen the mesh",
                    self.smallest_eigenvalue
                ),
            });
        }
        Ok(SaddleSolution {
            u,
            lambda,
            residual_primal: rp,
            residual_constraint: rc,
            stats: SolveStats {
                method: SolverMethod::Direct,
                iterations: sweeps,
                multiplier_rank: Some(self.rank),
                smallest_eigenvalue: Some(self.smallest_eigenvalue),
            },
        })
    }
}

fn map_columns<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Solves the system with the default method.
pub fn solve_saddle(sys: &SaddleSystem) -> Result<SaddleSolution> {
    solve_saddle_with(sys, SolverMethod::Auto)
}

pub fn solve_saddle_with(sys: &SaddleSystem, method: SolverMethod) -> Result<SaddleSolution> {
    check_shapes(sys)?;
    match method {
        SolverMethod::Direct => SaddleFactorization::new(sys)?.solve(&sys.f, &sys.g),
        SolverMethod::Minres => solve_minres(sys),
        SolverMethod::Auto => {
            match SaddleFactorization::new(sys).and_then(|fact| fact.solve(&sys.f, &sys.g)) {
                Ok(sol) => Ok(sol),
                Err(direct) => {
                    log::warn!("direct saddle solve failed ({direct}); trying MINRES");
                    solve_minres(sys).map_err(|_| direct)
                }
            }
        }
    }
}

/// Block-diagonally preconditioned MINRES, restarted on the residual until
/// the residual contract holds.
pub fn solve_minres(sys: &SaddleSystem) -> Result<SaddleSolution> {
    check_shapes(sys)?;
    let (n, m) = (sys.field_dofs(), sys.multiplier_dofs());
    let p_field = EnvelopeCholesky::factor(&sys.field_gram())?;
    let p_mult = EnvelopeCholesky::factor(&sys.multiplier_gram)?;
    let op = |x: &[f64], y: &mut [f64]| {
        let (xu, xl) = x.split_at(n);
        let (yu, yl) = y.split_at_mut(n);
        sys.a.mul_vec_into(xu, yu);
        for (yi, v) in yu.iter_mut().zip(sys.b.tr_mul_vec(xl)) {
            *yi += v;
        }
        sys.b.mul_vec_into(xu, yl);
    };
    let prec = |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(x);
        let (yu, yl) = y.split_at_mut(n);
        p_field.solve_in_place(yu);
        p_mult.solve_in_place(yl);
    };

    let mut u = vec![0.0; n];
    let mut lambda = vec![0.0; m];
    let mut iterations = 0;
    let (fs, gs) = (norm(&sys.f).max(1.0), norm(&sys.g).max(1.0));
    for _ in 0..4 {
        let (r1, r2) = residual_vectors(&sys.a, &sys.b, &sys.f, &sys.g, &u, &lambda);
        let (rp, rc) = (norm(&r1) / fs, norm(&r2) / gs);
        if rp <= 1e-2 * RESIDUAL_TOLERANCE && rc <= 1e-2 * RESIDUAL_TOLERANCE {
            break;
        }
        let rhs: Vec<f64> = r1.into_iter().chain(r2).collect();
        let res = minres(op, prec, &rhs, 1e-14, 20 * (n + m) + 100)?;
        iterations += res.iterations;
        u.iter_mut().zip(&res.x[..n]).for_each(|(x, d)| *x += d);
        lambda.iter_mut().zip(&res.x[n..]).for_each(|(x, d)| *x += d);
    }
    let (rp, rc) = relative_residuals(sys, &u, &lambda);
    if !(rp <= RESIDUAL_TOLERANCE && rc <= RESIDUAL_TOLERANCE) {
        return Err(Error::Stagnation(format!("MINRES stalled at residuals {rp:e} / {rc:e}")));
    }
    Ok(SaddleSolution {
        u,
        lambda,
        residual_primal: rp,
        residual_constraint: rc,
        stats: SolveStats { method: SolverMethod::Minres, iterations, multiplier_rank: None, smallest_eigenvalue: None },
    })
}
