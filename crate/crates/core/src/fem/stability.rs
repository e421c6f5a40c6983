//! Numerical measurements of the constants in the stability theory: norm
//! equivalence of the empirical norm on `Q_h`, the discrete inf-sup constant
//! and coercivity of the stiffness on the kernel of `B`.
//!
//! These build dense matrices and are meant for meshes with a few thousand
//! dofs at most.

use nalgebra::DMatrix;

use super::{boundary_mass, local_gram, per_element, MultiplierSpace, SaddleSystem};
use crate::error::{invalid_arg, Error, Result};
use crate::observations::ObservationSet;
use crate::sparse::CsrMatrix;

/// Gram matrix of the empirical inner product on `Q_h`,
/// `(M_n)_kl = Σ_i α_i ψ_k(x_i) ψ_l(x_i)`.
pub fn empirical_multiplier_gram(q: &MultiplierSpace, obs: &ObservationSet) -> Result<CsrMatrix> {
    super::check_same_mesh(q.mesh(), obs.mesh())?;
    let local = per_element(q.dof_count(), |e, buf| {
        obs.element_sites(e, buf);
        local_gram(buf)
    });
    let mut trip = Vec::with_capacity(4 * q.dof_count());
    for (e, [m00, m01, m11]) in local.into_iter().enumerate() {
        let [k0, k1] = q.element_dofs(e);
        trip.extend([(k0, k0, m00), (k0, k1, m01), (k1, k0, m01), (k1, k1, m11)]);
    }
    Ok(CsrMatrix::from_triplets(q.dof_count(), q.dof_count(), &trip))
}

/// `‖μ_h‖_n / ‖μ_h‖_{L²(Γ)}` for the multiplier with coefficients `mu`.
pub fn norm_equivalence_ratio(q: &MultiplierSpace, obs: &ObservationSet, mu: &[f64]) -> Result<f64> {
    if mu.len() != q.dof_count() {
        return invalid_arg(format!("multiplier has {} values, expected {}", mu.len(), q.dof_count()));
    }
    let quad = |m: &CsrMatrix| mu.iter().zip(m.mul_vec(mu)).map(|(a, b)| a * b).sum::<f64>();
    let l2 = quad(&boundary_mass(q, 0));
    if !(l2 > 0.0) {
        return invalid_arg("ratio undefined for the zero multiplier");
    }
    let empirical = quad(&empirical_multiplier_gram(q, obs)?);
    Ok((empirical / l2).sqrt())
}

fn cholesky(m: DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    m.cholesky().ok_or_else(|| Error::SingularSystem {
        pivot: 0.0,
        detail: format!("{what} is not positive definite"),
    })
}

/// Smallest eigenvalue of `L⁻¹ K L⁻ᵀ` with `N = L Lᵀ`, for semidefinite `K`.
fn min_generalized_eigenvalue(k: &DMatrix<f64>, n: DMatrix<f64>, what: &str) -> Result<f64> {
    let l = cholesky(n, what)?.l();
    let x = l.solve_lower_triangular(k).expect("Cholesky factor has a positive diagonal");
    let c = l
        .solve_lower_triangular(&x.transpose())
        .expect("Cholesky factor has a positive diagonal");
    // C is positive semidefinite, so its eigenvalues are its singular values
    let sv = ((&c + c.transpose()) * 0.5).singular_values();
    if sv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularSystem { pivot: f64::NAN, detail: format!("decomposition of {what} failed") });
    }
    Ok(sv.min())
}

/// Discrete inf-sup constant
///
/// ```text
/// β = inf_μ sup_v <μ, Π_h v>_n / (‖μ‖_{−1/2,h} ‖v‖_{V_h})
/// ```
///
/// computed exactly from the Gram matrices of both norms. Zero means `B`
/// has a non-trivial left kernel.
pub fn inf_sup_constant(sys: &SaddleSystem) -> Result<f64> {
    let nv = cholesky(sys.field_gram().to_dense(), "V_h Gram matrix")?;
    let bt = sys.b.transpose().to_dense();
    let s = sys.b.to_dense() * nv.solve(&bt);
    let lambda = min_generalized_eigenvalue(&s, sys.multiplier_gram.to_dense(), "Q_h Gram matrix")?;
    Ok(lambda.max(0.0).sqrt())
}

/// Largest `α` with `(∇v, ∇v) ≥ α ‖v‖²_{V_h}` for every `v` with `Bv = 0`.
pub fn kernel_coercivity(sys: &SaddleSystem) -> Result<f64> {
    let btb = sys.b.gram().to_dense();
    let svd = btb.svd(true, false);
    let sv = &svd.singular_values;
    let cutoff = 1e-10 * sv.amax().max(f64::MIN_POSITIVE);
    let kernel: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cutoff).collect();
    if kernel.is_empty() {
        return invalid_arg("B has a trivial kernel");
    }
    let z = svd.u.as_ref().expect("left singular vectors requested").select_columns(&kernel);
    let az = z.transpose() * sys.a.to_dense() * &z;
    let nz = z.transpose() * sys.field_gram().to_dense() * &z;
    min_generalized_eigenvalue(&az, nz, "V_h Gram matrix on ker B")
}
