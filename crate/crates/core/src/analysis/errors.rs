use nalgebra::Vector2;

use super::ManufacturedCase;
use crate::error::{invalid_arg, Result};
use crate::fem::{mesh_dependent_norms, MultiplierSpace};
use crate::mesh::TriMesh;
use crate::solver::SaddleSolution;

/// Errors of a discrete solution against a manufactured case.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    /// `‖u − u_h‖_{L²(Ω_h)}`
    pub l2: f64,
    /// Full `H¹(Ω_h)` norm of `u − u_h`.
    pub h1: f64,
    /// `‖∇(u − u_h)‖_{L²(Ω_h)}`
    pub h1_seminorm: f64,
    /// `‖λ − λ_h‖_{L²(Γ)}`
    pub multiplier_l2: f64,
    /// `‖λ − λ_h‖_{−1/2,h}`
    pub multiplier_minus_half: f64,
    pub h: f64,
    pub n: usize,
    pub seed: u64,
}

/// `(‖u − u_h‖_{L²}, ‖∇(u − u_h)‖_{L²})` with the edge-midpoint rule, which
/// is exact for quadratics on each triangle.
pub fn field_errors(mesh: &TriMesh, u_h: &[f64], case: &ManufacturedCase) -> Result<(f64, f64)> {
    if u_h.len() != mesh.vertices().len() {
        return invalid_arg(format!("field has {} values for {} vertices", u_h.len(), mesh.vertices().len()));
    }
    let (mut l2, mut semi) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|i| mesh.vertices()[i]);
        let val = tri.map(|i| u_h[i]);
        let area = mesh.triangle_area(t);
        let mut grad = Vector2::zeros();
        for i in 0..3 {
            let e = p[(i + 2) % 3] - p[(i + 1) % 3];
            grad += Vector2::new(-e.y, e.x) * (val[i] / (2.0 * area));
        }
        for i in 0..3 {
            let j = (i + 1) % 3;
            let mid = nalgebra::center(&p[i], &p[j]);
            let d = (case.u)(mid) - 0.5 * (val[i] + val[j]);
            l2 += area / 3.0 * d * d;
            semi += area / 3.0 * ((case.grad)(mid) - grad).norm_squared();
        }
    }
    Ok((l2.sqrt(), semi.sqrt()))
}

/// Field and multiplier errors of `solution`. `h`, `n` and `seed` are left
/// for the caller to fill in.
pub fn compute_errors(mesh: &TriMesh, solution: &SaddleSolution, case: &ManufacturedCase) -> Result<ErrorReport> {
    let (l2, h1_seminorm) = field_errors(mesh, &solution.u, case)?;
    let q = MultiplierSpace::new(mesh);
    if solution.lambda.len() != q.dof_count() {
        return invalid_arg(format!(
            "multiplier has {} values for {} boundary vertices",
            solution.lambda.len(),
            q.dof_count()
        ));
    }
    let norms =
        mesh_dependent_norms(&q, |e, t| case.multiplier(mesh, e, t) - q.evaluate(&solution.lambda, e, t));
    Ok(ErrorReport {
        l2,
        h1: (l2 * l2 + h1_seminorm * h1_seminorm).sqrt(),
        h1_seminorm,
        multiplier_l2: norms.l2,
        multiplier_minus_half: norms.minus_half,
        ..Default::default()
    })
}
