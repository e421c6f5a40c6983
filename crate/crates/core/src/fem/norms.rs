use super::MultiplierSpace;
use crate::sparse::CsrMatrix;

/// Three-point Gauss-Legendre rule on `[0, 1]`.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// `Σ_E h_E^power M_E` on the multiplier dofs, where `M_E` is the exact
/// `L²(E)` mass matrix of the two hat functions on `E`.
///
/// `power = 0` gives the `L²(Γ)` Gram matrix, `1` and `−1` those of the
/// `‖·‖_{−1/2,h}` and `‖·‖_{1/2,h}` norms.
pub fn boundary_mass(q: &MultiplierSpace, power: i32) -> CsrMatrix {
    let mut trip = Vec::with_capacity(4 * q.dof_count());
    for (e, el) in q.mesh().boundary().iter().enumerate() {
        let s = el.length.powi(power) * el.length;
        let [k0, k1] = q.element_dofs(e);
        trip.extend([(k0, k0, s / 3.0), (k0, k1, s / 6.0), (k1, k0, s / 6.0), (k1, k1, s / 3.0)]);
    }
    CsrMatrix::from_triplets(q.dof_count(), q.dof_count(), &trip)
}

/// `L²(Γ)` norm and the two mesh-dependent norms of a boundary function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshNorms {
    pub l2: f64,
    /// `(Σ_E h_E⁻¹ ‖v‖²_{L²(E)})^{1/2}`
    pub half: f64,
    /// `(Σ_E h_E ‖v‖²_{L²(E)})^{1/2}`
    pub minus_half: f64,
}

/// Norms of `v(e, t)`, the boundary function evaluated at parameter `t` of
/// element `e`, using three-point Gauss per element.
pub fn mesh_dependent_norms(q: &MultiplierSpace, v: impl Fn(usize, f64) -> f64) -> MeshNorms {
    let mesh = q.mesh();
    let (mut l2, mut half, mut minus_half) = (0.0, 0.0, 0.0);
    for (e, el) in mesh.boundary().iter().enumerate() {
        let local: f64 = GAUSS3
            .iter()
            .map(|&(t, w)| {
                let (_, speed) = mesh.boundary_point_unchecked(e, t);
                w * speed * v(e, t).powi(2)
            })
            .sum();
        l2 += local;
        half += local / el.length;
        minus_half += local * el.length;
    }
    MeshNorms { l2: l2.sqrt(), half: half.sqrt(), minus_half: minus_half.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriMesh;

    #[test]
    fn constant_on_disk() {
        let mesh = TriMesh::unit_disk(6).unwrap();
        let q = MultiplierSpace::new(&mesh);
        let norms = mesh_dependent_norms(&q, |_, _| 1.0);
        let sum_h2: f64 = mesh.boundary().iter().map(|e| e.length * e.length).sum();
        assert!((norms.minus_half.powi(2) - sum_h2).abs() < 1e-12);
        assert!((norms.half.powi(2) - q.dof_count() as f64).abs() < 1e-12);
        let zero = mesh_dependent_norms(&q, |_, _| 0.0);
        assert_eq!((zero.l2, zero.half, zero.minus_half), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hat_function() {
        let mesh = TriMesh::unit_square(5).unwrap();
        let q = MultiplierSpace::new(&mesh);
        let mut mu = vec![0.0; q.dof_count()];
        mu[3] = 1.0;
        let h = 0.2;
        let norms = mesh_dependent_norms(&q, |e, t| q.evaluate(&mu, e, t));
        assert!((norms.l2.powi(2) - 2.0 * h / 3.0).abs() < 1e-12);
        assert!((norms.minus_half.powi(2) - 2.0 * h * h / 3.0).abs() < 1e-12);
        // Gram matrices agree with the quadrature
        for (power, value) in [(0, norms.l2), (1, norms.minus_half), (-1, norms.half)] {
            let m = boundary_mass(&q, power);
            let quad: f64 = mu.iter().zip(m.mul_vec(&mu)).map(|(a, b)| a * b).sum();
            assert!((quad - value * value).abs() < 1e-12);
        }
    }
}
