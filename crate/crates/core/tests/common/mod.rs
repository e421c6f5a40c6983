//! Independent dense reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Point2};
use obsfem::fem::SaddleSystem;
use obsfem::mesh::TriMesh;
use obsfem::observations::ObservationSet;

/// Full saddle matrix `[[A, Bᵀ], [B, 0]]` and right-hand side `[F; G]`.
pub fn dense_kkt(sys: &SaddleSystem) -> (DMatrix<f64>, DVector<f64>) {
    let (n, m) = (sys.field_dofs(), sys.multiplier_dofs());
    let mut k = DMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&sys.a.to_dense());
    let b = sys.b.to_dense();
    k.view_mut((n, 0), (m, n)).copy_from(&b);
    k.view_mut((0, n), (n, m)).copy_from(&b.transpose());
    let rhs = DVector::from_iterator(n + m, sys.f.iter().chain(&sys.g).copied());
    (k, rhs)
}

/// Minimum-norm solution of `K x = r` from a dense SVD.
pub fn pseudo_inverse_solve(k: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let svd = k.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    svd.solve(r, tol).expect("both singular factors were computed")
}

/// Barycentric coordinates of `p` in the triangle `t`.
fn barycentric(mesh: &TriMesh, t: usize, p: Point2<f64>) -> [f64; 3] {
    let [a, b, c] = mesh.triangles()[t].map(|i| mesh.vertices()[i]);
    let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let l1 = ((b.x - p.x) * (c.y - p.y) - (c.x - p.x) * (b.y - p.y)) / det;
    let l2 = ((c.x - p.x) * (a.y - p.y) - (a.x - p.x) * (c.y - p.y)) / det;
    [l1, l2, 1.0 - l1 - l2]
}

/// Value of every P1 basis function at `p`, found by scanning all triangles.
pub fn basis_at(mesh: &TriMesh, p: Point2<f64>) -> Vec<(usize, f64)> {
    for t in 0..mesh.triangles().len() {
        let l = barycentric(mesh, t, p);
        if l.iter().all(|&x| x >= -1e-12) {
            return mesh.triangles()[t].iter().copied().zip(l).collect();
        }
    }
    panic!("point {p:?} lies outside the mesh");
}

/// `B_kj = Σ_i α_i ψ_k(x_i) φ_j(x̃_i)` with `x̃_i` the chord image of site
/// `i`, evaluated by point location rather than trace interpolation. Also
/// returns `G_k = Σ_i α_i ψ_k(x_i) g_i`.
pub fn brute_force_coupling(mesh: &TriMesh, obs: &ObservationSet) -> (DMatrix<f64>, DVector<f64>) {
    let nb = mesh.boundary().len();
    let mut b = DMatrix::zeros(nb, mesh.vertices().len());
    let mut g = DVector::zeros(nb);
    obs.for_each_site(|s| {
        let el = &mesh.boundary()[s.element];
        let (p0, p1) = (mesh.vertices()[el.v0], mesh.vertices()[el.v1]);
        let chord = p0 + (p1 - p0) * s.t;
        let value = obs.observed_value(s);
        for (k, psi) in [(s.element, 1.0 - s.t), ((s.element + 1) % nb, s.t)] {
            for (j, phi) in basis_at(mesh, chord) {
                b[(k, j)] += s.alpha * psi * phi;
            }
            g[k] += s.alpha * psi * value;
        }
    });
    (b, g)
}

/// Composite trapezoid rule on `0, t_1, …, t_m, 1`.
pub fn trapezoid(t: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let nodes: Vec<f64> = std::iter::once(0.0).chain(t.iter().copied()).chain(std::iter::once(1.0)).collect();
    nodes.windows(2).map(|p| (p[1] - p[0]) * 0.5 * (w(p[0]) + w(p[1]))).sum()
}

/// Right-hand side of the identity between the weighted rule and the
/// trapezoid rule: `½Δt₁(w(t₁) − w(0)) + ½Δt_{m+1}(w(t_m) − w(1))`.
pub fn trapezoid_defect(t: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let m = t.len();
    0.5 * t[0] * (w(t[0]) - w(0.0)) + 0.5 * (1.0 - t[m - 1]) * (w(t[m - 1]) - w(1.0))
}
