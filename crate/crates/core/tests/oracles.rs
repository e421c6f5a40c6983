//! Checks against independent dense or brute-force computations.

mod common;

use nalgebra::{DVector, Point2};
use obsfem::analysis::{field_errors, Domain, ManufacturedCase, PreparedCase};
use obsfem::fem::{
    assemble_coupling, assemble_data, assemble_mass, assemble_stiffness, DataPart, FieldSpace, MultiplierSpace,
    SaddleSystem,
};
use obsfem::mesh::TriMesh;
use obsfem::observations::{NoiseModel, ObservationSet};
use obsfem::solver::{solve_saddle_with, SolverMethod};

fn smooth(p: Point2<f64>) -> f64 {
    (2.0 * p.x).cos() + p.y * p.y
}

#[test]
fn coupling_and_data_match_point_location_on_the_disk() {
    let mesh = TriMesh::unit_disk(3).unwrap();
    let obs = ObservationSet::build(&mesh, 150, &smooth, NoiseModel::Gaussian { sigma: 0.3 }, 4).unwrap();
    let (v, q) = (FieldSpace::new(&mesh), MultiplierSpace::new(&mesh));
    let (b, g) = assemble_coupling(&v, &q, &obs).unwrap();
    let (b_ref, g_ref) = common::brute_force_coupling(&mesh, &obs);
    assert!((b.to_dense() - b_ref).amax() < 1e-13);
    assert!((DVector::from_vec(g.clone()) - &g_ref).amax() < 1e-12);
    let observed = assemble_data(&q, &obs, DataPart::Observed).unwrap();
    assert!(g.iter().zip(&observed).all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn saddle_solve_matches_dense_lu() {
    for (mesh, n) in [(TriMesh::unit_square(5).unwrap(), 200), (TriMesh::unit_disk(3).unwrap(), 100)] {
        let obs = ObservationSet::build(&mesh, n, &smooth, NoiseModel::Gaussian { sigma: 1.0 }, 9).unwrap();
        let sys = SaddleSystem::assemble(&FieldSpace::new(&mesh), &MultiplierSpace::new(&mesh), |p| p.x - p.y, &obs)
            .unwrap();
        let (k, rhs) = common::dense_kkt(&sys);
        let reference = k.lu().solve(&rhs).expect("nonsingular saddle matrix");
        for method in [SolverMethod::Direct, SolverMethod::Minres] {
            let sol = solve_saddle_with(&sys, method).unwrap();
            let ours = DVector::from_iterator(reference.len(), sol.u.iter().chain(&sol.lambda).copied());
            let err = (&ours - &reference).amax() / reference.amax();
            assert!(err < 1e-8, "{method:?}: relative deviation {err:e}");
        }
    }
}

#[test]
fn rank_deficient_solve_is_the_minimum_norm_solution() {
    let mesh = TriMesh::unit_square(6).unwrap();
    let obs = ObservationSet::build(&mesh, 9, &smooth, NoiseModel::None, 0).unwrap();
    let sys = SaddleSystem::assemble(&FieldSpace::new(&mesh), &MultiplierSpace::new(&mesh), |_| 1.0, &obs).unwrap();
    let (k, rhs) = common::dense_kkt(&sys);
    let reference = common::pseudo_inverse_solve(&k, &rhs);
    let sol = solve_saddle_with(&sys, SolverMethod::Direct).unwrap();
    let ours = DVector::from_iterator(reference.len(), sol.u.iter().chain(&sol.lambda).copied());
    assert!((&ours - &reference).amax() < 1e-8 * reference.amax().max(1.0));
}

#[test]
fn stiffness_is_the_five_point_stencil_on_the_square() {
    let k = 6;
    let mesh = TriMesh::unit_square(k).unwrap();
    let a = assemble_stiffness(&FieldSpace::new(&mesh));
    let idx = |i: usize, j: usize| j * (k + 1) + i;
    for j in 1..k {
        for i in 1..k {
            let row = idx(i, j);
            assert!((a.get(row, row) - 4.0).abs() < 1e-13);
            for nb in [idx(i - 1, j), idx(i + 1, j), idx(i, j - 1), idx(i, j + 1)] {
                assert!((a.get(row, nb) + 1.0).abs() < 1e-13);
            }
            let (cols, _) = a.row(row);
            let nonzero = cols.iter().filter(|&&c| a.get(row, c).abs() > 1e-13).count();
            assert_eq!(nonzero, 5);
        }
    }
}

#[test]
fn mass_matrix_integrates_quadratics_exactly() {
    // vᵀ M w = ∫ v w for P1 interpolants of linear functions
    let mesh = TriMesh::unit_square(4).unwrap();
    let space = FieldSpace::new(&mesh);
    let m = assemble_mass(&space);
    let x = space.interpolate(|p| p.x);
    let y = space.interpolate(|p| p.y);
    let xy: f64 = m.mul_vec(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
    let xx: f64 = m.mul_vec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
    assert!((xy - 0.25).abs() < 1e-14);
    assert!((xx - 1.0 / 3.0).abs() < 1e-14);
}

/// Degree-5 seven-point rule on the reference triangle (weights sum to 1).
const DEGREE_FIVE: [([f64; 3], f64); 7] = {
    let (a1, b1, w1) = (0.059_715_871_789_770, 0.470_142_064_105_115, 0.132_394_152_788_506);
    let (a2, b2, w2) = (0.797_426_985_353_087, 0.101_286_507_323_456, 0.125_939_180_544_827);
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
};

fn l2_error_degree_five(mesh: &TriMesh, u_h: &[f64], case: &ManufacturedCase) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|i| mesh.vertices()[i]);
        for (l, w) in DEGREE_FIVE {
            let x = Point2::from(p[0].coords * l[0] + p[1].coords * l[1] + p[2].coords * l[2]);
            let uh = l[0] * u_h[tri[0]] + l[1] * u_h[tri[1]] + l[2] * u_h[tri[2]];
            total += w * mesh.triangle_area(t) * ((case.u)(x) - uh).powi(2);
        }
    }
    total.sqrt()
}

#[test]
fn l2_error_agrees_with_higher_order_quadrature() {
    let case = ManufacturedCase::sine();
    for domain in [Domain::Square, Domain::Disk] {
        let prepared = PreparedCase::new(domain, 0.1, 1000, case.clone()).unwrap();
        let (report, sol) = prepared.run_trial(NoiseModel::None, 0).unwrap();
        let reference = l2_error_degree_five(prepared.mesh(), &sol.u, &case);
        let rel = (report.l2 - reference).abs() / reference;
        assert!(rel < 0.25, "{domain}: midpoint {} vs degree five {reference}", report.l2);
        let (l2, _) = field_errors(prepared.mesh(), &sol.u, &case).unwrap();
        assert_eq!(l2, report.l2);
    }
}

#[test]
fn trapezoid_identity_on_the_documented_example() {
    let t = [0.1, 0.2, 0.4, 0.9];
    let omega = obsfem::observations::quadrature_weights(&t).unwrap();
    for (w, e) in omega.iter().zip([0.15, 0.15, 0.35, 0.35]) {
        assert!((w - e).abs() < 1e-15);
    }
    let id = |x: f64| x;
    let q: f64 = omega.iter().zip(&t).map(|(w, x)| w * x).sum();
    let expected = 0.5 * 0.1 * (0.1 - 0.0) + 0.5 * 0.1 * (0.9 - 1.0);
    assert!((q - common::trapezoid(&t, id) - expected).abs() < 1e-15);
    assert!((common::trapezoid_defect(&t, id) - expected).abs() < 1e-15);
}
