//! Property-based invariants.

mod common;

use nalgebra::Point2;
use proptest::prelude::*;

use obsfem::analysis::estimate_rates;
use obsfem::fem::{FieldSpace, MultiplierSpace, SaddleSystem};
use obsfem::mesh::{read_mesh, write_mesh, TriMesh};
use obsfem::observations::{quadrature_weights, sample_noise, NoiseModel, ObservationSet};
use obsfem::solver::solve_saddle;

fn sorted_parameters() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..1_000_000, 1..60)
        .prop_map(|s| s.into_iter().map(|k| k as f64 / 1_000_000.0).collect())
}

fn data(p: Point2<f64>) -> f64 {
    (3.0 * p.x).sin() - p.y
}

proptest! {
    #[test]
    fn weights_are_positive_and_sum_to_one(t in sorted_parameters()) {
        let w = quadrature_weights(&t).unwrap();
        prop_assert_eq!(w.len(), t.len());
        prop_assert!(w.iter().all(|&x| x > 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_rule_differs_from_trapezoid_by_end_terms(
        t in sorted_parameters(),
        c in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let w = quadrature_weights(&t).unwrap();
        let f = |x: f64| c[0] + c[1] * x + c[2] * (x * 7.0).cos();
        let q: f64 = w.iter().zip(&t).map(|(w, &x)| w * f(x)).sum();
        let d = q - common::trapezoid(&t, f) - common::trapezoid_defect(&t, f);
        prop_assert!(d.abs() < 1e-13);
    }

    #[test]
    fn noise_realisations_are_prefix_stable(seed in any::<u64>(), n in 1usize..200, extra in 1usize..50) {
        let model = NoiseModel::GaussianMixture { sigma1: 1.0, sigma2: 10.0, p: 0.5 };
        let short = sample_noise(&model, n, seed);
        let long = sample_noise(&model, n + extra, seed);
        prop_assert_eq!(&short[..], &long[..n]);
        prop_assert_eq!(short, sample_noise(&model, n, seed));
    }

    #[test]
    fn weights_cover_the_boundary(m in 2usize..6, per in 1usize..6, extra in 0usize..40) {
        let mesh = TriMesh::unit_disk(m).unwrap();
        let n = per * mesh.boundary().len() + extra;
        let obs = ObservationSet::build(&mesh, n, &data, NoiseModel::None, 0).unwrap();
        let (sum, lo, _) = obs.weight_stats();
        prop_assert!((sum - mesh.boundary_length()).abs() < 1e-12);
        prop_assert!(lo > 0.0);
    }

    #[test]
    fn equispaced_sites_are_uniform(m in 2usize..6, n in 2usize..500) {
        let mesh = TriMesh::unit_disk(m).unwrap();
        let obs = ObservationSet::build(&mesh, n, &data, NoiseModel::None, 0).unwrap();
        let u = obs.uniformity().unwrap();
        prop_assert!((u.ratio - 0.5).abs() < 1e-6, "{:?}", u);
    }

    #[test]
    fn mesh_text_round_trips(k in 2usize..7, disk in any::<bool>()) {
        let mesh = if disk { TriMesh::unit_disk(k).unwrap() } else { TriMesh::unit_square(k).unwrap() };
        let mut first = Vec::new();
        write_mesh(&mesh, &mut first).unwrap();
        let again = read_mesh(&first[..]).unwrap();
        let mut second = Vec::new();
        write_mesh(&again, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn power_laws_give_exact_rates(c in 0.01f64..100.0, p in -3.0f64..3.0, levels in 2usize..6) {
        let h: Vec<f64> = (0..levels).map(|j| 0.2 / 2f64.powi(j as i32)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(p)).collect();
        let r = estimate_rates(&h, &e).unwrap();
        prop_assert!((r.endpoint.value().unwrap() + p).abs() < 1e-9);
        prop_assert!((r.least_squares.value().unwrap() + p).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solution_is_linear_in_the_data(k in 2usize..6, n in 20usize..200, s in -4.0f64..4.0, seed in any::<u64>()) {
        let mesh = TriMesh::unit_square(k).unwrap();
        let obs = ObservationSet::build(&mesh, n, &data, NoiseModel::Gaussian { sigma: 0.5 }, seed).unwrap();
        let sys = SaddleSystem::assemble(&FieldSpace::new(&mesh), &MultiplierSpace::new(&mesh), |p| p.x * p.y, &obs)
            .unwrap();
        let base = solve_saddle(&sys).unwrap();
        let scaled_sys = sys
            .with_rhs(sys.f.iter().map(|x| s * x).collect(), sys.g.iter().map(|x| s * x).collect())
            .unwrap();
        let scaled = solve_saddle(&scaled_sys).unwrap();
        let scale = base.u.iter().chain(&base.lambda).fold(1.0f64, |m, x| m.max(x.abs()));
        for (a, b) in base.u.iter().chain(&base.lambda).zip(scaled.u.iter().chain(&scaled.lambda)) {
            prop_assert!((s * a - b).abs() <= 1e-9 * scale * s.abs().max(1.0));
        }
    }

    #[test]
    fn coupling_rows_reproduce_constant_data(m in 2usize..5, n in 5usize..300) {
        // Σ_j B_kj = G_k when g ≡ 1, since the P1 basis sums to one
        let mesh = TriMesh::unit_disk(m).unwrap();
        let one = |_: Point2<f64>| 1.0;
        let obs = ObservationSet::build(&mesh, n, &one, NoiseModel::None, 0).unwrap();
        let (b, g) = obsfem::fem::assemble_coupling(&FieldSpace::new(&mesh), &MultiplierSpace::new(&mesh), &obs).unwrap();
        for (r, g) in b.row_sums().iter().zip(&g) {
            prop_assert!((r - g).abs() < 1e-14);
        }
    }
}
