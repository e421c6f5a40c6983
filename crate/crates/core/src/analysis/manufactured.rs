use std::fmt;
use std::sync::Arc;

use nalgebra::{Point2, Vector2};

use crate::mesh::TriMesh;

pub type ScalarField = Arc<dyn Fn(Point2<f64>) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point2<f64>) -> Vector2<f64> + Send + Sync>;

/// Closed-form solution of `−Δu = f` used to generate data and measure errors.
///
/// The Dirichlet data is the trace of `u` on the true boundary and the exact
/// multiplier is `λ = −∂u/∂ν`.
#[derive(Clone)]
pub struct ManufacturedCase {
    pub name: String,
    pub u: ScalarField,
    pub grad: VectorField,
    pub f: ScalarField,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase").field("name", &self.name).finish_non_exhaustive()
    }
}

impl ManufacturedCase {
    /// `u = sin(5x + 1) sin(5y + 1)`, `f = 50 u`.
    pub fn sine() -> Self {
        let u = |p: Point2<f64>| (5.0 * p.x + 1.0).sin() * (5.0 * p.y + 1.0).sin();
        Self {
            name: "sin(5x+1)sin(5y+1)".into(),
            u: Arc::new(u),
            grad: Arc::new(|p: Point2<f64>| {
                let (sx, cx) = (5.0 * p.x + 1.0).sin_cos();
                let (sy, cy) = (5.0 * p.y + 1.0).sin_cos();
                Vector2::new(5.0 * cx * sy, 5.0 * sx * cy)
            }),
            f: Arc::new(move |p| 50.0 * u(p)),
        }
    }

    /// `u ≡ c`, `f = 0`.
    pub fn constant(c: f64) -> Self {
        Self {
            name: format!("{c}"),
            u: Arc::new(move |_| c),
            grad: Arc::new(|_| Vector2::zeros()),
            f: Arc::new(|_| 0.0),
        }
    }

    /// `u = c0 + c1 x + c2 y`, `f = 0`.
    pub fn linear(c0: f64, c1: f64, c2: f64) -> Self {
        Self {
            name: format!("{c0} + {c1} x + {c2} y"),
            u: Arc::new(move |p| c0 + c1 * p.x + c2 * p.y),
            grad: Arc::new(move |_| Vector2::new(c1, c2)),
            f: Arc::new(|_| 0.0),
        }
    }

    /// `−∂u/∂ν` at parameter `t` of boundary element `e`.
    pub fn multiplier(&self, mesh: &TriMesh, e: usize, t: f64) -> f64 {
        let (p, _) = mesh.boundary_point_unchecked(e, t);
        -(self.grad)(p).dot(&mesh.outward_normal(e, t))
    }

    /// Largest relative mismatch between `f` and a five-point finite
    /// difference of `−Δu` with step `step` at the given points.
    pub fn source_residual(&self, points: &[Point2<f64>], step: f64) -> f64 {
        let u = &self.u;
        points
            .iter()
            .map(|&p| {
                let dx = Vector2::new(step, 0.0);
                let dy = Vector2::new(0.0, step);
                let lap = (u(p + dx) + u(p - dx) + u(p + dy) + u(p - dy) - 4.0 * u(p)) / (step * step);
                let f = (self.f)(p);
                (f + lap).abs() / f.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}
