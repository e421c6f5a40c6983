//! Triangulations of the computational polygon together with the true
//! boundary curve, split into parametrised boundary elements.
//!
//! The triangles always have straight edges: they tile the polygon `Ω_h`
//! spanned by the mesh vertices. Boundary elements additionally remember the
//! exact piece of the boundary curve between two consecutive boundary
//! vertices (a segment on the square, an arc on the disk). Bulk assembly
//! works on the chords; observations live on the curve.

mod generate;
mod io;

pub use io::{read_mesh, write_mesh};

use nalgebra::{Point2, Vector2};

use crate::error::{invalid_arg, Error, Result};

/// Upper bound on `max h_K / min h_K` accepted by [`TriMesh::new`].
pub const QUASI_UNIFORMITY_BOUND: f64 = 4.0;
/// Upper bound on `h_K / ρ_K` accepted by [`TriMesh::new`].
pub const SHAPE_REGULARITY_BOUND: f64 = 10.0;

const ARC_RADIUS_TOL: f64 = 1e-12;

/// Exact geometry of a boundary element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryGeometry {
    StraightSegment,
    /// Counterclockwise arc `center + radius (cos θ, sin θ)` for `θ` from
    /// `theta0` to `theta1`.
    CircularArc { center: Point2<f64>, radius: f64, theta0: f64, theta1: f64 },
}

/// One piece of the boundary between two consecutive boundary vertices,
/// parametrised over `[0, 1]` at constant speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryElement {
    pub v0: usize,
    pub v1: usize,
    pub geometry: BoundaryGeometry,
    /// Arclength of the element on the true boundary.
    pub length: f64,
}

/// Summary of element size and shape statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub max_diameter: f64,
    pub min_diameter: f64,
    /// `max_K h_K / ρ_K`, with `ρ_K` the diameter of the inscribed circle.
    pub max_aspect_ratio: f64,
    pub boundary_elements: usize,
    pub boundary_length: f64,
}

impl QualityReport {
    pub fn diameter_ratio(&self) -> f64 {
        self.max_diameter / self.min_diameter
    }
}

/// Immutable triangulation with a closed, counterclockwise loop of boundary
/// elements.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryElement>,
    /// Arclength at the start of each boundary element, plus the total at the end.
    boundary_offsets: Vec<f64>,
    mesh_size: f64,
}

impl TriMesh {
    /// Validates and assembles a mesh.
    ///
    /// Rejects non-positive triangle areas, a boundary that is not one closed
    /// loop, arcs whose endpoints are off their circle and meshes outside the
    /// quasi-uniformity and shape-regularity bounds.
    pub fn new(
        vertices: Vec<Point2<f64>>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryElement>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(&vertices, tri);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }
        check_boundary_loop(&vertices, &boundary)?;

        let mut boundary_offsets = Vec::with_capacity(boundary.len() + 1);
        let mut acc = 0.0;
        boundary_offsets.push(0.0);
        for e in &boundary {
            acc += e.length;
            boundary_offsets.push(acc);
        }

        let mesh_size =
            triangles.iter().map(|t| triangle_diameter(&vertices, t)).fold(0.0, f64::max);
        let mesh = Self { vertices, triangles, boundary, boundary_offsets, mesh_size };

        let q = mesh.quality();
        if q.diameter_ratio() > QUASI_UNIFORMITY_BOUND {
            return Err(Error::InvalidMesh(format!(
                "diameter ratio {:.3} exceeds {QUASI_UNIFORMITY_BOUND}",
                q.diameter_ratio()
            )));
        }
        if q.max_aspect_ratio > SHAPE_REGULARITY_BOUND {
            return Err(Error::InvalidMesh(format!(
                "aspect ratio {:.3} exceeds {SHAPE_REGULARITY_BOUND}",
                q.max_aspect_ratio
            )));
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary(&self) -> &[BoundaryElement] {
        &self.boundary
    }

    /// Largest triangle diameter.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    /// Arclength of the true boundary.
    pub fn boundary_length(&self) -> f64 {
        *self.boundary_offsets.last().unwrap()
    }

    /// Arclength from the loop start to the first vertex of each element,
    /// with the total length appended.
    pub fn boundary_offsets(&self) -> &[f64] {
        &self.boundary_offsets
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Returns `(F_E(t), |F_E'(t)|)` for boundary element `e`.
    pub fn boundary_point(&self, e: usize, t: f64) -> Result<(Point2<f64>, f64)> {
        if e >= self.boundary.len() {
            return invalid_arg(format!("boundary element {e} out of range"));
        }
        if !(0.0..=1.0).contains(&t) {
            return invalid_arg(format!("boundary parameter {t} outside [0, 1]"));
        }
        Ok(self.boundary_point_unchecked(e, t))
    }

    pub(crate) fn boundary_point_unchecked(&self, e: usize, t: f64) -> (Point2<f64>, f64) {
        let el = &self.boundary[e];
        match el.geometry {
            BoundaryGeometry::StraightSegment => {
                let a = self.vertices[el.v0];
                let b = self.vertices[el.v1];
                (a + (b - a) * t, el.length)
            }
            BoundaryGeometry::CircularArc { center, radius, theta0, theta1 } => {
                let th = theta0 + t * (theta1 - theta0);
                (center + Vector2::new(th.cos(), th.sin()) * radius, radius * (theta1 - theta0).abs())
            }
        }
    }

    /// Point on the chord between the two vertices of element `e`.
    pub fn chord_point(&self, e: usize, t: f64) -> Point2<f64> {
        let el = &self.boundary[e];
        let a = self.vertices[el.v0];
        a + (self.vertices[el.v1] - a) * t
    }

    /// Outward unit normal of the true boundary at `F_E(t)`.
    pub fn outward_normal(&self, e: usize, t: f64) -> Vector2<f64> {
        let el = &self.boundary[e];
        match el.geometry {
            BoundaryGeometry::StraightSegment => {
                let d = (self.vertices[el.v1] - self.vertices[el.v0]).normalize();
                // counterclockwise loop: the outside is to the right
                Vector2::new(d.y, -d.x)
            }
            BoundaryGeometry::CircularArc { center, .. } => {
                let (p, _) = self.boundary_point_unchecked(e, t);
                (p - center).normalize()
            }
        }
    }

    pub fn quality(&self) -> QualityReport {
        let mut max_d: f64 = 0.0;
        let mut min_d = f64::INFINITY;
        let mut max_aspect: f64 = 0.0;
        for tri in &self.triangles {
            let d = triangle_diameter(&self.vertices, tri);
            max_d = max_d.max(d);
            min_d = min_d.min(d);
            max_aspect = max_aspect.max(d / inscribed_diameter(&self.vertices, tri));
        }
        QualityReport {
            max_diameter: max_d,
            min_diameter: min_d,
            max_aspect_ratio: max_aspect,
            boundary_elements: self.boundary.len(),
            boundary_length: self.boundary_length(),
        }
    }
}

fn signed_area(v: &[Point2<f64>], t: &[usize; 3]) -> f64 {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    0.5 * ((b - a).perp(&(c - a)))
}

fn edge_lengths(v: &[Point2<f64>], t: &[usize; 3]) -> [f64; 3] {
    let (a, b, c) = (v[t[0]], v[t[1]], v[t[2]]);
    [(b - a).norm(), (c - b).norm(), (a - c).norm()]
}

fn triangle_diameter(v: &[Point2<f64>], t: &[usize; 3]) -> f64 {
    edge_lengths(v, t).into_iter().fold(0.0, f64::max)
}

/// Diameter of the inscribed circle, `4 · area / perimeter`.
fn inscribed_diameter(v: &[Point2<f64>], t: &[usize; 3]) -> f64 {
    let perimeter: f64 = edge_lengths(v, t).iter().sum();
    4.0 * signed_area(v, t) / perimeter
}

fn check_boundary_loop(vertices: &[Point2<f64>], boundary: &[BoundaryElement]) -> Result<()> {
    if boundary.len() < 3 {
        return Err(Error::InvalidMesh("boundary loop needs at least 3 elements".into()));
    }
    let mut uses = vec![0u8; vertices.len()];
    for (e, el) in boundary.iter().enumerate() {
        if el.v0 >= vertices.len() || el.v1 >= vertices.len() || el.v0 == el.v1 {
            return Err(Error::InvalidMesh(format!("boundary element {e} has bad endpoints")));
        }
        let next = &boundary[(e + 1) % boundary.len()];
        if el.v1 != next.v0 {
            return Err(Error::InvalidMesh(format!(
                "boundary element {e} ends at vertex {} but the next starts at {}",
                el.v1, next.v0
            )));
        }
        if !(el.length > 0.0) || !el.length.is_finite() {
            return Err(Error::InvalidMesh(format!("boundary element {e} has length {}", el.length)));
        }
        uses[el.v0] += 1;
        uses[el.v1] += 1;
        match el.geometry {
            BoundaryGeometry::StraightSegment => {
                let chord = (vertices[el.v1] - vertices[el.v0]).norm();
                if (chord - el.length).abs() > 1e-12 * el.length.max(1.0) {
                    return Err(Error::InvalidMesh(format!(
                        "segment {e} length {} does not match its chord {chord}",
                        el.length
                    )));
                }
            }
            BoundaryGeometry::CircularArc { center, radius, theta0, theta1 } => {
                if !(theta1 > theta0) || !(radius > 0.0) {
                    return Err(Error::InvalidMesh(format!("arc {e} is not counterclockwise")));
                }
                for (v, th) in [(el.v0, theta0), (el.v1, theta1)] {
                    let p = vertices[v];
                    if ((p - center).norm() - radius).abs() > ARC_RADIUS_TOL {
                        return Err(Error::InvalidMesh(format!(
                            "arc {e} endpoint {v} is not on its circle"
                        )));
                    }
                    let q = center + Vector2::new(th.cos(), th.sin()) * radius;
                    if (q - p).norm() > 1e-10 * radius.max(1.0) {
                        return Err(Error::InvalidMesh(format!(
                            "arc {e} angle does not reach vertex {v}"
                        )));
                    }
                }
            }
        }
    }
    if uses.iter().any(|&u| u != 0 && u != 2) {
        return Err(Error::InvalidMesh("boundary vertex not shared by exactly two elements".into()));
    }
    Ok(())
}
