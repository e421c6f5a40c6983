use std::f64::consts::TAU;

use nalgebra::{Point2, Vector2};

use super::{BoundaryElement, BoundaryGeometry, TriMesh};
use crate::error::{invalid_arg, Result};

impl TriMesh {
    /// Uniform `k × k` grid of the unit square, each cell split along the
    /// diagonal from its lower-left to its upper-right corner.
    ///
    /// Vertex `(i, j)` sits at `(i/k, j/k)` with index `j (k + 1) + i`. The
    /// boundary loop runs counterclockwise from the origin.
    pub fn unit_square(k: usize) -> Result<Self> {
        if k < 2 {
            return invalid_arg(format!("square mesh needs k >= 2, got {k}"));
        }
        let kf = k as f64;
        let idx = |i: usize, j: usize| j * (k + 1) + i;
        let mut vertices = Vec::with_capacity((k + 1) * (k + 1));
        for j in 0..=k {
            for i in 0..=k {
                vertices.push(Point2::new(i as f64 / kf, j as f64 / kf));
            }
        }
        let mut triangles = Vec::with_capacity(2 * k * k);
        for j in 0..k {
            for i in 0..k {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        let mut loop_vertices = Vec::with_capacity(4 * k);
        loop_vertices.extend((0..k).map(|i| idx(i, 0)));
        loop_vertices.extend((0..k).map(|j| idx(k, j)));
        loop_vertices.extend((0..k).map(|i| idx(k - i, k)));
        loop_vertices.extend((0..k).map(|j| idx(0, k - j)));
        let boundary = (0..loop_vertices.len())
            .map(|e| {
                let v0 = loop_vertices[e];
                let v1 = loop_vertices[(e + 1) % loop_vertices.len()];
                BoundaryElement {
                    v0,
                    v1,
                    geometry: BoundaryGeometry::StraightSegment,
                    length: (vertices[v1] - vertices[v0]).norm(),
                }
            })
            .collect();
        TriMesh::new(vertices, triangles, boundary)
    }

    /// Structured polar mesh of the unit disk with `m` rings.
    ///
    /// Ring `i` has radius `i/m` and `round(2π i)` equally spaced vertices
    /// starting at angle zero; the centre is a single vertex. Consecutive
    /// rings are stitched by advancing along whichever ring has the smaller
    /// next angle. The outer ring lies on the unit circle and its elements
    /// are exact arcs.
    pub fn unit_disk(m: usize) -> Result<Self> {
        if m < 2 {
            return invalid_arg(format!("disk mesh needs m >= 2 rings, got {m}"));
        }
        let ring_size = |i: usize| -> usize { (TAU * i as f64).round() as usize };

        let mut vertices = vec![Point2::origin()];
        let mut ring_start = vec![0usize];
        for i in 1..=m {
            ring_start.push(vertices.len());
            let n = ring_size(i);
            let r = if i == m { 1.0 } else { i as f64 / m as f64 };
            for j in 0..n {
                let th = TAU * j as f64 / n as f64;
                vertices.push(Point2::from(Vector2::new(th.cos(), th.sin()) * r));
            }
        }

        let mut triangles = Vec::new();
        let n1 = ring_size(1);
        for j in 0..n1 {
            triangles.push([0, ring_start[1] + j, ring_start[1] + (j + 1) % n1]);
        }
        for i in 1..m {
            let (na, nb) = (ring_size(i), ring_size(i + 1));
            let (sa, sb) = (ring_start[i], ring_start[i + 1]);
            let a = |p: usize| sa + p % na;
            let b = |p: usize| sb + p % nb;
            let (mut p, mut q) = (0usize, 0usize);
            while p < na || q < nb {
                let next_a = (p + 1) as f64 / na as f64;
                let next_b = (q + 1) as f64 / nb as f64;
                if q < nb && (p == na || next_b <= next_a) {
                    triangles.push([a(p), b(q), b(q + 1)]);
                    q += 1;
                } else {
                    triangles.push([a(p), b(q), a(p + 1)]);
                    p += 1;
                }
            }
        }

        let nb = ring_size(m);
        let sb = ring_start[m];
        let boundary = (0..nb)
            .map(|j| {
                let theta0 = TAU * j as f64 / nb as f64;
                let theta1 = TAU * (j + 1) as f64 / nb as f64;
                BoundaryElement {
                    v0: sb + j,
                    v1: sb + (j + 1) % nb,
                    geometry: BoundaryGeometry::CircularArc {
                        center: Point2::origin(),
                        radius: 1.0,
                        theta0,
                        theta1,
                    },
                    length: theta1 - theta0,
                }
            })
            .collect();
        TriMesh::new(vertices, triangles, boundary)
    }
}
