//! P1 field space on the chord polygon, the boundary multiplier space and
//! the blocks of the saddle-point system
//!
//! ```text
//! [ A  Bᵀ ] [u]   [F]
//! [ B  0  ] [λ] = [G]
//! ```
//!
//! with `A` the stiffness matrix, `B_kj = <ψ_k, Π_h φ_j>_n`, `F = M I_h f`
//! and `G_k = <ψ_k, g>_n`.

mod norms;
mod stability;

pub use norms::{boundary_mass, mesh_dependent_norms, MeshNorms};
pub use stability::{
    empirical_multiplier_gram, inf_sup_constant, kernel_coercivity, norm_equivalence_ratio,
};

use nalgebra::Point2;

use crate::error::{invalid_arg, Error, Result};
use crate::mesh::TriMesh;
use crate::observations::{ObservationSet, Site};
use crate::sparse::CsrMatrix;

/// Continuous piecewise-linear functions on the triangles of the mesh.
#[derive(Debug, Clone)]
pub struct FieldSpace<'a> {
    mesh: &'a TriMesh,
    boundary_dofs: Vec<usize>,
}

impl<'a> FieldSpace<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let mut boundary_dofs: Vec<usize> = mesh.boundary().iter().map(|e| e.v0).collect();
        boundary_dofs.sort_unstable();
        Self { mesh, boundary_dofs }
    }

    pub fn mesh(&self) -> &'a TriMesh {
        self.mesh
    }

    /// One dof per vertex, numbered like the vertices.
    pub fn dof_count(&self) -> usize {
        self.mesh.vertices().len()
    }

    /// Sorted vertex indices on the boundary loop.
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Nodal interpolant `I_h f`.
    pub fn interpolate(&self, f: impl Fn(Point2<f64>) -> f64) -> Vec<f64> {
        self.mesh.vertices().iter().map(|&p| f(p)).collect()
    }
}

/// Continuous functions on the boundary that are linear in the parameter of
/// each boundary element. Dof `k` is the first vertex of boundary element
/// `k`, so element `e` carries dofs `e` and `(e + 1) mod N_h`.
#[derive(Debug, Clone)]
pub struct MultiplierSpace<'a> {
    mesh: &'a TriMesh,
}

impl<'a> MultiplierSpace<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        Self { mesh }
    }

    pub fn mesh(&self) -> &'a TriMesh {
        self.mesh
    }

    pub fn dof_count(&self) -> usize {
        self.mesh.boundary().len()
    }

    pub fn element_dofs(&self, e: usize) -> [usize; 2] {
        [e, (e + 1) % self.dof_count()]
    }

    /// Mesh vertex carrying multiplier dof `k`.
    pub fn vertex(&self, k: usize) -> usize {
        self.mesh.boundary()[k].v0
    }

    /// `μ_h(F_E(t))` for coefficient vector `mu`.
    pub fn evaluate(&self, mu: &[f64], e: usize, t: f64) -> f64 {
        let [k0, k1] = self.element_dofs(e);
        (1.0 - t) * mu[k0] + t * mu[k1]
    }

    /// Restriction of a field to the boundary vertices, i.e. `Π_h v` in dof
    /// coordinates.
    pub fn trace_of(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dof_count()).map(|k| v[self.vertex(k)]).collect()
    }
}

/// `(Π_h u)(F_E(t)) = (1 − t) u(v0) + t u(v1)`.
pub fn trace_evaluate(space: &FieldSpace, u: &[f64], e: usize, t: f64) -> Result<f64> {
    if u.len() != space.dof_count() {
        return invalid_arg(format!("field has {} values, expected {}", u.len(), space.dof_count()));
    }
    let Some(el) = space.mesh.boundary().get(e) else {
        return invalid_arg(format!("boundary element {e} out of range"));
    };
    if !(0.0..=1.0).contains(&t) {
        return invalid_arg(format!("boundary parameter {t} outside [0, 1]"));
    }
    Ok((1.0 - t) * u[el.v0] + t * u[el.v1])
}

/// Edge vectors opposite each vertex, and the area.
fn triangle_geometry(mesh: &TriMesh, t: usize) -> ([nalgebra::Vector2<f64>; 3], f64) {
    let [a, b, c] = mesh.triangles()[t].map(|i| mesh.vertices()[i]);
    ([c - b, a - c, b - a], mesh.triangle_area(t))
}

/// P1 stiffness matrix `A_ij = (∇φ_j, ∇φ_i)` over the triangles.
pub fn assemble_stiffness(space: &FieldSpace) -> CsrMatrix {
    let mesh = space.mesh;
    let mut trip = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (edges, area) = triangle_geometry(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], edges[i].dot(&edges[j]) / (4.0 * area)));
            }
        }
    }
    let n = space.dof_count();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(space: &FieldSpace) -> CsrMatrix {
    let mesh = space.mesh;
    let mut trip = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        for i in 0..3 {
            for j in 0..3 {
                let w = if i == j { area / 6.0 } else { area / 12.0 };
                trip.push((tri[i], tri[j], w));
            }
        }
    }
    let n = space.dof_count();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Load vector `F_i = (I_h f, φ_i)`, integrated exactly.
pub fn assemble_load(space: &FieldSpace, f: impl Fn(Point2<f64>) -> f64) -> Result<Vec<f64>> {
    let nodal = space.interpolate(f);
    if let Some(v) = nodal.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidData(format!(
            "source term is {} at vertex {v} ({}, {})",
            nodal[v],
            space.mesh.vertices()[v].x,
            space.mesh.vertices()[v].y
        )));
    }
    Ok(assemble_mass(space).mul_vec(&nodal))
}

/// Which part of the observed data enters a right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataPart {
    /// `g_0(x_i)`
    Clean,
    /// `e_i`
    Noise,
    /// `g_i = g_0(x_i) + e_i`
    Observed,
}

/// Runs `f` once per boundary element with a reusable site buffer and
/// returns the results in element order.
fn per_element<T: Send>(count: usize, f: impl Fn(usize, &mut Vec<Site>) -> T + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map_init(Vec::new, |buf, e| f(e, buf)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut buf = Vec::new();
        (0..count).map(|e| f(e, &mut buf)).collect()
    }
}

fn check_same_mesh(a: &TriMesh, b: &TriMesh) -> Result<()> {
    if std::ptr::eq(a, b) || a == b {
        Ok(())
    } else {
        invalid_arg("observations were placed on a different mesh")
    }
}

/// `[Σ α(1−t)², Σ α t(1−t), Σ α t²]` over the sites of one element.
fn local_gram(sites: &[Site]) -> [f64; 3] {
    sites.iter().fold([0.0; 3], |[a, b, c], s| {
        let (p, q) = (1.0 - s.t, s.t);
        [a + s.alpha * p * p, b + s.alpha * p * q, c + s.alpha * q * q]
    })
}

/// Data vector `G_k = Σ_i α_i ψ_k(x_i) d_i` for the chosen part `d` of the data.
pub fn assemble_data(q: &MultiplierSpace, obs: &ObservationSet, part: DataPart) -> Result<Vec<f64>> {
    check_same_mesh(q.mesh, obs.mesh())?;
    let local = per_element(q.dof_count(), |e, buf| {
        obs.element_sites(e, buf);
        buf.iter().fold([0.0; 2], |[g0, g1], s| {
            let d = match part {
                DataPart::Clean => obs.clean_value(s),
                DataPart::Noise => obs.noise_value(s),
                DataPart::Observed => obs.observed_value(s),
            };
            let w = s.alpha * d;
            [g0 + (1.0 - s.t) * w, g1 + s.t * w]
        })
    });
    let mut g = vec![0.0; q.dof_count()];
    for (e, [g0, g1]) in local.into_iter().enumerate() {
        let [k0, k1] = q.element_dofs(e);
        g[k0] += g0;
        g[k1] += g1;
    }
    Ok(g)
}

/// Empirical coupling matrix `B` (`N_h × dof`) and the observed data vector `G`.
///
/// Makes a single pass over the sites; each contributes a 2 × 2 block
/// coupling the two hat functions of its element with the traces of the two
/// endpoint basis functions.
pub fn assemble_coupling(
    v: &FieldSpace,
    q: &MultiplierSpace,
    obs: &ObservationSet,
) -> Result<(CsrMatrix, Vec<f64>)> {
    check_same_mesh(v.mesh, q.mesh)?;
    check_same_mesh(q.mesh, obs.mesh())?;
    let local = per_element(q.dof_count(), |e, buf| {
        obs.element_sites(e, buf);
        let m = local_gram(buf);
        let g = buf.iter().fold([0.0; 2], |[g0, g1], s| {
            let w = s.alpha * obs.observed_value(s);
            [g0 + (1.0 - s.t) * w, g1 + s.t * w]
        });
        (m, g)
    });
    let mut trip = Vec::with_capacity(4 * q.dof_count());
    let mut g = vec![0.0; q.dof_count()];
    for (e, ([m00, m01, m11], [g0, g1])) in local.into_iter().enumerate() {
        let [k0, k1] = q.element_dofs(e);
        let el = &q.mesh.boundary()[e];
        trip.extend([(k0, el.v0, m00), (k0, el.v1, m01), (k1, el.v0, m01), (k1, el.v1, m11)]);
        g[k0] += g0;
        g[k1] += g1;
    }
    Ok((CsrMatrix::from_triplets(q.dof_count(), v.dof_count(), &trip), g))
}

/// Assembled saddle-point system together with the Gram matrices of the
/// norms used for stability measurements and preconditioning.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    /// Stiffness, `dof × dof`.
    pub a: CsrMatrix,
    /// Empirical coupling, `N_h × dof`.
    pub b: CsrMatrix,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// `Σ_E h_E⁻¹ M_E` acting on boundary traces, embedded in `dof × dof`.
    pub trace_gram: CsrMatrix,
    /// `Σ_E h_E M_E` on the multiplier dofs, the Gram matrix of `‖·‖_{-1/2,h}`.
    pub multiplier_gram: CsrMatrix,
    /// Mesh vertex of each multiplier dof.
    pub multiplier_vertices: Vec<usize>,
}

impl SaddleSystem {
    /// Assembles every block for source `f` and the observations `obs`.
    pub fn assemble(
        v: &FieldSpace,
        q: &MultiplierSpace,
        f: impl Fn(Point2<f64>) -> f64,
        obs: &ObservationSet,
    ) -> Result<Self> {
        let (b, g) = assemble_coupling(v, q, obs)?;
        Ok(Self::from_blocks(v, q, assemble_stiffness(v), b, assemble_load(v, f)?, g))
    }

    pub(crate) fn from_blocks(
        v: &FieldSpace,
        q: &MultiplierSpace,
        a: CsrMatrix,
        b: CsrMatrix,
        f: Vec<f64>,
        g: Vec<f64>,
    ) -> Self {
        let multiplier_vertices: Vec<usize> = (0..q.dof_count()).map(|k| q.vertex(k)).collect();
        let inv = boundary_mass(q, -1);
        let trip: Vec<_> =
            inv.triplets().map(|(k, l, x)| (multiplier_vertices[k], multiplier_vertices[l], x)).collect();
        let trace_gram = CsrMatrix::from_triplets(v.dof_count(), v.dof_count(), &trip);
        Self { a, b, f, g, trace_gram, multiplier_gram: boundary_mass(q, 1), multiplier_vertices }
    }

    pub fn field_dofs(&self) -> usize {
        self.a.nrows()
    }

    pub fn multiplier_dofs(&self) -> usize {
        self.b.nrows()
    }

    /// Same matrices with new right-hand sides.
    pub fn with_rhs(&self, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if f.len() != self.field_dofs() || g.len() != self.multiplier_dofs() {
            return invalid_arg("right-hand side dimensions do not match the system");
        }
        Ok(Self { f, g, ..self.clone() })
    }

    /// Gram matrix of `‖v‖²_{V_h} = ‖∇v‖² + ‖Π_h v‖²_{1/2,h}`.
    pub fn field_gram(&self) -> CsrMatrix {
        self.a.add_scaled(&self.trace_gram, 1.0)
    }
}
