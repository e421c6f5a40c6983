//! Measurement sites on the boundary curve, noisy observations of the
//! Dirichlet data and the empirical boundary quadrature.
//!
//! An [`ObservationSet`] never stores per-site arrays. Sites are generated
//! element by element from the placement rule, and the error at site `i`
//! is a pure function of `(seed, i)`, which keeps memory at `O(elements)`
//! even for tens of millions of sites.

mod noise;
mod quadrature;

use std::io::Write;

use nalgebra::Point2;
use rand::RngExt;

pub use noise::{sample_noise, NoiseModel};
pub use quadrature::{empirical_inner_product, empirical_norm, quadrature_weights};

use crate::error::{invalid_arg, Result};
use crate::mesh::TriMesh;

/// Distance (in arclength) below which a site counts as sitting on a vertex.
const VERTEX_COINCIDENCE_TOL: f64 = 1e-12;
/// Shift applied to such sites, as a fraction of the site spacing.
const VERTEX_NUDGE: f64 = 1e-9;

/// How measurement sites are distributed along the boundary loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// `s_i = (i − ½)|Γ|/n` measured from the loop start.
    Equispaced,
    /// Equispaced sites moved by up to a quarter spacing in either direction.
    Jittered { seed: u64 },
}

/// A measurement site located on a boundary element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSite {
    pub element: usize,
    pub t: f64,
    pub position: Point2<f64>,
    pub arclength: f64,
}

/// Quadrature data of one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub index: usize,
    pub element: usize,
    pub t: f64,
    /// Local weight `ω_{j,E}`.
    pub omega: f64,
    /// Global weight `α_j = ω_{j,E} |F_E'(t_j)|`.
    pub alpha: f64,
}

/// Fully evaluated observation, mostly for dumps and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub site: Site,
    pub position: Point2<f64>,
    pub clean: f64,
    pub noise: f64,
}

impl Observation {
    pub fn value(&self) -> f64 {
        self.clean + self.noise
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformityReport {
    pub s_max: f64,
    pub s_min: f64,
    pub ratio: f64,
}

/// Uniformity of sorted site arclengths on a closed curve of length `total`.
///
/// `s_min` is the smallest gap between neighbours along the loop and `s_max`
/// half the largest gap, which is the farthest any boundary point can be from
/// its nearest site.
pub fn uniformity_report(arclengths: &[f64], total: f64) -> Result<UniformityReport> {
    if arclengths.len() < 2 {
        return invalid_arg("uniformity needs at least two sites");
    }
    if arclengths.windows(2).any(|w| w[1] <= w[0]) {
        return invalid_arg("site arclengths must be strictly increasing");
    }
    let wrap = total - arclengths[arclengths.len() - 1] + arclengths[0];
    let (min_gap, max_gap) = arclengths
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(wrap))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), g| (lo.min(g), hi.max(g)));
    Ok(UniformityReport { s_max: max_gap / 2.0, s_min: min_gap, ratio: max_gap / 2.0 / min_gap })
}

/// Site arclengths and their assignment to boundary elements.
#[derive(Debug, Clone)]
pub(crate) struct SiteLayout {
    n: usize,
    spacing: f64,
    placement: Placement,
    /// Sites of element `e` are `first[e]..first[e + 1]`.
    first: Vec<usize>,
    /// Sorted indices of sites nudged off a vertex.
    nudged: Vec<usize>,
}

impl SiteLayout {
    pub(crate) fn new(mesh: &TriMesh, n: usize, placement: Placement) -> Result<Self> {
        if n == 0 {
            return invalid_arg("need at least one measurement site");
        }
        let offsets = mesh.boundary_offsets();
        let spacing = mesh.boundary_length() / n as f64;
        let mut layout = Self { n, spacing, placement, first: Vec::new(), nudged: Vec::new() };

        for &vertex_s in &offsets[1..offsets.len() - 1] {
            let k = partition_point(n, |i| layout.base_arclength(i) < vertex_s);
            for cand in [k.wrapping_sub(1), k] {
                if cand < n && (layout.base_arclength(cand) - vertex_s).abs() < VERTEX_COINCIDENCE_TOL {
                    layout.nudged.push(cand);
                }
            }
        }
        layout.nudged.sort_unstable();
        layout.nudged.dedup();
        if !layout.nudged.is_empty() {
            log::warn!(
                "{} of {n} measurement sites coincide with boundary vertices; shifted by {:e}",
                layout.nudged.len(),
                VERTEX_NUDGE * spacing
            );
        }

        layout.first = offsets.iter().map(|&s| partition_point(n, |i| layout.arclength(i) < s)).collect();
        *layout.first.last_mut().unwrap() = n;
        Ok(layout)
    }

    fn base_arclength(&self, i: usize) -> f64 {
        let shift = match self.placement {
            Placement::Equispaced => 0.0,
            Placement::Jittered { seed } => {
                noise::site_rng(seed ^ 0x5E_ED0F_5175, i as u64).random_range(-0.25..0.25)
            }
        };
        (i as f64 + 0.5 + shift) * self.spacing
    }

    fn arclength(&self, i: usize) -> f64 {
        let s = self.base_arclength(i);
        if self.nudged.binary_search(&i).is_ok() {
            s + VERTEX_NUDGE * self.spacing
        } else {
            s
        }
    }
}

fn partition_point(n: usize, mut pred: impl FnMut(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Places `n` sites on the boundary of `mesh` and returns them in loop order.
pub fn place_measurements(mesh: &TriMesh, n: usize) -> Result<Vec<MeasurementSite>> {
    place_measurements_with(mesh, n, Placement::Equispaced)
}

pub fn place_measurements_with(
    mesh: &TriMesh,
    n: usize,
    placement: Placement,
) -> Result<Vec<MeasurementSite>> {
    let layout = SiteLayout::new(mesh, n, placement)?;
    let offsets = mesh.boundary_offsets();
    let mut out = Vec::with_capacity(n);
    for (e, el) in mesh.boundary().iter().enumerate() {
        for i in layout.first[e]..layout.first[e + 1] {
            let s = layout.arclength(i);
            let t = ((s - offsets[e]) / el.length).clamp(0.0, 1.0);
            let (position, _) = mesh.boundary_point_unchecked(e, t);
            out.push(MeasurementSite { element: e, t, position, arclength: s });
        }
    }
    Ok(out)
}

/// Noisy observations of a boundary function at sites on `mesh`.
#[derive(Clone)]
pub struct ObservationSet<'a> {
    mesh: &'a TriMesh,
    layout: SiteLayout,
    data: &'a (dyn Fn(Point2<f64>) -> f64 + Sync),
    noise: NoiseModel,
    seed: u64,
}

impl std::fmt::Debug for ObservationSet<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObservationSet")
            .field("n", &self.layout.n)
            .field("placement", &self.layout.placement)
            .field("noise", &self.noise)
            .field("seed", &self.seed)
            .finish()
    }
}

impl<'a> ObservationSet<'a> {
    /// Equispaced observations of `data` with errors drawn from `noise`.
    pub fn build(
        mesh: &'a TriMesh,
        n: usize,
        data: &'a (dyn Fn(Point2<f64>) -> f64 + Sync),
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        Self::with_placement(mesh, n, Placement::Equispaced, data, noise, seed)
    }

    pub fn with_placement(
        mesh: &'a TriMesh,
        n: usize,
        placement: Placement,
        data: &'a (dyn Fn(Point2<f64>) -> f64 + Sync),
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        noise.validate()?;
        let layout = SiteLayout::new(mesh, n, placement)?;
        Ok(Self { mesh, layout, data, noise, seed })
    }

    /// Same sites and data under another noise realisation.
    /// Reuses a layout computed for `mesh` by [`SiteLayout::new`].
    pub(crate) fn from_layout(
        mesh: &'a TriMesh,
        layout: SiteLayout,
        data: &'a (dyn Fn(Point2<f64>) -> f64 + Sync),
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        noise.validate()?;
        Ok(Self { mesh, layout, data, noise, seed })
    }

    pub fn reseeded(&self, noise: NoiseModel, seed: u64) -> Result<Self> {
        noise.validate()?;
        Ok(Self { noise, seed, ..self.clone() })
    }

    pub fn mesh(&self) -> &'a TriMesh {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.layout.n
    }

    pub fn is_empty(&self) -> bool {
        self.layout.n == 0
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of sites that were shifted off a mesh vertex.
    pub fn nudged_count(&self) -> usize {
        self.layout.nudged.len()
    }

    /// Global indices of the sites on element `e`.
    pub fn element_range(&self, e: usize) -> std::ops::Range<usize> {
        self.layout.first[e]..self.layout.first[e + 1]
    }

    /// Fills `buf` with the sites of element `e`, in increasing `t`.
    pub fn element_sites(&self, e: usize, buf: &mut Vec<Site>) {
        buf.clear();
        let range = self.element_range(e);
        if range.is_empty() {
            return;
        }
        let el = &self.mesh.boundary()[e];
        let start = self.mesh.boundary_offsets()[e];
        let (_, speed) = self.mesh.boundary_point_unchecked(e, 0.5);
        let inv_len = 1.0 / el.length;
        let nudged = &self.layout.nudged;
        let mut next_nudged = nudged.partition_point(|&i| i < range.start);
        for index in range {
            let mut s = self.layout.base_arclength(index);
            if next_nudged < nudged.len() && nudged[next_nudged] == index {
                s += VERTEX_NUDGE * self.layout.spacing;
                next_nudged += 1;
            }
            let t = ((s - start) * inv_len).clamp(0.0, 1.0);
            buf.push(Site { index, element: e, t, omega: 0.0, alpha: 0.0 });
        }
        let m = buf.len();
        let dt = |j: usize, buf: &[Site]| -> f64 {
            let hi = if j == m { 1.0 } else { buf[j].t };
            let lo = if j == 0 { 0.0 } else { buf[j - 1].t };
            hi - lo
        };
        if m == 1 {
            buf[0].omega = 1.0;
        } else {
            // same rule as `quadrature_weights`, without the temporary arrays
            for j in 0..m {
                let w = if j == 0 {
                    dt(0, buf) + 0.5 * dt(1, buf)
                } else if j == m - 1 {
                    0.5 * dt(j, buf) + dt(m, buf)
                } else {
                    0.5 * (dt(j, buf) + dt(j + 1, buf))
                };
                buf[j].omega = w;
            }
        }
        for s in buf.iter_mut() {
            s.alpha = s.omega * speed;
        }
    }

    pub fn position(&self, site: &Site) -> Point2<f64> {
        self.mesh.boundary_point_unchecked(site.element, site.t).0
    }

    /// Noise-free value `g_0(x_i)`.
    pub fn clean_value(&self, site: &Site) -> f64 {
        (self.data)(self.position(site))
    }

    pub fn noise_value(&self, site: &Site) -> f64 {
        self.noise.sample(self.seed, site.index as u64)
    }

    /// Observed value `g_i = g_0(x_i) + e_i`.
    pub fn observed_value(&self, site: &Site) -> f64 {
        self.clean_value(site) + self.noise_value(site)
    }

    /// Calls `f` for each site in loop order.
    pub fn for_each_site(&self, mut f: impl FnMut(&Site)) {
        let mut buf = Vec::new();
        for e in 0..self.mesh.boundary().len() {
            self.element_sites(e, &mut buf);
            buf.iter().for_each(&mut f);
        }
    }

    /// Materialises every observation. Intended for moderate `n`.
    pub fn observations(&self) -> Vec<Observation> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_site(|s| {
            out.push(Observation {
                site: *s,
                position: self.position(s),
                clean: self.clean_value(s),
                noise: self.noise_value(s),
            })
        });
        out
    }

    /// `(Σ α_j, min_j α_j, max_j α_j)`, with the sum compensated.
    pub fn weight_stats(&self) -> (f64, f64, f64) {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        self.for_each_site(|s| {
            let a = s.alpha;
            let t = sum + a;
            comp += if sum.abs() >= a.abs() { (sum - t) + a } else { (a - t) + sum };
            sum = t;
            lo = lo.min(a);
            hi = hi.max(a);
        });
        (sum + comp, lo, hi)
    }

    /// Observed `(B₃, B₄)` with `B₃/n ≤ α_j ≤ B₄/n`.
    pub fn weight_bounds(&self) -> (f64, f64) {
        let (_, lo, hi) = self.weight_stats();
        let n = self.len() as f64;
        (lo * n, hi * n)
    }

    /// Uniformity of the site distribution, computed without storing arclengths.
    pub fn uniformity(&self) -> Result<UniformityReport> {
        let n = self.len();
        if n < 2 {
            return invalid_arg("uniformity needs at least two sites");
        }
        let total = self.mesh.boundary_length();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut prev = self.layout.arclength(0);
        for i in 1..n {
            let s = self.layout.arclength(i);
            lo = lo.min(s - prev);
            hi = hi.max(s - prev);
            prev = s;
        }
        let wrap = total - prev + self.layout.arclength(0);
        lo = lo.min(wrap);
        hi = hi.max(wrap);
        Ok(UniformityReport { s_max: hi / 2.0, s_min: lo, ratio: hi / 2.0 / lo })
    }

    /// CSV dump `elem,t,x,y,g0,e,g,omega,alpha`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "elem,t,x,y,g0,e,g,omega,alpha")?;
        let mut buf = Vec::new();
        for e in 0..self.mesh.boundary().len() {
            self.element_sites(e, &mut buf);
            for s in &buf {
                let p = self.position(s);
                let (g0, err) = (self.clean_value(s), self.noise_value(s));
                writeln!(
                    w,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    e,
                    s.t,
                    p.x,
                    p.y,
                    g0,
                    err,
                    g0 + err,
                    s.omega,
                    s.alpha
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn zero(_: Point2<f64>) -> f64 {
        0.0
    }

    #[test]
    fn midpoint_placement_on_square() {
        let mesh = TriMesh::unit_square(3).unwrap();
        let sites = place_measurements(&mesh, 4).unwrap();
        let s: Vec<f64> = sites.iter().map(|p| p.arclength).collect();
        for (got, want) in s.iter().zip([0.5, 1.5, 2.5, 3.5]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        let sides: Vec<_> = sites.iter().map(|p| p.element / 3).collect();
        assert_eq!(sides, vec![0, 1, 2, 3]);
    }

    #[test]
    fn equispaced_disk_is_uniform() {
        let mesh = TriMesh::unit_disk(3).unwrap();
        let obs = ObservationSet::build(&mesh, 8, &zero, NoiseModel::None, 0).unwrap();
        let u = obs.uniformity().unwrap();
        assert!((u.s_min - TAU / 8.0).abs() < 1e-12);
        assert!((u.ratio - 0.5).abs() < 1e-12);
        let sites = place_measurements(&mesh, 8).unwrap();
        for w in sites.windows(2) {
            assert!((w[1].arclength - w[0].arclength - TAU / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_k10_n1000_has_25_per_element() {
        let mesh = TriMesh::unit_square(10).unwrap();
        let sites = place_measurements(&mesh, 1000).unwrap();
        // brute-force binning by arclength
        let mut counts = vec![0usize; 40];
        for s in &sites {
            counts[(s.arclength / 0.1).floor() as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c == 25), "{counts:?}");
        let obs = ObservationSet::build(&mesh, 1000, &zero, NoiseModel::None, 0).unwrap();
        assert!((0..40).all(|e| obs.element_range(e).len() == 25));
    }

    #[test]
    fn sites_on_vertices_are_nudged() {
        // n = k on the square puts every site on a vertex
        let mesh = TriMesh::unit_square(10).unwrap();
        let obs = ObservationSet::build(&mesh, 10, &zero, NoiseModel::None, 0).unwrap();
        assert_eq!(obs.nudged_count(), 10);
        let mut buf = Vec::new();
        for e in 0..mesh.boundary().len() {
            obs.element_sites(e, &mut buf);
            for s in &buf {
                assert!(s.t > 0.0 && s.t < 1e-6, "t = {}", s.t);
            }
        }
        assert_eq!(obs.observations().len(), 10);
    }

    #[test]
    fn uniformity_small_cases() {
        let r = uniformity_report(&[0.0, PI], TAU).unwrap();
        assert_eq!((r.s_min, r.s_max), (PI, PI / 2.0));
        let even: Vec<f64> = (0..100).map(|i| i as f64 * TAU / 100.0).collect();
        let r = uniformity_report(&even, TAU).unwrap();
        assert!((r.s_min - TAU / 100.0).abs() < 1e-12);
        assert!((r.s_max - PI / 100.0).abs() < 1e-12);
        assert!((r.ratio - 0.5).abs() < 1e-9);
        assert!(uniformity_report(&[1.0], TAU).is_err());
    }

    #[test]
    fn uniformity_matches_brute_force() {
        let total = TAU;
        let s = [0.4, 1.9, 5.0];
        // distance along the loop between two arclengths
        let dist = |a: f64, b: f64| {
            let d = (a - b).abs();
            d.min(total - d)
        };
        let s_min = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| dist(s[i], s[j]))
            .fold(f64::INFINITY, f64::min);
        let s_max = (0..=100_000)
            .map(|k| total * k as f64 / 100_000.0)
            .map(|x| s.iter().map(|&p| dist(x, p)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        let r = uniformity_report(&s, total).unwrap();
        assert!((r.s_min - s_min).abs() < 1e-12);
        assert!((r.s_max - s_max).abs() < 1e-4);
    }

    #[test]
    fn line_integral_of_x_squared() {
        // ∫ over the four sides: 1/3 (bottom) + 1 (right) + 1/3 (top) + 0 (left)
        let exact = 1.0 / 3.0 + 1.0 + 1.0 / 3.0;
        let mesh = TriMesh::unit_square(10).unwrap();
        let v = |p: Point2<f64>| p.x * p.x;
        let obs = ObservationSet::build(&mesh, 10_000, &v, NoiseModel::None, 0).unwrap();
        let data = obs.observations();
        let a: Vec<f64> = data.iter().map(|o| o.value()).collect();
        let ones = vec![1.0; a.len()];
        let alpha: Vec<f64> = data.iter().map(|o| o.site.alpha).collect();
        let q = empirical_inner_product(&ones, &a, &alpha).unwrap();
        assert!((q - exact).abs() <= 1e-4, "{q} vs {exact}");
        assert!((empirical_inner_product(&ones, &ones, &alpha).unwrap() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn local_rule_error_decays_like_one_over_m() {
        // shifted lattice so the rule is not exact by symmetry
        let w = |t: f64| (TAU * t).sin();
        let mut errs = Vec::new();
        for m in [4usize, 8, 16, 32, 64] {
            let t: Vec<f64> = (0..m).map(|j| (j as f64 + 0.3) / m as f64).collect();
            let omega = quadrature_weights(&t).unwrap();
            let q: f64 = omega.iter().zip(&t).map(|(o, &t)| o * w(t)).sum();
            errs.push((m as f64, q.abs()));
        }
        let c = errs.iter().map(|&(m, e)| e * m).fold(0.0, f64::max);
        assert!(c < 1.0, "C = {c}");
        let (m0, e0) = errs[0];
        let (m1, e1) = errs[errs.len() - 1];
        let slope = (e1 / e0).ln() / (m1 / m0).ln();
        assert!(slope <= -1.0, "slope {slope}");
        assert!(errs.windows(2).all(|p| p[1].1 < p[0].1));
    }

    #[test]
    fn weights_sum_to_boundary_length() {
        for mesh in [TriMesh::unit_square(10).unwrap(), TriMesh::unit_disk(10).unwrap()] {
            for n in [1000usize, 4321, 10_000] {
                let obs = ObservationSet::build(&mesh, n, &zero, NoiseModel::None, 1).unwrap();
                let (sum, lo, hi) = obs.weight_stats();
                assert!((sum - mesh.boundary_length()).abs() < 1e-10, "n={n} sum={sum}");
                assert!(hi / lo <= 3.0, "n={n} ratio={}", hi / lo);
            }
        }
    }

    #[test]
    fn square_k10_n1000_weights_are_flat() {
        let mesh = TriMesh::unit_square(10).unwrap();
        let obs = ObservationSet::build(&mesh, 1000, &zero, NoiseModel::None, 1).unwrap();
        obs.for_each_site(|s| assert!((s.alpha - 0.004).abs() < 1e-12, "{s:?}"));
    }

    #[test]
    fn constant_data_without_noise() {
        let mesh = TriMesh::unit_disk(4).unwrap();
        let c = |_: Point2<f64>| 3.5;
        let obs = ObservationSet::build(&mesh, 57, &c, NoiseModel::None, 1).unwrap();
        assert!(obs.observations().iter().all(|o| o.value() == 3.5));
    }

    #[test]
    fn jittered_sites_stay_sorted() {
        let mesh = TriMesh::unit_disk(5).unwrap();
        let sites = place_measurements_with(&mesh, 300, Placement::Jittered { seed: 4 }).unwrap();
        assert_eq!(sites.len(), 300);
        assert!(sites.windows(2).all(|w| w[1].arclength > w[0].arclength));
        let obs =
            ObservationSet::with_placement(&mesh, 300, Placement::Jittered { seed: 4 }, &zero, NoiseModel::None, 0)
                .unwrap();
        assert!((obs.weight_stats().0 - TAU).abs() < 1e-10);
        assert!(obs.uniformity().unwrap().ratio < 2.0);
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let mesh = TriMesh::unit_square(2).unwrap();
        let obs = ObservationSet::build(&mesh, 6, &zero, NoiseModel::Gaussian { sigma: 1.0 }, 3).unwrap();
        let mut out = Vec::new();
        obs.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("elem,t,x,y,g0,e,g,omega,alpha"));
        assert_eq!(text.lines().count(), 7);
    }
}
