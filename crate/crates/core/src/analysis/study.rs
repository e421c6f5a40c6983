use std::fmt;
use std::str::FromStr;

use super::{compute_errors, estimate_rates, mean_std, ErrorReport, ManufacturedCase, RateEstimate};
use crate::error::{invalid_arg, Error, Result};
use crate::fem::{assemble_data, DataPart, FieldSpace, MultiplierSpace, SaddleSystem};
use crate::mesh::TriMesh;
use crate::observations::{NoiseModel, ObservationSet, Placement, SiteLayout};
use crate::solver::{solve_minres, SaddleFactorization, SaddleSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Square,
    Disk,
}

impl Domain {
    /// Subdivision count for nominal mesh parameter `h`: grid cells per side
    /// on the square, rings on the disk.
    pub fn subdivisions(h: f64) -> Result<usize> {
        if !(h > 0.0 && h <= 0.5) {
            return invalid_arg(format!("mesh parameter h = {h} must lie in (0, 0.5]"));
        }
        Ok((1.0 / h).round() as usize)
    }

    /// Mesh with nominal parameter `h`.
    pub fn mesh(self, h: f64) -> Result<TriMesh> {
        let k = Self::subdivisions(h)?;
        match self {
            Domain::Square => TriMesh::unit_square(k),
            Domain::Disk => TriMesh::unit_disk(k),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Square => "square",
            Domain::Disk => "disk",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Domain::Square),
            "disk" | "circle" => Ok(Domain::Disk),
            other => invalid_arg(format!("unknown domain `{other}` (expected square or disk)")),
        }
    }
}

/// How many sites to use at a given mesh level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteCount {
    /// `n = h⁻ⁱ` with the nominal `h = 1/k`, i.e. `n = kⁱ`.
    Exponent(u32),
    Fixed(usize),
}

impl SiteCount {
    pub fn for_h(self, h: f64) -> Result<usize> {
        match self {
            SiteCount::Exponent(i) => {
                let k = Domain::subdivisions(h)? as f64;
                Ok(k.powi(i as i32).round() as usize)
            }
            SiteCount::Fixed(n) => Ok(n),
        }
    }

    pub fn exponent(self) -> Option<u32> {
        match self {
            SiteCount::Exponent(i) => Some(i),
            SiteCount::Fixed(_) => None,
        }
    }
}

fn with_context(h: f64, n: usize, err: Error) -> Error {
    match err {
        Error::SingularSystem { pivot, detail } => {
            Error::SingularSystem { pivot, detail: format!("h = {h}, n = {n}: {detail}") }
        }
        Error::Stagnation(detail) => Error::Stagnation(format!("h = {h}, n = {n}: {detail}")),
        other => other,
    }
}

/// Mesh, matrices and noise-free data for one `(h, n)` pair, factorized once
/// and reused for every noise realisation.
pub struct PreparedCase {
    h: f64,
    n: usize,
    layout: SiteLayout,
    mesh: TriMesh,
    case: ManufacturedCase,
    system: SaddleSystem,
    factorization: Option<SaddleFactorization>,
}

impl fmt::Debug for PreparedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreparedCase").field("h", &self.h).field("n", &self.n).field("case", &self.case).finish()
    }
}

impl PreparedCase {
    pub fn new(domain: Domain, h: f64, n: usize, case: ManufacturedCase) -> Result<Self> {
        let k = Domain::subdivisions(h)?;
        Self::from_mesh(domain.mesh(h)?, 1.0 / k as f64, n, case, Placement::Equispaced)
    }

    /// `h` is only a label for reports.
    pub fn from_mesh(mesh: TriMesh, h: f64, n: usize, case: ManufacturedCase, placement: Placement) -> Result<Self> {
        let layout = SiteLayout::new(&mesh, n, placement)?;
        let (system, factorization) = {
            let v = FieldSpace::new(&mesh);
            let q = MultiplierSpace::new(&mesh);
            let obs = ObservationSet::from_layout(&mesh, layout.clone(), &*case.u, NoiseModel::None, 0)?;
            let system = SaddleSystem::assemble(&v, &q, &*case.f, &obs)?;
            let factorization = match SaddleFactorization::new(&system) {
                Ok(f) => Some(f),
                Err(e) => {
                    log::warn!("h = {h}, n = {n}: direct factorization failed ({e}); using MINRES");
                    None
                }
            };
            (system, factorization)
        };
        Ok(Self { h, n, layout, mesh, case, system, factorization })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn case(&self) -> &ManufacturedCase {
        &self.case
    }

    /// System with noise-free data.
    pub fn system(&self) -> &SaddleSystem {
        &self.system
    }

    pub fn observations(&self, noise: NoiseModel, seed: u64) -> Result<ObservationSet<'_>> {
        ObservationSet::from_layout(&self.mesh, self.layout.clone(), &*self.case.u, noise, seed)
    }

    /// Data vector `G` for one realisation.
    pub fn data_vector(&self, noise: NoiseModel, seed: u64) -> Result<Vec<f64>> {
        let mut g = self.system.g.clone();
        if !noise.is_none() {
            let obs = self.observations(noise, seed)?;
            let e = assemble_data(&MultiplierSpace::new(&self.mesh), &obs, DataPart::Noise)?;
            g.iter_mut().zip(e).for_each(|(g, e)| *g += e);
        }
        Ok(g)
    }

    pub fn solve_trial(&self, noise: NoiseModel, seed: u64) -> Result<SaddleSolution> {
        let g = self.data_vector(noise, seed)?;
        let result = match &self.factorization {
            Some(f) => f.solve(&self.system.f, &g),
            None => solve_minres(&self.system.with_rhs(self.system.f.clone(), g)?),
        };
        result.map_err(|e| with_context(self.h, self.n, e))
    }

    pub fn run_trial(&self, noise: NoiseModel, seed: u64) -> Result<(ErrorReport, SaddleSolution)> {
        let sol = self.solve_trial(noise, seed)?;
        let mut report = compute_errors(&self.mesh, &sol, &self.case)?;
        report.h = self.h;
        report.n = self.n;
        report.seed = seed;
        Ok((report, sol))
    }

    /// Runs seeds `seed0 .. seed0 + trials` and returns the reports in seed
    /// order, together with the largest solver residual seen.
    pub fn run_trials(&self, noise: NoiseModel, trials: usize, seed0: u64) -> Result<(Vec<ErrorReport>, f64)> {
        let run = |t: usize| {
            self.run_trial(noise, seed0.wrapping_add(t as u64))
                .map(|(r, s)| (r, s.residual_primal.max(s.residual_constraint)))
        };
        #[cfg(feature = "parallel")]
        let results: Vec<Result<(ErrorReport, f64)>> = {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let results: Vec<Result<(ErrorReport, f64)>> = (0..trials).map(run).collect();
        let mut reports = Vec::with_capacity(trials);
        let mut worst: f64 = 0.0;
        for r in results {
            let (rep, res) = r?;
            reports.push(rep);
            worst = worst.max(res);
        }
        Ok((reports, worst))
    }
}

/// One run: mesh, `n = h⁻ⁱ` sites, assembly, solve and errors.
pub fn run_case(domain: Domain, h: f64, i: u32, noise: NoiseModel, seed: u64) -> Result<ErrorReport> {
    let n = SiteCount::Exponent(i).for_h(h)?;
    let prepared = PreparedCase::new(domain, h, n, ManufacturedCase::sine())?;
    Ok(prepared.run_trial(noise, seed)?.0)
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub domain: Domain,
    /// Nominal mesh parameters, strictly decreasing.
    pub hs: Vec<f64>,
    pub sites: SiteCount,
    pub noise: NoiseModel,
    pub trials: usize,
    pub seed: u64,
    pub case: ManufacturedCase,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.hs.is_empty() {
            return invalid_arg("need at least one mesh parameter");
        }
        for &h in &self.hs {
            Domain::subdivisions(h)?;
        }
        if self.hs.windows(2).any(|w| !(w[1] < w[0])) {
            return invalid_arg("mesh parameters must be strictly decreasing");
        }
        if self.trials == 0 {
            return invalid_arg("need at least one trial");
        }
        Ok(())
    }
}

/// Trial statistics at one `(h, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub n: usize,
    pub i: Option<u32>,
    /// Standard deviation of a single measurement error.
    pub sigma: f64,
    pub trials: usize,
    pub l2_mean: f64,
    pub l2_std: f64,
    pub h1_mean: f64,
    pub h1_std: f64,
    pub lam_l2_mean: f64,
    pub lam_minus_half_mean: f64,
    /// Largest relative solver residual over the trials.
    pub max_residual: f64,
    pub reports: Vec<ErrorReport>,
}

impl ConvergenceRow {
    fn from_reports(h: f64, i: Option<u32>, sigma: f64, reports: Vec<ErrorReport>, max_residual: f64) -> Self {
        let pick = |f: fn(&ErrorReport) -> f64| mean_std(&reports.iter().map(f).collect::<Vec<_>>());
        let (l2_mean, l2_std) = pick(|r| r.l2);
        let (h1_mean, h1_std) = pick(|r| r.h1);
        let (lam_l2_mean, _) = pick(|r| r.multiplier_l2);
        let (lam_minus_half_mean, _) = pick(|r| r.multiplier_minus_half);
        Self {
            h,
            n: reports[0].n,
            i,
            sigma,
            trials: reports.len(),
            l2_mean,
            l2_std,
            h1_mean,
            h1_std,
            lam_l2_mean,
            lam_minus_half_mean,
            max_residual,
            reports,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub domain: Domain,
    pub rows: Vec<ConvergenceRow>,
}

/// Fitted rates of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRates {
    /// `H¹` rate, `α`.
    pub h1: RateEstimate,
    /// `L²` rate, `β`.
    pub l2: RateEstimate,
}

impl ConvergenceTable {
    pub fn rates(&self) -> Result<TableRates> {
        let h: Vec<f64> = self.rows.iter().map(|r| r.h).collect();
        let pick = |f: fn(&ConvergenceRow) -> f64| self.rows.iter().map(f).collect::<Vec<_>>();
        Ok(TableRates { h1: estimate_rates(&h, &pick(|r| r.h1_mean))?, l2: estimate_rates(&h, &pick(|r| r.l2_mean))? })
    }
}

/// Runs every `(h, trial)` pair of the study.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.hs.len());
    for &h in &cfg.hs {
        let n = cfg.sites.for_h(h)?;
        let prepared = PreparedCase::new(cfg.domain, h, n, cfg.case.clone())?;
        // without noise every trial is the same solve
        let trials = if cfg.noise.is_none() { 1 } else { cfg.trials };
        let (mut reports, worst) = prepared.run_trials(cfg.noise, trials, cfg.seed)?;
        while reports.len() < cfg.trials {
            let mut r = reports[0];
            r.seed = cfg.seed.wrapping_add(reports.len() as u64);
            reports.push(r);
        }
        log::info!("{} h = {h} n = {n}: mean L2 error {:e}", cfg.domain, reports.iter().map(|r| r.l2).sum::<f64>() / reports.len() as f64);
        rows.push(ConvergenceRow::from_reports(prepared.h(), cfg.sites.exponent(), cfg.noise.std_dev(), reports, worst));
    }
    Ok(ConvergenceTable { domain: cfg.domain, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_counts() {
        assert_eq!(SiteCount::Exponent(4).for_h(0.0125).unwrap(), 40_960_000);
        assert_eq!(SiteCount::Exponent(2).for_h(0.1).unwrap(), 100);
        assert_eq!(SiteCount::Fixed(7).for_h(0.1).unwrap(), 7);
        assert!(SiteCount::Exponent(1).for_h(0.0).is_err());
    }

    #[test]
    fn domain_parsing() {
        assert_eq!("square".parse::<Domain>().unwrap(), Domain::Square);
        assert_eq!("disk".parse::<Domain>().unwrap(), Domain::Disk);
        assert!("cube".parse::<Domain>().is_err());
    }

    #[test]
    fn constant_case_is_exact() {
        let p = PreparedCase::new(Domain::Disk, 0.25, 64, ManufacturedCase::constant(-0.7)).unwrap();
        let (r, sol) = p.run_trial(NoiseModel::None, 0).unwrap();
        assert!(r.l2 < 1e-9 && r.h1 < 1e-9 && r.multiplier_l2 < 1e-9);
        assert!(sol.u.iter().all(|u| (u + 0.7).abs() < 1e-9));
    }

    #[test]
    fn trials_are_deterministic_and_noise_matters() {
        let p = PreparedCase::new(Domain::Square, 0.25, 64, ManufacturedCase::sine()).unwrap();
        let noise = NoiseModel::Gaussian { sigma: 2.0 };
        let (a, _) = p.run_trials(noise, 3, 11).unwrap();
        let (b, _) = p.run_trials(noise, 3, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].l2, a[1].l2);
        let (clean, _) = p.run_trial(NoiseModel::None, 11).unwrap();
        assert_ne!(clean.l2, a[0].l2);
    }

    #[test]
    fn rejects_increasing_h() {
        let cfg = StudyConfig {
            domain: Domain::Square,
            hs: vec![0.05, 0.1],
            sites: SiteCount::Exponent(2),
            noise: NoiseModel::None,
            trials: 1,
            seed: 0,
            case: ManufacturedCase::sine(),
        };
        assert!(matches!(run_convergence(&cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn noise_free_study_converges() {
        let cfg = StudyConfig {
            domain: Domain::Square,
            hs: vec![0.25, 0.125, 0.0625],
            sites: SiteCount::Exponent(3),
            noise: NoiseModel::None,
            trials: 2,
            seed: 0,
            case: ManufacturedCase::sine(),
        };
        let table = run_convergence(&cfg).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.rows.iter().all(|r| r.trials == 2 && r.l2_std == 0.0));
        let rates = table.rates().unwrap();
        assert!(rates.l2.endpoint.value().unwrap() < -1.5, "{rates:?}");
    }
}
