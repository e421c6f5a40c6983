//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no generated TypeScript types. The same functions run natively,
//! which is how they are tested.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use obsfem::analysis::{
    run_convergence, tail_study, Domain, ManufacturedCase, PreparedCase, SiteCount, StudyConfig,
};
use obsfem::observations::NoiseModel;

/// Cap on sites returned for drawing; the solve always uses all of them.
const MAX_DRAWN_SITES: usize = 2000;

fn domain(name: &str) -> Result<Domain, String> {
    name.parse().map_err(|e: obsfem::Error| e.to_string())
}

fn noise(sigma: f64) -> NoiseModel {
    if sigma > 0.0 {
        NoiseModel::Gaussian { sigma }
    } else {
        NoiseModel::None
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct FieldView {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    u: Vec<f64>,
    exact: Vec<f64>,
    /// Drawn subset of `(x, y, observed value)`.
    sites: Vec<[f64; 3]>,
    n: usize,
    l2: f64,
    h1: f64,
    residual: f64,
}

/// Solves the manufactured problem once and returns the mesh, the discrete
/// and exact fields, a sample of the observations and the errors.
#[wasm_bindgen]
pub fn solve_field(domain_name: &str, k: u32, n: u32, sigma: f64, seed: u32) -> Result<String, String> {
    if !(2..=64).contains(&k) {
        return Err(format!("k = {k} must lie in 2..=64"));
    }
    let case = ManufacturedCase::sine();
    let prepared = PreparedCase::new(domain(domain_name)?, 1.0 / k as f64, n as usize, case.clone())
        .map_err(|e| e.to_string())?;
    let model = noise(sigma);
    let (report, sol) = prepared.run_trial(model, seed as u64).map_err(|e| e.to_string())?;
    let mesh = prepared.mesh();
    let obs = prepared.observations(model, seed as u64).map_err(|e| e.to_string())?;
    let stride = (obs.len() / MAX_DRAWN_SITES).max(1);
    let mut sites = Vec::new();
    obs.for_each_site(|s| {
        if s.index % stride == 0 {
            let p = obs.position(s);
            sites.push([p.x, p.y, obs.observed_value(s)]);
        }
    });
    json(&FieldView {
        vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
        triangles: mesh.triangles().to_vec(),
        exact: mesh.vertices().iter().map(|&p| (case.u)(p)).collect(),
        u: sol.u,
        sites,
        n: obs.len(),
        l2: report.l2,
        h1: report.h1,
        residual: sol.residual_primal.max(sol.residual_constraint),
    })
}

#[derive(Serialize)]
struct CurvePoint {
    h: f64,
    n: usize,
    l2: f64,
    h1: f64,
}

#[derive(Serialize)]
struct Curve {
    points: Vec<CurvePoint>,
    rate_l2: Option<f64>,
    rate_h1: Option<f64>,
}

/// Mean errors for `h = 1/k` over `ks` (comma-separated) with `n = kⁱ`
/// sites, plus the endpoint rates.
#[wasm_bindgen]
pub fn convergence_curve(
    domain_name: &str,
    ks: &str,
    i: u32,
    sigma: f64,
    trials: u32,
    seed: u32,
) -> Result<String, String> {
    let ks: Vec<usize> = ks
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|e| format!("bad subdivision count `{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    if ks.iter().any(|&k| !(2..=64).contains(&k)) {
        return Err("subdivision counts must lie in 2..=64".into());
    }
    let cfg = StudyConfig {
        domain: domain(domain_name)?,
        hs: ks.iter().map(|&k| 1.0 / k as f64).collect(),
        sites: SiteCount::Exponent(i),
        noise: noise(sigma),
        trials: trials.max(1) as usize,
        seed: seed as u64,
        case: ManufacturedCase::sine(),
    };
    let table = run_convergence(&cfg).map_err(|e| e.to_string())?;
    let rates = if table.rows.len() >= 2 { Some(table.rates().map_err(|e| e.to_string())?) } else { None };
    json(&Curve {
        points: table.rows.iter().map(|r| CurvePoint { h: r.h, n: r.n, l2: r.l2_mean, h1: r.h1_mean }).collect(),
        rate_l2: rates.as_ref().and_then(|r| r.l2.endpoint.value()),
        rate_h1: rates.as_ref().and_then(|r| r.h1.endpoint.value()),
    })
}

#[derive(Serialize)]
struct Tail {
    z: Vec<f64>,
    log_survival: Vec<f64>,
    fit: Option<[f64; 3]>,
    median: f64,
    p99: f64,
    samples: Vec<f64>,
}

/// Survival function of the `L²` error over `trials ≥ 100` realisations at
/// `h = 1/k` with `n = kⁱ` sites on the square.
#[wasm_bindgen]
pub fn error_tail(k: u32, i: u32, sigma: f64, trials: u32, seed: u32) -> Result<String, String> {
    if !(2..=32).contains(&k) {
        return Err(format!("k = {k} must lie in 2..=32"));
    }
    let report = tail_study(Domain::Square, 1.0 / k as f64, SiteCount::Exponent(i), noise(sigma), trials as usize, seed as u64)
        .map_err(|e| e.to_string())?;
    json(&Tail {
        z: report.points.iter().map(|p| p.z).collect(),
        log_survival: report.points.iter().map(|p| p.log_survival).collect(),
        fit: report.fit.map(|f| [f.a, f.b, f.r2]),
        median: report.median,
        p99: report.p99,
        samples: report.samples,
    })
}
