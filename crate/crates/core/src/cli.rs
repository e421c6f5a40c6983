//! The `obsfem` command-line driver.
//!
//! Three subcommands:
//!
//! * `convergence`: error means and endpoint rates over a sequence of mesh
//!   parameters, one CSV row per level;
//! * `tail`: empirical survival function of the `L²` error at one level;
//! * `mesh`: generate or re-read a mesh, write it in the text format and
//!   print its quality statistics.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a solve fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    run_convergence, tail_study, ConvergenceTable, Domain, ManufacturedCase, PreparedCase, Rate, SiteCount,
    StudyConfig, TailReport,
};
use crate::error::{invalid_arg, Error, Result};
use crate::mesh::{read_mesh, write_mesh, TriMesh};
use crate::observations::NoiseModel;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "OBSFEM_THREADS";

const CONVERGENCE_HEADER: &str =
    "domain,h,n,i,sigma,seed_count,l2_mean,l2_std,h1_mean,h1_std,lam_l2_mean,rate_l2_endpoint,rate_h1_endpoint";
const TAIL_HEADER: &str = "z,survival,log_survival,fit_a,fit_b,r2";

#[derive(Debug, Parser)]
#[command(name = "obsfem", version, about = "Poisson solver with noisy boundary observations")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Error statistics and endpoint rates over a sequence of meshes.
    Convergence(ConvergenceArgs),
    /// Survival function of the L2 error over many noise realisations.
    Tail(TailArgs),
    /// Write a mesh in the text format and report its quality.
    Mesh(MeshArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseKind {
    None,
    Gaussian,
    Mixture,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long, value_enum, default_value_t = NoiseKind::Gaussian)]
    noise: NoiseKind,
    /// Standard deviation of Gaussian noise.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Mixture: standard deviation of the first component.
    #[arg(long, default_value_t = 1.0)]
    sigma1: f64,
    /// Mixture: standard deviation of the second component.
    #[arg(long, default_value_t = 10.0)]
    sigma2: f64,
    /// Mixture: probability of the first component.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

impl NoiseArgs {
    fn model(&self) -> Result<NoiseModel> {
        let model = match self.noise {
            NoiseKind::None => NoiseModel::None,
            NoiseKind::Gaussian => NoiseModel::Gaussian { sigma: self.sigma },
            NoiseKind::Mixture => NoiseModel::GaussianMixture { sigma1: self.sigma1, sigma2: self.sigma2, p: self.p },
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SitesArgs {
    /// Use n = h^-i sites at each level.
    #[arg(long = "i")]
    exponent: Option<u32>,
    /// Use a fixed number of sites at every level.
    #[arg(long = "n")]
    count: Option<usize>,
}

impl SitesArgs {
    fn site_count(&self) -> SiteCount {
        match (self.exponent, self.count) {
            (Some(i), _) => SiteCount::Exponent(i),
            (None, Some(n)) => SiteCount::Fixed(n),
            (None, None) => unreachable!("clap enforces the group"),
        }
    }
}

#[derive(Debug, Args)]
struct ConvergenceArgs {
    #[arg(long, default_value = "square")]
    domain: Domain,
    /// Comma-separated nominal mesh parameters, strictly decreasing.
    #[arg(long, value_delimiter = ',', required_unless_present = "k", conflicts_with = "k")]
    h: Vec<f64>,
    /// Comma-separated subdivision counts, as an alternative to --h.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[command(flatten)]
    sites: SitesArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-level observation CSVs of the first seed.
    #[arg(long)]
    dump_observations: Option<PathBuf>,
    /// Directory for per-level Matrix Market files of A and B.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TailArgs {
    #[arg(long, default_value = "square")]
    domain: Domain,
    /// Nominal mesh parameter.
    #[arg(long, required_unless_present = "k", conflicts_with = "k")]
    h: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    sites: SitesArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MeshArgs {
    /// Domain used with --h; implied by --k (square) and --m (disk).
    #[arg(long, conflicts_with_all = ["k", "m", "input"])]
    domain: Option<Domain>,
    /// Square subdivisions per side.
    #[arg(long, conflicts_with_all = ["m", "h", "input"])]
    k: Option<usize>,
    /// Disk rings.
    #[arg(long, conflicts_with_all = ["h", "input"])]
    m: Option<usize>,
    #[arg(long, conflicts_with = "input")]
    h: Option<f64>,
    /// Read a mesh file instead of generating one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output mesh path (stdout when omitted, with the report on stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Convergence(a) => cmd_convergence(a),
        Command::Tail(a) => cmd_tail(a),
        Command::Mesh(a) => cmd_mesh(a),
    });
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::SingularSystem { .. } | Error::Stagnation(_) => 3,
        _ => 2,
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

fn configure_threads() -> Result<()> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let threads = match raw.to_str().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => return invalid_arg(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")),
    };
    #[cfg(feature = "parallel")]
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        log::debug!("thread pool already configured: {e}");
    }
    #[cfg(not(feature = "parallel"))]
    log::debug!("{THREADS_ENV}={threads} ignored in a sequential build");
    Ok(())
}

/// 17 significant digits, so values survive a text round trip.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn rate(r: &Rate) -> String {
    r.value().map_or_else(|| "nan".to_owned(), num)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn levels(h: &[f64], k: &[usize]) -> Result<Vec<f64>> {
    if !k.is_empty() {
        if k.contains(&0) {
            return invalid_arg("subdivision counts must be positive");
        }
        return Ok(k.iter().map(|&k| 1.0 / k as f64).collect());
    }
    Ok(h.to_vec())
}

/// Renders a convergence table in the CLI's CSV schema.
pub fn convergence_csv(table: &ConvergenceTable) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "{CONVERGENCE_HEADER}").unwrap();
    let rates = if table.rows.len() >= 2 { Some(table.rates()?) } else { None };
    let last = table.rows.len().saturating_sub(1);
    for (idx, row) in table.rows.iter().enumerate() {
        let i = row.i.map(|i| i.to_string()).unwrap_or_default();
        let (rl2, rh1) = match (&rates, idx == last) {
            (Some(r), true) => (rate(&r.l2.endpoint), rate(&r.h1.endpoint)),
            _ => (String::new(), String::new()),
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            table.domain,
            num(row.h),
            row.n,
            i,
            num(row.sigma),
            row.trials,
            num(row.l2_mean),
            num(row.l2_std),
            num(row.h1_mean),
            num(row.h1_std),
            num(row.lam_l2_mean),
            rl2,
            rh1
        )
        .unwrap();
    }
    Ok(s)
}

/// Renders a tail report: survival rows followed by a `#` summary line.
pub fn tail_csv(report: &TailReport, domain: Domain, h: f64, n: usize) -> String {
    let mut s = String::new();
    writeln!(s, "{TAIL_HEADER}").unwrap();
    let fit = report.fit.map(|f| [num(f.a), num(f.b), num(f.r2)]).unwrap_or_default();
    for p in &report.points {
        writeln!(s, "{},{},{},{}", num(p.z), num(p.survival), num(p.log_survival), fit.join(",")).unwrap();
    }
    writeln!(
        s,
        "# domain={domain} h={} n={n} trials={} median={} p99={} p99_over_median={} degenerate={}",
        num(h),
        report.samples.len(),
        num(report.median),
        num(report.p99),
        num(report.p99_over_median()),
        report.deterministic
    )
    .unwrap();
    s
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<()> {
    let cfg = StudyConfig {
        domain: a.domain,
        hs: levels(&a.h, &a.k)?,
        sites: a.sites.site_count(),
        noise: a.noise.model()?,
        trials: a.trials,
        seed: a.seed,
        case: ManufacturedCase::sine(),
    };
    cfg.validate()?;
    if a.dump_observations.is_some() || a.dump_matrices.is_some() {
        dump_levels(&cfg, a.dump_observations.as_deref(), a.dump_matrices.as_deref())?;
    }
    let table = run_convergence(&cfg)?;
    emit(a.out.as_deref(), &convergence_csv(&table)?)
}

fn dump_levels(cfg: &StudyConfig, observations: Option<&Path>, matrices: Option<&Path>) -> Result<()> {
    for dir in [observations, matrices].into_iter().flatten() {
        fs::create_dir_all(dir)?;
    }
    for &h in &cfg.hs {
        let k = Domain::subdivisions(h)?;
        let n = cfg.sites.for_h(h)?;
        let prepared = PreparedCase::new(cfg.domain, h, n, cfg.case.clone())?;
        let stem = format!("{}_k{k}_n{n}", cfg.domain);
        if let Some(dir) = observations {
            let file = fs::File::create(dir.join(format!("observations_{stem}.csv")))?;
            prepared.observations(cfg.noise, cfg.seed)?.write_csv(io::BufWriter::new(file))?;
        }
        if let Some(dir) = matrices {
            let sys = prepared.system();
            sys.a.write_matrix_market(io::BufWriter::new(fs::File::create(dir.join(format!("A_{stem}.mtx")))?), true)?;
            sys.b.write_matrix_market(io::BufWriter::new(fs::File::create(dir.join(format!("B_{stem}.mtx")))?), false)?;
        }
    }
    Ok(())
}

fn cmd_tail(a: &TailArgs) -> Result<()> {
    let h = match (a.h, a.k) {
        (_, Some(0)) => return invalid_arg("subdivision count must be positive"),
        (_, Some(k)) => 1.0 / k as f64,
        (Some(h), None) => h,
        (None, None) => unreachable!("clap enforces --h or --k"),
    };
    let sites = a.sites.site_count();
    let n = sites.for_h(h)?;
    let nominal = 1.0 / Domain::subdivisions(h)? as f64;
    let report = tail_study(a.domain, h, sites, a.noise.model()?, a.trials, a.seed)?;
    emit(a.out.as_deref(), &tail_csv(&report, a.domain, nominal, n))
}

fn cmd_mesh(a: &MeshArgs) -> Result<()> {
    let mesh = if let Some(path) = &a.input {
        read_mesh(BufReader::new(fs::File::open(path)?))?
    } else {
        match (a.k, a.m, a.h) {
            (Some(k), _, _) => TriMesh::unit_square(k)?,
            (_, Some(m), _) => TriMesh::unit_disk(m)?,
            (_, _, Some(h)) => a.domain.unwrap_or(Domain::Square).mesh(h)?,
            _ => return invalid_arg("mesh needs one of --k, --m, --h or --input"),
        }
    };
    let mut text = Vec::new();
    write_mesh(&mesh, &mut text)?;
    let q = mesh.quality();
    let report = format!(
        "vertices: {}\ntriangles: {}\nboundary_elements: {}\nboundary_length: {}\nmax_diameter: {}\nmin_diameter: {}\n\
         diameter_ratio: {}\nmax_aspect_ratio: {}\n",
        mesh.vertices().len(),
        mesh.triangles().len(),
        q.boundary_elements,
        num(q.boundary_length),
        num(q.max_diameter),
        num(q.min_diameter),
        num(q.diameter_ratio()),
        num(q.max_aspect_ratio)
    );
    match &a.out {
        Some(path) => {
            fs::write(path, &text)?;
            print!("{report}");
        }
        None => {
            io::stdout().lock().write_all(&text)?;
            eprint!("{report}");
        }
    }
    Ok(())
}
