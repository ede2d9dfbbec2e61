//! Subcommand implementations. Each returns its JSON document and, where it
//! has one, a CSV table.

use std::path::PathBuf;

use serde::Serialize;

use simplex_qmc::io;
use simplex_qmc::kernel::{ConstantsReport, KernelConstants};
use simplex_qmc::orthopoly;
use simplex_qmc::search::{self, SearchConfig, SearchOutcome};
use simplex_qmc::tract::{self, CurveRow, Limit, TractabilityVerdict, WeightFamily};
use simplex_qmc::verify::{self, CheckOutcome, VerifyConfig};
use simplex_qmc::wce::{self, ProductPointSet};
use simplex_qmc::{Error, ErrorReport, Kernel, ProductPoint, Result, WeightSchedule};

use crate::config::RunConfig;

/// Schema version of every JSON document the CLI writes.
pub const OUTPUT_SCHEMA: u32 = 1;

pub struct Output {
    pub json: String,
    pub csv: Option<String>,
    /// Exit status for a run that completed but reports a failure.
    pub failed: bool,
}

impl Output {
    fn new<T: Serialize>(doc: &T) -> Result<Self> {
        let mut json = serde_json::to_string_pretty(doc)?;
        json.push('\n');
        Ok(Output { json, csv: None, failed: false })
    }

    fn with_rows<R: Serialize>(mut self, rows: &[R]) -> Result<Self> {
        let mut buf = Vec::new();
        io::write_rows_csv(rows, &mut buf)?;
        self.csv = Some(String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))?);
        Ok(self)
    }
}

fn constants(cfg: &RunConfig, kernel: &Kernel, gamma_star: f64) -> Result<KernelConstants> {
    Ok(KernelConstants::compute(kernel, gamma_star, &cfg.extrema_options()?, cfg.series_tolerance()?)?.constants)
}

#[derive(Serialize)]
struct BasisSummary {
    schema: u32,
    d: usize,
    max_degree: usize,
    functions: usize,
    key: String,
    cache_file: Option<PathBuf>,
}

pub fn basis(cfg: &RunConfig, document: Option<&PathBuf>) -> Result<Output> {
    let d = cfg.d();
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    let max_degree = cfg.max_degree.unwrap_or_else(|| orthopoly::default_max_degree(d));
    let (basis, cache) = cfg.basis(d, max_degree)?;
    if let Some((path, hit)) = &cache {
        log::info!("basis cache {} ({})", path.display(), if *hit { "hit" } else { "written" });
    }
    if let Some(path) = document {
        let mut text = serde_json::to_string_pretty(&basis.to_document())?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Output::new(&BasisSummary {
        schema: OUTPUT_SCHEMA,
        d,
        max_degree,
        functions: basis.len(),
        key: orthopoly::cache_key(d, max_degree),
        cache_file: cache.map(|c| c.0),
    })
}

#[derive(Serialize)]
struct KernelReport {
    schema: u32,
    d: usize,
    r: f64,
    max_degree: usize,
    tail_tolerance: f64,
    m: usize,
    gammas: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    /// `g(x_j, y_j)` per factor.
    g: Vec<f64>,
    /// `1 + γ_j g(x_j, y_j)` per factor.
    k1: Vec<f64>,
    km: f64,
}

fn product_point(name: &str, coords: Option<&Vec<f64>>, d: usize, m: usize) -> Result<ProductPoint> {
    let coords = coords.ok_or_else(|| Error::InvalidArgument(format!("kernel needs --{name}")))?;
    ProductPoint::from_flat(coords, d, m)
}

pub fn kernel(cfg: &RunConfig) -> Result<Output> {
    let kernel = cfg.kernel()?;
    let d = kernel.d();
    let len = cfg.x.as_ref().map_or(0, Vec::len);
    if len == 0 || !len.is_multiple_of(d) {
        return Err(Error::InvalidArgument(format!("--x needs a positive multiple of d = {d} coordinates")));
    }
    let cfg = RunConfig { m: cfg.m.or(Some(len / d)), ..cfg.clone() };
    let schedule = cfg.schedule()?;
    let m = schedule.m();
    let x = product_point("x", cfg.x.as_ref(), d, m)?;
    let y = product_point("y", cfg.y.as_ref(), d, m)?;
    let g = x
        .components()
        .iter()
        .zip(y.components())
        .map(|(a, b)| kernel.g_eval(a, b))
        .collect::<Result<Vec<_>>>()?;
    let k1 = g.iter().zip(schedule.gammas()).map(|(g, gamma)| 1.0 + gamma * g).collect();
    Output::new(&KernelReport {
        schema: OUTPUT_SCHEMA,
        d,
        r: kernel.params().r,
        max_degree: kernel.max_degree(),
        tail_tolerance: kernel.tail_tolerance(),
        m,
        gammas: schedule.gammas().to_vec(),
        x: x.flat(),
        y: y.flat(),
        g,
        k1,
        km: kernel.km_eval(&x, &y, &schedule)?,
    })
}

pub fn constants_report(cfg: &RunConfig) -> Result<Output> {
    let kernel = cfg.kernel()?;
    let gamma_star = cfg.schedule()?.gamma_star();
    let report: ConstantsReport =
        KernelConstants::compute(&kernel, gamma_star, &cfg.extrema_options()?, cfg.series_tolerance()?)?;
    Output::new(&report)
}

pub fn wce(cfg: &RunConfig) -> Result<Output> {
    let path = cfg.points.as_ref().ok_or_else(|| Error::InvalidArgument("wce needs --points".into()))?;
    let set = io::read_point_set(path)?;
    if let Some(d) = cfg.d {
        if d != set.d() {
            return Err(Error::DimensionMismatch { expected: d, actual: set.d() });
        }
    }
    let cfg = RunConfig { d: Some(set.d()), m: cfg.m.or(Some(set.m())), ..cfg.clone() };
    let kernel = cfg.kernel()?;
    let schedule = cfg.schedule()?;
    let consts = constants(&cfg, &kernel, schedule.gamma_star())?;
    let report = ErrorReport::compute(&kernel, &schedule, &set, &consts)?;
    Output::new(&report)?.with_rows(&[report.batch_row(cfg.seed())])
}

#[derive(Serialize)]
struct BoundRow {
    n: usize,
    expected: f64,
    upper: f64,
    lower: f64,
}

#[derive(Serialize)]
struct BoundsReport {
    schema: u32,
    d: usize,
    r: f64,
    m: usize,
    max_degree: usize,
    schedule_digest: String,
    constants: KernelConstants,
    epsilon: f64,
    neps_upper: f64,
    neps_lower: f64,
    rows: Vec<BoundRow>,
}

pub fn bounds(cfg: &RunConfig) -> Result<Output> {
    let kernel = cfg.kernel()?;
    let schedule = cfg.schedule()?;
    let consts = constants(cfg, &kernel, schedule.gamma_star())?;
    let rows = cfg
        .n_values()
        .into_iter()
        .map(|n| {
            Ok(BoundRow {
                n,
                expected: wce::expected_enm_sq(&kernel, n, &schedule)?,
                upper: wce::existence_upper_bound(n, &schedule, consts.c_dr)?,
                lower: wce::lower_bound(n, &schedule, &consts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = cfg.epsilon();
    let report = BoundsReport {
        schema: OUTPUT_SCHEMA,
        d: kernel.d(),
        r: kernel.params().r,
        m: schedule.m(),
        max_degree: kernel.max_degree(),
        schedule_digest: schedule.digest(),
        constants: consts,
        epsilon: eps,
        neps_upper: wce::neps_upper(eps, &schedule, consts.c_dr)?,
        neps_lower: wce::neps_lower(eps, &schedule, &consts)?,
        rows,
    };
    Output::new(&report)?.with_rows(&report.rows)
}

fn search_config(cfg: &RunConfig, kernel: &Kernel, schedule: &WeightSchedule) -> SearchConfig {
    SearchConfig {
        n: cfg.n(),
        m: schedule.m(),
        d: kernel.d(),
        schedule: schedule.clone(),
        restarts: cfg.restarts(),
        exchange_iters: cfg.exchange_iters(),
        seed: cfg.seed(),
    }
}

pub fn search(cfg: &RunConfig) -> Result<Output> {
    let kernel = cfg.kernel()?;
    let schedule = cfg.schedule()?;
    let consts = constants(cfg, &kernel, schedule.gamma_star())?;
    let outcome: SearchOutcome = search::search(&kernel, &search_config(cfg, &kernel, &schedule), &consts)?;
    if let Some(path) = &cfg.points_out {
        io::write_point_set(path, &outcome.points)?;
    }
    Output::new(&outcome)?.with_rows(&[outcome.report.batch_row(cfg.seed())])
}

#[derive(Serialize)]
struct RateReport {
    schema: u32,
    d: usize,
    r: f64,
    m: usize,
    max_degree: usize,
    restarts: usize,
    seed: u64,
    #[serde(flatten)]
    study: search::RateStudy,
}

pub fn rate(cfg: &RunConfig) -> Result<Output> {
    let kernel = cfg.kernel()?;
    let schedule = cfg.schedule()?;
    let consts = constants(cfg, &kernel, schedule.gamma_star())?;
    let n_values = cfg.n_values.clone().unwrap_or_else(|| vec![8, 16, 32, 64, 128]);
    let sc = search_config(cfg, &kernel, &schedule);
    let study = search::rate_study(&kernel, &n_values, &sc, &consts)?;
    let report = RateReport {
        schema: OUTPUT_SCHEMA,
        d: kernel.d(),
        r: kernel.params().r,
        m: schedule.m(),
        max_degree: kernel.max_degree(),
        restarts: sc.restarts,
        seed: sc.seed,
        study,
    };
    Output::new(&report)?.with_rows(&report.study.rows)
}

/// `m` range for the `log N / log m` slope estimate.
const SLOPE_RANGE: (usize, usize) = (512, 1024);

#[derive(Serialize)]
struct TractReport {
    schema: u32,
    family: WeightFamily,
    d: usize,
    r: f64,
    epsilon: f64,
    verdict: TractabilityVerdict,
    c_dr: f64,
    /// Single-constant majorant of `c_dr`.
    c_dr_loose: f64,
    /// `c_dr β` and `c_dr_loose β` when `β` is finite: bounds on the
    /// exponent of `m` in the node count.
    m_exponent_bound: Option<(f64, f64)>,
    /// Slope of `log N_upper` against `log m` between the two `m` values.
    upper_log_slope: Option<f64>,
    slope_m: (usize, usize),
    rows: Vec<CurveRow>,
}

pub fn tract(cfg: &RunConfig) -> Result<Output> {
    cfg.check_smoothness()?;
    let family = cfg.family()?;
    let kernel = cfg.kernel()?;
    let consts = constants(cfg, &kernel, family.gamma_star()?)?;
    let eps = cfg.epsilon();
    let cap = family.max_m();
    let m_values: Vec<usize> = cfg.m_values().into_iter().filter(|m| cap.is_none_or(|c| *m <= c)).collect();
    let rows = tract::bound_curve(&family, eps, &m_values, &consts)?;
    let upper_log_slope = match cap {
        Some(c) if c < SLOPE_RANGE.1 => None,
        _ => Some(tract::upper_log_slope(&family, eps, consts.c_dr, SLOPE_RANGE.0, SLOPE_RANGE.1)?),
    };
    let verdict = tract::classify(&family)?;
    let c_dr_loose = simplex_qmc::kernel::c_dr_loose(kernel.d(), kernel.params().r, cfg.series_tolerance()?)?;
    let m_exponent_bound = match verdict.beta {
        Limit::Finite(beta) => Some((consts.c_dr * beta, c_dr_loose * beta)),
        Limit::Infinite => None,
    };
    let report = TractReport {
        schema: OUTPUT_SCHEMA,
        verdict,
        c_dr_loose,
        m_exponent_bound,
        family,
        d: kernel.d(),
        r: kernel.params().r,
        epsilon: eps,
        c_dr: consts.c_dr,
        upper_log_slope,
        slope_m: SLOPE_RANGE,
        rows,
    };
    Output::new(&report)?.with_rows(&report.rows)
}

#[derive(Serialize)]
struct VerifyReport {
    schema: u32,
    config: VerifyConfig,
    passed: bool,
    checks: Vec<CheckOutcome>,
}

pub fn verify(cfg: &RunConfig) -> Result<Output> {
    cfg.check_smoothness()?;
    let defaults = VerifyConfig::default();
    let vc = VerifyConfig {
        d: cfg.d(),
        r: cfg.r(),
        max_degree: cfg.max_degree.unwrap_or(defaults.max_degree),
        gamma: cfg.gamma(),
        seed: cfg.seed.unwrap_or(defaults.seed),
        grid_divisions: cfg.grid_divisions.unwrap_or(defaults.grid_divisions),
    };
    let checks = verify::run(&vc)?;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    let mut out = Output::new(&VerifyReport { schema: OUTPUT_SCHEMA, config: vc, passed, checks })?;
    out.failed = !passed;
    Ok(out)
}

/// Writes a uniform random point set; handy for feeding `wce`.
pub fn sample(cfg: &RunConfig) -> Result<Output> {
    let set = ProductPointSet::random(cfg.d(), cfg.m(), cfg.n(), cfg.seed())?;
    if let Some(path) = &cfg.points_out {
        io::write_point_set(path, &set)?;
    }
    Output::new(&set)
}
