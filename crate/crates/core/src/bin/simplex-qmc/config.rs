//! Run configuration: defaults, overridden by flags, overridden by a JSON
//! config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use serde::{Deserialize, Serialize};

use simplex_qmc::kernel::{
    ExtremaOptions, DEFAULT_GRID_DIVISIONS, DEFAULT_SERIES_TOLERANCE,
};
use simplex_qmc::orthopoly::{self, OrthonormalBasis};
use simplex_qmc::tract::WeightFamily;
use simplex_qmc::{Error, Kernel, KernelParams, Result, TruncationPolicy, WeightSchedule};

pub const CONFIG_SCHEMA: u32 = 1;
pub const CACHE_ENV: &str = "SIMPLEX_QMC_CACHE_DIR";

/// Parameters shared by all subcommands; each uses the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config schema version (config files only; must be 1)
    #[arg(skip)]
    #[serde(default)]
    pub schema: Option<u32>,
    /// Simplex dimension d [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    /// Smoothness r, must exceed d + 1 [default: 4]
    #[arg(long)]
    pub r: Option<f64>,
    /// Kernel truncation degree L [default: smallest reaching the tail tolerance, capped at 12 (d <= 2) / 8 (d = 3)]
    #[arg(long = "max-degree", short = 'L')]
    pub max_degree: Option<usize>,
    /// Certified kernel tail tolerance
    #[arg(long)]
    pub tail_tolerance: Option<f64>,
    /// Tolerance for the c_dr / s_dr series [default: 1e-12]
    #[arg(long)]
    pub series_tolerance: Option<f64>,
    /// Weight γ for K_1 and for constant schedules [default: 0.5]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of simplex factors m [default: 2]
    #[arg(long)]
    pub m: Option<usize>,
    /// Explicit weights γ_{m,1..m}, comma separated
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Weight family (JSON), e.g. '{"kind":"power-law","c":1,"a":2}'
    #[arg(long, value_parser = parse_family)]
    pub family: Option<WeightFamily>,
    /// Number of nodes n [default: 16]
    #[arg(long)]
    pub n: Option<usize>,
    /// Node counts for bound tables and rate studies, comma separated
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    /// Values of m for bound curves, comma separated
    #[arg(long, value_delimiter = ',')]
    pub m_values: Option<Vec<usize>>,
    /// Target error ε in (0, 1) [default: 0.1]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Random restarts R [default: 32]
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Exchange-descent proposals [default: 0]
    #[arg(long)]
    pub exchange_iters: Option<usize>,
    /// Seed [default: 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid steps per axis for extremum estimates [default: 32]
    #[arg(long)]
    pub grid_divisions: Option<usize>,
    /// Point-set file (.csv or .json)
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Where to write an output point set (.csv or .json)
    #[arg(long)]
    pub points_out: Option<PathBuf>,
    /// First kernel argument: m·d coordinates, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Second kernel argument: m·d coordinates, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    /// Basis cache directory [default: $SIMPLEX_QMC_CACHE_DIR]
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

fn parse_family(s: &str) -> std::result::Result<WeightFamily, String> {
    serde_json::from_str(s).map_err(|e| format!("invalid weight family: {e}"))
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f),)* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        match cfg.schema {
            Some(CONFIG_SCHEMA) => Ok(cfg),
            Some(v) => Err(Error::Parse(format!("unsupported config schema {v} (expected {CONFIG_SCHEMA})"))),
            None => Err(Error::Parse(format!("config file must declare \"schema\": {CONFIG_SCHEMA}"))),
        }
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        overlay!(
            self, top, schema, d, r, max_degree, tail_tolerance, series_tolerance, gamma, m, weights, family, n,
            n_values, m_values, epsilon, restarts, exchange_iters, seed, grid_divisions, points,
            points_out, x, y, cache_dir
        )
    }

    pub fn d(&self) -> usize {
        self.d.unwrap_or(2)
    }

    pub fn r(&self) -> f64 {
        self.r.unwrap_or(4.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(0.5)
    }

    pub fn m(&self) -> usize {
        self.m.unwrap_or(2)
    }

    pub fn n(&self) -> usize {
        self.n.unwrap_or(16)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.1)
    }

    pub fn restarts(&self) -> usize {
        self.restarts.unwrap_or(32)
    }

    pub fn exchange_iters(&self) -> usize {
        self.exchange_iters.unwrap_or(0)
    }

    pub fn series_tolerance(&self) -> Result<f64> {
        positive("series_tolerance", self.series_tolerance.unwrap_or(DEFAULT_SERIES_TOLERANCE))
    }

    pub fn extrema_options(&self) -> Result<ExtremaOptions> {
        let divisions = self.grid_divisions.unwrap_or(DEFAULT_GRID_DIVISIONS);
        if divisions == 0 {
            return Err(Error::InvalidArgument("grid_divisions must be at least 1".into()));
        }
        Ok(ExtremaOptions { grid_divisions: divisions, ..Default::default() })
    }

    pub fn n_values(&self) -> Vec<usize> {
        self.n_values.clone().unwrap_or_else(|| (0..=10).map(|k| 1 << k).collect())
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.m_values.clone().unwrap_or_else(|| (0..=10).map(|k| 1 << k).collect())
    }

    pub fn cache_dir(&self) -> Option<PathBuf> {
        self.cache_dir.clone().or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
    }

    /// Rejects `r <= d + 1` before anything else is resolved.
    pub fn check_smoothness(&self) -> Result<()> {
        let (d, r) = (self.d(), self.r());
        if d == 0 {
            return Err(Error::InvalidArgument("d must be at least 1".into()));
        }
        if !r.is_finite() || r <= (d + 1) as f64 {
            return Err(Error::Smoothness { d, r });
        }
        Ok(())
    }

    pub fn truncation(&self) -> Result<TruncationPolicy> {
        self.check_smoothness()?;
        let (d, r) = (self.d(), self.r());
        match (self.max_degree, self.tail_tolerance) {
            (Some(l), Some(tol)) => {
                let p = TruncationPolicy { tail_tolerance: positive("tail_tolerance", tol)?, max_degree: l };
                p.validate(d, r)?;
                Ok(p)
            }
            (Some(l), None) => TruncationPolicy::at_degree(d, r, l),
            (None, Some(tol)) => TruncationPolicy::from_tolerance(d, r, tol, orthopoly::default_max_degree(d)),
            (None, None) => TruncationPolicy::default_for(d, r),
        }
    }

    pub fn kernel_params(&self) -> Result<KernelParams> {
        let t = self.truncation()?;
        KernelParams::with_truncation(self.d(), self.r(), positive("gamma", self.gamma())?, t)
    }

    /// Kernel on a basis from the disk cache when one is configured.
    pub fn kernel(&self) -> Result<Kernel> {
        let params = self.kernel_params()?;
        match self.cache_dir() {
            Some(dir) => {
                let (basis, hit) = orthopoly::load_or_build(&dir, params.d, params.truncation.max_degree)?;
                log::info!("basis d = {} L = {} from {} ({})", params.d, params.truncation.max_degree, dir.display(), if hit { "hit" } else { "built" });
                Kernel::with_basis(params, Arc::new(basis))
            }
            None => Kernel::new(params),
        }
    }

    pub fn basis(&self, d: usize, max_degree: usize) -> Result<(OrthonormalBasis, Option<(PathBuf, bool)>)> {
        match self.cache_dir() {
            Some(dir) => {
                let (b, hit) = orthopoly::load_or_build(&dir, d, max_degree)?;
                Ok((b, Some((orthopoly::cache_path(&dir, d, max_degree), hit))))
            }
            None => Ok((orthopoly::build_basis(d, max_degree)?, None)),
        }
    }

    /// Weights for `m` factors: explicit weights, else the family, else
    /// constant `γ`.
    pub fn schedule_for(&self, m: usize) -> Result<WeightSchedule> {
        if let Some(w) = &self.weights {
            if w.len() != m {
                return Err(Error::InvalidArgument(format!("{} weights given for m = {m}", w.len())));
            }
            return WeightSchedule::new(w.clone());
        }
        if let Some(f) = &self.family {
            return f.schedule(m);
        }
        WeightSchedule::constant(m, positive("gamma", self.gamma())?)
    }

    /// The schedule for the configured `m` (the number of explicit weights
    /// when `m` is not given).
    pub fn schedule(&self) -> Result<WeightSchedule> {
        let m = self.m.or(self.weights.as_ref().map(Vec::len)).unwrap_or(2);
        self.schedule_for(m)
    }

    pub fn family(&self) -> Result<WeightFamily> {
        let f = self.family.clone().unwrap_or(WeightFamily::PowerLaw { c: 1.0, a: 2.0 });
        f.validate()?;
        Ok(f)
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(v)
}
