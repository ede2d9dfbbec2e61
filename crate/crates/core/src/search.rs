//! Empirical low-error point sets: best-of-R uniform draws and greedy
//! single-node exchange.
//!
//! The averaging argument guarantees that some `n`-point rule beats the mean
//! `E[e²_{n,m}] = O(1/n)`; drawing `R` independent sets and keeping the best
//! realizes it. Restart `i` always uses the sub-stream `(seed, i)`, so a
//! larger `R` only ever adds candidates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{Kernel, KernelConstants, WeightSchedule};
use crate::simplex::{rng_from_seed, sample_product_point, substream_seed};
use crate::wce::{self, double_sum, feature_table, pair_term, ErrorReport, ProductPointSet};

/// Stream index reserved for exchange proposals.
const EXCHANGE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub schedule: WeightSchedule,
    pub restarts: usize,
    pub exchange_iters: usize,
    pub seed: u64,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return Err(Error::invalid("search needs n, m, d >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("search needs at least one restart"));
        }
        check_dim(self.m, self.schedule.m())
    }

    fn check_kernel(&self, kernel: &Kernel) -> Result<()> {
        self.validate()?;
        check_dim(self.d, kernel.d())
    }
}

/// A point set with its report and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub points: ProductPointSet,
    pub report: ErrorReport,
    /// Winning restart of a best-of-R search.
    pub restart: usize,
    /// Accepted exchange moves.
    pub accepted: usize,
}

/// Best of `R` i.i.d. uniform point sets; ties go to the lowest restart index.
pub fn best_of_random(kernel: &Kernel, config: &SearchConfig, consts: &KernelConstants) -> Result<SearchOutcome> {
    config.check_kernel(kernel)?;
    let draws: Vec<(f64, ProductPointSet)> = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let set = ProductPointSet::random(config.d, config.m, config.n, substream_seed(config.seed, i as u64))?;
            Ok((wce::enm_sq(kernel, &config.schedule, &set)?, set))
        })
        .collect::<Result<_>>()?;
    let (restart, (e2, points)) = draws
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .0 < best.1 .0 { cur } else { best })
        .expect("at least one restart");
    let report = ErrorReport::from_e2(kernel, &config.schedule, points.n(), e2, consts)?;
    Ok(SearchOutcome { points, report, restart, accepted: 0 })
}

/// Incremental state of the double sum `S = Σ_i Σ_h K_m(t_i, t_h)`.
struct ExchangeState {
    table: wce::FeatureTable,
    gram: Vec<Vec<f64>>,
    total: f64,
}

impl ExchangeState {
    fn new(kernel: &Kernel, set: &ProductPointSet, gammas: &[f64]) -> Result<Self> {
        let table = feature_table(kernel, set)?;
        let n = table.len();
        let gram: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|h| pair_term(&table[i], &table[h], gammas)).collect()).collect();
        let total = double_sum(&table, gammas);
        Ok(ExchangeState { table, gram, total })
    }

    /// Change of `S` and the new Gram row if node `i` had features `f`.
    fn propose(&self, i: usize, f: &[Vec<f64>], gammas: &[f64]) -> (f64, Vec<f64>) {
        let row: Vec<f64> = (0..self.table.len())
            .map(|h| if h == i { pair_term(f, f, gammas) } else { pair_term(f, &self.table[h], gammas) })
            .collect();
        let mut delta = row[i] - self.gram[i][i];
        for (h, (new, old)) in row.iter().zip(&self.gram[i]).enumerate() {
            if h != i {
                delta += 2.0 * (new - old);
            }
        }
        (delta, row)
    }

    fn accept(&mut self, i: usize, f: Vec<Vec<f64>>, row: Vec<f64>, delta: f64) {
        for (h, v) in row.iter().enumerate() {
            self.gram[h][i] = *v;
        }
        self.gram[i] = row;
        self.table[i] = f;
        self.total += delta;
    }
}

/// Result of [`exchange_descent_detailed`].
#[derive(Debug, Clone)]
pub struct ExchangeResult {
    pub points: ProductPointSet,
    pub accepted: usize,
    /// `e²` tracked through the incremental updates.
    pub incremental_e2: f64,
}

/// Greedy exchange: `exchange_iters` proposals, each redrawing one uniformly
/// chosen node, accepted iff `e²` strictly decreases.
pub fn exchange_descent_detailed(kernel: &Kernel, start: &ProductPointSet, config: &SearchConfig) -> Result<ExchangeResult> {
    config.check_kernel(kernel)?;
    check_dim(config.m, start.m())?;
    check_dim(config.d, start.d())?;
    let gammas = config.schedule.gammas();
    let n = start.n();
    let mut points = start.clone();
    let mut state = ExchangeState::new(kernel, start, gammas)?;
    let mut rng = rng_from_seed(substream_seed(config.seed, EXCHANGE_STREAM));
    let mut accepted = 0;
    for _ in 0..config.exchange_iters {
        let i = rng.gen_range(0..n);
        let candidate = sample_product_point(config.d, config.m, &mut rng);
        let f: Vec<Vec<f64>> = candidate.components().iter().map(|x| kernel.features(x)).collect::<Result<_>>()?;
        let (delta, row) = state.propose(i, &f, gammas);
        if delta < 0.0 {
            state.accept(i, f, row, delta);
            points.replace(i, candidate)?;
            accepted += 1;
        }
    }
    let nn = (n * n) as f64;
    Ok(ExchangeResult { points, accepted, incremental_e2: state.total / nn - 1.0 })
}

/// [`exchange_descent_detailed`] with a freshly recomputed report.
pub fn exchange_descent(
    kernel: &Kernel,
    start: &ProductPointSet,
    config: &SearchConfig,
    consts: &KernelConstants,
) -> Result<SearchOutcome> {
    let res = exchange_descent_detailed(kernel, start, config)?;
    let report = ErrorReport::compute(kernel, &config.schedule, &res.points, consts)?;
    Ok(SearchOutcome { points: res.points, report, restart: 0, accepted: res.accepted })
}

/// Best-of-R search followed by exchange descent (skipped when
/// `exchange_iters` is 0).
pub fn search(kernel: &Kernel, config: &SearchConfig, consts: &KernelConstants) -> Result<SearchOutcome> {
    let best = best_of_random(kernel, config, consts)?;
    if config.exchange_iters == 0 {
        return Ok(best);
    }
    let mut out = exchange_descent(kernel, &best.points, config, consts)?;
    out.restart = best.restart;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub best_e: f64,
    pub best_e2: f64,
    /// `sqrt` of the existence upper bound.
    pub upper_e: f64,
    /// `sqrt` of the mean squared error of uniform nodes.
    pub expected_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    /// Least-squares slope of `log e` against `log n`.
    pub slope: f64,
}

/// Best-of-R error for each `n`; `config.n` is ignored.
pub fn rate_study(kernel: &Kernel, n_values: &[usize], config: &SearchConfig, consts: &KernelConstants) -> Result<RateStudy> {
    if n_values.len() < 2 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rate study needs at least two strictly increasing n values"));
    }
    let rows = n_values
        .iter()
        .map(|&n| {
            let cfg = SearchConfig { n, ..config.clone() };
            let out = best_of_random(kernel, &cfg, consts)?;
            Ok(RateRow {
                n,
                best_e: out.report.e_nm,
                best_e2: out.report.e_nm_sq,
                upper_e: out.report.upper_bound.sqrt(),
                expected_e: out.report.expected.sqrt(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.best_e.ln()).collect();
    Ok(RateStudy { slope: least_squares_slope(&xs, &ys), rows })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
