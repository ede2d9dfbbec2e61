//! Reproducing kernels of the weighted Sobolev spaces on `T^d` and `(T^d)^m`.
//!
//! With spectral weights `w_ℓ = [ℓ(ℓ+d)]^{-r}` the weight-free kernel tail is
//!
//! `g(x, y) = Σ_{ℓ>=1} w_ℓ P_ℓ(x, y)`,
//!
//! `K_1 = 1 + γ g` and `K_m` is the product of `K_1` factors with per-coordinate
//! weights. The series is truncated at a degree `L`; because the truncated
//! sum is itself the reproducing kernel of the polynomials of degree `<= L`,
//! every identity of the full space holds exactly for it, and the distance
//! to the full kernel is bounded by the certified tail
//! `Σ_{ℓ>L} b_ℓ w_ℓ` with `b_ℓ` the per-degree bound on `|P_ℓ|`.

use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::orthopoly::{self, OrthonormalBasis};
use crate::poly::MultiIndexPolynomial;
use crate::quadrature::NeumaierSum;
use crate::simplex::{ProductPoint, SimplexPoint};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_SERIES_TOLERANCE: f64 = 1e-12;
/// Grid divisions per axis for extremum searches (pitch `1/32`).
pub const DEFAULT_GRID_DIVISIONS: usize = 32;

/// Terms summed explicitly before the integral bound takes over in
/// [`kernel_tail_bound`].
const EXPLICIT_TAIL_TERMS: usize = 4096;
const MAX_SERIES_TERMS: usize = 10_000_000;

pub(crate) fn check_smoothness(d: usize, r: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension d must be positive"));
    }
    if !r.is_finite() || r <= (d + 1) as f64 {
        return Err(Error::Smoothness { d, r });
    }
    Ok(())
}

fn check_tolerance(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive and finite, got {tol}")));
    }
    Ok(())
}

/// `w_ℓ = [ℓ(ℓ+d)]^{-r}`, the reciprocal spectral weight of degree `ℓ >= 1`.
pub fn spectral_weight(d: usize, r: f64, degree: usize) -> f64 {
    let l = degree as f64;
    (l * (l + d as f64)).powf(-r)
}

#[derive(Debug, Clone, Copy)]
enum Numerator {
    /// `b_ℓ`, the bound on `|P_ℓ|`.
    KernelBound,
    /// `r_ℓ^d = dim V_ℓ`.
    Dimension,
    /// `b_1 ℓ^{2d}`: the single-constant majorant `M ℓ^{2d}` with the
    /// smallest valid `M`.
    PowerLaw,
}

/// `Σ_{ℓ>=1} numerator(ℓ) w_ℓ`.
#[derive(Debug, Clone, Copy)]
struct Series {
    d: usize,
    r: f64,
    num: Numerator,
}

impl Series {
    fn new(d: usize, r: f64, num: Numerator) -> Result<Self> {
        check_smoothness(d, r)?;
        Ok(Series { d, r, num })
    }

    fn numerator(&self, l: f64) -> f64 {
        let d = self.d as f64;
        match self.num {
            Numerator::KernelBound => kernel_bound_f64(self.d, l),
            Numerator::Dimension => (1..self.d).map(|i| (l + i as f64) / i as f64).product(),
            Numerator::PowerLaw => kernel_bound_f64(self.d, 1.0) * l.powf(2.0 * d),
        }
    }

    /// `p` such that `numerator(ℓ) / ℓ^p` is non-increasing.
    fn leading_power(&self) -> f64 {
        match self.num {
            Numerator::KernelBound | Numerator::PowerLaw => 2.0 * self.d as f64,
            Numerator::Dimension => self.d as f64 - 1.0,
        }
    }

    fn term(&self, degree: usize) -> f64 {
        self.numerator(degree as f64) * spectral_weight(self.d, self.r, degree)
    }

    /// Integral-comparison bound on `Σ_{ℓ>n}`, `n >= 1`: every such term is
    /// at most `A ℓ^{p - 2r}` with `A = numerator(n+1)/(n+1)^p`.
    fn analytic_tail(&self, n: usize) -> f64 {
        let p = self.leading_power();
        let s = 2.0 * self.r - p;
        let next = (n + 1) as f64;
        let a = self.numerator(next) / next.powf(p);
        a * (n as f64).powf(1.0 - s) / (s - 1.0)
    }

    /// Bound on `Σ_{ℓ>n}`: explicit terms first, integral bound after.
    fn tail(&self, n: usize) -> f64 {
        let explicit: NeumaierSum = (n + 1..=n + EXPLICIT_TAIL_TERMS).map(|l| self.term(l)).collect();
        explicit.total() + self.analytic_tail(n + EXPLICIT_TAIL_TERMS)
    }

    fn sum(&self, tol: f64) -> Result<f64> {
        check_tolerance(tol)?;
        let mut acc = NeumaierSum::default();
        for n in 1..=MAX_SERIES_TERMS {
            acc.add(self.term(n));
            if self.analytic_tail(n) <= tol {
                return Ok(acc.total());
            }
        }
        Err(Error::invalid(format!(
            "series tail for d = {}, r = {} stays above {tol} after {MAX_SERIES_TERMS} terms",
            self.d, self.r
        )))
    }
}

/// `b_ℓ = (2ℓ+d)/d · Π_{i=1}^{2d-1} (2ℓ+i)/i` in floating point.
fn kernel_bound_f64(d: usize, l: f64) -> f64 {
    let df = d as f64;
    let c: f64 = (1..2 * d).map(|i| (2.0 * l + i as f64) / i as f64).product();
    (2.0 * l + df) / df * c
}

/// Certified bound on `Σ_{ℓ>L} b_ℓ w_ℓ`, which dominates `|g - g_L|`
/// pointwise.
pub fn kernel_tail_bound(d: usize, r: f64, max_degree: usize) -> Result<f64> {
    Ok(Series::new(d, r, Numerator::KernelBound)?.tail(max_degree))
}

/// `c_{d,r} = Σ_{ℓ>=1} b_ℓ w_ℓ` summed until the remaining tail is below `tol`.
///
/// Bounds `|g|` on `T^d × T^d`, hence `K_1 <= 1 + γ c_{d,r}`.
pub fn c_dr(d: usize, r: f64, tol: f64) -> Result<f64> {
    Series::new(d, r, Numerator::KernelBound)?.sum(tol)
}

/// The looser constant `b_1 Σ ℓ^{2d} w_ℓ`: the `M ℓ^{2d}` majorant with the
/// smallest `M` valid for every degree.
pub fn c_dr_loose(d: usize, r: f64, tol: f64) -> Result<f64> {
    Series::new(d, r, Numerator::PowerLaw)?.sum(tol)
}

/// `s_{d,r} = Σ_{ℓ>=1} r_ℓ^d w_ℓ = d! ∫ g(x, x) dx`.
pub fn s_dr(d: usize, r: f64, tol: f64) -> Result<f64> {
    Series::new(d, r, Numerator::Dimension)?.sum(tol)
}

/// `min(1, 1 / (γ* |g_min|))`, or 1 when `g_min >= 0`.
pub fn b_dr(gamma_star: f64, g_min: f64) -> Result<f64> {
    if !(gamma_star > 0.0 && gamma_star.is_finite()) {
        return Err(Error::invalid(format!("gamma* must be positive and finite, got {gamma_star}")));
    }
    if !g_min.is_finite() {
        return Err(Error::invalid("g_min estimate must be finite"));
    }
    if g_min >= 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 / (gamma_star * g_min.abs())).min(1.0))
}

/// Where to truncate the kernel series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Certified bound on `|g - g_L|` everywhere.
    pub tail_tolerance: f64,
    pub max_degree: usize,
}

impl TruncationPolicy {
    /// Smallest `L <= cap` whose tail bound is at most `tol`.
    pub fn from_tolerance(d: usize, r: f64, tol: f64, cap: usize) -> Result<Self> {
        check_tolerance(tol)?;
        for l in 1..=cap {
            if kernel_tail_bound(d, r, l)? <= tol {
                return Ok(TruncationPolicy { tail_tolerance: tol, max_degree: l });
            }
        }
        Err(Error::invalid(format!(
            "kernel tail for d = {d}, r = {r} is {:.3e} at the degree cap {cap}, above the requested {tol:e}",
            kernel_tail_bound(d, r, cap)?
        )))
    }

    /// Truncation at degree `L` with the tolerance set to its tail bound.
    pub fn at_degree(d: usize, r: f64, max_degree: usize) -> Result<Self> {
        if max_degree == 0 {
            return Err(Error::invalid("kernel truncation degree must be at least 1"));
        }
        Ok(TruncationPolicy { tail_tolerance: kernel_tail_bound(d, r, max_degree)?, max_degree })
    }

    /// The default tolerance when the default degree cap reaches it,
    /// otherwise the cap itself with its certified tail.
    pub fn default_for(d: usize, r: f64) -> Result<Self> {
        let cap = orthopoly::default_max_degree(d);
        match Self::from_tolerance(d, r, DEFAULT_TAIL_TOLERANCE, cap) {
            Ok(p) => Ok(p),
            Err(Error::InvalidArgument(_)) => Self::at_degree(d, r, cap),
            Err(e) => Err(e),
        }
    }

    pub fn validate(&self, d: usize, r: f64) -> Result<()> {
        check_tolerance(self.tail_tolerance)?;
        if self.max_degree == 0 {
            return Err(Error::invalid("kernel truncation degree must be at least 1"));
        }
        let tail = kernel_tail_bound(d, r, self.max_degree)?;
        if tail > self.tail_tolerance {
            return Err(Error::invalid(format!(
                "tail bound {tail:.3e} at L = {} exceeds tail_tolerance {:e}",
                self.max_degree, self.tail_tolerance
            )));
        }
        Ok(())
    }
}

/// `(d, r, γ)` and the truncation that define `H_1` and `K_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub d: usize,
    pub r: f64,
    pub gamma: f64,
    pub truncation: TruncationPolicy,
}

impl KernelParams {
    /// Parameters with [`TruncationPolicy::default_for`].
    pub fn new(d: usize, r: f64, gamma: f64) -> Result<Self> {
        check_smoothness(d, r)?;
        Self::with_truncation(d, r, gamma, TruncationPolicy::default_for(d, r)?)
    }

    pub fn with_truncation(d: usize, r: f64, gamma: f64, truncation: TruncationPolicy) -> Result<Self> {
        let p = KernelParams { d, r, gamma, truncation };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_smoothness(self.d, self.r)?;
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive and finite, got {}", self.gamma)));
        }
        self.truncation.validate(self.d, self.r)
    }
}

/// Weights `γ_{m,1..m}` of the tensor-product space `H_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightSchedule {
    gammas: Vec<f64>,
    gamma_star: f64,
}

impl WeightSchedule {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::invalid("weight schedule needs m >= 1 weights"));
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::invalid(format!("weights must be positive and finite, got {g}")));
        }
        let gamma_star = gammas.iter().cloned().fold(f64::MIN, f64::max);
        Ok(WeightSchedule { gammas, gamma_star })
    }

    pub fn constant(m: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; m])
    }

    pub fn m(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn gamma_star(&self) -> f64 {
        self.gamma_star
    }

    pub fn sum(&self) -> f64 {
        self.gammas.iter().collect::<NeumaierSum>().total()
    }

    /// Short content hash identifying the exact weights.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for g in &self.gammas {
            h.update(g.to_bits().to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl TryFrom<Vec<f64>> for WeightSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightSchedule> for Vec<f64> {
    fn from(s: WeightSchedule) -> Self {
        s.gammas
    }
}

/// Evaluator for the truncated kernel of a [`KernelParams`].
///
/// `g(x, y) = ψ(x)·ψ(y)` with features `ψ_{ℓ,k}(x) = sqrt(w_ℓ) P_{ℓ,k}(x)`,
/// `1 <= ℓ <= L`.
#[derive(Debug, Clone)]
pub struct Kernel {
    params: KernelParams,
    basis: Arc<OrthonormalBasis>,
    sqrt_weights: Vec<f64>,
}

impl Kernel {
    /// Kernel on the process-wide cached basis.
    pub fn new(params: KernelParams) -> Result<Self> {
        params.validate()?;
        let basis = OrthonormalBasis::cached(params.d, params.truncation.max_degree)?;
        Self::with_basis(params, basis)
    }

    /// Kernel on a caller-supplied basis holding at least the truncation
    /// degree; higher degrees are ignored.
    pub fn with_basis(params: KernelParams, basis: Arc<OrthonormalBasis>) -> Result<Self> {
        params.validate()?;
        check_dim(params.d, basis.d())?;
        let l = params.truncation.max_degree;
        if basis.max_degree() < l {
            return Err(Error::OutOfRange { degree: l, max: basis.max_degree() });
        }
        let mut sqrt_weights = Vec::with_capacity(basis.offset(l + 1) - 1);
        for degree in 1..=l {
            let w = spectral_weight(params.d, params.r, degree).sqrt();
            sqrt_weights.extend(std::iter::repeat_n(w, orthopoly::dim_v(params.d, degree)));
        }
        Ok(Kernel { params, basis, sqrt_weights })
    }

    /// Same kernel shape (d, r, L) with another `γ`.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let params = KernelParams::with_truncation(self.params.d, self.params.r, gamma, self.params.truncation)?;
        Ok(Kernel { params, basis: self.basis.clone(), sqrt_weights: self.sqrt_weights.clone() })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn d(&self) -> usize {
        self.params.d
    }

    pub fn max_degree(&self) -> usize {
        self.params.truncation.max_degree
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.params.truncation.tail_tolerance
    }

    pub fn basis(&self) -> &Arc<OrthonormalBasis> {
        &self.basis
    }

    /// Number of features (basis functions of degree `1..=L`).
    pub fn num_features(&self) -> usize {
        self.sqrt_weights.len()
    }

    /// `ψ(x)`.
    pub fn features(&self, x: &SimplexPoint) -> Result<Vec<f64>> {
        let mut all = self.basis.eval_all(x)?;
        all.truncate(self.sqrt_weights.len() + 1);
        all.remove(0);
        for (v, w) in all.iter_mut().zip(&self.sqrt_weights) {
            *v *= w;
        }
        Ok(all)
    }

    /// Features of many points, row-major.
    pub fn feature_rows(&self, points: &[SimplexPoint]) -> Result<Vec<Vec<f64>>> {
        points.par_iter().map(|p| self.features(p)).collect()
    }

    pub fn g_eval(&self, x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
        Ok(dot(&self.features(x)?, &self.features(y)?))
    }

    /// `g̃(x) = g(x, x) >= 0`.
    pub fn gtilde(&self, x: &SimplexPoint) -> Result<f64> {
        let f = self.features(x)?;
        Ok(dot(&f, &f))
    }

    /// The same truncated `g` assembled from the closed-form degree kernels.
    pub fn g_eval_closed(&self, x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
        let (d, r) = (self.params.d, self.params.r);
        let mut acc = NeumaierSum::default();
        for degree in 1..=self.max_degree() {
            acc.add(spectral_weight(d, r, degree) * orthopoly::degree_kernel_closed(d, degree, x, y)?);
        }
        Ok(acc.total())
    }

    /// `K_1(x, y) = 1 + γ g(x, y)`.
    pub fn k1_eval(&self, x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
        Ok(1.0 + self.params.gamma * self.g_eval(x, y)?)
    }

    /// `K_m(X, Y) = Π_j (1 + γ_{m,j} g(x_j, y_j))`; `γ` of the params is unused.
    pub fn km_eval(&self, x: &ProductPoint, y: &ProductPoint, schedule: &WeightSchedule) -> Result<f64> {
        check_dim(schedule.m(), x.m())?;
        check_dim(schedule.m(), y.m())?;
        let mut prod = 1.0;
        for ((xj, yj), gamma) in x.components().iter().zip(y.components()).zip(schedule.gammas()) {
            prod *= 1.0 + gamma * self.g_eval(xj, yj)?;
        }
        Ok(prod)
    }

    /// `K_1(·, y)` as a polynomial in the first argument, with the float
    /// coefficients `γ w_ℓ P_{ℓ,k}(y) / sqrt(N_{ℓ,k})` converted exactly to
    /// rationals.
    pub fn k1_section(&self, y: &SimplexPoint) -> Result<MultiIndexPolynomial> {
        let d = self.params.d;
        let values = self.basis.eval_all(y)?;
        let mut out = MultiIndexPolynomial::one(d);
        for degree in 1..=self.max_degree() {
            let w = spectral_weight(d, self.params.r, degree) * self.params.gamma;
            for (k, e) in self.basis.elements(degree)?.iter().enumerate() {
                let c = w * values[self.basis.offset(degree) + k] / e.scale();
                let c = BigRational::from_f64(c).ok_or_else(|| Error::Internal("non-finite kernel coefficient".into()))?;
                if !c.is_zero() {
                    out = out.add_scaled(&e.poly, &c)?;
                }
            }
        }
        Ok(out)
    }

    /// Grid over `T^d` with `divisions` steps per axis (pitch `1/divisions`).
    pub fn grid(&self, divisions: usize) -> Vec<SimplexPoint> {
        simplex_grid(self.params.d, divisions)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All points `k / divisions`, `k ∈ N^d`, `|k| <= divisions`, in lexicographic order.
pub fn simplex_grid(d: usize, divisions: usize) -> Vec<SimplexPoint> {
    let n = divisions.max(1);
    let mut out = Vec::new();
    let mut k = vec![0usize; d];
    loop {
        let coords = k.iter().map(|&ki| ki as f64 / n as f64).collect();
        out.push(SimplexPoint::new(coords).expect("grid points lie in the simplex"));
        // odometer restricted to |k| <= n
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            k[i] += 1;
            if k.iter().sum::<usize>() <= n {
                break;
            }
            k[i] = 0;
        }
    }
}

/// Settings of the grid-plus-pattern-search extremum estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaOptions {
    /// Grid steps per axis; the pitch is `1 / grid_divisions`.
    pub grid_divisions: usize,
    /// Number of best grid cells refined by pattern search.
    pub refine_starts: usize,
    /// Pattern-search step at which refinement stops.
    pub min_step: f64,
}

impl Default for ExtremaOptions {
    fn default() -> Self {
        ExtremaOptions { grid_divisions: DEFAULT_GRID_DIVISIONS, refine_starts: 8, min_step: 1e-9 }
    }
}

impl ExtremaOptions {
    pub fn pitch(&self) -> f64 {
        1.0 / self.grid_divisions.max(1) as f64
    }
}

/// Sampled extrema of `g` with their arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct GExtrema {
    pub min: f64,
    pub argmin: (SimplexPoint, SimplexPoint),
    pub max: f64,
    pub argmax: (SimplexPoint, SimplexPoint),
}

/// Moves mass `step` from barycentric coordinate `from` to `to` (index `d`
/// is the implicit remainder), clamped so the point stays in `T^d`.
fn shift_mass(x: &SimplexPoint, from: usize, to: usize, step: f64) -> Option<SimplexPoint> {
    let d = x.dim();
    let mut c = x.coords().to_vec();
    let available = if from == d { x.remainder() } else { c[from] };
    let s = step.min(available);
    if s <= 0.0 {
        return None;
    }
    if from < d {
        c[from] = (c[from] - s).max(0.0);
    }
    if to < d {
        c[to] += s;
        let excess = c.iter().sum::<f64>() - 1.0;
        if excess > 0.0 {
            c[to] -= excess;
        }
    }
    SimplexPoint::new(c).ok()
}

/// Pattern search over tuples of simplex points, minimizing `f`.
///
/// Polls every pairwise mass shift of every component, accepts the first
/// strict improvement, and halves the step when none exists.
fn pattern_search<F>(start: Vec<SimplexPoint>, start_value: f64, step: f64, min_step: f64, f: F) -> (Vec<SimplexPoint>, f64)
where
    F: Fn(&[SimplexPoint], usize) -> f64,
{
    let mut best = start;
    let mut best_v = start_value;
    let mut step = step;
    let d = best[0].dim();
    let mut budget = 200_000usize;
    while step >= min_step && budget > 0 {
        let mut improved = false;
        'poll: for comp in 0..best.len() {
            for from in 0..=d {
                for to in 0..=d {
                    if from == to {
                        continue;
                    }
                    let Some(moved) = shift_mass(&best[comp], from, to, step) else { continue };
                    let mut cand = best.clone();
                    cand[comp] = moved;
                    budget = budget.saturating_sub(1);
                    let v = f(&cand, comp);
                    if v < best_v {
                        best = cand;
                        best_v = v;
                        improved = true;
                        break 'poll;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, best_v)
}

/// Grid plus pattern-search estimates of `min g` and `max g` over
/// `T^d × T^d`. The minimum returned is an upper bound and the maximum a
/// lower bound of the true extrema of the truncated `g`.
pub fn estimate_g_extrema(kernel: &Kernel, opts: &ExtremaOptions) -> Result<GExtrema> {
    let grid = kernel.grid(opts.grid_divisions);
    let feats = kernel.feature_rows(&grid)?;
    // per row i: best (value, j) over j >= i, reduced in index order
    let rows: Vec<((f64, usize), (f64, usize))> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut lo = (f64::INFINITY, i);
            let mut hi = (f64::NEG_INFINITY, i);
            for j in i..grid.len() {
                let v = dot(&feats[i], &feats[j]);
                if v < lo.0 {
                    lo = (v, j);
                }
                if v > hi.0 {
                    hi = (v, j);
                }
            }
            (lo, hi)
        })
        .collect();

    let starts = |sign: f64, pick: &dyn Fn(&((f64, usize), (f64, usize))) -> (f64, usize)| {
        let mut cells: Vec<(f64, usize, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let (v, j) = pick(row);
                (sign * v, i, j)
            })
            .collect();
        cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cells.truncate(opts.refine_starts.max(1));
        cells
    };

    let refine = |sign: f64, cells: Vec<(f64, usize, usize)>| -> Result<(f64, (SimplexPoint, SimplexPoint))> {
        let results: Vec<(Vec<SimplexPoint>, f64)> = cells
            .par_iter()
            .map(|&(v, i, j)| {
                pattern_search(vec![grid[i].clone(), grid[j].clone()], v, opts.pitch(), opts.min_step, |pts, _| {
                    sign * kernel.g_eval(&pts[0], &pts[1]).expect("points stay in the simplex")
                })
            })
            .collect();
        // recompute the winner exactly once from its points
        let mut best: Option<(f64, (SimplexPoint, SimplexPoint))> = None;
        for (pts, _) in results {
            let v = kernel.g_eval(&pts[0], &pts[1])?;
            let key = sign * v;
            if best.as_ref().is_none_or(|(b, _)| key < sign * *b) {
                best = Some((v, (pts[0].clone(), pts[1].clone())));
            }
        }
        best.ok_or_else(|| Error::Internal("empty extremum search".into()))
    };

    let (min, argmin) = refine(1.0, starts(1.0, &|r| r.0))?;
    let (max, argmax) = refine(-1.0, starts(-1.0, &|r| r.1))?;
    Ok(GExtrema { min, argmin, max, argmax })
}

/// Grid plus pattern-search estimate of `min g̃` over `T^d`, with its argument.
pub fn estimate_gtilde_min(kernel: &Kernel, opts: &ExtremaOptions) -> Result<(f64, SimplexPoint)> {
    let grid = kernel.grid(opts.grid_divisions);
    let values: Vec<f64> = grid.par_iter().map(|p| kernel.gtilde(p)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(opts.refine_starts.max(1));
    let results: Vec<(Vec<SimplexPoint>, f64)> = order
        .par_iter()
        .map(|&i| {
            pattern_search(vec![grid[i].clone()], values[i], opts.pitch(), opts.min_step, |pts, _| {
                kernel.gtilde(&pts[0]).expect("points stay in the simplex")
            })
        })
        .collect();
    let mut best: Option<(f64, SimplexPoint)> = None;
    for (pts, v) in results {
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, pts[0].clone()));
        }
    }
    best.ok_or_else(|| Error::Internal("empty extremum search".into()))
}

/// Constants driving the bounds, for one `(d, r, L, γ*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub c_dr: f64,
    pub s_dr: f64,
    pub g_min_estimate: f64,
    pub g_max_estimate: f64,
    pub gtilde_min_estimate: f64,
    pub b_dr: f64,
    #[serde(rename = "M_dr")]
    pub m_dr: f64,
    pub alpha_dr: f64,
}

impl KernelConstants {
    /// Assembles the constants from their parts; `α = log(1+M)/M`, with the
    /// limit value 1 at `M = 0`.
    pub fn from_parts(c_dr: f64, s_dr: f64, g_min: f64, g_max: f64, gtilde_min: f64, gamma_star: f64) -> Result<Self> {
        let b = b_dr(gamma_star, g_min)?;
        let m_dr = b * gtilde_min.max(0.0) * gamma_star;
        let alpha_dr = if m_dr > 0.0 { m_dr.ln_1p() / m_dr } else { 1.0 };
        Ok(KernelConstants {
            c_dr,
            s_dr,
            g_min_estimate: g_min,
            g_max_estimate: g_max,
            gtilde_min_estimate: gtilde_min,
            b_dr: b,
            m_dr,
            alpha_dr,
        })
    }

    /// Computes every constant for `kernel` and weights bounded by
    /// `gamma_star`.
    pub fn compute(kernel: &Kernel, gamma_star: f64, opts: &ExtremaOptions, series_tol: f64) -> Result<ConstantsReport> {
        let KernelParams { d, r, .. } = *kernel.params();
        let c = c_dr(d, r, series_tol)?;
        let s = s_dr(d, r, series_tol)?;
        let ext = estimate_g_extrema(kernel, opts)?;
        let (gt, _) = estimate_gtilde_min(kernel, opts)?;
        let constants = Self::from_parts(c, s, ext.min, ext.max, gt, gamma_star)?;
        Ok(ConstantsReport {
            schema: 1,
            d,
            r,
            gamma_star,
            max_degree: kernel.max_degree(),
            tail_tolerance: kernel.tail_tolerance(),
            series_tolerance: series_tol,
            grid_pitch: opts.pitch(),
            refine_starts: opts.refine_starts,
            c_dr_loose: c_dr_loose(d, r, series_tol)?,
            constants,
        })
    }
}

/// [`KernelConstants`] with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub schema: u32,
    pub d: usize,
    pub r: f64,
    pub gamma_star: f64,
    pub max_degree: usize,
    pub tail_tolerance: f64,
    pub series_tolerance: f64,
    pub grid_pitch: f64,
    pub refine_starts: usize,
    /// `b_1 Σ ℓ^{2d} w_ℓ`, the single-constant variant of `c_{d,r}`.
    pub c_dr_loose: f64,
    pub constants: KernelConstants,
}
