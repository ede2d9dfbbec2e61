//! Worst-case errors of equal-weight rules on `(T^d)^m` and the bounds
//! around them.
//!
//! For nodes `t_1..t_n` the squared worst-case error in `H_m` is
//!
//! `e²_{n,m} = -1 + n^{-2} Σ_i Σ_h Π_j (1 + γ_{m,j} g(t_{i,j}, t_{h,j}))`,
//!
//! the initial error `e_{0,m}` being 1. Everything here is evaluated for the
//! truncated kernel of a [`Kernel`], for which these identities are exact.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{dot, spectral_weight, Kernel, KernelConstants, WeightSchedule};
use crate::orthopoly::{self, OrthonormalBasis};
use crate::quadrature::NeumaierSum;
use crate::simplex::{rng_from_seed, sample_product_point, ProductPoint};

/// Nodes `t_1..t_n ∈ (T^d)^m` of a QMC rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetDocument", into = "PointSetDocument")]
pub struct ProductPointSet {
    d: usize,
    m: usize,
    points: Vec<ProductPoint>,
}

#[derive(Serialize, Deserialize)]
struct PointSetDocument {
    d: usize,
    m: usize,
    points: Vec<ProductPoint>,
}

impl TryFrom<PointSetDocument> for ProductPointSet {
    type Error = Error;
    fn try_from(doc: PointSetDocument) -> Result<Self> {
        let set = ProductPointSet::new(doc.points)?;
        check_dim(doc.d, set.d)?;
        check_dim(doc.m, set.m)?;
        Ok(set)
    }
}

impl From<ProductPointSet> for PointSetDocument {
    fn from(s: ProductPointSet) -> Self {
        PointSetDocument { d: s.d, m: s.m, points: s.points }
    }
}

impl ProductPointSet {
    pub fn new(points: Vec<ProductPoint>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::invalid("point set needs n >= 1 points"))?;
        let (d, m) = (first.d(), first.m());
        for p in &points {
            check_dim(m, p.m())?;
            check_dim(d, p.d())?;
        }
        Ok(ProductPointSet { d, m, points })
    }

    /// `n` i.i.d. uniform nodes drawn from `rng`.
    pub fn random_with<R: Rng + ?Sized>(d: usize, m: usize, n: usize, rng: &mut R) -> Result<Self> {
        if d == 0 || m == 0 || n == 0 {
            return Err(Error::invalid(format!("need d, m, n >= 1 (got d = {d}, m = {m}, n = {n})")));
        }
        Ok(ProductPointSet { d, m, points: (0..n).map(|_| sample_product_point(d, m, rng)).collect() })
    }

    /// `n` i.i.d. uniform nodes, reproducible for a given seed.
    pub fn random(d: usize, m: usize, n: usize, seed: u64) -> Result<Self> {
        Self::random_with(d, m, n, &mut rng_from_seed(seed))
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> &[ProductPoint] {
        &self.points
    }

    pub fn push(&mut self, p: ProductPoint) -> Result<()> {
        check_dim(self.m, p.m())?;
        check_dim(self.d, p.d())?;
        self.points.push(p);
        Ok(())
    }

    pub fn replace(&mut self, i: usize, p: ProductPoint) -> Result<ProductPoint> {
        check_dim(self.m, p.m())?;
        check_dim(self.d, p.d())?;
        let slot = self
            .points
            .get_mut(i)
            .ok_or_else(|| Error::invalid(format!("node index {i} out of range")))?;
        Ok(std::mem::replace(slot, p))
    }
}

/// Kernel features of every node coordinate: `[i][j] = ψ(t_{i,j})`.
pub(crate) type FeatureTable = Vec<Vec<Vec<f64>>>;

pub(crate) fn feature_table(kernel: &Kernel, set: &ProductPointSet) -> Result<FeatureTable> {
    check_dim(kernel.d(), set.d())?;
    set.points()
        .par_iter()
        .map(|p| p.components().iter().map(|x| kernel.features(x)).collect())
        .collect()
}

/// `Π_j (1 + γ_j ψ(a_j)·ψ(b_j))`.
pub(crate) fn pair_term(a: &[Vec<f64>], b: &[Vec<f64>], gammas: &[f64]) -> f64 {
    a.iter().zip(b).zip(gammas).map(|((x, y), g)| 1.0 + g * dot(x, y)).product()
}

/// `Σ_i Σ_h Π_j (...)` from a feature table; parallel over rows with an
/// index-ordered reduction.
pub(crate) fn double_sum(table: &FeatureTable, gammas: &[f64]) -> f64 {
    let n = table.len();
    let rows: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let off: NeumaierSum = (i + 1..n).map(|h| pair_term(&table[i], &table[h], gammas)).collect();
            (pair_term(&table[i], &table[i], gammas), off.total())
        })
        .collect();
    let mut acc = NeumaierSum::default();
    for (diag, off) in rows {
        acc.add(diag);
        acc.add(2.0 * off);
    }
    acc.total()
}

fn check_schedule(kernel: &Kernel, schedule: &WeightSchedule, set: &ProductPointSet) -> Result<()> {
    check_dim(kernel.d(), set.d())?;
    if schedule.m() != set.m() {
        return Err(Error::invalid(format!(
            "schedule has m = {} weights but the point set has m = {}",
            schedule.m(),
            set.m()
        )));
    }
    Ok(())
}

/// `e_{0,m}`, which is exactly 1 for every schedule.
pub fn e0m(_schedule: &WeightSchedule) -> f64 {
    1.0
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().collect::<NeumaierSum>().total() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).collect::<NeumaierSum>().total() / (n.max(2) - 1) as f64;
        McEstimate { mean, std_err: (var / n as f64).sqrt(), samples: n }
    }

    /// `|mean - target|` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.std_err
    }
}

/// Monte Carlo estimate of `(d!)^{2m} ∫∫ K_m(x, y) dx dy`, the squared
/// initial error written as a double integral.
pub fn e0m_monte_carlo(kernel: &Kernel, schedule: &WeightSchedule, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::invalid("Monte Carlo diagnostic needs at least 2 samples"));
    }
    let d = kernel.d();
    let m = schedule.m();
    let mut rng = rng_from_seed(seed);
    let pairs: Vec<(ProductPoint, ProductPoint)> = (0..samples)
        .map(|_| (sample_product_point(d, m, &mut rng), sample_product_point(d, m, &mut rng)))
        .collect();
    let values: Vec<f64> = pairs.par_iter().map(|(x, y)| kernel.km_eval(x, y, schedule)).collect::<Result<_>>()?;
    Ok(McEstimate::from_samples(&values))
}

/// `e²_{n,m}` for the nodes of `set`.
pub fn enm_sq(kernel: &Kernel, schedule: &WeightSchedule, set: &ProductPointSet) -> Result<f64> {
    check_schedule(kernel, schedule, set)?;
    let table = feature_table(kernel, set)?;
    let n = set.n() as f64;
    Ok(double_sum(&table, schedule.gammas()) / (n * n) - 1.0)
}

/// `√max(e², 0)`; negative inputs come only from rounding or truncation.
pub fn enm_from_sq(e2: f64) -> f64 {
    if e2 < 0.0 {
        log::warn!("clamping negative squared worst-case error {e2:e} to zero");
    }
    e2.max(0.0).sqrt()
}

/// `Σ_{ℓ=1}^{L} r_ℓ^d w_ℓ`: the trace `d! ∫ g(x, x) dx` of the truncated kernel.
pub fn s_dr_truncated(d: usize, r: f64, max_degree: usize) -> Result<f64> {
    crate::kernel::check_smoothness(d, r)?;
    Ok((1..=max_degree)
        .map(|l| orthopoly::dim_v(d, l) as f64 * spectral_weight(d, r, l))
        .collect::<NeumaierSum>()
        .total())
}

/// `(Π_j (1 + γ_j c) - 1) / n`.
fn product_bound(n: usize, schedule: &WeightSchedule, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let prod: f64 = schedule.gammas().iter().map(|g| 1.0 + g * c).product();
    Ok((prod - 1.0) / n as f64)
}

/// Mean of `e²_{n,m}` over i.i.d. uniform nodes for the truncated kernel:
/// `(Π_j (1 + γ_j s_L) - 1) / n`.
pub fn expected_enm_sq(kernel: &Kernel, n: usize, schedule: &WeightSchedule) -> Result<f64> {
    let p = kernel.params();
    product_bound(n, schedule, s_dr_truncated(p.d, p.r, kernel.max_degree())?)
}

/// `(Π_j (1 + γ_j c_{d,r}) - 1) / n`: some `n`-point rule does at least this well.
pub fn existence_upper_bound(n: usize, schedule: &WeightSchedule, c_dr: f64) -> Result<f64> {
    product_bound(n, schedule, c_dr)
}

/// `-1 + Π_j (1 + b g̃_min γ_j) / n`: no `n`-point rule does better.
pub fn lower_bound(n: usize, schedule: &WeightSchedule, consts: &KernelConstants) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let shrink = consts.b_dr * consts.gtilde_min_estimate.max(0.0);
    let prod: f64 = schedule.gammas().iter().map(|g| 1.0 + shrink * g).product();
    Ok(prod / n as f64 - 1.0)
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// `ε^{-2} Π_j (1 + γ_j c_{d,r})`: nodes sufficient for error `ε`.
pub fn neps_upper(eps: f64, schedule: &WeightSchedule, c_dr: f64) -> Result<f64> {
    check_epsilon(eps)?;
    let log_prod: f64 = schedule.gammas().iter().map(|g| (g * c_dr).ln_1p()).sum();
    Ok((log_prod - 2.0 * eps.ln()).exp())
}

/// `exp(α b g̃_min Σγ) / (1 + ε²)`: nodes necessary for error `ε`.
pub fn neps_lower(eps: f64, schedule: &WeightSchedule, consts: &KernelConstants) -> Result<f64> {
    check_epsilon(eps)?;
    let rate = consts.alpha_dr * consts.b_dr * consts.gtilde_min_estimate.max(0.0);
    Ok((rate * schedule.sum()).exp() / (1.0 + eps * eps))
}

/// `e²_{n,m}` together with the bounds that bracket it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub e_nm_sq: f64,
    pub e_nm: f64,
    pub e_0m: f64,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub expected: f64,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub r: f64,
    pub max_degree: usize,
    pub schedule_digest: String,
}

impl ErrorReport {
    pub fn from_e2(kernel: &Kernel, schedule: &WeightSchedule, n: usize, e2: f64, consts: &KernelConstants) -> Result<Self> {
        let p = kernel.params();
        Ok(ErrorReport {
            e_nm_sq: e2,
            e_nm: enm_from_sq(e2),
            e_0m: e0m(schedule),
            upper_bound: existence_upper_bound(n, schedule, consts.c_dr)?,
            lower_bound: lower_bound(n, schedule, consts)?,
            expected: expected_enm_sq(kernel, n, schedule)?,
            n,
            m: schedule.m(),
            d: p.d,
            r: p.r,
            max_degree: kernel.max_degree(),
            schedule_digest: schedule.digest(),
        })
    }

    pub fn compute(kernel: &Kernel, schedule: &WeightSchedule, set: &ProductPointSet, consts: &KernelConstants) -> Result<Self> {
        let e2 = enm_sq(kernel, schedule, set)?;
        Self::from_e2(kernel, schedule, set.n(), e2, consts)
    }

    pub fn batch_row(&self, seed: u64) -> BatchRow {
        BatchRow {
            d: self.d,
            r: self.r,
            m: self.m,
            n: self.n,
            seed,
            e2: self.e_nm_sq,
            upper: self.upper_bound,
            lower: self.lower_bound,
            expected: self.expected,
        }
    }
}

/// One CSV row of a batch run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub d: usize,
    pub r: f64,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub e2: f64,
    pub upper: f64,
    pub lower: f64,
    pub expected: f64,
}

/// Index of one tensor basis function: `(ℓ_j, k_j)` per coordinate, with
/// `k_j` counted from 0.
pub type TensorIndex = Vec<(usize, usize)>;

/// A function of `H_m` with finitely many nonzero Fourier coefficients
/// `a^ℓ_k(f)` in the tensor basis `Π_j P_{ℓ_j,k_j}(x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFourierFunction {
    d: usize,
    m: usize,
    coeffs: BTreeMap<TensorIndex, f64>,
}

impl TensorFourierFunction {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::invalid("tensor function needs d, m >= 1"));
        }
        Ok(TensorFourierFunction { d, m, coeffs: BTreeMap::new() })
    }

    /// The constant function `c`.
    pub fn constant(d: usize, m: usize, c: f64) -> Result<Self> {
        let mut f = Self::new(d, m)?;
        f.set(vec![(0, 0); m], c)?;
        Ok(f)
    }

    /// Every coefficient with `ℓ_j <= max_degree` drawn uniformly from `[-1, 1]`.
    pub fn random(d: usize, m: usize, max_degree: usize, seed: u64) -> Result<Self> {
        let mut f = Self::new(d, m)?;
        let singles: Vec<(usize, usize)> = (0..=max_degree)
            .flat_map(|l| (0..orthopoly::dim_v(d, l)).map(move |k| (l, k)))
            .collect();
        let mut rng = rng_from_seed(seed);
        let mut idx = vec![0usize; m];
        loop {
            let index: TensorIndex = idx.iter().map(|&i| singles[i]).collect();
            f.set(index, rng.gen_range(-1.0..=1.0))?;
            let mut j = m;
            loop {
                if j == 0 {
                    return Ok(f);
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < singles.len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coefficients(&self) -> &BTreeMap<TensorIndex, f64> {
        &self.coeffs
    }

    /// Sets `a^ℓ_k`; a zero value removes the entry.
    pub fn set(&mut self, index: TensorIndex, value: f64) -> Result<()> {
        check_dim(self.m, index.len())?;
        for &(l, k) in &index {
            let dim = orthopoly::dim_v(self.d, l);
            if k >= dim {
                return Err(Error::invalid(format!("k = {k} out of range for degree {l} ({dim} functions)")));
            }
        }
        if !value.is_finite() {
            return Err(Error::invalid("coefficients must be finite"));
        }
        if value == 0.0 {
            self.coeffs.remove(&index);
        } else {
            self.coeffs.insert(index, value);
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, v)| (k.clone(), v * c)).filter(|(_, v)| *v != 0.0).collect();
        TensorFourierFunction { d: self.d, m: self.m, coeffs }
    }

    /// Highest single-coordinate degree present.
    pub fn max_degree(&self) -> usize {
        self.coeffs.keys().flat_map(|idx| idx.iter().map(|p| p.0)).max().unwrap_or(0)
    }

    /// `f(x)` by multiplying per-coordinate basis values.
    pub fn eval(&self, basis: &OrthonormalBasis, x: &ProductPoint) -> Result<f64> {
        check_dim(self.d, basis.d())?;
        check_dim(self.m, x.m())?;
        if basis.max_degree() < self.max_degree() {
            return Err(Error::OutOfRange { degree: self.max_degree(), max: basis.max_degree() });
        }
        let values: Vec<Vec<f64>> = x.components().iter().map(|c| basis.eval_all(c)).collect::<Result<_>>()?;
        let mut acc = NeumaierSum::default();
        for (index, a) in &self.coeffs {
            let prod: f64 = index
                .iter()
                .zip(&values)
                .map(|(&(l, k), v)| v[basis.offset(l) + k])
                .product();
            acc.add(a * prod);
        }
        Ok(acc.total())
    }
}

/// `‖f‖²_m = Σ a² Π_j B(ℓ_j)`, `B(0) = 1`, `B(ℓ) = [ℓ(ℓ+d)]^r / γ_j`.
pub fn hm_norm_sq(f: &TensorFourierFunction, schedule: &WeightSchedule, r: f64) -> Result<f64> {
    check_dim(schedule.m(), f.m())?;
    crate::kernel::check_smoothness(f.d(), r)?;
    let mut acc = NeumaierSum::default();
    for (index, a) in f.coefficients() {
        let weight: f64 = index
            .iter()
            .zip(schedule.gammas())
            .map(|(&(l, _), g)| if l == 0 { 1.0 } else { 1.0 / (spectral_weight(f.d(), r, l) * g) })
            .product();
        acc.add(weight * a * a);
    }
    Ok(acc.total())
}

/// `I_m(f)`: the coefficient of the constant function.
pub fn integrate_exact(f: &TensorFourierFunction) -> f64 {
    f.coefficients().get(&vec![(0, 0); f.m()]).copied().unwrap_or(0.0)
}

/// `Q_{n,m}(f)`: the equal-weight node average.
pub fn qmc_apply(f: &TensorFourierFunction, set: &ProductPointSet) -> Result<f64> {
    check_dim(f.d(), set.d())?;
    check_dim(f.m(), set.m())?;
    let basis = OrthonormalBasis::cached(f.d(), f.max_degree())?;
    let values: Vec<f64> = set.points().par_iter().map(|p| f.eval(&basis, p)).collect::<Result<_>>()?;
    Ok(values.iter().collect::<NeumaierSum>().total() / set.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{c_dr, ExtremaOptions, KernelParams, TruncationPolicy};
    use crate::simplex::SimplexPoint;

    fn kernel(d: usize, r: f64, l: usize) -> Kernel {
        let t = TruncationPolicy::at_degree(d, r, l).unwrap();
        Kernel::new(KernelParams::with_truncation(d, r, 1.0, t).unwrap()).unwrap()
    }

    fn single(c: &[f64]) -> ProductPoint {
        ProductPoint::new(vec![SimplexPoint::new(c.to_vec()).unwrap()]).unwrap()
    }

    #[test]
    fn single_node_collapses_to_diagonal() {
        let k = kernel(2, 4.0, 8);
        let s = WeightSchedule::new(vec![0.7]).unwrap();
        let t = single(&[0.2, 0.5]);
        let want = 0.7 * k.gtilde(&t.components()[0]).unwrap();
        let one = ProductPointSet::new(vec![t.clone()]).unwrap();
        assert!((enm_sq(&k, &s, &one).unwrap() - want).abs() < 1e-14);
        let two = ProductPointSet::new(vec![t.clone(), t]).unwrap();
        assert!((enm_sq(&k, &s, &two).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn permutation_invariance_and_schedule_checks() {
        let k = kernel(2, 4.0, 6);
        let s = WeightSchedule::constant(2, 0.5).unwrap();
        let set = ProductPointSet::random(2, 2, 12, 3).unwrap();
        let mut rev = set.points().to_vec();
        rev.reverse();
        let rev = ProductPointSet::new(rev).unwrap();
        let a = enm_sq(&k, &s, &set).unwrap();
        let b = enm_sq(&k, &s, &rev).unwrap();
        assert!((a - b).abs() < 1e-14);
        let s3 = WeightSchedule::constant(3, 0.5).unwrap();
        assert!(enm_sq(&k, &s3, &set).is_err());
    }

    #[test]
    fn expected_value_scaling_and_ordering() {
        let k = kernel(2, 4.0, 8);
        let s = WeightSchedule::constant(2, 0.5).unwrap();
        let c = c_dr(2, 4.0, 1e-12).unwrap();
        let e8 = expected_enm_sq(&k, 8, &s).unwrap();
        let e16 = expected_enm_sq(&k, 16, &s).unwrap();
        assert_eq!(e8, 2.0 * e16);
        assert!(e8 <= existence_upper_bound(8, &s, c).unwrap());
        let one = WeightSchedule::new(vec![1.0]).unwrap();
        assert!((existence_upper_bound(1, &one, c).unwrap() - c).abs() < 1e-15);
    }

    #[test]
    fn bound_formulas() {
        let s = WeightSchedule::constant(3, 0.4).unwrap();
        let zero = KernelConstants::from_parts(1.0, 0.5, -0.2, 0.8, 0.0, 0.4).unwrap();
        assert!((lower_bound(4, &s, &zero).unwrap() - (-0.75)).abs() < 1e-15);
        assert!((neps_lower(0.3, &s, &zero).unwrap() - 1.0 / 1.09).abs() < 1e-15);
        let pos = KernelConstants::from_parts(1.0, 0.5, -0.2, 0.8, 0.1, 0.4).unwrap();
        let u1 = neps_upper(0.2, &s, 1.0).unwrap();
        let u2 = neps_upper(0.1, &s, 1.0).unwrap();
        assert!((u2 / u1 - 4.0).abs() < 1e-12);
        assert!(u1 <= 0.2f64.powi(-2) * (1.0 * s.sum()).exp());
        assert!(neps_lower(0.2, &s, &pos).unwrap() <= u1);
        let more = WeightSchedule::constant(3, 0.8).unwrap();
        assert!(neps_lower(0.2, &more, &pos).unwrap() > neps_lower(0.2, &s, &pos).unwrap());
        assert!(neps_upper(1.0, &s, 1.0).is_err());
        assert!(neps_upper(0.0, &s, 1.0).is_err());
    }

    #[test]
    fn tensor_function_norms_and_integrals() {
        let (d, r) = (2, 4.0);
        let s = WeightSchedule::new(vec![0.5]).unwrap();
        let one = TensorFourierFunction::constant(d, 1, 1.0).unwrap();
        assert_eq!(hm_norm_sq(&one, &s, r).unwrap(), 1.0);
        let mut p = TensorFourierFunction::new(d, 1).unwrap();
        p.set(vec![(2, 1)], 1.0).unwrap();
        let want = (2.0f64 * 4.0).powf(r) / 0.5;
        assert!((hm_norm_sq(&p, &s, r).unwrap() - want).abs() < 1e-9);
        assert!((hm_norm_sq(&p.scaled(3.0), &s, r).unwrap() - 9.0 * want).abs() < 1e-7);
        assert!(p.set(vec![(2, 3)], 1.0).is_err());

        let mut f = TensorFourierFunction::new(d, 2).unwrap();
        f.set(vec![(2, 0), (0, 0)], 1.0).unwrap();
        assert_eq!(integrate_exact(&f), 0.0);
        let set = ProductPointSet::random(d, 2, 7, 1).unwrap();
        let c = TensorFourierFunction::constant(d, 2, 2.5).unwrap();
        assert_eq!(integrate_exact(&c), 2.5);
        assert!((qmc_apply(&c, &set).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn worst_case_inequality_on_random_functions() {
        let k = kernel(2, 4.0, 6);
        let s = WeightSchedule::constant(2, 0.5).unwrap();
        let set = ProductPointSet::random(2, 2, 10, 8).unwrap();
        let e = enm_from_sq(enm_sq(&k, &s, &set).unwrap());
        for seed in 0..5 {
            let f = TensorFourierFunction::random(2, 2, 3, seed).unwrap();
            let err = (integrate_exact(&f) - qmc_apply(&f, &set).unwrap()).abs();
            let bound = e * hm_norm_sq(&f, &s, 4.0).unwrap().sqrt();
            assert!(err <= bound + 1e-8, "{err} > {bound}");
        }
    }

    #[test]
    fn e0m_diagnostic_is_near_one() {
        let k = kernel(2, 4.0, 6);
        let s = WeightSchedule::constant(2, 0.5).unwrap();
        assert_eq!(e0m(&s), 1.0);
        let mc = e0m_monte_carlo(&k, &s, 20_000, 5).unwrap();
        assert!(mc.z_score(1.0) < 4.0, "{mc:?}");
    }

    #[test]
    fn report_round_trips_and_respects_floor() {
        let k = kernel(2, 4.0, 8);
        let s = WeightSchedule::constant(2, 0.5).unwrap();
        let opts = ExtremaOptions { grid_divisions: 16, ..Default::default() };
        let consts = KernelConstants::compute(&k, s.gamma_star(), &opts, 1e-12).unwrap().constants;
        let set = ProductPointSet::random(2, 2, 16, 2).unwrap();
        let rep = ErrorReport::compute(&k, &s, &set, &consts).unwrap();
        assert!(rep.lower_bound - 1e-6 <= rep.e_nm_sq);
        assert_eq!(rep.e_0m, 1.0);
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<ErrorReport>(&json).unwrap(), rep);
        let set_json = serde_json::to_string(&set).unwrap();
        assert_eq!(serde_json::from_str::<ProductPointSet>(&set_json).unwrap(), set);
    }
}
