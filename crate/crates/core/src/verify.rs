//! A compact run of every checkable invariant, used by the `verify`
//! subcommand. Sample sizes are scaled down from the full acceptance suite
//! so the run stays interactive.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernel::{self, ExtremaOptions, Kernel, KernelConstants, KernelParams, TruncationPolicy, WeightSchedule};
use crate::orthopoly::{self, apply_nabla, OrthonormalBasis};
use crate::search::{self, SearchConfig};
use crate::simplex::{rng_from_seed, sample_point, substream_seed};
use crate::tract::{self, WeightFamily};
use crate::wce::{self, McEstimate, ProductPointSet, TensorFourierFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub d: usize,
    pub r: f64,
    pub max_degree: usize,
    pub gamma: f64,
    pub seed: u64,
    pub grid_divisions: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { d: 2, r: 4.0, max_degree: 8, gamma: 0.5, seed: 20240601, grid_divisions: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), passed, detail }
}

/// Smallest eigenvalue is above `-shift` iff `A + shift·I` has a Cholesky
/// factor.
pub fn is_psd_with_shift(a: &[Vec<f64>], shift: f64) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j] + if i == j { shift } else { 0.0 };
            s -= l[i][..j].iter().zip(&l[j][..j]).map(|(a, b)| a * b).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

/// Runs every check, in a fixed order.
pub fn run(cfg: &VerifyConfig) -> Result<Vec<CheckOutcome>> {
    let (d, r, l) = (cfg.d, cfg.r, cfg.max_degree);
    let basis = OrthonormalBasis::cached(d, l)?;
    let mut out = Vec::new();
    let mut rng = rng_from_seed(cfg.seed);

    // exact orthonormality
    let mut bad = 0;
    let idx: Vec<(usize, usize)> = (0..=l).flat_map(|a| (0..orthopoly::dim_v(d, a)).map(move |k| (a, k))).collect();
    for (i, a) in idx.iter().enumerate() {
        for b in &idx[i..] {
            let want = if a == b { BigRational::one() } else { BigRational::zero() };
            if basis.inner_product(*a, *b)? != Some(want) {
                bad += 1;
            }
        }
    }
    out.push(outcome("orthonormality", bad == 0, format!("{} basis functions, {bad} non-delta products", idx.len())));

    // eigenfunctions of ∇ and zero mean
    let (mut eig_bad, mut mean_bad) = (0, 0);
    for degree in 0..=l {
        let lambda = BigRational::from_integer(BigInt::from(-((degree * (degree + d)) as i64)));
        for e in basis.elements(degree)? {
            if degree <= 6 && apply_nabla(&e.poly) != e.poly.scale(&lambda) {
                eig_bad += 1;
            }
            if degree >= 1 && !e.poly.integral().is_zero() {
                mean_bad += 1;
            }
        }
    }
    out.push(outcome("eigenfunctions", eig_bad == 0, format!("{eig_bad} failures for degrees <= {}", l.min(6))));
    out.push(outcome("zero-mean", mean_bad == 0, format!("{mean_bad} failures")));

    // dual-path degree kernels and their bound
    let mut worst: f64 = 0.0;
    let mut bound_bad = 0;
    for _ in 0..20 {
        let x = sample_point(d, &mut rng);
        let y = sample_point(d, &mut rng);
        for degree in 1..=l {
            let direct = basis.degree_kernel_direct(degree, &x, &y)?;
            let closed = orthopoly::degree_kernel_closed(d, degree, &x, &y)?;
            worst = worst.max((direct - closed).abs());
            let b = orthopoly::degree_kernel_bound(d, degree)?.to_f64().unwrap_or(f64::INFINITY);
            if direct > b {
                bound_bad += 1;
            }
        }
    }
    out.push(outcome("dual-path-kernel", worst <= 1e-9, format!("max |direct - closed| = {worst:.3e}")));
    out.push(outcome("degree-kernel-bound", bound_bad == 0, format!("{bound_bad} violations")));

    // kernel: symmetry, PSD, |g| <= c_dr
    let trunc = TruncationPolicy::at_degree(d, r, l)?;
    let params = KernelParams::with_truncation(d, r, cfg.gamma, trunc)?;
    let k = Kernel::with_basis(params, basis.clone())?;
    let c_dr = kernel::c_dr(d, r, 1e-12)?;
    let pts: Vec<_> = (0..30).map(|_| sample_point(d, &mut rng)).collect();
    let gram: Vec<Vec<f64>> = pts.iter().map(|x| pts.iter().map(|y| k.k1_eval(x, y)).collect()).collect::<Result<_>>()?;
    let sym = gram.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, v)| (v - gram[j][i]).abs() <= 1e-12));
    out.push(outcome("kernel-psd", sym && is_psd_with_shift(&gram, 1e-8), "30x30 Gram matrix".into()));
    let g_worst = pts
        .iter()
        .zip(pts.iter().rev())
        .map(|(x, y)| k.g_eval(x, y).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(outcome(
        "kernel-bound",
        g_worst <= c_dr + trunc.tail_tolerance,
        format!("max |g| = {g_worst:.4e}, c_dr = {c_dr:.4e}"),
    ));

    // e_{0,m} diagnostic
    let schedule = WeightSchedule::constant(2, cfg.gamma)?;
    let mc = wce::e0m_monte_carlo(&k, &schedule, 10_000, substream_seed(cfg.seed, 1))?;
    out.push(outcome("e0m", mc.z_score(1.0) <= 4.0, format!("mean {:.6} ± {:.2e}", mc.mean, mc.std_err)));

    // mean-square identity
    let n = 8;
    let e2s: Vec<f64> = (0..200)
        .map(|i| wce::enm_sq(&k, &schedule, &ProductPointSet::random(d, 2, n, substream_seed(cfg.seed, 100 + i))?))
        .collect::<Result<_>>()?;
    let est = McEstimate::from_samples(&e2s);
    let expected = wce::expected_enm_sq(&k, n, &schedule)?;
    out.push(outcome(
        "mean-square",
        est.z_score(expected) <= 3.0,
        format!("empirical {:.5e} ± {:.1e}, expected {expected:.5e}", est.mean, est.std_err),
    ));

    // sandwich
    let opts = ExtremaOptions { grid_divisions: cfg.grid_divisions, ..Default::default() };
    let consts = KernelConstants::compute(&k, schedule.gamma_star(), &opts, 1e-12)?.constants;
    let floor_bad = e2s.iter().filter(|e| **e < wce::lower_bound(n, &schedule, &consts).unwrap_or(f64::NAN) - 1e-6).count();
    let scfg = SearchConfig { n: 16, m: 2, d, schedule: schedule.clone(), restarts: 16, exchange_iters: 0, seed: cfg.seed };
    let best = search::best_of_random(&k, &scfg, &consts)?;
    let ok = floor_bad == 0
        && best.report.e_nm_sq >= best.report.lower_bound - 1e-6
        && best.report.e_nm_sq <= best.report.upper_bound + 1e-6;
    out.push(outcome(
        "sandwich",
        ok,
        format!("best-of-16 e2 = {:.4e} in [{:.4e}, {:.4e}]", best.report.e_nm_sq, best.report.lower_bound, best.report.upper_bound),
    ));

    // worst-case inequality
    let mut wc_bad = 0;
    for s in 0..5u64 {
        let set = ProductPointSet::random(d, 2, 10, substream_seed(cfg.seed, 1000 + s))?;
        let e = wce::enm_from_sq(wce::enm_sq(&k, &schedule, &set)?);
        for f_seed in 0..5u64 {
            let f = TensorFourierFunction::random(d, 2, 3.min(l), substream_seed(cfg.seed, 2000 + 10 * s + f_seed))?;
            let gap = (wce::integrate_exact(&f) - wce::qmc_apply(&f, &set)?).abs();
            if gap > e * wce::hm_norm_sq(&f, &schedule, r)?.sqrt() + 1e-8 {
                wc_bad += 1;
            }
        }
    }
    out.push(outcome("worst-case-inequality", wc_bad == 0, format!("{wc_bad} violations in 25 cases")));

    // tractability nesting
    let fams = [
        WeightFamily::PowerLaw { c: 1.0, a: 2.0 },
        WeightFamily::PowerLaw { c: 1.0, a: 1.0 },
        WeightFamily::Constant { c: 0.5 },
        WeightFamily::LogDecay { c: 1.0 },
    ];
    let mut nest_ok = true;
    for f in &fams {
        let v = tract::classify(f)?;
        nest_ok &= (!v.strong_polynomial || v.polynomial) && (!v.polynomial || v.weak);
    }
    out.push(outcome("tractability-nesting", nest_ok, "built-in families".into()));

    // truncation honesty: extend to 2L with closed-form degree kernels
    let mut diff: f64 = 0.0;
    for _ in 0..20 {
        let x = sample_point(d, &mut rng);
        let y = sample_point(d, &mut rng);
        let mut extra = 0.0;
        for degree in l + 1..=2 * l {
            extra += kernel::spectral_weight(d, r, degree) * orthopoly::degree_kernel_closed(d, degree, &x, &y)?;
        }
        diff = diff.max(extra.abs());
    }
    out.push(outcome(
        "truncation-honesty",
        diff <= 2.0 * trunc.tail_tolerance,
        format!("max change {diff:.3e} vs tolerance {:.3e}", trunc.tail_tolerance),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_psd_test() {
        assert!(is_psd_with_shift(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0));
        assert!(!is_psd_with_shift(&[vec![1.0, 2.0], vec![2.0, 1.0]], 1e-8));
        assert!(is_psd_with_shift(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1e-8));
    }

    #[test]
    fn small_suite_passes() {
        let cfg = VerifyConfig { max_degree: 5, grid_divisions: 8, ..Default::default() };
        let res = run(&cfg).unwrap();
        for c in &res {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert_eq!(res.len(), 13);
    }
}
