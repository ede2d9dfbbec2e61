//! Weight families and the three-way tractability classification.
//!
//! For `r > d + 1` integration in `H_m` is
//!
//! - strongly polynomially tractable iff `limsup_m Σ_j γ_{m,j} < ∞`,
//! - polynomially tractable iff `β = limsup_m Σ_j γ_{m,j} / log(m+1) < ∞`,
//! - weakly tractable iff `lim_m Σ_j γ_{m,j} / m = 0`.
//!
//! Built-in families are classified from their closed-form sums; custom
//! tables only empirically, from the tail of the computed sums.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::{KernelConstants, WeightSchedule};
use crate::quadrature::NeumaierSum;
use crate::wce::{neps_lower, neps_upper};

/// A rule `γ_{m,j}` for every `m` and `1 <= j <= m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightFamily {
    /// `γ_{m,j} = c j^{-a}`.
    PowerLaw { c: f64, a: f64 },
    /// `γ_{m,j} = c`.
    Constant { c: f64 },
    /// `γ_{m,j} = c / log(j + 1)`.
    LogDecay { c: f64 },
    /// `rows[m-1]` holds `γ_{m,1..m}`; only `m <= rows.len()` is defined.
    Custom { rows: Vec<Vec<f64>> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

impl WeightFamily {
    /// Custom table whose weights do not depend on `m`.
    pub fn from_sequence(seq: &[f64]) -> Result<Self> {
        let rows = (1..=seq.len()).map(|m| seq[..m].to_vec()).collect();
        let f = WeightFamily::Custom { rows };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFamily::PowerLaw { c, a } => {
                positive("c", *c)?;
                if !(*a >= 0.0 && a.is_finite()) {
                    return Err(Error::invalid(format!("power-law exponent must be >= 0, got {a}")));
                }
            }
            WeightFamily::Constant { c } | WeightFamily::LogDecay { c } => positive("c", *c)?,
            WeightFamily::Custom { rows } => {
                if rows.is_empty() {
                    return Err(Error::invalid("custom weight table is empty"));
                }
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != i + 1 {
                        return Err(Error::invalid(format!(
                            "custom table row {} must hold {} weights, has {}",
                            i + 1,
                            i + 1,
                            row.len()
                        )));
                    }
                    for g in row {
                        positive("weight", *g)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest `m` for which weights are defined.
    pub fn max_m(&self) -> Option<usize> {
        match self {
            WeightFamily::Custom { rows } => Some(rows.len()),
            _ => None,
        }
    }

    /// `γ_{m,j}`, `1 <= j <= m`.
    pub fn gamma(&self, m: usize, j: usize) -> Result<f64> {
        if j == 0 || j > m {
            return Err(Error::invalid(format!("coordinate index j = {j} outside 1..={m}")));
        }
        Ok(match self {
            WeightFamily::PowerLaw { c, a } => c * (j as f64).powf(-a),
            WeightFamily::Constant { c } => *c,
            WeightFamily::LogDecay { c } => c / ((j + 1) as f64).ln(),
            WeightFamily::Custom { rows } => *rows
                .get(m - 1)
                .ok_or_else(|| Error::invalid(format!("custom weight table stops at m = {}", rows.len())))?
                .get(j - 1)
                .expect("validated row length"),
        })
    }

    pub fn schedule(&self, m: usize) -> Result<WeightSchedule> {
        self.validate()?;
        if m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        WeightSchedule::new((1..=m).map(|j| self.gamma(m, j)).collect::<Result<_>>()?)
    }

    /// `sup_{m,j} γ_{m,j}`.
    pub fn gamma_star(&self) -> Result<f64> {
        self.validate()?;
        Ok(match self {
            WeightFamily::PowerLaw { c, .. } | WeightFamily::Constant { c } => *c,
            WeightFamily::LogDecay { c } => c / 2f64.ln(),
            WeightFamily::Custom { rows } => rows.iter().flatten().cloned().fold(f64::MIN, f64::max),
        })
    }

    /// `Σ_{j=1}^m γ_{m,j}`.
    pub fn sum(&self, m: usize) -> Result<f64> {
        Ok(self.schedule(m)?.sum())
    }
}

/// A limit value that may be `+∞`; serialized as a number or `"infinity"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    Infinite,
}

impl Limit {
    pub fn is_finite(&self) -> bool {
        matches!(self, Limit::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Limit::Finite(v) => *v,
            Limit::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Limit::Finite(v) => s.serialize_f64(*v),
            Limit::Infinite => s.serialize_str("infinity"),
        }
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(Limit::Finite(v)),
            Raw::Text(t) if t == "infinity" => Ok(Limit::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"infinity\", got {t:?}"))),
        }
    }
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evidence {
    /// Closed-form limits of a built-in family.
    Symbolic,
    /// Extrapolated from finitely many `m` of a custom table.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractabilityVerdict {
    pub strong_polynomial: bool,
    pub polynomial: bool,
    pub weak: bool,
    /// `limsup Σγ / log(m+1)`.
    pub beta: Limit,
    /// `limsup Σγ`.
    pub limit_sum: Limit,
    /// `lim Σγ / m`.
    pub limit_ratio_m: f64,
    pub evidence: Evidence,
}

/// `ζ(a)`, `a > 1`, by a partial sum plus an Euler–Maclaurin tail.
pub fn zeta(a: f64) -> f64 {
    const N: usize = 1000;
    let head: NeumaierSum = (1..N).map(|j| (j as f64).powf(-a)).collect();
    let n = N as f64;
    head.total() + n.powf(1.0 - a) / (a - 1.0) + 0.5 * n.powf(-a) + a * n.powf(-a - 1.0) / 12.0
        - a * (a + 1.0) * (a + 2.0) * n.powf(-a - 3.0) / 720.0
}

/// Relative change below which an empirical sequence counts as settled.
const SETTLED: f64 = 0.05;

/// Decides the three conditions for `family`.
pub fn classify(family: &WeightFamily) -> Result<TractabilityVerdict> {
    family.validate()?;
    let verdict = |strong, poly, weak, beta, limit_sum, limit_ratio_m| TractabilityVerdict {
        strong_polynomial: strong,
        polynomial: poly,
        weak,
        beta,
        limit_sum,
        limit_ratio_m,
        evidence: Evidence::Symbolic,
    };
    Ok(match *family {
        WeightFamily::PowerLaw { c, a } if a > 1.0 => {
            verdict(true, true, true, Limit::Finite(0.0), Limit::Finite(c * zeta(a)), 0.0)
        }
        // Σ c/j = c log m + O(1)
        WeightFamily::PowerLaw { c, a } if a == 1.0 => verdict(false, true, true, Limit::Finite(c), Limit::Infinite, 0.0),
        // Σ c j^{-a} ~ c m^{1-a} / (1-a)
        WeightFamily::PowerLaw { c, a } => {
            let ratio = if a > 0.0 { 0.0 } else { c };
            verdict(false, false, a > 0.0, Limit::Infinite, Limit::Infinite, ratio)
        }
        WeightFamily::Constant { c } => verdict(false, false, false, Limit::Infinite, Limit::Infinite, c),
        // Σ c/log(j+1) ~ c m / log m
        WeightFamily::LogDecay { .. } => verdict(false, false, true, Limit::Infinite, Limit::Infinite, 0.0),
        WeightFamily::Custom { ref rows } => classify_empirical(family, rows.len())?,
    })
}

fn classify_empirical(family: &WeightFamily, cap: usize) -> Result<TractabilityVerdict> {
    if cap < 4 {
        return Err(Error::invalid("custom weight tables need at least 4 rows to extrapolate"));
    }
    let (hi, lo) = (cap, cap / 2);
    let (s_hi, s_lo) = (family.sum(hi)?, family.sum(lo)?);
    let log = |m: usize| ((m + 1) as f64).ln();
    let settled = |a: f64, b: f64| b - a <= SETTLED * b.abs().max(1.0);
    let strong = settled(s_lo, s_hi);
    let polynomial = strong || settled(s_lo / log(lo), s_hi / log(hi));
    let ratio_hi = s_hi / hi as f64;
    let weak = polynomial || ratio_hi <= (1.0 - SETTLED) * (s_lo / lo as f64);
    Ok(TractabilityVerdict {
        strong_polynomial: strong,
        polynomial,
        weak,
        beta: if strong {
            Limit::Finite(0.0)
        } else if polynomial {
            Limit::Finite(s_hi / log(hi))
        } else {
            Limit::Infinite
        },
        limit_sum: if strong { Limit::Finite(s_hi) } else { Limit::Infinite },
        limit_ratio_m: if weak { 0.0 } else { ratio_hi },
        evidence: Evidence::Empirical,
    })
}

/// One row of a bound curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m: usize,
    pub sum_gamma: f64,
    /// Nodes sufficient for error `ε`.
    pub upper: f64,
    /// Nodes necessary for error `ε`.
    pub lower: f64,
    /// `upper · ε²`, independent of `ε`.
    pub upper_eps2: f64,
    /// `c_{d,r} Σγ / log(m+1)`: `upper <= ε^{-2} (m+1)^{m_exponent}`.
    pub m_exponent: f64,
    pub strong_polynomial: bool,
    pub polynomial: bool,
    pub weak: bool,
}

/// Both node-count bounds for every `m` in `m_values`.
pub fn bound_curve(family: &WeightFamily, eps: f64, m_values: &[usize], consts: &KernelConstants) -> Result<Vec<CurveRow>> {
    let verdict = classify(family)?;
    m_values
        .iter()
        .map(|&m| {
            let schedule = family.schedule(m)?;
            let upper = neps_upper(eps, &schedule, consts.c_dr)?;
            let sum_gamma = schedule.sum();
            Ok(CurveRow {
                m,
                sum_gamma,
                upper,
                lower: neps_lower(eps, &schedule, consts)?,
                upper_eps2: upper * eps * eps,
                m_exponent: consts.c_dr * sum_gamma / ((m + 1) as f64).ln(),
                strong_polynomial: verdict.strong_polynomial,
                polynomial: verdict.polynomial,
                weak: verdict.weak,
            })
        })
        .collect()
}

/// Slope of `log neps_upper` against `log(m+1)` between `m_lo` and `m_hi`.
pub fn upper_log_slope(family: &WeightFamily, eps: f64, c_dr: f64, m_lo: usize, m_hi: usize) -> Result<f64> {
    if m_lo == 0 || m_hi <= m_lo {
        return Err(Error::invalid("slope needs 1 <= m_lo < m_hi"));
    }
    let lo = neps_upper(eps, &family.schedule(m_lo)?, c_dr)?.ln();
    let hi = neps_upper(eps, &family.schedule(m_hi)?, c_dr)?.ln();
    Ok((hi - lo) / (((m_hi + 1) as f64).ln() - ((m_lo + 1) as f64).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(v: &TractabilityVerdict) -> (bool, bool, bool) {
        (v.strong_polynomial, v.polynomial, v.weak)
    }

    #[test]
    fn built_in_verdicts() {
        let v = classify(&WeightFamily::PowerLaw { c: 1.0, a: 2.0 }).unwrap();
        assert_eq!(flags(&v), (true, true, true));
        assert!((v.limit_sum.value() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        let v = classify(&WeightFamily::PowerLaw { c: 0.7, a: 1.0 }).unwrap();
        assert_eq!(flags(&v), (false, true, true));
        assert_eq!(v.beta, Limit::Finite(0.7));
        let v = classify(&WeightFamily::Constant { c: 0.5 }).unwrap();
        assert_eq!(flags(&v), (false, false, false));
        assert_eq!(v.limit_ratio_m, 0.5);
        let v = classify(&WeightFamily::LogDecay { c: 1.0 }).unwrap();
        assert_eq!(flags(&v), (false, false, true));
        let v = classify(&WeightFamily::PowerLaw { c: 1.0, a: 0.5 }).unwrap();
        assert_eq!(flags(&v), (false, false, true));
        let v = classify(&WeightFamily::PowerLaw { c: 1.0, a: 0.0 }).unwrap();
        assert_eq!(flags(&v), (false, false, false));
    }

    #[test]
    fn empirical_verdicts_match_symbolic_ones() {
        for fam in [
            WeightFamily::PowerLaw { c: 1.0, a: 2.0 },
            WeightFamily::PowerLaw { c: 1.0, a: 1.0 },
            WeightFamily::Constant { c: 0.5 },
            WeightFamily::LogDecay { c: 1.0 },
        ] {
            let seq: Vec<f64> = (1..=1024).map(|j| fam.gamma(1024, j).unwrap()).collect();
            let custom = WeightFamily::from_sequence(&seq).unwrap();
            let e = classify(&custom).unwrap();
            assert_eq!(e.evidence, Evidence::Empirical);
            assert_eq!(flags(&e), flags(&classify(&fam).unwrap()), "{fam:?}");
        }
    }

    #[test]
    fn validation() {
        assert!(WeightFamily::PowerLaw { c: 0.0, a: 1.0 }.validate().is_err());
        assert!(WeightFamily::PowerLaw { c: 1.0, a: -1.0 }.validate().is_err());
        assert!(WeightFamily::Constant { c: f64::INFINITY }.validate().is_err());
        assert!(WeightFamily::Custom { rows: vec![vec![1.0], vec![1.0]] }.validate().is_err());
        assert!(WeightFamily::Custom { rows: vec![vec![1.0], vec![1.0, 2.0]] }.validate().is_ok());
        let fam = WeightFamily::from_sequence(&[1.0, 0.5]).unwrap();
        assert!(fam.schedule(3).is_err());
        assert_eq!(WeightFamily::LogDecay { c: 1.0 }.gamma_star().unwrap(), 1.0 / 2f64.ln());
    }

    #[test]
    fn harmonic_slope_tracks_beta() {
        let fam = WeightFamily::PowerLaw { c: 1.0, a: 1.0 };
        let c_dr = 0.3;
        let slope = upper_log_slope(&fam, 0.1, c_dr, 512, 1024).unwrap();
        let beta = classify(&fam).unwrap().beta.value();
        assert!((slope / c_dr - beta).abs() / beta < 0.05, "{slope}");
    }

    #[test]
    fn curves_follow_verdicts() {
        let consts = KernelConstants::from_parts(0.3, 0.05, -0.05, 0.1, 0.001, 1.0).unwrap();
        let fam = WeightFamily::PowerLaw { c: 1.0, a: 2.0 };
        let ms: Vec<usize> = (0..=10).map(|k| 1 << k).collect();
        let rows = bound_curve(&fam, 0.1, &ms, &consts).unwrap();
        let cap = 100.0 * (consts.c_dr * std::f64::consts::PI.powi(2) / 6.0).exp();
        for r in &rows {
            assert!(r.upper <= cap * (1.0 + 1e-9));
            assert!(r.lower <= r.upper);
            assert!((r.upper_eps2 - r.upper * 0.01).abs() < 1e-12 * r.upper);
        }
        let one = &rows[0];
        assert!((one.upper - 100.0 * (1.0 + consts.c_dr)).abs() < 1e-9);
        let flat = bound_curve(&WeightFamily::Constant { c: 1.0 }, 0.1, &[10, 20, 40], &consts).unwrap();
        let l: Vec<f64> = flat.iter().map(|r| r.lower.ln()).collect();
        assert!(((l[2] - l[1]) - 2.0 * (l[1] - l[0])).abs() < 1e-9);
        let json = serde_json::to_string(&classify(&fam).unwrap()).unwrap();
        let back: TractabilityVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, classify(&fam).unwrap());
        let inf = serde_json::to_string(&classify(&WeightFamily::Constant { c: 1.0 }).unwrap()).unwrap();
        assert!(inf.contains("\"infinity\""));
    }
}
