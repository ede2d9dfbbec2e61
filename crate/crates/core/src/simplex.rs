//! The standard simplex `T^d = {x : x_i >= 0, x_1 + ... + x_d <= 1}`.
//!
//! Points carry only the `d` free coordinates; the barycentric remainder
//! `x_{d+1} = 1 - |x|` is derived on demand.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::poly::MultiIndex;

/// Slack allowed on the simplex constraints for floating inputs.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A point of `T^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("simplex point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite() || *c < -SIMPLEX_TOL) {
            return Err(Error::invalid(format!("coordinate outside T^d: {coords:?}")));
        }
        let sum: f64 = coords.iter().sum();
        if sum > 1.0 + SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "coordinates sum to {sum} > 1: {coords:?}"
            )));
        }
        Ok(SimplexPoint { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `1 - |x|`, clamped at zero.
    pub fn remainder(&self) -> f64 {
        (1.0 - self.coords.iter().sum::<f64>()).max(0.0)
    }

    /// All `d + 1` barycentric coordinates `(x_1, ..., x_d, 1 - |x|)`.
    pub fn barycentric(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.coords.iter().map(|c| c.max(0.0)).collect();
        b.push(self.remainder());
        b
    }

    pub fn centroid(d: usize) -> Self {
        SimplexPoint { coords: vec![1.0 / (d as f64 + 1.0); d] }
    }

    /// Vertex `e_i` for `i < d`, or the origin for `i == d`.
    pub fn vertex(d: usize, i: usize) -> Self {
        let mut coords = vec![0.0; d];
        if i < d {
            coords[i] = 1.0;
        }
        SimplexPoint { coords }
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.coords
    }
}

/// A point of `(T^d)^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SimplexPoint>", into = "Vec<SimplexPoint>")]
pub struct ProductPoint {
    components: Vec<SimplexPoint>,
}

impl ProductPoint {
    pub fn new(components: Vec<SimplexPoint>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::invalid("product point needs at least one component"))?;
        let d = first.dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        Ok(ProductPoint { components })
    }

    /// Number of simplex factors `m`.
    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn d(&self) -> usize {
        self.components[0].dim()
    }

    pub fn components(&self) -> &[SimplexPoint] {
        &self.components
    }

    /// Flattened `m * d` coordinates, component-major.
    pub fn flat(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.coords().iter().copied()).collect()
    }

    pub fn from_flat(coords: &[f64], d: usize, m: usize) -> Result<Self> {
        check_dim(d * m, coords.len())?;
        let components = coords
            .chunks(d)
            .map(|c| SimplexPoint::new(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        ProductPoint::new(components)
    }
}

impl TryFrom<Vec<SimplexPoint>> for ProductPoint {
    type Error = Error;

    fn try_from(v: Vec<SimplexPoint>) -> Result<Self> {
        ProductPoint::new(v)
    }
}

impl From<ProductPoint> for Vec<SimplexPoint> {
    fn from(p: ProductPoint) -> Self {
        p.components
    }
}

/// Deterministic generator for a given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of sub-stream `index` derived from `seed` (splitmix64 finalizer).
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform variate on the grid `k * 2^-53`, `0 <= k < 2^53`.
///
/// Differences and partial sums of such values are exact in `f64`, which is
/// what keeps the spacings below inside the simplex without any correction.
fn unit_dyadic<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One uniform point of `T^d` by sorted-uniform spacings.
pub fn sample_point<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> SimplexPoint {
    let mut u: Vec<f64> = (0..d).map(|_| unit_dyadic(rng)).collect();
    u.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    let coords = u
        .into_iter()
        .map(|v| {
            let s = v - prev;
            prev = v;
            s
        })
        .collect();
    SimplexPoint { coords }
}

pub fn sample_product_point<R: RngCore + ?Sized>(d: usize, m: usize, rng: &mut R) -> ProductPoint {
    ProductPoint { components: (0..m).map(|_| sample_point(d, rng)).collect() }
}

/// `count` i.i.d. uniform points of `T^d`, reproducible for a given seed.
pub fn uniform_sample(d: usize, count: usize, seed: u64) -> Result<Vec<SimplexPoint>> {
    if d == 0 || count == 0 {
        return Err(Error::invalid(format!(
            "uniform_sample needs d >= 1 and count >= 1 (got d = {d}, count = {count})"
        )));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..count).map(|_| sample_point(d, &mut rng)).collect())
}

fn factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `∫_{T^d} x^alpha dx = alpha! / (|alpha| + d)!`, exactly.
pub fn monomial_integral(alpha: &MultiIndex, d: usize) -> Result<BigRational> {
    check_dim(d, alpha.dim())?;
    let num = alpha
        .exponents()
        .iter()
        .fold(BigInt::one(), |acc, &a| acc * factorial(a as usize));
    Ok(BigRational::new(num, factorial(alpha.degree() + d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn monomial_integral_small_cases() {
        let one = MultiIndex::new(vec![0]);
        assert_eq!(monomial_integral(&one, 1).unwrap(), rat(1, 1));
        assert_eq!(monomial_integral(&MultiIndex::new(vec![0, 0]), 2).unwrap(), rat(1, 2));
        assert_eq!(monomial_integral(&MultiIndex::new(vec![1, 1]), 2).unwrap(), rat(1, 24));
        assert_eq!(monomial_integral(&MultiIndex::new(vec![0, 0, 0]), 3).unwrap(), rat(1, 6));
    }

    #[test]
    fn monomial_integral_rejects_mismatch() {
        let err = monomial_integral(&MultiIndex::new(vec![1, 0]), 3).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, actual: 2 });
    }

    #[test]
    fn monomial_integral_matches_monte_carlo() {
        // 20 pseudo-random multi-indices, |alpha| <= 6, d <= 3; 10^7 samples each
        // shared across indices of the same dimension.
        let mut picker = rng_from_seed(99);
        let mut cases: Vec<MultiIndex> = Vec::new();
        while cases.len() < 20 {
            let d = 1 + (picker.next_u32() % 3) as usize;
            let e: Vec<u32> = (0..d).map(|_| picker.next_u32() % 4).collect();
            if e.iter().sum::<u32>() <= 6 {
                cases.push(MultiIndex::new(e));
            }
        }
        let samples = 10_000_000usize;
        for d in 1..=3 {
            let mine: Vec<&MultiIndex> = cases.iter().filter(|a| a.dim() == d).collect();
            if mine.is_empty() {
                continue;
            }
            let mut rng = rng_from_seed(1000 + d as u64);
            let mut sum = vec![0.0f64; mine.len()];
            let mut sum_sq = vec![0.0f64; mine.len()];
            for _ in 0..samples {
                let p = sample_point(d, &mut rng);
                for (k, a) in mine.iter().enumerate() {
                    let v: f64 = a
                        .exponents()
                        .iter()
                        .zip(p.coords())
                        .map(|(&e, &x)| x.powi(e as i32))
                        .product();
                    sum[k] += v;
                    sum_sq[k] += v * v;
                }
            }
            let vol = 1.0 / (1..=d).product::<usize>() as f64;
            for (k, a) in mine.iter().enumerate() {
                let mean = sum[k] / samples as f64;
                let var = sum_sq[k] / samples as f64 - mean * mean;
                let se = (var / samples as f64).sqrt() * vol;
                let exact = monomial_integral(a, d).unwrap().to_f64().unwrap();
                let est = mean * vol;
                assert!(
                    (est - exact).abs() <= 4.0 * se + 1e-15,
                    "alpha {:?}: MC {est} vs exact {exact} (se {se})",
                    a.exponents()
                );
            }
        }
    }

    #[test]
    fn uniform_sample_rejects_degenerate_requests() {
        assert!(uniform_sample(0, 3, 1).is_err());
        assert!(uniform_sample(2, 0, 1).is_err());
    }

    #[test]
    fn uniform_sample_is_deterministic() {
        let a = uniform_sample(1, 3, 7).unwrap();
        let b = uniform_sample(1, 3, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.0..=1.0).contains(&p.coords()[0])));
        assert_ne!(a, uniform_sample(1, 3, 8).unwrap());
    }

    #[test]
    fn uniform_sample_mean_and_support() {
        let pts = uniform_sample(2, 100_000, 1).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.coords()[0]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        let se = (var / xs.len() as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() <= 3.0 * se, "mean {mean}, se {se}");

        let pts = uniform_sample(3, 100_000, 2).unwrap();
        assert!(pts.iter().all(|p| p.coords().iter().sum::<f64>() <= 1.0));
        assert!(pts.iter().all(|p| p.coords().iter().all(|&c| c >= 0.0)));
    }

    #[test]
    fn point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![-0.1, 0.2]).is_err());
        assert!(SimplexPoint::new(vec![]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        let p = SimplexPoint::new(vec![0.25, 0.25]).unwrap();
        assert_eq!(p.barycentric(), vec![0.25, 0.25, 0.5]);
        assert!(ProductPoint::new(vec![p.clone(), SimplexPoint::centroid(3)]).is_err());
        let q = ProductPoint::from_flat(&[0.1, 0.2, 0.3, 0.4], 2, 2).unwrap();
        assert_eq!(q.m(), 2);
        assert_eq!(q.flat(), vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn substreams_differ() {
        assert_ne!(substream_seed(1, 0), substream_seed(1, 1));
        assert_ne!(substream_seed(1, 0), substream_seed(2, 0));
    }

    proptest::proptest! {
        #[test]
        fn samples_stay_inside(seed in proptest::prelude::any::<u64>(), d in 1usize..6) {
            let pts = uniform_sample(d, 64, seed).unwrap();
            for p in pts {
                proptest::prop_assert!(p.coords().iter().all(|&c| c >= 0.0));
                proptest::prop_assert!(p.coords().iter().sum::<f64>() <= 1.0);
            }
        }
    }
}
