//! Floating-point evaluation of exact basis polynomials through their
//! Bernstein (barycentric) form.
//!
//! Monomial coefficients of orthogonal polynomials alternate in sign and grow
//! quickly with the degree, so summing them in `f64` loses most significant
//! digits near the vertices. Rewritten over the barycentric coordinates
//! `λ = (x_1, ..., x_d, 1 - |x|)` every term is a product of non-negative
//! factors and the rounding error stays proportional to the largest
//! Bernstein coefficient.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::poly::{MultiIndex, MultiIndexPolynomial};

/// Coefficients of a family of degree-`ℓ` polynomials over the scaled
/// monomials `λ^α`, `|α| = ℓ`, `α ∈ N^{d+1}`.
#[derive(Debug, Clone)]
pub(crate) struct BarycentricTable {
    degree: usize,
    alphas: Vec<MultiIndex>,
    rows: Vec<Vec<f64>>,
}

fn falling(a: u32, b: u32) -> Option<BigInt> {
    if b > a {
        return None;
    }
    Some(((a - b + 1)..=a).fold(BigInt::one(), |acc, k| acc * BigInt::from(k)))
}

fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

impl BarycentricTable {
    /// `polys[k] / scale[k]` rewritten over `λ^α`; each polynomial must have
    /// degree at most `degree`.
    pub(crate) fn new(d: usize, degree: usize, polys: &[(&MultiIndexPolynomial, f64)]) -> Self {
        let alphas = MultiIndex::of_degree(d + 1, degree);
        let rows = polys
            .iter()
            .map(|(p, scale)| {
                let (den, nums) = p.integer_form();
                alphas
                    .iter()
                    .map(|alpha| {
                        let mut acc = BigInt::zero();
                        for (beta, a) in &nums {
                            let rest = degree - beta.degree();
                            let mut w = factorial(rest as u32);
                            let mut fits = true;
                            for (&ai, &bi) in alpha.exponents().iter().zip(beta.exponents()) {
                                match falling(ai, bi) {
                                    Some(f) => w *= f,
                                    None => {
                                        fits = false;
                                        break;
                                    }
                                }
                            }
                            if fits {
                                acc += a * w;
                            }
                        }
                        // c_α ℓ! / α!, with c_α the Bernstein coefficient
                        let alpha_fact = alpha
                            .exponents()
                            .iter()
                            .fold(BigInt::one(), |f, &e| f * factorial(e));
                        let exact = BigRational::new(acc, &den * alpha_fact);
                        exact.to_f64().unwrap_or(f64::NAN) / scale
                    })
                    .collect()
            })
            .collect();
        BarycentricTable { degree, alphas, rows }
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }

    /// Values of every row at the point with barycentric coordinates `bary`.
    pub(crate) fn eval_into(&self, bary: &[f64], out: &mut Vec<f64>) {
        let powers: Vec<Vec<f64>> = bary
            .iter()
            .map(|&l| {
                let mut p = Vec::with_capacity(self.degree + 1);
                let mut v = 1.0;
                for _ in 0..=self.degree {
                    p.push(v);
                    v *= l;
                }
                p
            })
            .collect();
        let mono: Vec<f64> = self
            .alphas
            .iter()
            .map(|a| {
                a.exponents()
                    .iter()
                    .zip(&powers)
                    .map(|(&e, p)| p[e as usize])
                    .product()
            })
            .collect();
        for row in &self.rows {
            out.push(row.iter().zip(&mono).map(|(c, m)| c * m).sum());
        }
    }
}
