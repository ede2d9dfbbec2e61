//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are keyed by [`MultiIndex`] and iterate in graded lexicographic
//! order, so every traversal (evaluation, serialization, Gram–Schmidt) is
//! reproducible.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{check_dim, Result};
use crate::simplex::SimplexPoint;

/// Exponent vector `(n_1, ..., n_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex { exponents }
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex { exponents: vec![0; d] }
    }

    pub fn unit(d: usize, i: usize) -> Self {
        let mut e = vec![0; d];
        e[i] = 1;
        MultiIndex { exponents: e }
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Total degree `|n|`.
    pub fn degree(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    /// All multi-indices of dimension `d` and total degree `degree`, in
    /// graded lexicographic order.
    pub fn of_degree(d: usize, degree: usize) -> Vec<MultiIndex> {
        fn fill(rest: usize, slot: usize, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if slot + 1 == cur.len() {
                cur[slot] = rest as u32;
                out.push(MultiIndex::new(cur.clone()));
                return;
            }
            for e in (0..=rest).rev() {
                cur[slot] = e as u32;
                fill(rest - e, slot + 1, cur, out);
            }
        }
        assert!(d >= 1, "multi-index dimension must be positive");
        let mut out = Vec::new();
        fill(degree, 0, &mut vec![0; d], &mut out);
        out
    }

    pub fn checked_add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.add_unchecked(other))
    }

    fn add_unchecked(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            exponents: self.exponents.iter().zip(&other.exponents).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Graded lexicographic: lower total degree first, then the larger leading
/// exponent first (`x1^2 < x1 x2 < x2^2`).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `d` variables with exact rational coefficients.
///
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexPolynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

impl MultiIndexPolynomial {
    pub fn zero(dim: usize) -> Self {
        MultiIndexPolynomial { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, BigRational::one())
    }

    pub fn monomial(alpha: MultiIndex, c: BigRational) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function `x_i` (zero-based `i`).
    pub fn variable(dim: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, i), BigRational::one())
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// keys are summed.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, BigRational)>,
    {
        let mut p = Self::zero(dim);
        for (alpha, c) in terms {
            check_dim(dim, alpha.dim())?;
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> BigRational {
        self.terms.get(alpha).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().next_back().map(MultiIndex::degree)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(alpha) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        MultiIndexPolynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(a, v)| (a.clone(), v * c)).collect(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &Self, c: &BigRational) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (a, v) in &other.terms {
            out.add_term(a.clone(), v * c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut out = Self::zero(self.dim);
        for (a, u) in &self.terms {
            for (b, v) in &other.terms {
                out.add_term(a.add_unchecked(b), u * v);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.dim), |acc, _| acc.checked_mul(self).expect("same dimension"))
    }

    /// Partial derivative with respect to `x_i` (zero-based).
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (a, c) in &self.terms {
            let e = a.exponents[i];
            if e == 0 {
                continue;
            }
            let mut b = a.clone();
            b.exponents[i] -= 1;
            out.add_term(b, c * BigRational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Terms of maximal total degree only.
    pub fn top_degree_part(&self) -> Self {
        let Some(deg) = self.degree() else {
            return self.clone();
        };
        MultiIndexPolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| a.degree() == deg)
                .map(|(a, c)| (a.clone(), c.clone()))
                .collect(),
        }
    }

    /// Common denominator `D` and integer numerators with `self = (1/D) Σ A_a x^a`.
    pub fn integer_form(&self) -> (BigInt, Vec<(&MultiIndex, BigInt)>) {
        let den = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = self
            .terms
            .iter()
            .map(|(a, c)| (a, c.numer() * (&den / c.denom())))
            .collect();
        (den, nums)
    }

    /// Positive rational multiple of `self` with coprime integer coefficients
    /// whose leading (graded-lex largest) coefficient is positive.
    pub fn primitive(&self) -> (Self, BigRational) {
        if self.is_zero() {
            return (self.clone(), BigRational::one());
        }
        let (den, nums) = self.integer_form();
        let g = nums.iter().fold(BigInt::zero(), |acc, (_, n)| acc.gcd(n));
        let lead_negative = nums.last().map(|(_, n)| n.is_negative()).unwrap_or(false);
        let mut factor = BigRational::new(den, g);
        if lead_negative {
            factor = -factor;
        }
        (self.scale(&factor), factor)
    }

    /// Floating-point value at `x`, summing terms in graded-lex order.
    pub fn eval(&self, x: &SimplexPoint) -> Result<f64> {
        self.eval_slice(x.coords())
    }

    pub fn eval_slice(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(a, c)| {
                let mono: f64 = a.exponents.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * mono
            })
            .sum())
    }

    /// Exact value at a rational point.
    pub fn eval_exact(&self, x: &[BigRational]) -> Result<BigRational> {
        check_dim(self.dim, x.len())?;
        let mut acc = BigRational::zero();
        for (a, c) in &self.terms {
            let mut t = c.clone();
            for (&e, xi) in a.exponents.iter().zip(x) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// `d! ∫_{T^d} f dx`, exactly.
    pub fn integral(&self) -> BigRational {
        poly_inner_product(self, &Self::one(self.dim)).expect("same dimension")
    }
}

impl fmt::Display for MultiIndexPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in a.exponents.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &MultiIndexPolynomial {
    type Output = MultiIndexPolynomial;

    fn add(self, rhs: Self) -> MultiIndexPolynomial {
        self.add_scaled(rhs, &BigRational::one()).expect("dimension mismatch in polynomial add")
    }
}

impl Sub for &MultiIndexPolynomial {
    type Output = MultiIndexPolynomial;

    fn sub(self, rhs: Self) -> MultiIndexPolynomial {
        self.add_scaled(rhs, &-BigRational::one()).expect("dimension mismatch in polynomial sub")
    }
}

impl Mul for &MultiIndexPolynomial {
    type Output = MultiIndexPolynomial;

    fn mul(self, rhs: Self) -> MultiIndexPolynomial {
        self.checked_mul(rhs).expect("dimension mismatch in polynomial mul")
    }
}

impl Neg for &MultiIndexPolynomial {
    type Output = MultiIndexPolynomial;

    fn neg(self) -> MultiIndexPolynomial {
        self.scale(&-BigRational::one())
    }
}

fn factorials(n: usize) -> Vec<BigInt> {
    let mut f = Vec::with_capacity(n + 1);
    f.push(BigInt::one());
    for k in 1..=n {
        let next = &f[k - 1] * BigInt::from(k);
        f.push(next);
    }
    f
}

/// `<f, g> = d! ∫_{T^d} f g dx`, exactly.
///
/// Works on integer numerators over a common denominator: every pair of
/// terms contributes `A_a B_b (a+b)! / (|a+b| + d)!`, and all those
/// denominators divide `(deg f + deg g + d)!`.
pub fn poly_inner_product(
    f: &MultiIndexPolynomial,
    g: &MultiIndexPolynomial,
) -> Result<BigRational> {
    check_dim(f.dim, g.dim)?;
    let d = f.dim;
    let (Some(df), Some(dg)) = (f.degree(), g.degree()) else {
        return Ok(BigRational::zero());
    };
    let top = df + dg + d;
    let fact = factorials(top);
    let (den_f, nums_f) = f.integer_form();
    let (den_g, nums_g) = g.integer_form();

    // group pair contributions by total degree to share the scaling factor
    let mut by_degree: Vec<BigInt> = vec![BigInt::zero(); df + dg + 1];
    for (a, na) in &nums_f {
        for (b, nb) in &nums_g {
            let mut w = na * nb;
            let mut s = 0usize;
            for (&x, &y) in a.exponents.iter().zip(&b.exponents) {
                let e = (x + y) as usize;
                s += e;
                if e > 1 {
                    w *= &fact[e];
                }
            }
            by_degree[s] += w;
        }
    }
    let mut total = BigInt::zero();
    for (s, w) in by_degree.into_iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        total += w * (&fact[top] / &fact[s + d]);
    }
    Ok(BigRational::new(total * &fact[d], den_f * den_g * &fact[top]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn x(d: usize, i: usize) -> MultiIndexPolynomial {
        MultiIndexPolynomial::variable(d, i)
    }

    #[test]
    fn graded_lex_order() {
        let v = MultiIndex::of_degree(2, 2);
        let e: Vec<&[u32]> = v.iter().map(|m| m.exponents()).collect();
        assert_eq!(e, vec![&[2, 0][..], &[1, 1], &[0, 2]]);
        assert!(MultiIndex::new(vec![0, 1]) > MultiIndex::new(vec![1, 0]));
        assert!(MultiIndex::new(vec![2, 0]) > MultiIndex::new(vec![0, 1]));
        assert_eq!(MultiIndex::of_degree(3, 4).len(), 15);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, v);
    }

    #[test]
    fn eval_examples() {
        let one = MultiIndexPolynomial::one(2);
        let p = SimplexPoint::new(vec![0.5, 0.25]).unwrap();
        assert_eq!(one.eval(&p).unwrap(), 1.0);
        let f = &x(2, 0) * &x(2, 1);
        assert_eq!(f.eval(&p).unwrap(), 0.125);
        assert!(f.eval(&SimplexPoint::new(vec![0.5]).unwrap()).is_err());
    }

    #[test]
    fn shifted_legendre_degree_two() {
        // 6x^2 - 6x + 1 scaled by sqrt(5) at 0.5 is -sqrt(5)/2
        let p = MultiIndexPolynomial::from_terms(
            1,
            [
                (MultiIndex::new(vec![0]), rat(1, 1)),
                (MultiIndex::new(vec![1]), rat(-6, 1)),
                (MultiIndex::new(vec![2]), rat(6, 1)),
            ],
        )
        .unwrap();
        let v = p.eval(&SimplexPoint::new(vec![0.5]).unwrap()).unwrap() * 5f64.sqrt();
        assert!((v + 5f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn inner_product_examples() {
        let one = MultiIndexPolynomial::one(2);
        assert_eq!(poly_inner_product(&one, &one).unwrap(), rat(1, 1));
        let one1 = MultiIndexPolynomial::one(1);
        assert_eq!(poly_inner_product(&x(1, 0), &one1).unwrap(), rat(1, 2));
        // 2! ∫ x1 x2 = 2/24
        assert_eq!(poly_inner_product(&x(2, 0), &x(2, 1)).unwrap(), rat(1, 12));
        assert!(poly_inner_product(&one, &one1).is_err());
        let zero = MultiIndexPolynomial::zero(2);
        assert_eq!(poly_inner_product(&zero, &one).unwrap(), rat(0, 1));
    }

    #[test]
    fn arithmetic_and_derivatives() {
        let d = 2;
        let f = &(&x(d, 0) * &x(d, 0)) + &x(d, 1);
        assert_eq!(f.degree(), Some(2));
        assert_eq!(f.derivative(0), x(d, 0).scale(&rat(2, 1)));
        assert_eq!(f.derivative(1), MultiIndexPolynomial::one(d));
        assert!((&f - &f).is_zero());
        assert_eq!((&f + &(-&f)).num_terms(), 0);
        let lin = &MultiIndexPolynomial::one(1) - &x(1, 0);
        assert_eq!(lin.pow(2), MultiIndexPolynomial::from_terms(1, [
            (MultiIndex::new(vec![0]), rat(1, 1)),
            (MultiIndex::new(vec![1]), rat(-2, 1)),
            (MultiIndex::new(vec![2]), rat(1, 1)),
        ]).unwrap());
        assert_eq!(f.top_degree_part(), &x(d, 0) * &x(d, 0));
    }

    #[test]
    fn primitive_scaling() {
        let f = MultiIndexPolynomial::from_terms(
            1,
            [(MultiIndex::new(vec![0]), rat(-1, 2)), (MultiIndex::new(vec![1]), rat(-3, 4))],
        )
        .unwrap();
        let (p, factor) = f.primitive();
        assert_eq!(factor, rat(-4, 1));
        assert_eq!(p.coeff(&MultiIndex::new(vec![0])), rat(2, 1));
        assert_eq!(p.coeff(&MultiIndex::new(vec![1])), rat(3, 1));
    }

    #[test]
    fn exact_eval_matches_float() {
        let f = &(&x(2, 0) * &x(2, 1)) - &x(2, 1).scale(&rat(1, 3));
        let v = f.eval_exact(&[rat(1, 2), rat(1, 4)]).unwrap();
        assert_eq!(v, rat(1, 8) - rat(1, 12));
    }

    fn small_poly(dim: usize) -> impl Strategy<Value = MultiIndexPolynomial> {
        prop::collection::vec((prop::collection::vec(0u32..3, dim), -5i64..6, 1i64..4), 0..5).prop_map(
            move |terms| {
                MultiIndexPolynomial::from_terms(
                    dim,
                    terms.into_iter().map(|(e, n, d)| (MultiIndex::new(e), rat(n, d))),
                )
                .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn inner_product_symmetric_bilinear(
            f in small_poly(2), g in small_poly(2), h in small_poly(2), a in -3i64..4, b in 1i64..5
        ) {
            let c = rat(a, b);
            prop_assert_eq!(poly_inner_product(&f, &g).unwrap(), poly_inner_product(&g, &f).unwrap());
            let lhs = poly_inner_product(&f.add_scaled(&h, &c).unwrap(), &g).unwrap();
            let rhs = poly_inner_product(&f, &g).unwrap() + &c * poly_inner_product(&h, &g).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn integral_matches_product_rule(f in small_poly(3), g in small_poly(3)) {
            let prod = &f * &g;
            prop_assert_eq!(prod.integral(), poly_inner_product(&f, &g).unwrap());
        }
    }
}
