use num_bigint::BigInt;
use num_rational::BigRational;

use crate::poly::MultiIndexPolynomial;

/// Which index pairs the mixed second-order term runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedPairs {
    /// `i < j`: the classical simplex operator.
    Strict,
    /// `i <= j`: also subtracts `2 x_i^2 ∂_ii`.
    WithDiagonal,
}

/// Applies
/// `∇ = Σ x_i (1 - x_i) ∂_ii - 2 Σ_{i<j} x_i x_j ∂_ij + Σ (1 - (d+1) x_i) ∂_i`.
///
/// Degree-`ℓ` orthogonal polynomials are eigenfunctions with eigenvalue
/// `-ℓ(ℓ + d)`.
pub fn apply_nabla(f: &MultiIndexPolynomial) -> MultiIndexPolynomial {
    apply_nabla_with(f, MixedPairs::Strict)
}

pub fn apply_nabla_with(f: &MultiIndexPolynomial, pairs: MixedPairs) -> MultiIndexPolynomial {
    let d = f.dim();
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let one = MultiIndexPolynomial::one(d);
    let x: Vec<MultiIndexPolynomial> = (0..d).map(|i| MultiIndexPolynomial::variable(d, i)).collect();
    let first: Vec<MultiIndexPolynomial> = (0..d).map(|i| f.derivative(i)).collect();

    let mut out = MultiIndexPolynomial::zero(d);
    for i in 0..d {
        let second = first[i].derivative(i);
        let diag = &x[i] * &(&one - &x[i]);
        out = &out + &(&diag * &second);

        let drift = one.add_scaled(&x[i], &int(-(d as i64 + 1))).expect("same dimension");
        out = &out + &(&drift * &first[i]);

        let start = match pairs {
            MixedPairs::Strict => i + 1,
            MixedPairs::WithDiagonal => i,
        };
        for j in start..d {
            let mixed = first[i].derivative(j);
            let w = &x[i] * &x[j];
            out = out.add_scaled(&(&w * &mixed), &int(-2)).expect("same dimension");
        }
    }
    out
}
