use crate::error::{Error, Result};

/// `C_n^{(λ)}(u)` by the three-term recurrence
/// `n C_n = 2 (n + λ - 1) u C_{n-1} - (n + 2λ - 2) C_{n-2}`.
pub fn gegenbauer(n: usize, lambda: f64, u: f64) -> Result<f64> {
    if !(u.abs() <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("Gegenbauer argument {u} outside [-1, 1]")));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("Gegenbauer parameter {lambda} must be positive")));
    }
    Ok(gegenbauer_unchecked(n, lambda, u))
}

pub(crate) fn gegenbauer_unchecked(n: usize, lambda: f64, u: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * u;
    for k in 2..=n {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda - 1.0) * u * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}
