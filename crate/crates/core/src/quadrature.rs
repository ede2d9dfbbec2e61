//! Gauss–Chebyshev (first kind) rules.
//!
//! The `n`-node rule integrates `p(t) (1 - t^2)^{-1/2}` over `[-1, 1]` exactly
//! for every polynomial `p` of degree at most `2n - 1`.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussChebyshev {
    nodes: Vec<f64>,
}

impl GaussChebyshev {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Chebyshev rule needs at least one node");
        let nodes = (1..=n)
            .map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).cos())
            .collect();
        GaussChebyshev { nodes }
    }

    /// Smallest rule exact for polynomials of the given degree.
    pub fn exact_for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// All nodes share the weight `π / n`.
    pub fn weight(&self) -> f64 {
        PI / self.nodes.len() as f64
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.weight() * self.nodes.iter().map(|&t| f(t)).sum::<f64>()
    }

    /// Mean of `f` over the tensor grid of `dims` copies of this rule, i.e.
    /// `π^{-dims} ∫_{[-1,1]^dims} f(t) ∏ (1 - t_i^2)^{-1/2} dt`.
    ///
    /// Summation is compensated (Neumaier) and visits the grid in a fixed
    /// odometer order.
    pub fn tensor_mean<F: FnMut(&[f64]) -> f64>(&self, dims: usize, mut f: F) -> f64 {
        let n = self.nodes.len();
        let mut idx = vec![0usize; dims];
        let mut t: Vec<f64> = vec![self.nodes[0]; dims];
        let mut acc = NeumaierSum::default();
        let mut count = 0usize;
        loop {
            acc.add(f(&t));
            count += 1;
            let mut axis = 0;
            loop {
                if axis == dims {
                    return acc.total() / count as f64;
                }
                idx[axis] += 1;
                if idx[axis] < n {
                    t[axis] = self.nodes[idx[axis]];
                    break;
                }
                idx[axis] = 0;
                t[axis] = self.nodes[0];
                axis += 1;
            }
        }
    }
}

/// Compensated summation (Neumaier's variant of Kahan).
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

impl<'a> FromIterator<&'a f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = &'a f64>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}
