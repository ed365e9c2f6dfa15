//! Equispaced product grids on the torus.
//!
//! The `M`-node rule `(1/M) Σ g(2πj/M)` integrates `e^{ikx}` exactly for
//! every `|k| < M`, so trigonometric integrands are handled exactly once the
//! grid is fine enough, and spectrally accurately otherwise.

use std::f64::consts::TAU;

use rayon::prelude::*;

const CHUNK: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    per_dim: Vec<usize>,
}

impl TorusGrid {
    pub fn new(per_dim: Vec<usize>) -> Self {
        assert!(per_dim.iter().all(|&m| m > 0), "grid sizes must be positive");
        Self { per_dim }
    }

    pub fn per_dim(&self) -> &[usize] {
        &self.per_dim
    }

    pub fn len(&self) -> usize {
        self.per_dim.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `idx` in lexicographic order, first coordinate slowest.
    pub fn point(&self, mut idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.per_dim.len()];
        for t in (0..self.per_dim.len()).rev() {
            let m = self.per_dim[t];
            x[t] = TAU * (idx % m) as f64 / m as f64;
            idx /= m;
        }
        x
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.per_dim.iter().map(|&m| TAU / m as f64).collect()
    }

    /// Grid average of `g`; the reduction order is fixed so the result is schedule independent.
    pub fn mean<F>(&self, g: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let n = self.len();
        let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = (lo + CHUNK).min(n);
                (lo..hi).map(|i| g(&self.point(i))).sum::<f64>()
            })
            .collect();
        partial.iter().sum::<f64>() / n as f64
    }

    /// `g` at every node, in node order.
    pub fn map<F, T>(&self, g: F) -> Vec<T>
    where
        F: Fn(&[f64]) -> T + Sync,
        T: Send,
    {
        (0..self.len())
            .into_par_iter()
            .map(|i| g(&self.point(i)))
            .collect()
    }
}

/// Nodes per dimension making the rule exact for `|f|^p` (even `p`) when `f`
/// has coordinate frequency spread `spread`.
pub fn exact_nodes_for_even_power(spread: i64, p: u32) -> usize {
    (p as usize / 2) * spread as usize + 1
}

/// `Some(p as u32)` when `p` is an even positive integer.
pub fn even_integer(p: f64) -> Option<u32> {
    if p.is_finite() && p >= 2.0 && p.fract() == 0.0 && (p as u64) % 2 == 0 && p <= 64.0 {
        Some(p as u32)
    } else {
        None
    }
}

/// Shrinks per-dimension sizes uniformly so the grid has at most `cap` nodes.
pub fn capped(per_dim: Vec<usize>, cap: usize) -> Vec<usize> {
    let total: f64 = per_dim.iter().map(|&m| m as f64).product();
    if total <= cap as f64 {
        return per_dim;
    }
    let shrink = (cap as f64 / total).powf(1.0 / per_dim.len() as f64);
    per_dim
        .into_iter()
        .map(|m| ((m as f64 * shrink).floor() as usize).max(1))
        .collect()
}
