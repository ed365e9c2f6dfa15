//! Sample-size budgets from the discretization theorems.
//!
//! The theorems only assert existence with unspecified constants, so every
//! formula takes its leading constant `c` explicitly (1 is the customary
//! default in reports). Logarithms are base 2 except in the random-sampling
//! bounds, which use natural logarithms.

use serde::{Deserialize, Serialize};

fn log2_2bn(b: f64, n: f64) -> f64 {
    (2.0 * b * n).log2()
}

/// `c B^q N (log2(2BN))^2`: points with `(1/2, 3/2)` constants under the entropy condition.
pub fn entropy_budget(c: f64, b: f64, n: usize, q: f64) -> f64 {
    let n = n as f64;
    c * b.powf(q) * n * log2_2bn(b, n).powi(2)
}

/// `c B^p N^{p/q} (log2(2BN))^2` for `1 <= q <= p` under the entropy condition.
pub fn entropy_budget_lifted(c: f64, b: f64, n: usize, q: f64, p: f64) -> f64 {
    let n = n as f64;
    c * b.powf(p) * n.powf(p / q) * log2_2bn(b, n).powi(2)
}

/// `c B^q N (log2(2BN))^3`: points with `(1 ± ε)` constants under the
/// Nikol'skii inequality `‖f‖_∞ <= B N^{1/q} ‖f‖_q`, `q >= 2`.
pub fn nikolskii_budget(c: f64, b: f64, n: usize, q: f64) -> f64 {
    let n = n as f64;
    c * b.powf(q) * n * log2_2bn(b, n).powi(3)
}

/// `c B^p N^{p/q} (log2(2BN))^3` for `2 <= q <= p` under the Nikol'skii inequality.
pub fn nikolskii_budget_lifted(c: f64, b: f64, n: usize, q: f64, p: f64) -> f64 {
    let n = n as f64;
    c * b.powf(p) * n.powf(p / q) * log2_2bn(b, n).powi(3)
}

/// `c K^β ε^{-2} log(2/ε) N^{β+1} log N`: iid points sufficing with high probability
/// when `‖f‖_∞ <= (KN)^{β/p} ‖f‖_p`.
pub fn random_sampling_budget(c: f64, k: f64, beta: f64, eps: f64, n: usize) -> f64 {
    let nf = n as f64;
    c * k.powf(beta) * eps.powi(-2) * (2.0 / eps).ln() * nf.powf(beta + 1.0) * nf.ln().max(1.0)
}

/// Failure probability bound `m^{-N / log K}` of the random-sampling lemma.
pub fn random_sampling_failure(m: usize, n: usize, k: f64) -> f64 {
    (m as f64).powf(-(n as f64) / k.ln())
}

/// Stage-1 size `c B^q ε^{-2} log(2/ε) N^2 log N` of the two-stage construction.
pub fn stage1_budget(c: f64, b: f64, q: f64, eps: f64, n: usize) -> f64 {
    random_sampling_budget(c, b.powf(q), 1.0, eps, n)
}

/// Budget of a tensor-product set assembled from per-factor sets:
/// `c Π B_i^p N_i^{p/q} (log2(2 B_i N_i))^k` with `k = 2` (entropy) or `k = 3` (Nikol'skii).
pub fn tensor_factor_budget(c: f64, factors: &[(f64, usize)], q: f64, p: f64, log_power: i32) -> f64 {
    c * factors
        .iter()
        .map(|&(b, n)| {
            let n = n as f64;
            b.powf(p) * n.powf(p / q) * log2_2bn(b, n).powi(log_power)
        })
        .product::<f64>()
}

/// `c (Π B_i^p N_i^{p/q}) (log2 Π B_i N_i)^3` for a set without tensor structure.
pub fn tensor_joint_budget(c: f64, factors: &[(f64, usize)], q: f64, p: f64) -> f64 {
    let main: f64 = factors
        .iter()
        .map(|&(b, n)| b.powf(p) * (n as f64).powf(p / q))
        .product();
    let log = factors.iter().map(|&(b, n)| b * n as f64).product::<f64>().log2();
    c * main * log.powi(3)
}

/// `Π B_i N_i^{1/q}`: the Nikol'skii constant of a tensor space from its factors.
pub fn tensor_nikolskii(factors: &[(f64, usize)], q: f64) -> f64 {
    factors.iter().map(|&(b, n)| b * (n as f64).powf(1.0 / q)).product()
}

/// Constants `((1/2)^s, (3/2)^s)` of a product of `s` sets each with constants `(1/2, 3/2)`.
pub fn tensor_constants(s: usize) -> (f64, f64) {
    (0.5f64.powi(s as i32), 1.5f64.powi(s as i32))
}

/// `c t^2 N` points under Condition E(t).
pub fn christoffel_budget(c: f64, t: f64, n: usize) -> f64 {
    c * t * t * n as f64
}

/// All budgets for one space, as reported alongside experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    pub leading_constant: f64,
    pub n: usize,
    pub b: f64,
    pub q: f64,
    pub nikolskii: f64,
    pub entropy: f64,
    pub christoffel: f64,
    pub stage1: f64,
}

pub fn summarize(c: f64, n: usize, b: f64, q: f64, t: f64, eps: f64) -> BudgetSummary {
    BudgetSummary {
        leading_constant: c,
        n,
        b,
        q,
        nikolskii: nikolskii_budget(c, b, n, q),
        entropy: entropy_budget(c, b, n, q),
        christoffel: christoffel_budget(c, t, n),
        stage1: stage1_budget(c, b, q, eps, n),
    }
}
