//! Convex weighted `L_p` regression and the sphere search behind general-p
//! certification.
//!
//! Complex coefficient vectors are optimized as real vectors
//! `(Re c, Im c)`. Gradients are packed back into complex form
//! `g_i = ∂J/∂Re c_i + i ∂J/∂Im c_i`, so the directional derivative along
//! `d` is `Re(g^* d)`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{solve_hpd, weighted_least_squares};
use crate::rng;
use crate::space::C64;
use crate::tolerances::Tolerances;

/// `Σ w_j |y_j - (A c)_j|^p`.
pub fn lp_objective(a: &DMatrix<C64>, y: &DVector<C64>, w: &[f64], p: f64, c: &DVector<C64>) -> f64 {
    let r = y - a * c;
    r.iter().zip(w).map(|(rj, wj)| wj * rj.norm().powf(p)).sum()
}

/// Packed real gradient of [`lp_objective`]: `-p A^* (w |r|^{p-2} r)`.
pub fn lp_gradient(a: &DMatrix<C64>, y: &DVector<C64>, w: &[f64], p: f64, c: &DVector<C64>) -> DVector<C64> {
    let r = y - a * c;
    let s = DVector::from_iterator(
        r.len(),
        r.iter().zip(w).map(|(rj, wj)| {
            let m = rj.norm();
            if m == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                rj * (wj * m.powf(p - 1.0) / m)
            }
        }),
    );
    -(a.adjoint() * s) * C64::new(p, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerReport {
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct LpFit {
    pub coeffs: DVector<C64>,
    pub objective: f64,
    pub report: OptimizerReport,
    /// The weighted design was rank deficient at the `p = 2` stage.
    pub rank_deficient: bool,
}

/// Minimizes `Σ w_j |y_j - (A c)_j|^p` for `p >= 1`.
///
/// `p = 2` is solved directly (minimum-norm weighted least squares). Other
/// exponents start from that solution and take damped IRLS steps, which are
/// preconditioned gradient directions, with an Armijo line search on the true
/// objective; plain gradient steps are the fallback when the IRLS direction
/// fails to descend.
pub fn lp_regression(a: &DMatrix<C64>, y: &DVector<C64>, w: &[f64], p: f64, tol: &Tolerances) -> LpFit {
    let (mut c, rank_deficient) = weighted_least_squares(a, y, w, tol.rank_tol);
    if p == 2.0 {
        let g = lp_gradient(a, y, w, p, &c);
        return LpFit {
            objective: lp_objective(a, y, w, p, &c),
            report: OptimizerReport {
                iterations: 1,
                final_gradient_norm: g.norm(),
                converged: true,
            },
            coeffs: c,
            rank_deficient,
        };
    }

    let n = a.ncols();
    let mut obj = lp_objective(a, y, w, p, &c);
    let mut g = lp_gradient(a, y, w, p, &c);
    let mut iterations = 0;
    let mut converged = false;
    let first_step = if p > 2.0 { 1.0 / (p - 1.0) } else { 1.0 };

    while iterations < tol.max_iterations {
        if g.norm() <= tol.gradient_tol * obj.max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;

        let r = y - a * &c;
        let mut omega: Vec<f64> = r
            .iter()
            .zip(w)
            .map(|(rj, wj)| wj * rj.norm().max(tol.irls_clip).powf(p - 2.0))
            .collect();
        let omax = omega.iter().cloned().fold(0.0, f64::max);
        for o in &mut omega {
            *o = o.max(omax * tol.irls_clip);
        }
        let mut aw = a.adjoint();
        for j in 0..a.nrows() {
            for i in 0..n {
                aw[(i, j)] *= omega[j];
            }
        }
        let h = &aw * a;
        let rhs = &aw * &r;
        let mut dir = solve_hpd(&h, &rhs);

        let mut slope = g.dotc(&dir).re;
        if !(slope < 0.0) || !dir.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            dir = -g.clone();
            slope = -g.norm_squared();
        }

        match armijo(|cc| lp_objective(a, y, w, p, cc), &c, obj, &dir, slope, first_step) {
            Some((cn, on)) => {
                let stalled = obj - on <= 1e-16 * obj.abs();
                c = cn;
                obj = on;
                g = lp_gradient(a, y, w, p, &c);
                if stalled {
                    converged = true;
                    break;
                }
            }
            None => {
                // no descent along either direction at machine precision
                let gd = -g.clone();
                match armijo(|cc| lp_objective(a, y, w, p, cc), &c, obj, &gd, -g.norm_squared(), 1.0 / g.norm().max(1e-300)) {
                    Some((cn, on)) => {
                        c = cn;
                        obj = on;
                        g = lp_gradient(a, y, w, p, &c);
                    }
                    None => {
                        // the objective is convex, so this is its numerical minimum
                        converged = true;
                        break;
                    }
                }
            }
        }
    }
    if g.norm() <= tol.gradient_tol * obj.max(1.0) {
        converged = true;
    }
    LpFit {
        report: OptimizerReport {
            iterations,
            final_gradient_norm: g.norm(),
            converged,
        },
        coeffs: c,
        objective: obj,
        rank_deficient,
    }
}

fn armijo<F>(f: F, c: &DVector<C64>, f0: f64, dir: &DVector<C64>, slope: f64, first: f64) -> Option<(DVector<C64>, f64)>
where
    F: Fn(&DVector<C64>) -> f64,
{
    let mut alpha = first;
    for _ in 0..60 {
        let cand = c + dir * C64::new(alpha, 0.0);
        let fc = f(&cand);
        if fc.is_finite() && fc <= f0 + 1e-4 * alpha * slope && fc <= f0 {
            return Some((cand, fc));
        }
        alpha *= 0.5;
    }
    None
}

/// `R(c) = Σ wn_j |(An c)_j|^p / Σ wd_j |(Ad c)_j|^p`, invariant under scaling of `c`.
pub struct RatioProblem<'a> {
    pub num: &'a DMatrix<C64>,
    pub num_w: &'a [f64],
    pub den: &'a DMatrix<C64>,
    pub den_w: &'a [f64],
    pub p: f64,
}

/// `|v|^p` from `|v|^2`, with the common even exponents done by multiplication.
#[inline]
pub(crate) fn pow_from_sq(m2: f64, p: f64) -> f64 {
    if p == 2.0 {
        m2
    } else if p == 4.0 {
        m2 * m2
    } else if p == 6.0 {
        m2 * m2 * m2
    } else {
        m2.powf(0.5 * p)
    }
}

fn power_sum_and_grad(a: &DMatrix<C64>, w: &[f64], p: f64, c: &DVector<C64>) -> (f64, DVector<C64>) {
    let v = a * c;
    let mut total = 0.0;
    let s = DVector::from_iterator(
        v.len(),
        v.iter().zip(w).map(|(vj, wj)| {
            let m2 = vj.norm_sqr();
            if m2 == 0.0 {
                return C64::new(0.0, 0.0);
            }
            let pw = wj * pow_from_sq(m2, p);
            total += pw;
            vj * (pw / m2)
        }),
    );
    (total, (a.adjoint() * s) * C64::new(p, 0.0))
}

fn power_sum(a: &DMatrix<C64>, w: &[f64], p: f64, c: &DVector<C64>) -> f64 {
    (a * c)
        .iter()
        .zip(w)
        .map(|(v, w)| w * pow_from_sq(v.norm_sqr(), p))
        .sum()
}

impl RatioProblem<'_> {
    pub fn value(&self, c: &DVector<C64>) -> f64 {
        power_sum(self.num, self.num_w, self.p, c) / power_sum(self.den, self.den_w, self.p, c)
    }

    pub fn value_and_gradient(&self, c: &DVector<C64>) -> (f64, DVector<C64>) {
        let (n, gn) = power_sum_and_grad(self.num, self.num_w, self.p, c);
        let (d, gd) = power_sum_and_grad(self.den, self.den_w, self.p, c);
        let r = n / d;
        (r, (gn - gd * C64::new(r, 0.0)) / C64::new(d, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.num.ncols()
    }
}

#[derive(Clone, Debug)]
pub struct SphereSearch {
    pub value: f64,
    pub coeffs: DVector<C64>,
    /// Index of the winning restart (lowest index among ties).
    pub restart: usize,
    /// Largest final projected-gradient norm among restarts reaching the optimum.
    pub stationarity: f64,
}

/// Random point on the unit sphere of `C^n`.
pub fn random_unit(n: usize, seed: u64, stream: u64) -> DVector<C64> {
    let mut rng = rng::stream(seed, stream);
    let v = DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let nrm = v.norm();
    v / C64::new(nrm, 0.0)
}

/// Projected gradient over the unit sphere with step halving, from `restarts`
/// random starts run concurrently. Restart `r` uses stream `(seed, r)`.
pub fn optimize_ratio(problem: &RatioProblem<'_>, minimize: bool, restarts: usize, seed: u64, max_iter: usize) -> SphereSearch {
    optimize_ratio_until(problem, minimize, &[], restarts, seed, max_iter, None)
}

/// Like [`optimize_ratio`], with explicit starting points tried before the
/// random ones (they take the lowest restart indices). Restarts run in fixed
/// blocks and the search stops after the first block whose best value passes
/// `stop` (below it when minimizing, above it when maximizing). Block
/// boundaries do not depend on scheduling, so the result is deterministic.
pub fn optimize_ratio_until(
    problem: &RatioProblem<'_>,
    minimize: bool,
    starts: &[DVector<C64>],
    restarts: usize,
    seed: u64,
    max_iter: usize,
    stop: Option<f64>,
) -> SphereSearch {
    const BLOCK: usize = 8;
    let sign = if minimize { 1.0 } else { -1.0 };
    let n = problem.dim();
    let k = starts.len();
    let total = k + restarts.max(1);
    let mut runs: Vec<(f64, DVector<C64>, f64)> = Vec::with_capacity(total);
    let mut start = 0;
    while start < total {
        let end = if stop.is_some() { (start + BLOCK).min(total) } else { total };
        let block: Vec<(f64, DVector<C64>, f64)> = (start..end)
            .into_par_iter()
            .map(|r| {
                let c0 = if r < k {
                    normalize(starts[r].clone())
                } else {
                    random_unit(n, seed, rng::stream_id(rng::purpose::RESTARTS, (r - k) as u64))
                };
                descend(problem, c0, sign, max_iter)
            })
            .collect();
        runs.extend(block);
        start = end;
        if let Some(t) = stop {
            if runs.iter().any(|r| sign * r.0 < sign * t) {
                break;
            }
        }
    }

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if sign * run.0 < sign * runs[best].0 {
            best = i;
        }
    }
    let best_val = runs[best].0;
    let stationarity = runs
        .iter()
        .filter(|r| (r.0 - best_val).abs() <= 1e-9 * best_val.abs().max(1e-300))
        .map(|r| r.2)
        .fold(0.0, f64::max);
    SphereSearch {
        value: best_val,
        coeffs: runs[best].1.clone(),
        restart: best,
        stationarity,
    }
}

fn normalize(c: DVector<C64>) -> DVector<C64> {
    let nrm = c.norm();
    c / C64::new(nrm, 0.0)
}

fn descend(problem: &RatioProblem<'_>, mut c: DVector<C64>, sign: f64, max_iter: usize) -> (f64, DVector<C64>, f64) {
    let (mut val, mut g) = problem.value_and_gradient(&c);
    let mut step = 0.1 / g.norm().max(1e-12);
    let mut quiet = 0;
    for _ in 0..max_iter {
        let gnorm = g.norm();
        if gnorm < 1e-14 * val.abs().max(1e-300) {
            break;
        }
        let mut accepted = false;
        let mut trial = step * 2.0;
        for _ in 0..50 {
            let cand = normalize(&c - &g * C64::new(sign * trial, 0.0));
            let (v, gc) = problem.value_and_gradient(&cand);
            if sign * v < sign * val {
                let gain = (val - v).abs() / val.abs().max(1e-300);
                c = cand;
                val = v;
                g = gc;
                step = trial;
                accepted = true;
                quiet = if gain < 1e-14 { quiet + 1 } else { 0 };
                break;
            }
            trial *= 0.5;
        }
        if !accepted || quiet >= 3 {
            break;
        }
    }
    let gnorm = g.norm();
    (val, c, gnorm)
}
