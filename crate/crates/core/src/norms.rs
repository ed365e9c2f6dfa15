//! Continuous and discrete norms, best approximation, and the conditioning
//! quantities `t` (Christoffel supremum) and `M` (Nikol'skii constant).

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_hpd, weighted_least_squares, Orthonormalizer};
use crate::optim::{lp_regression, OptimizerReport};
use crate::points::{validate_weights, PointSet};
use crate::quadrature::{capped, even_integer, TorusGrid};
use crate::space::{max_abs_degree, spread, CoefficientVector, Domain, Subspace, Target, C64};
use crate::tolerances::Tolerances;

/// `S(f, ξ) = (f(ξ^1), ..., f(ξ^m))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleVector {
    values: Vec<C64>,
    points: PointSet,
}

impl SampleVector {
    pub fn new(values: Vec<C64>, points: PointSet) -> Result<Self> {
        if values.len() != points.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} points",
                values.len(),
                points.len()
            )));
        }
        Ok(Self { values, points })
    }

    /// Samples of a target at the points.
    pub fn of_target(target: &Target, points: &PointSet) -> Self {
        Self {
            values: points.points().iter().map(|x| target.eval(x)).collect(),
            points: points.clone(),
        }
    }

    pub fn of(f: &CoefficientVector, points: &PointSet) -> Result<Self> {
        Ok(Self {
            values: crate::space::evaluate(f, points.points())?,
            points: points.clone(),
        })
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self, p: f64, weights: Option<&[f64]>) -> Result<f64> {
        discrete_norm(&self.values, p, weights)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        Err(Error::InvalidExponent(p))
    } else {
        Ok(())
    }
}

/// `(Σ w_ν |s_ν|^p)^{1/p}`, weights `1/m` by default; `max_ν |s_ν|` for `p = ∞`.
pub fn discrete_norm(values: &[C64], p: f64, weights: Option<&[f64]>) -> Result<f64> {
    check_exponent(p)?;
    if values.is_empty() {
        return Err(Error::InvalidSample("empty sample vector".into()));
    }
    if let Some(w) = weights {
        validate_weights(w, values.len())?;
    }
    if p.is_infinite() {
        if weights.is_some() {
            return Err(Error::Unsupported("weighted discrete norm for p = ∞".into()));
        }
        return Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let m = values.len() as f64;
    let sum: f64 = match weights {
        Some(w) => values.iter().zip(w).map(|(v, w)| w * v.norm().powf(p)).sum(),
        None => values.iter().map(|v| v.norm().powf(p)).sum::<f64>() / m,
    };
    Ok(sum.powf(1.0 / p))
}

/// A continuous norm with its quadrature provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Estimated absolute error; zero when `exact`.
    pub abs_tol: f64,
    /// Quadrature nodes used by the final rule.
    pub nodes: usize,
    pub exact: bool,
}

/// `‖f‖_p` for `p ∈ [1, ∞)`.
pub fn norm_p(f: &CoefficientVector, p: f64) -> Result<f64> {
    Ok(norm_p_with(f, p, &Tolerances::default())?.value)
}

pub fn norm_p_with(f: &CoefficientVector, p: f64, tol: &Tolerances) -> Result<NormEstimate> {
    target_norm_p(&f.to_target(), f.space().domain(), p, tol)
}

/// `‖g‖_{L_p(μ)}` of a target on `domain`.
///
/// Finite sets are summed exactly. On the torus, trigonometric targets with
/// even `p` use an equispaced rule that is exact for `|g|^p`; everything else
/// is integrated by dyadically refined equispaced Riemann sums.
pub fn target_norm_p(target: &Target, domain: &Domain, p: f64, tol: &Tolerances) -> Result<NormEstimate> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    target.check_domain(domain)?;
    match (target, domain) {
        (Target::Values(v), _) => Ok(NormEstimate {
            value: (v.iter().map(|z| z.norm().powf(p)).sum::<f64>() / v.len() as f64).powf(1.0 / p),
            abs_tol: 0.0,
            nodes: v.len(),
            exact: true,
        }),
        (Target::Trig(t), Domain::Torus { .. }) => {
            if t.terms().is_empty() {
                return Ok(NormEstimate {
                    value: 0.0,
                    abs_tol: 0.0,
                    nodes: 1,
                    exact: true,
                });
            }
            if p == 2.0 {
                let s: f64 = t.terms().iter().map(|(_, c)| c.norm_sqr()).sum();
                return Ok(NormEstimate {
                    value: s.sqrt(),
                    abs_tol: 0.0,
                    nodes: 0,
                    exact: true,
                });
            }
            if let Some(pe) = even_integer(p) {
                let per_dim = exact_grid(&t.max_abs_degree(), &t.spread(), pe);
                if per_dim.iter().map(|&m| m as f64).product::<f64>() <= tol.quadrature_max_nodes as f64 {
                    let grid = TorusGrid::new(per_dim);
                    let mean = grid.mean(|x| t.eval(x).norm().powf(p));
                    return Ok(NormEstimate {
                        value: mean.powf(1.0 / p),
                        abs_tol: 0.0,
                        nodes: grid.len(),
                        exact: true,
                    });
                }
            }
            let start: Vec<usize> = t
                .max_abs_degree()
                .iter()
                .map(|&k| (4 * k as usize + 8).next_power_of_two())
                .collect();
            Ok(refined_norm(|x| t.eval(x), start, p, tol))
        }
        (Target::Function { dimension, f }, Domain::Torus { .. }) => {
            let start = vec![if *dimension == 1 { 256 } else { 32 }; *dimension];
            Ok(refined_norm(|x| f(x), start, p, tol))
        }
        _ => Err(Error::InvalidTarget(format!("{target:?} is not evaluable on {domain:?}"))),
    }
}

/// Nodes per dimension exact for `|f|^p`, `p` even, and at least `p·deg + 1`.
pub fn exact_grid(max_degree: &[i64], spread: &[i64], p: u32) -> Vec<usize> {
    max_degree
        .iter()
        .zip(spread)
        .map(|(&k, &s)| {
            (p as usize * k as usize + 1).max(crate::quadrature::exact_nodes_for_even_power(s, p))
        })
        .collect()
}

fn refined_norm<F>(g: F, start: Vec<usize>, p: f64, tol: &Tolerances) -> NormEstimate
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    let mut per_dim = capped(start, tol.quadrature_max_nodes);
    let mut grid = TorusGrid::new(per_dim.clone());
    let mut prev = grid.mean(|x| g(x).norm().powf(p));
    loop {
        let next: Vec<usize> = per_dim.iter().map(|m| m * 2).collect();
        let total: f64 = next.iter().map(|&m| m as f64).product();
        if total > tol.quadrature_max_nodes as f64 {
            // refinement budget exhausted; report the last observed change
            let coarse = TorusGrid::new(per_dim.iter().map(|m| (m / 2).max(1)).collect());
            let before = coarse.mean(|x| g(x).norm().powf(p));
            let value = prev.powf(1.0 / p);
            return NormEstimate {
                value,
                abs_tol: (value - before.powf(1.0 / p)).abs(),
                nodes: grid.len(),
                exact: false,
            };
        }
        let fine = TorusGrid::new(next.clone());
        let cur = fine.mean(|x| g(x).norm().powf(p));
        let (a, b) = (prev.powf(1.0 / p), cur.powf(1.0 / p));
        per_dim = next;
        grid = fine;
        prev = cur;
        if (a - b).abs() <= tol.quadrature_rel * b.max(1e-300) || b == 0.0 {
            return NormEstimate {
                value: b,
                abs_tol: (a - b).abs(),
                nodes: grid.len(),
                exact: false,
            };
        }
    }
}

/// `‖f‖_∞`, a lower estimate accurate to about `sup_rel_tol` on the torus and exact on finite sets.
pub fn norm_sup(f: &CoefficientVector) -> f64 {
    target_norm_sup(&f.to_target(), &Tolerances::default())
}

pub fn target_norm_sup(target: &Target, tol: &Tolerances) -> f64 {
    match target {
        Target::Values(v) => v.iter().map(|z| z.norm()).fold(0.0, f64::max),
        Target::Trig(t) => {
            if t.terms().is_empty() {
                return 0.0;
            }
            let per_dim = sup_grid(&t.max_abs_degree(), tol);
            sup_search(|x| t.eval(x).norm(), per_dim).0
        }
        Target::Function { dimension, f } => {
            let per_dim = capped(vec![if *dimension == 1 { 1024 } else { 128 }; *dimension], tol.quadrature_max_nodes);
            sup_search(|x| f(x).norm(), per_dim).0
        }
    }
}

pub(crate) fn sup_grid(max_degree: &[i64], tol: &Tolerances) -> Vec<usize> {
    capped(
        max_degree
            .iter()
            .map(|&k| (tol.sup_grid_factor * k as usize).max(64))
            .collect(),
        tol.quadrature_max_nodes,
    )
}

/// Grid maximum of `g` followed by coordinatewise golden-section refinement
/// around the best few grid nodes. Returns the value and its location.
pub(crate) fn sup_search<F>(g: F, per_dim: Vec<usize>) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    const CANDIDATES: usize = 8;
    let grid = TorusGrid::new(per_dim);
    let vals = grid.map(|x| g(x));
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let h = grid.spacing();
    let refined: Vec<(f64, Vec<f64>)> = order
        .iter()
        .take(CANDIDATES)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&i| refine_max(&g, grid.point(i), vals[i], &h))
        .collect();
    let mut best = (vals[order[0]], grid.point(order[0]));
    for r in refined {
        if r.0 > best.0 {
            best = r;
        }
    }
    best
}

fn refine_max<F>(g: &F, mut x: Vec<f64>, mut val: f64, h: &[f64]) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64,
{
    const PHI: f64 = 0.618_033_988_749_894_8;
    let mut width: Vec<f64> = h.to_vec();
    for _ in 0..4 {
        for t in 0..x.len() {
            let center = x[t];
            let at = |s: f64, x: &mut Vec<f64>| {
                x[t] = s;
                g(x)
            };
            let (mut a, mut b) = (center - width[t], center + width[t]);
            let mut probe = x.clone();
            let mut c = b - PHI * (b - a);
            let mut d = a + PHI * (b - a);
            let mut fc = at(c, &mut probe);
            let mut fd = at(d, &mut probe);
            for _ in 0..80 {
                if (b - a).abs() < 1e-13 {
                    break;
                }
                if fc >= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - PHI * (b - a);
                    fc = at(c, &mut probe);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + PHI * (b - a);
                    fd = at(d, &mut probe);
                }
            }
            let (s, fs) = if fc >= fd { (c, fc) } else { (d, fd) };
            if fs > val {
                val = fs;
                x[t] = s;
            }
            width[t] *= 0.5;
        }
    }
    for c in &mut x {
        *c = c.rem_euclid(TAU);
    }
    (val, x)
}

/// Which side of the true distance a reported distance lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    Exact,
    /// Minimax over a finite grid: never above the continuous distance
    /// beyond the stated relative tolerance.
    GridLowerEstimate,
    /// Optimizer value of a convex problem on a quadrature rule.
    Quadrature,
}

/// Best approximation of a target from a subspace.
#[derive(Clone, Debug)]
pub struct BestApprox {
    pub coefficients: CoefficientVector,
    /// `‖f - u‖_p` for the returned `u`, measured on the rule in `nodes`.
    pub distance: f64,
    /// A value certified not to exceed the discrete best-approximation distance.
    pub lower_bound: f64,
    pub nodes: usize,
    pub sidedness: Sidedness,
    pub report: OptimizerReport,
}

/// `d(f, X_N)_p` and a Chebyshev projection.
pub fn best_approx(target: &Target, space: &Subspace, p: f64, tol: &Tolerances) -> Result<BestApprox> {
    check_exponent(p)?;
    target.check_domain(space.domain())?;
    if let (Target::Trig(t), Some(spec)) = (target, space.spectrum()) {
        if p == 2.0 {
            let coeffs: Vec<C64> = spec.frequencies().iter().map(|k| t.coefficient(k)).collect();
            let u = CoefficientVector::new(space, coeffs)?;
            let dist = t
                .terms()
                .iter()
                .filter(|(k, _)| !spec.frequencies().contains(k))
                .map(|(_, c)| c.norm_sqr())
                .sum::<f64>()
                .sqrt();
            return Ok(BestApprox {
                coefficients: u,
                distance: dist,
                lower_bound: dist,
                nodes: 0,
                sidedness: Sidedness::Exact,
                report: OptimizerReport {
                    iterations: 0,
                    final_gradient_norm: 0.0,
                    converged: true,
                },
            });
        }
    }

    let (points, exact_rule) = approximation_rule(target, space, p, tol);
    let a = space.basis_matrix_unchecked(&points);
    let y = DVector::from_iterator(points.len(), points.iter().map(|x| target.eval(x)));
    let m = points.len();
    let finite = !space.domain().is_torus();

    if p.is_infinite() {
        let fit = lawson_minimax(&a, &y, tol);
        let u = CoefficientVector::new(space, fit.coeffs.iter().copied().collect())?;
        return Ok(BestApprox {
            coefficients: u,
            distance: fit.upper,
            lower_bound: fit.lower,
            nodes: m,
            sidedness: if finite { Sidedness::Exact } else { Sidedness::GridLowerEstimate },
            report: OptimizerReport {
                iterations: fit.iterations,
                final_gradient_norm: (fit.upper - fit.lower) / fit.upper.max(1e-300),
                converged: fit.converged,
            },
        });
    }

    let w = vec![1.0 / m as f64; m];
    let fit = lp_regression(&a, &y, &w, p, tol);
    let u = CoefficientVector::new(space, fit.coeffs.iter().copied().collect())?;
    let distance = fit.objective.max(0.0).powf(1.0 / p);
    Ok(BestApprox {
        coefficients: u,
        distance,
        lower_bound: if p == 2.0 { distance } else { 0.0 },
        nodes: m,
        sidedness: if exact_rule && (p == 2.0 || fit.report.converged) {
            Sidedness::Exact
        } else {
            Sidedness::Quadrature
        },
        report: fit.report,
    })
}

/// Points of the rule on which a best approximation is computed, and whether
/// the rule reproduces the continuous norm exactly.
fn approximation_rule(target: &Target, space: &Subspace, p: f64, tol: &Tolerances) -> (Vec<Vec<f64>>, bool) {
    match space.domain() {
        Domain::FiniteSet { size } => ((0..*size).map(|j| vec![j as f64]).collect(), true),
        Domain::Torus { dimension } => {
            let spec = space.spectrum().expect("torus spaces have exponential bases");
            let (deg, spr) = match target {
                Target::Trig(t) => {
                    let ks: Vec<Vec<i64>> = t
                        .terms()
                        .iter()
                        .map(|(k, _)| k.clone())
                        .chain(spec.frequencies().iter().cloned())
                        .collect();
                    (max_abs_degree(*dimension, ks.iter()), Some(spread(*dimension, ks.iter())))
                }
                _ => (
                    spec.max_abs_degree()
                        .iter()
                        .map(|&k| k.max(if *dimension == 1 { 16 } else { 4 }))
                        .collect(),
                    None,
                ),
            };
            if p.is_infinite() {
                return (TorusGrid::new(sup_grid(&deg, tol)).points(), false);
            }
            if let (Some(pe), Some(s)) = (even_integer(p), spr.as_ref()) {
                let per_dim = exact_grid(&deg, s, pe);
                if per_dim.iter().product::<usize>() <= tol.quadrature_max_nodes {
                    return (TorusGrid::new(per_dim).points(), true);
                }
            }
            let per_dim = capped(
                deg.iter().map(|&k| (16 * (k as usize + 1)).max(64)).collect(),
                1 << 16,
            );
            (TorusGrid::new(per_dim).points(), false)
        }
    }
}

pub(crate) struct MinimaxFit {
    pub coeffs: DVector<C64>,
    /// `max_j |r_j|` of the returned coefficients.
    pub upper: f64,
    /// Weighted least-squares residual, a lower bound on the discrete minimax value.
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Discrete complex minimax `min_c max_j |y_j - (A c)_j|` by Lawson's iteration.
pub(crate) fn lawson_minimax(a: &DMatrix<C64>, y: &DVector<C64>, tol: &Tolerances) -> MinimaxFit {
    let m = a.nrows();
    let mut w = vec![1.0 / m as f64; m];
    let mut best: Option<(DVector<C64>, f64)> = None;
    let mut lower: f64 = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < tol.minimax_max_iter {
        iterations += 1;
        let c = weighted_solve(a, y, &w);
        let r = y - a * &c;
        let abs: Vec<f64> = r.iter().map(|z| z.norm()).collect();
        let upper = abs.iter().cloned().fold(0.0, f64::max);
        let l2: f64 = abs.iter().zip(&w).map(|(r, w)| w * r * r).sum::<f64>().sqrt();
        lower = lower.max(l2);
        if best.as_ref().is_none_or(|b| upper < b.1) {
            best = Some((c, upper));
        }
        let bu = best.as_ref().map(|b| b.1).unwrap_or(upper);
        if bu - lower <= tol.minimax_rel_tol * bu || bu <= 1e-14 {
            converged = true;
            break;
        }
        let s: f64 = abs.iter().zip(&w).map(|(r, w)| w * r).sum();
        if s <= 0.0 {
            converged = true;
            break;
        }
        for (wj, rj) in w.iter_mut().zip(&abs) {
            *wj *= rj / s;
        }
    }
    let (coeffs, upper) = best.expect("at least one iteration");
    MinimaxFit {
        coeffs,
        upper,
        lower: lower.min(upper),
        iterations,
        converged,
    }
}

fn weighted_solve(a: &DMatrix<C64>, y: &DVector<C64>, w: &[f64]) -> DVector<C64> {
    let mut aw = a.adjoint();
    for j in 0..a.nrows() {
        for i in 0..a.ncols() {
            aw[(i, j)] *= w[j];
        }
    }
    let h = &aw * a;
    let b = &aw * y;
    let c = solve_hpd(&h, &b);
    if c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        c
    } else {
        weighted_least_squares(a, y, w, 1e-12).0
    }
}

/// `Σ_i |ũ_i(x)|^2` at each point, for the `L_2(μ)`-orthonormalized basis.
pub fn christoffel_values(space: &Subspace, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let o = Orthonormalizer::for_space(space, Tolerances::default().rank_tol)?;
    for x in points {
        space.domain().check_point(x)?;
    }
    Ok(points
        .iter()
        .map(|x| {
            o.apply(&space.basis_values_unchecked(x))
                .iter()
                .map(|z| z.norm_sqr())
                .sum()
        })
        .collect())
}

/// `t = (sup_x Σ|ũ_i(x)|^2 / N)^{1/2}`, the smallest `t` with Condition E(t).
pub fn christoffel_sup(space: &Subspace, tol: &Tolerances) -> Result<f64> {
    let n = space.dim() as f64;
    Ok((christoffel_max(space, tol)? / n).sqrt())
}

fn christoffel_max(space: &Subspace, tol: &Tolerances) -> Result<f64> {
    let o = Orthonormalizer::for_space(space, tol.rank_tol)?;
    if o.is_identity() {
        // |e^{i<k,x>}| = 1 for every basis function
        return Ok(space.dim() as f64);
    }
    match space.domain() {
        Domain::FiniteSet { size } => {
            let pts: Vec<Vec<f64>> = (0..*size).map(|j| vec![j as f64]).collect();
            Ok(christoffel_values(space, &pts)?.into_iter().fold(0.0, f64::max))
        }
        Domain::Torus { .. } => {
            let deg = space.spectrum().map(|s| s.max_abs_degree()).unwrap_or_default();
            let k = |x: &[f64]| -> f64 {
                o.apply(&space.basis_values_unchecked(x))
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum()
            };
            Ok(sup_search(k, sup_grid(&deg, tol)).0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NikolskiiMethod {
    /// `q = 2`: `M = sup_x (Σ|ũ_i(x)|^2)^{1/2}`.
    Analytic,
    /// `M = sup_{x_0} 1 / min{‖f‖_q : f(x_0) = 1}`, a convex program per anchor point.
    ConstrainedMinimization,
}

/// Constant `M` of `‖f‖_∞ <= M ‖f‖_q` and its normalization `B = M / N^{1/q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NikolskiiEstimate {
    pub q: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub method: NikolskiiMethod,
    /// Quadrature nodes (torus) or anchor points (finite set) used.
    pub grid_size: usize,
    /// Ratio `‖f‖_∞ / ‖f‖_q` attained by an explicit function, so `M` is at least this.
    pub certified_lower_bound: f64,
}

/// Nikol'skii constant of the space for exponent `q`.
///
/// On the torus every exponential space is translation invariant, so the
/// extremal anchor can be taken at the origin. On finite sets each point is
/// tried as the anchor.
pub fn nikolskii_constant(space: &Subspace, q: f64, tol: &Tolerances) -> Result<NikolskiiEstimate> {
    check_exponent(q)?;
    if q.is_infinite() {
        return Err(Error::InvalidExponent(q));
    }
    let n = space.dim() as f64;
    if q == 2.0 {
        let m = christoffel_max(space, tol)?.sqrt();
        let grid_size = match space.domain() {
            Domain::FiniteSet { size } => *size,
            Domain::Torus { .. } => 0,
        };
        return Ok(NikolskiiEstimate {
            q,
            m,
            b: m / n.sqrt(),
            method: NikolskiiMethod::Analytic,
            grid_size,
            certified_lower_bound: m,
        });
    }

    let (rule, anchors): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match space.domain() {
        Domain::FiniteSet { size } => {
            let pts: Vec<Vec<f64>> = (0..*size).map(|j| vec![j as f64]).collect();
            (pts.clone(), pts)
        }
        Domain::Torus { dimension } => {
            let spec = space.spectrum().expect("torus spaces have exponential bases");
            let per_dim = match even_integer(q) {
                Some(qe) => exact_grid(&spec.max_abs_degree(), &spec.spread(), qe),
                None => spec
                    .max_abs_degree()
                    .iter()
                    .map(|&k| (64 * (k as usize + 1)).max(256))
                    .collect(),
            };
            let per_dim = capped(per_dim, 1 << 16);
            (TorusGrid::new(per_dim).points(), vec![vec![0.0; *dimension]])
        }
    };
    let a = space.basis_matrix_unchecked(&rule);
    let w = vec![1.0 / rule.len() as f64; rule.len()];

    let solved: Vec<Result<(f64, f64)>> = anchors
        .par_iter()
        .map(|x0| anchored_minimum(space, &a, &w, x0, q, tol))
        .collect();
    let mut m = 0.0f64;
    let mut lower = 0.0f64;
    for s in solved {
        let (mi, li) = s?;
        m = m.max(mi);
        lower = lower.max(li);
    }
    Ok(NikolskiiEstimate {
        q,
        m,
        b: m / n.powf(1.0 / q),
        method: NikolskiiMethod::ConstrainedMinimization,
        grid_size: match space.domain() {
            Domain::FiniteSet { size } => *size,
            Domain::Torus { .. } => rule.len(),
        },
        certified_lower_bound: lower,
    })
}

/// `1 / min{‖f‖_q : f(x0) = 1}` on the rule, and the ratio realized by the minimizer
/// with its norms re-evaluated independently of the rule.
fn anchored_minimum(
    space: &Subspace,
    a: &DMatrix<C64>,
    w: &[f64],
    x0: &[f64],
    q: f64,
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let v = DVector::from_vec(space.basis_values_unchecked(x0));
    let vn = v.norm_squared();
    if vn == 0.0 {
        // every f vanishes at x0
        return Ok((0.0, 0.0));
    }
    // f(x0) = v^T c = 1 on the affine set c0 + range(Z)
    let c0 = v.map(|z| z.conj()) / C64::new(vn, 0.0);
    let z = constraint_nullspace(&v);
    let az = a * &z;
    let y = -(a * &c0);
    let fit = lp_regression(&az, &y, w, q, tol);
    let c = &c0 + &z * &fit.coeffs;
    let norm_rule = fit.objective.max(0.0).powf(1.0 / q);
    if norm_rule == 0.0 {
        return Err(Error::DegenerateSpace("a nonzero function vanishes on the whole quadrature rule".into()));
    }
    let f = CoefficientVector::new(space, c.iter().copied().collect())?;
    let target = f.to_target();
    let cont = target_norm_p(&target, space.domain(), q, tol)?;
    let sup = target_norm_sup(&target, tol).max(f.eval_unchecked(x0).norm());
    let lower = sup / (cont.value + cont.abs_tol);
    Ok((1.0 / norm_rule, lower))
}

/// Orthonormal basis of `{c : v^T c = 0}`.
fn constraint_nullspace(v: &DVector<C64>) -> DMatrix<C64> {
    let n = v.len();
    let vc = v.map(|z| z.conj());
    let mut cols: Vec<DVector<C64>> = vec![vc.clone() / C64::new(vc.norm(), 0.0)];
    let mut basis = Vec::with_capacity(n.saturating_sub(1));
    for e in 0..n {
        let mut u = DVector::zeros(n);
        u[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in cols.iter() {
                let proj = b.dotc(&u);
                u -= b * proj;
            }
        }
        let nu = u.norm();
        if nu > 1e-8 && basis.len() < n - 1 {
            let u = u / C64::new(nu, 0.0);
            cols.push(u.clone());
            basis.push(u);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{make_lacunary_space, make_trig_space, tensor_product, Spectrum, TrigPolynomial};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn trig(freqs: &[i64]) -> Subspace {
        make_trig_space(1, Spectrum::one_dimensional(freqs).unwrap()).unwrap()
    }

    fn two_cos() -> CoefficientVector {
        CoefficientVector::new(&trig(&[-1, 1]), vec![c(1.0), c(1.0)]).unwrap()
    }

    #[test]
    fn unimodular_norms() {
        let f = CoefficientVector::new(&trig(&[3]), vec![c(1.0)]).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, 7.5] {
            assert!((norm_p(&f, p).unwrap() - 1.0).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn two_cos_norms() {
        let f = two_cos();
        assert!((norm_p(&f, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        // (1/2π)∫(2cos x)^4 = 16 · 3/8
        let e = norm_p_with(&f, 4.0, &Tolerances::default()).unwrap();
        assert!(e.exact);
        assert!((e.value - 6f64.powf(0.25)).abs() < 1e-13);
        // (1/2π)∫|2cos x| = 4/π
        let e1 = norm_p_with(&f, 1.0, &Tolerances::default()).unwrap();
        assert!((e1.value - 4.0 / std::f64::consts::PI).abs() < 1e-8, "{e1:?}");
        assert!(e1.abs_tol <= 1e-8);
        assert!(matches!(norm_p(&f, 0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn finite_norm_is_an_average() {
        let s = Subspace::finite(vec![vec![c(1.0), c(2.0), c(-3.0)]]).unwrap();
        let f = CoefficientVector::new(&s, vec![c(2.0)]).unwrap();
        let want = ((8.0 + 64.0 + 216.0) / 3.0f64).powf(1.0 / 3.0);
        assert!((norm_p(&f, 3.0).unwrap() - want).abs() < 1e-13);
        assert_eq!(norm_sup(&f), 6.0);
    }

    #[test]
    fn sup_norm_examples() {
        assert!((norm_sup(&two_cos()) - 2.0).abs() < 1e-12);
        let d = CoefficientVector::new(&trig(&[-2, -1, 0, 1, 2]), vec![c(1.0); 5]).unwrap();
        assert!((norm_sup(&d) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_matches_dense_grid() {
        let s = trig(&[-2, -1, 0, 1, 2]);
        let coeffs = vec![
            C64::new(0.3, -0.7),
            C64::new(-1.1, 0.2),
            C64::new(0.5, 0.5),
            C64::new(0.05, 0.9),
            C64::new(-0.4, -0.3),
        ];
        let f = CoefficientVector::new(&s, coeffs).unwrap();
        let dense = (0..1_000_000)
            .map(|j| f.eval_unchecked(&[TAU * j as f64 / 1e6]).norm())
            .fold(0.0, f64::max);
        let est = norm_sup(&f);
        assert!((est - dense).abs() <= 1e-6 * dense, "{est} vs {dense}");
    }

    #[test]
    fn discrete_norm_examples() {
        let v = [c(2.5); 7];
        for p in [1.0, 2.0, 3.3] {
            assert!((discrete_norm(&v, p, None).unwrap() - 2.5).abs() < 1e-14);
        }
        assert_eq!(discrete_norm(&[c(1.0), c(-1.0)], f64::INFINITY, None).unwrap(), 1.0);
        let w = [0.5, 0.5];
        assert!((discrete_norm(&[c(3.0), c(4.0)], 2.0, Some(&w)).unwrap() - 12.5f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            discrete_norm(&[c(3.0), c(4.0)], 2.0, Some(&[0.5, -0.1])),
            Err(Error::InvalidWeight(_))
        ));
        assert!(matches!(
            discrete_norm(&[c(3.0), c(4.0)], f64::INFINITY, Some(&w)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn best_approx_examples() {
        let tol = Tolerances::default();
        let f = Target::Trig(TrigPolynomial::from_terms(1, [(vec![2], c(1.0))]));
        let r = best_approx(&f, &trig(&[1]), 2.0, &tol).unwrap();
        assert_eq!(r.coefficients.coeffs(), &[c(0.0)]);
        assert_eq!(r.distance, 1.0);

        let s = trig(&[-1, 0, 1]);
        let member = CoefficientVector::new(&s, vec![C64::new(0.2, 0.1), c(-1.0), c(0.7)]).unwrap();
        for p in [1.5, 2.0, 4.0, f64::INFINITY] {
            let r = best_approx(&member.to_target(), &s, p, &tol).unwrap();
            assert!(r.distance <= 1e-10, "p = {p}: {}", r.distance);
            for (a, b) in r.coefficients.coeffs().iter().zip(member.coeffs()) {
                assert!((a - b).norm() < 1e-8, "p = {p}");
            }
        }

        let cos2 = Target::Trig(TrigPolynomial::from_terms(1, [(vec![2], c(0.5)), (vec![-2], c(0.5))]));
        let r = best_approx(&cos2, &s, f64::INFINITY, &tol).unwrap();
        assert!((r.distance - 1.0).abs() <= 1e-4, "{}", r.distance);
        assert!(r.lower_bound <= 1.0 + 1e-12);
        assert!(r.coefficients.coeffs().iter().all(|z| z.norm() < 1e-2));
        assert_eq!(r.sidedness, Sidedness::GridLowerEstimate);
    }

    #[test]
    fn p2_projection_residual_is_orthogonal() {
        let tol = Tolerances::default();
        let s = trig(&[-1, 0, 1]);
        let g = Target::function(1, |x| C64::new((x[0].cos() * 2.0).exp(), x[0].sin()));
        let r = best_approx(&g, &s, 2.0, &tol).unwrap();
        let grid = TorusGrid::new(vec![4096]);
        for k in [-1i64, 0, 1] {
            let ip_re = grid.mean(|x| {
                let res = g.eval(x) - r.coefficients.eval_unchecked(x);
                (res * C64::from_polar(1.0, -(k as f64) * x[0])).re
            });
            let ip_im = grid.mean(|x| {
                let res = g.eval(x) - r.coefficients.eval_unchecked(x);
                (res * C64::from_polar(1.0, -(k as f64) * x[0])).im
            });
            assert!(ip_re.abs() < 1e-10 && ip_im.abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn christoffel_examples() {
        let tol = Tolerances::default();
        assert_eq!(christoffel_sup(&trig(&[-3, 0, 5]), &tol).unwrap(), 1.0);
        let s = Subspace::finite(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).unwrap();
        assert!((christoffel_sup(&s, &tol).unwrap() - 1.0).abs() < 1e-12);
        let v = vec![c(1.0), c(2.0)];
        let bad = Subspace::finite(vec![v.clone(), v]).unwrap();
        assert!(matches!(christoffel_sup(&bad, &tol), Err(Error::DegenerateSpace(_))));
    }

    #[test]
    fn nikolskii_q2() {
        let tol = Tolerances::default();
        for n in [1i64, 2, 4, 8] {
            let s = make_trig_space(1, Spectrum::cube(1, n).unwrap()).unwrap();
            let e = nikolskii_constant(&s, 2.0, &tol).unwrap();
            let dim = (2 * n + 1) as f64;
            assert!((e.m - dim.sqrt()).abs() < 1e-10);
            assert!((e.b - 1.0).abs() < 1e-10);
            assert!((e.m - christoffel_sup(&s, &tol).unwrap() * dim.sqrt()).abs() < 1e-10);
        }
        let lac = make_lacunary_space(4, 2.0).unwrap();
        assert!((nikolskii_constant(&lac, 2.0, &tol).unwrap().m - 2.0).abs() < 1e-10);
    }

    #[test]
    fn nikolskii_general_q_agrees_with_q2_identity() {
        // at q = 2 the constrained program has the closed form 1/min‖f‖_2 = ‖v‖
        let tol = Tolerances::default();
        let s = trig(&[-1, 0, 1, 3]);
        let v = DVector::from_vec(s.basis_values_unchecked(&[0.0]));
        let a = s.basis_matrix_unchecked(&TorusGrid::new(vec![64]).points());
        let w = vec![1.0 / 64.0; 64];
        let (m, lower) = anchored_minimum(&s, &a, &w, &[0.0], 2.0, &tol).unwrap();
        assert!((m - v.norm()).abs() < 1e-10);
        assert!(lower <= m + 1e-9);
    }

    #[test]
    fn nikolskii_lacunary_q4() {
        let tol = Tolerances::default();
        for n in 2..=5 {
            let s = make_lacunary_space(n, 2.0).unwrap();
            let e = nikolskii_constant(&s, 4.0, &tol).unwrap();
            assert!(e.b <= (n as f64).powf(0.25) + 1e-6, "n = {n}: {e:?}");
            assert!(e.certified_lower_bound <= e.m * (1.0 + 1e-6));
            assert!(e.m >= 1.0);
        }
    }

    #[test]
    fn nikolskii_of_tensor_is_at_most_product() {
        let tol = Tolerances::default();
        let a = trig(&[-1, 0, 1]);
        let b = trig(&[0, 2]);
        let t = tensor_product(&[a.clone(), b.clone()]).unwrap();
        for q in [2.0, 4.0, 3.0] {
            let mt = nikolskii_constant(&t, q, &tol).unwrap().m;
            let ma = nikolskii_constant(&a, q, &tol).unwrap().m;
            let mb = nikolskii_constant(&b, q, &tol).unwrap().m;
            assert!(mt <= ma * mb * (1.0 + 1e-6), "q = {q}: {mt} vs {}", ma * mb);
            if q == 2.0 {
                assert!((mt - ma * mb).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn monotone_in_p_with_probability_weights() {
        let v: Vec<C64> = (0..9).map(|j| C64::new((j as f64 * 1.3).sin(), (j as f64).cos())).collect();
        let ps = [1.0, 2.0, 4.0, f64::INFINITY];
        let norms: Vec<f64> = ps.iter().map(|&p| discrete_norm(&v, p, None).unwrap()).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-15));
    }
}
