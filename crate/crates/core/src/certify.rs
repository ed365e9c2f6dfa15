//! Marcinkiewicz certificates: constants `(C_1, C_2)` with
//! `C_1 ‖f‖_p^p <= Σ_j w_j |f(ξ^j)|^p <= C_2 ‖f‖_p^p` on a subspace.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, Orthonormalizer};
use crate::norms::{check_exponent, sup_grid, target_norm_sup};
use crate::optim::{optimize_ratio_until, pow_from_sq, RatioProblem};
use crate::points::{validate_weights, PointSet, Provenance};
use crate::quadrature::{capped, even_integer, exact_nodes_for_even_power, TorusGrid};
use crate::space::{exp_ikx, CoefficientVector, Domain, Subspace, C64};
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMethod {
    /// Extreme eigenvalues of the frame matrix.
    ExactEigen,
    /// The sample is an equispaced grid integrating `|f|^p` exactly.
    ExactQuadrature,
    OptimizationBound,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertStatus {
    Certified,
    /// `c1_pow` is an upper bound on the best `C_1`, `c2_pow` a lower bound on the best `C_2`.
    HeuristicUpperC1,
    Heuristic,
}

/// Weights of the discrete side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Weighting {
    /// `1/m` each.
    Uniform,
    Weighted { weight_sum: f64 },
}

/// Certified outer bounds `c1_lower <= C_1` and `C_2 <= c2_upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    pub c1_lower: f64,
    pub c2_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(with = "exponent")]
    pub p: f64,
    /// For `p = ∞` the norm-form constant of `C_1 ‖f‖_∞ <= max_j |f(ξ^j)|`.
    pub c1_pow: f64,
    /// Equals 1 for `p = ∞`.
    pub c2_pow: f64,
    pub method: CertMethod,
    pub status: CertStatus,
    pub tolerance: f64,
    pub weighting: Weighting,
    pub m: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enclosure: Option<Enclosure>,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertStatus::Certified
    }

    /// `c1_pow >= 1 - ε` and `c2_pow <= 1 + ε`.
    pub fn meets(&self, eps: f64) -> bool {
        self.margin(eps) >= 0.0
    }

    /// Signed distance to failing [`Certificate::meets`].
    pub fn margin(&self, eps: f64) -> f64 {
        (self.c1_pow - (1.0 - eps)).min((1.0 + eps) - self.c2_pow)
    }
}

/// `p` as a JSON number, or the string `"inf"`.
pub mod exponent {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(p),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
            Raw::Str(s) => s.parse().map_err(D::Error::custom),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    pub restarts: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        let tolerances = Tolerances::default();
        Self {
            restarts: tolerances.restarts,
            seed: 0,
            tolerances,
        }
    }
}

impl CertifyOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Certificate for `(space, points, p)`; weights default to `1/m`.
pub fn certify(space: &Subspace, points: &PointSet, weights: Option<&[f64]>, p: f64, opts: &CertifyOptions) -> Result<Certificate> {
    certify_until(space, points, weights, p, opts, None)
}

/// With `eps`, optimization stops as soon as the certificate is known to miss
/// `1 ± ε`, and a certified enclosure inside `1 ± ε` is returned as is.
pub(crate) fn certify_until(
    space: &Subspace,
    points: &PointSet,
    weights: Option<&[f64]>,
    p: f64,
    opts: &CertifyOptions,
    eps: Option<f64>,
) -> Result<Certificate> {
    check_exponent(p)?;
    if points.is_empty() {
        return Err(Error::InvalidSample("empty sample".into()));
    }
    points.check_domain(space.domain())?;
    let m = points.len();
    if let Some(w) = weights {
        validate_weights(w, m)?;
    }
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0 / m as f64; m],
    };
    let weighting = match weights {
        None => Weighting::Uniform,
        Some(w) => Weighting::Weighted {
            weight_sum: w.iter().sum(),
        },
    };
    let base = Certificate {
        p,
        c1_pow: 0.0,
        c2_pow: 0.0,
        method: CertMethod::ExactEigen,
        status: CertStatus::Certified,
        tolerance: 0.0,
        weighting,
        m,
        n: space.dim(),
        enclosure: None,
    };

    if p == 2.0 {
        let (lo, hi) = frame_bounds(space, points, &w, &opts.tolerances)?;
        return Ok(Certificate {
            c1_pow: lo,
            c2_pow: hi,
            tolerance: eigen_tolerance(space.dim(), hi),
            ..base
        });
    }
    if p.is_infinite() {
        if weights.is_some() {
            return Err(Error::Unsupported("weighted certificates for p = ∞".into()));
        }
        return bernstein_certificate(space, points, opts, base);
    }

    let pe = even_integer(p);
    if let Some(pe) = pe {
        if let Some(c) = exact_quadrature_constant(space, points, &w, pe) {
            return Ok(Certificate {
                c1_pow: c,
                c2_pow: c,
                method: CertMethod::ExactQuadrature,
                tolerance: 64.0 * f64::EPSILON * c,
                ..base
            });
        }
    }
    let enclosure = pe.and_then(|pe| lifted_enclosure(space, points, &w, pe));
    if let (Some(eps), Some(e)) = (eps, enclosure.as_ref()) {
        if e.c1_lower >= 1.0 - eps && e.c2_upper <= 1.0 + eps {
            return Ok(Certificate {
                c1_pow: e.c1_lower,
                c2_pow: e.c2_upper,
                tolerance: eigen_tolerance(space.dim(), e.c2_upper),
                enclosure,
                ..base
            });
        }
    }
    ratio_certificate(space, points, &w, p, opts, eps, Certificate { enclosure, ..base })
}

fn eigen_tolerance(n: usize, top: f64) -> f64 {
    1e3 * f64::EPSILON * (n.max(1) as f64) * top.max(1.0)
}

/// Extreme eigenvalues of `Σ_j w_j ũ(ξ^j) ũ(ξ^j)^*` for the orthonormalized basis.
pub fn frame_bounds(space: &Subspace, points: &PointSet, w: &[f64], tol: &Tolerances) -> Result<(f64, f64)> {
    let o = Orthonormalizer::for_space(space, tol.rank_tol)?;
    let a = o.apply_rows(space.basis_matrix(points.points())?);
    let ev = frame_eigenvalues(&a, w);
    Ok((ev[0].max(0.0), *ev.last().expect("nonempty")))
}

fn frame_eigenvalues(a: &DMatrix<C64>, w: &[f64]) -> Vec<f64> {
    let mut aw = a.adjoint();
    for j in 0..a.nrows() {
        for i in 0..a.ncols() {
            aw[(i, j)] *= w[j];
        }
    }
    hermitian_eigenvalues(&(aw * a))
}

/// Equal weights on a full (possibly shifted) equispaced grid fine enough for
/// `|f|^p`: the discrete sum equals `(Σ w) ‖f‖_p^p` for every `f`.
fn exact_quadrature_constant(space: &Subspace, points: &PointSet, w: &[f64], p: u32) -> Option<f64> {
    let spec = space.spectrum()?;
    let w0 = w[0];
    if w.iter().any(|x| (x - w0).abs() > 1e-14 * w0) {
        return None;
    }
    let per_dim = detect_grid(points.points(), spec.dimension())?;
    let fine = per_dim
        .iter()
        .zip(spec.spread())
        .all(|(&mt, s)| mt >= exact_nodes_for_even_power(s, p));
    fine.then(|| w.iter().sum())
}

/// Per-dimension sizes when the points are exactly a shifted product grid
/// `{a + 2πj/M}` (in any order, without repetition).
pub fn detect_grid(points: &[Vec<f64>], d: usize) -> Option<Vec<usize>> {
    const EPS: f64 = 1e-9;
    let mut per_dim = Vec::with_capacity(d);
    let mut origin = Vec::with_capacity(d);
    for t in 0..d {
        let mut xs: Vec<f64> = points.iter().map(|x| x[t].rem_euclid(TAU)).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < EPS);
        if xs.len() > 1 && (xs[0] + TAU - xs[xs.len() - 1]) < EPS {
            xs.pop();
        }
        let mt = xs.len();
        let h = TAU / mt as f64;
        for (i, x) in xs.iter().enumerate() {
            if (x - xs[0] - i as f64 * h).abs() > EPS {
                return None;
            }
        }
        per_dim.push(mt);
        origin.push(xs[0]);
    }
    if per_dim.iter().product::<usize>() != points.len() {
        return None;
    }
    let mut seen = HashSet::with_capacity(points.len());
    for x in points {
        let key: Vec<usize> = (0..d)
            .map(|t| {
                let h = TAU / per_dim[t] as f64;
                (((x[t] - origin[t]).rem_euclid(TAU) / h).round() as usize) % per_dim[t]
            })
            .collect();
        if !seen.insert(key) {
            return None;
        }
    }
    Some(per_dim)
}

/// For even `p = 2r`, `f^r` lies in the span of `r`-fold frequency sums and
/// `‖f‖_p^p = ‖f^r‖_2^2`, so the frame bounds of that span enclose the constants.
fn lifted_enclosure(space: &Subspace, points: &PointSet, w: &[f64], p: u32) -> Option<Enclosure> {
    const MAX_LIFTED: usize = 600;
    let spec = space.spectrum()?;
    let r = p / 2;
    let mut sums: Vec<Vec<i64>> = vec![vec![0; spec.dimension()]];
    for _ in 0..r {
        let mut next = std::collections::BTreeSet::new();
        for s in &sums {
            for k in spec.frequencies() {
                next.insert(s.iter().zip(k).map(|(a, b)| a + b).collect::<Vec<i64>>());
            }
            if next.len() > MAX_LIFTED {
                return None;
            }
        }
        sums = next.into_iter().collect();
    }
    let a = DMatrix::from_fn(points.len(), sums.len(), |j, i| exp_ikx(&sums[i], &points.points()[j]));
    let ev = frame_eigenvalues(&a, w);
    Some(Enclosure {
        c1_lower: ev[0].max(0.0),
        c2_upper: *ev.last().expect("nonempty"),
    })
}

/// Rows and weights of the rule used for `‖f‖_p^p`, and whether it is exact.
pub(crate) fn continuous_rule(space: &Subspace, p: f64) -> (DMatrix<C64>, Vec<f64>, bool) {
    let (pts, exact): (Vec<Vec<f64>>, bool) = match space.domain() {
        Domain::FiniteSet { size } => ((0..*size).map(|j| vec![j as f64]).collect(), true),
        Domain::Torus { dimension } => {
            let spec = space.spectrum().expect("torus spaces have exponential bases");
            let spread = spec.spread();
            let exact = even_integer(p).map(|pe| {
                spread
                    .iter()
                    .map(|&s| exact_nodes_for_even_power(s, pe))
                    .collect::<Vec<_>>()
            });
            match exact {
                Some(per_dim) if per_dim.iter().product::<usize>() <= 1 << 16 => {
                    (TorusGrid::new(per_dim).points(), true)
                }
                _ => {
                    let per_dim = if *dimension == 1 {
                        vec![(32 * (spread[0] as usize + 1)).max(256)]
                    } else {
                        spread.iter().map(|&s| (8 * (s as usize + 1)).max(32)).collect()
                    };
                    (TorusGrid::new(capped(per_dim, 1 << 15)).points(), false)
                }
            }
        }
    };
    let q = space.basis_matrix_unchecked(&pts);
    let n = pts.len();
    (q, vec![1.0 / n as f64; n], exact)
}

/// Deterministic starting points: the constant function when present, and
/// the extreme right singular vectors of the weighted sample matrix.
fn structured_starts(space: &Subspace, a: &DMatrix<C64>, w: &[f64]) -> (Vec<DVector<C64>>, Vec<DVector<C64>>) {
    let n = space.dim();
    let mut aw = a.clone();
    for j in 0..a.nrows() {
        let s = w[j].sqrt();
        for i in 0..n {
            aw[(j, i)] *= s;
        }
    }
    let svd = aw.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let (mut imin, mut imax) = (0, 0);
    for i in 0..sv.len() {
        if sv[i] < sv[imin] {
            imin = i;
        }
        if sv[i] > sv[imax] {
            imax = i;
        }
    }
    let row = |i: usize| DVector::from_iterator(n, v_t.row(i).iter().map(|z| z.conj()));
    let mut low = Vec::new();
    let mut high = vec![row(imax)];
    if a.nrows() < n {
        low.push(null_vector(a));
    } else {
        low.push(row(imin));
    }
    if let Some(c) = constant_coefficients(space) {
        low.push(c.clone());
        high.push(c);
    }
    (low, high)
}

fn null_vector(a: &DMatrix<C64>) -> DVector<C64> {
    let n = a.ncols();
    let mut sq = DMatrix::zeros(n, n);
    sq.rows_mut(0, a.nrows()).copy_from(a);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sv = &svd.singular_values;
    let imin = (0..n).min_by(|&x, &y| sv[x].total_cmp(&sv[y])).expect("n >= 1");
    DVector::from_iterator(n, v_t.row(imin).iter().map(|z| z.conj()))
}

/// Coefficients of the constant function 1, if it lies in the space.
fn constant_coefficients(space: &Subspace) -> Option<DVector<C64>> {
    if !space.contains_constant() {
        return None;
    }
    match space.spectrum() {
        Some(s) => {
            let i = s.frequencies().iter().position(|k| k.iter().all(|&x| x == 0))?;
            let mut c = DVector::zeros(space.dim());
            c[i] = C64::new(1.0, 0.0);
            Some(c)
        }
        None => {
            let Domain::FiniteSet { size } = space.domain() else {
                return None;
            };
            let pts: Vec<Vec<f64>> = (0..*size).map(|j| vec![j as f64]).collect();
            let a = space.basis_matrix_unchecked(&pts);
            let ones = DVector::from_element(*size, C64::new(1.0, 0.0));
            Some(crate::linalg::weighted_least_squares(&a, &ones, &vec![1.0; *size], 1e-12).0)
        }
    }
}

fn ratio_certificate(
    space: &Subspace,
    points: &PointSet,
    w: &[f64],
    p: f64,
    opts: &CertifyOptions,
    eps: Option<f64>,
    base: Certificate,
) -> Result<Certificate> {
    let a = space.basis_matrix(points.points())?;
    let (q, qw, _) = continuous_rule(space, p);
    let problem = RatioProblem {
        num: &a,
        num_w: w,
        den: &q,
        den_w: &qw,
        p,
    };
    let (low, high) = structured_starts(space, &a, w);
    let iters = opts.tolerances.max_iterations;
    let lo = optimize_ratio_until(&problem, true, &low, opts.restarts, opts.seed, iters, eps.map(|e| 1.0 - e));
    let stop_hi = match eps {
        Some(e) if lo.value < 1.0 - e => None,
        Some(e) => Some(1.0 + e),
        None => None,
    };
    let hi = if eps.is_some() && stop_hi.is_none() {
        // already failing; one structured start is enough for a report
        optimize_ratio_until(&problem, false, &high, 0, opts.seed, iters, Some(f64::NEG_INFINITY))
    } else {
        optimize_ratio_until(&problem, false, &high, opts.restarts, opts.seed, iters, stop_hi)
    };
    let c1 = lo.value.max(0.0);
    let c2 = hi.value.max(c1);
    Ok(Certificate {
        c1_pow: c1,
        c2_pow: c2,
        method: CertMethod::OptimizationBound,
        status: CertStatus::HeuristicUpperC1,
        tolerance: lo.stationarity.max(hi.stationarity),
        ..base
    })
}

/// `p = ∞`: minimize a `p = 32` surrogate of `max_j |f(ξ^j)| / ‖f‖_∞`, then
/// evaluate the true ratio at the minimizers found.
fn bernstein_certificate(space: &Subspace, points: &PointSet, opts: &CertifyOptions, base: Certificate) -> Result<Certificate> {
    const SURROGATE: f64 = 32.0;
    let tol = &opts.tolerances;
    let a = space.basis_matrix(points.points())?;
    let m = a.nrows();
    let (grid_pts, finite) = match space.domain() {
        Domain::FiniteSet { size } => ((0..*size).map(|j| vec![j as f64]).collect::<Vec<_>>(), true),
        Domain::Torus { .. } => {
            let deg = space.spectrum().map(|s| s.max_abs_degree()).unwrap_or_default();
            let per_dim: Vec<usize> = sup_grid(&deg, tol).into_iter().map(|x| x.min(1 << 12)).collect();
            (TorusGrid::new(capped(per_dim, 1 << 16)).points(), false)
        }
    };
    let q = space.basis_matrix_unchecked(&grid_pts);
    let w = vec![1.0 / m as f64; m];
    let qw = vec![1.0 / grid_pts.len() as f64; grid_pts.len()];
    let problem = RatioProblem {
        num: &a,
        num_w: &w,
        den: &q,
        den_w: &qw,
        p: SURROGATE,
    };
    let (low, _) = structured_starts(space, &a, &w);
    let found = optimize_ratio_until(&problem, true, &low, opts.restarts, opts.seed, tol.max_iterations, None);
    let mut best = f64::INFINITY;
    for c in low.iter().chain(std::iter::once(&found.coeffs)) {
        let f = CoefficientVector::new(space, c.iter().copied().collect())?;
        let disc = (&a * c).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let sup = target_norm_sup(&f.to_target(), tol).max(disc);
        if sup > 0.0 {
            best = best.min(disc / sup);
        }
    }
    Ok(Certificate {
        c1_pow: best.clamp(0.0, 1.0),
        c2_pow: 1.0,
        method: CertMethod::OptimizationBound,
        status: CertStatus::Heuristic,
        tolerance: if finite { 0.0 } else { tol.sup_rel_tol },
        ..base
    })
}

/// Independent evaluation of `‖f‖_p^p` for the brute-force oracle.
enum ContinuousPower {
    Parseval,
    Convolution { freqs: Vec<Vec<i64>>, r: u32 },
    Rule { q: DMatrix<C64>, fine: DMatrix<C64> },
}

impl ContinuousPower {
    fn new(space: &Subspace, p: f64) -> Self {
        match (space.spectrum(), even_integer(p)) {
            (Some(_), _) if p == 2.0 => ContinuousPower::Parseval,
            (Some(s), Some(pe)) => ContinuousPower::Convolution {
                freqs: s.frequencies().to_vec(),
                r: pe / 2,
            },
            _ => {
                let rule = |scale: usize| -> Vec<Vec<f64>> {
                    match space.domain() {
                        Domain::FiniteSet { size } => (0..*size).map(|j| vec![j as f64]).collect(),
                        Domain::Torus { dimension } => {
                            let per = if *dimension == 1 { 384 * scale } else { 48 * scale };
                            let grid = TorusGrid::new(vec![per; *dimension]);
                            let half = TAU / per as f64 / 2.0;
                            grid.points()
                                .into_iter()
                                .map(|x| x.into_iter().map(|c| c + half).collect())
                                .collect()
                        }
                    }
                };
                ContinuousPower::Rule {
                    q: space.basis_matrix_unchecked(&rule(1)),
                    fine: space.basis_matrix_unchecked(&rule(2)),
                }
            }
        }
    }

    fn eval(&self, c: &DVector<C64>, p: f64) -> f64 {
        match self {
            ContinuousPower::Parseval => c.norm_squared(),
            ContinuousPower::Convolution { freqs, r } => {
                let mut g: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
                g.insert(vec![0; freqs[0].len()], C64::new(1.0, 0.0));
                for _ in 0..*r {
                    let mut next: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
                    for (k, a) in &g {
                        for (kk, b) in freqs.iter().zip(c.iter()) {
                            let s: Vec<i64> = k.iter().zip(kk).map(|(x, y)| x + y).collect();
                            *next.entry(s).or_default() += a * b;
                        }
                    }
                    g = next;
                }
                g.values().map(|z| z.norm_sqr()).sum()
            }
            ContinuousPower::Rule { q, .. } => mean_power(q, c, p),
        }
    }

    /// Relative disagreement of the rule with a rule twice as fine at `c`.
    fn rule_error(&self, c: &DVector<C64>, p: f64) -> f64 {
        match self {
            ContinuousPower::Rule { q, fine } => {
                let a = mean_power(q, c, p);
                let b = mean_power(fine, c, p);
                (a - b).abs() / b.max(1e-300)
            }
            _ => 0.0,
        }
    }
}

fn mean_power(q: &DMatrix<C64>, c: &DVector<C64>, p: f64) -> f64 {
    (q * c).iter().map(|z| pow_from_sq(z.norm_sqr(), p)).sum::<f64>() / q.nrows() as f64
}

/// Unit vector of `C^N` modulo phase from `N - 1` modulus angles in
/// `[0, π/2]` followed by `N - 1` phases.
fn sphere_point(n: usize, angles: &[f64]) -> DVector<C64> {
    let (theta, phi) = angles.split_at(n - 1);
    let mut c = DVector::zeros(n);
    let mut rest = 1.0;
    for i in 0..n {
        let modulus = if i + 1 < n { rest * theta[i].cos() } else { rest };
        if i + 1 < n {
            rest *= theta[i].sin();
        }
        let phase = if i == 0 { 0.0 } else { phi[i - 1] };
        c[i] = C64::from_polar(modulus, phase);
    }
    c
}

struct Oracle<'a> {
    n: usize,
    a: &'a DMatrix<C64>,
    cont: ContinuousPower,
    p: f64,
}

impl Oracle<'_> {
    fn value(&self, angles: &[f64]) -> f64 {
        let c = sphere_point(self.n, angles);
        self.ratio(&c)
    }

    fn ratio(&self, c: &DVector<C64>) -> f64 {
        let num = mean_power(self.a, c, self.p);
        let den = self.cont.eval(c, self.p);
        num / den
    }

    fn dims(&self) -> usize {
        2 * self.n - 2
    }

    /// Is coordinate `t` a modulus angle (bounded) rather than a phase (periodic)?
    fn bounded(&self, t: usize) -> bool {
        t < self.n - 1
    }

    fn clamp(&self, t: usize, x: f64) -> f64 {
        if self.bounded(t) {
            x.clamp(0.0, FRAC_PI_2)
        } else {
            x.rem_euclid(TAU)
        }
    }
}

/// Sweep grid over the angle box: `res` modulus values in `[0, π/2]` and `res` phases.
struct AngleGrid {
    dims: usize,
    n_mod: usize,
    res: usize,
}

impl AngleGrid {
    fn len(&self) -> usize {
        self.res.pow(self.dims as u32)
    }

    fn spacing(&self, t: usize) -> f64 {
        if t < self.n_mod {
            FRAC_PI_2 / (self.res - 1) as f64
        } else {
            TAU / self.res as f64
        }
    }

    fn index_to_multi(&self, mut idx: usize) -> Vec<usize> {
        let mut v = vec![0; self.dims];
        for t in (0..self.dims).rev() {
            v[t] = idx % self.res;
            idx /= self.res;
        }
        v
    }

    fn multi_to_index(&self, v: &[usize]) -> usize {
        v.iter().fold(0, |acc, &i| acc * self.res + i)
    }

    fn angles(&self, v: &[usize]) -> Vec<f64> {
        v.iter().enumerate().map(|(t, &i)| i as f64 * self.spacing(t)).collect()
    }

    /// Indices of axis neighbours (periodic in phases, clamped in moduli).
    fn neighbours(&self, idx: usize) -> Vec<usize> {
        let v = self.index_to_multi(idx);
        let mut out = Vec::with_capacity(2 * self.dims);
        for t in 0..self.dims {
            for delta in [-1i64, 1] {
                let mut w = v.clone();
                let x = v[t] as i64 + delta;
                if t < self.n_mod {
                    if x < 0 || x >= self.res as i64 {
                        continue;
                    }
                    w[t] = x as usize;
                } else {
                    w[t] = x.rem_euclid(self.res as i64) as usize;
                }
                out.push(self.multi_to_index(&w));
            }
        }
        out
    }
}

/// Exhaustive certificate for `N <= 3`.
///
/// Coefficient directions (modulo phase) are swept on a grid with `resolution`
/// nodes per angle; when that grid is too large a coarser sweep is used. The
/// best local extrema of the sweep are then refined by successively halved
/// local grids down to a sixteenth of the `resolution` spacing. The reported
/// tolerance is twice the largest change of the ratio between the final
/// extremizer and its neighbours, plus the quadrature disagreement when the
/// continuous norm is not computed exactly.
pub fn brute_force_certificate(space: &Subspace, sample: &PointSet, p: f64, resolution: usize) -> Result<Certificate> {
    const FULL_SWEEP: usize = 4_000_000;
    const COARSE_SWEEP: usize = 200_000;
    const CANDIDATES: usize = 16;
    check_exponent(p)?;
    let n = space.dim();
    if n > 3 {
        return Err(Error::OracleTooLarge(n));
    }
    if p.is_infinite() {
        return Err(Error::Unsupported("brute-force certificates for p = ∞".into()));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("resolution must be at least 2".into()));
    }
    sample.check_domain(space.domain())?;
    let a = space.basis_matrix(sample.points())?;
    let oracle = Oracle {
        n,
        a: &a,
        cont: ContinuousPower::new(space, p),
        p,
    };
    let base = Certificate {
        p,
        c1_pow: 0.0,
        c2_pow: 0.0,
        method: CertMethod::BruteForce,
        status: CertStatus::Certified,
        tolerance: 0.0,
        weighting: Weighting::Uniform,
        m: sample.len(),
        n,
        enclosure: None,
    };
    let dims = oracle.dims();
    if dims == 0 {
        let v = oracle.value(&[]);
        let c = DVector::from_element(1, C64::new(1.0, 0.0));
        return Ok(Certificate {
            c1_pow: v,
            c2_pow: v,
            tolerance: v * oracle.cont.rule_error(&c, p),
            ..base
        });
    }

    let res = if resolution.checked_pow(dims as u32).is_some_and(|t| t <= FULL_SWEEP) {
        resolution
    } else {
        ((COARSE_SWEEP as f64).powf(1.0 / dims as f64).floor() as usize).max(2)
    };
    let grid = AngleGrid { dims, n_mod: n - 1, res };
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| oracle.value(&grid.angles(&grid.index_to_multi(i))))
        .collect();

    let final_h: Vec<f64> = (0..dims)
        .map(|t| {
            let fine = AngleGrid { dims, n_mod: n - 1, res: resolution };
            fine.spacing(t) / 16.0
        })
        .collect();

    let mut extremes = [(f64::INFINITY, 0.0, None), (f64::NEG_INFINITY, 0.0, None)];
    for (slot, sign) in [(0usize, 1.0f64), (1, -1.0)] {
        let mut cands: Vec<usize> = (0..values.len())
            .filter(|&i| grid.neighbours(i).iter().all(|&j| sign * values[i] <= sign * values[j]))
            .collect();
        cands.sort_by(|&x, &y| (sign * values[x]).total_cmp(&(sign * values[y])).then(x.cmp(&y)));
        cands.truncate(CANDIDATES);
        let zoomed: Vec<(f64, f64, Vec<f64>)> = cands
            .par_iter()
            .map(|&i| {
                let start = grid.angles(&grid.index_to_multi(i));
                let h: Vec<f64> = (0..dims).map(|t| grid.spacing(t)).collect();
                zoom(&oracle, start, values[i], h, &final_h, sign)
            })
            .collect();
        for (v, tol, at) in zoomed {
            if sign * v < sign * extremes[slot].0 {
                extremes[slot] = (v, tol, Some(at));
            }
        }
    }
    let quad = |at: &Option<Vec<f64>>, v: f64| -> f64 {
        at.as_ref()
            .map(|x| v * oracle.cont.rule_error(&sphere_point(n, x), p))
            .unwrap_or(0.0)
    };
    let (c1, t1, at1) = &extremes[0];
    let (c2, t2, at2) = &extremes[1];
    let tolerance = (2.0 * t1 + quad(at1, *c1)).max(2.0 * t2 + quad(at2, *c2));
    Ok(Certificate {
        c1_pow: c1.max(0.0),
        c2_pow: *c2,
        tolerance,
        ..base
    })
}

/// Local 5-point-per-axis grids around the incumbent with halving spacing.
/// Returns the value, the final neighbour variation and the location.
fn zoom(oracle: &Oracle<'_>, mut center: Vec<f64>, mut value: f64, mut h: Vec<f64>, final_h: &[f64], sign: f64) -> (f64, f64, Vec<f64>) {
    let dims = center.len();
    let offsets: Vec<Vec<i64>> = (0..5usize.pow(dims as u32))
        .map(|mut i| {
            let mut o = vec![0i64; dims];
            for t in (0..dims).rev() {
                o[t] = (i % 5) as i64 - 2;
                i /= 5;
            }
            o
        })
        .collect();
    loop {
        for _ in 0..4 {
            let mut moved = false;
            for o in &offsets {
                let x: Vec<f64> = (0..dims)
                    .map(|t| oracle.clamp(t, center[t] + o[t] as f64 * h[t]))
                    .collect();
                let v = oracle.value(&x);
                if sign * v < sign * value {
                    value = v;
                    center = x;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        if h.iter().zip(final_h).all(|(a, b)| a <= b) {
            break;
        }
        for (a, b) in h.iter_mut().zip(final_h) {
            *a = (*a * 0.5).max(*b);
        }
    }
    let mut variation: f64 = 0.0;
    for t in 0..dims {
        for delta in [-1.0, 1.0] {
            let mut x = center.clone();
            x[t] = oracle.clamp(t, x[t] + delta * h[t]);
            variation = variation.max((oracle.value(&x) - value).abs());
        }
    }
    (value, variation, center)
}

/// Transfers a certificate of a product set on a tensor space to one factor.
///
/// With constants in every factor, functions of the `index`-th variable alone
/// belong to the tensor space and their discrete and continuous norms on the
/// product set equal those on the factor set, so the tensor constants are
/// valid constants for the factor.
pub fn extract_factor(space: &Subspace, tensor_sample: &PointSet, index: usize, tensor_cert: &Certificate) -> Result<(PointSet, Certificate)> {
    let factors = space.factors();
    if factors.is_empty() {
        return Err(Error::InvalidParameter("space is not a tensor product".into()));
    }
    let Provenance::Tensor { factors: sets } = tensor_sample.provenance() else {
        return Err(Error::InvalidSample("sample does not carry tensor provenance".into()));
    };
    if sets.len() != factors.len() {
        return Err(Error::InvalidSample(format!(
            "sample has {} factors, space has {}",
            sets.len(),
            factors.len()
        )));
    }
    if index >= factors.len() {
        return Err(Error::InvalidParameter(format!("factor index {index} out of range")));
    }
    if let Some(bad) = factors.iter().position(|f| !f.contains_constant()) {
        return Err(Error::LemmaHypothesisViolated(format!("factor {bad} does not contain the constant function")));
    }
    if tensor_cert.n != space.dim() || tensor_cert.m != tensor_sample.len() {
        return Err(Error::InvalidParameter("certificate does not belong to this space and sample".into()));
    }
    if tensor_cert.weighting != Weighting::Uniform {
        return Err(Error::InvalidParameter("factor extraction needs equal weights".into()));
    }
    let set = sets[index].clone();
    let cert = Certificate {
        m: set.len(),
        n: factors[index].dim(),
        enclosure: None,
        ..tensor_cert.clone()
    };
    Ok((set, cert))
}
