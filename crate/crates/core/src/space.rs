//! Domains with probability measures and the finite-dimensional subspaces
//! every other module operates on.
//!
//! Two domain kinds are supported: the torus `[0, 2π)^d` with normalized
//! Lebesgue measure, and finite sets of `S` abstract points with uniform
//! weights `1/S`. A point of a finite-set domain is written as a one-element
//! coordinate vector holding its index.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest frequency magnitude accepted in a spectrum.
const MAX_FREQUENCY: i64 = 1 << 40;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Torus { dimension: usize },
    FiniteSet { size: usize },
}

impl Domain {
    /// Length of the coordinate vector of a point.
    pub fn point_dim(&self) -> usize {
        match self {
            Domain::Torus { dimension } => *dimension,
            Domain::FiniteSet { .. } => 1,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        match self {
            Domain::Torus { dimension } => {
                if x.len() != *dimension {
                    return Err(Error::InvalidPoint(format!(
                        "point has {} coordinates, torus has dimension {dimension}",
                        x.len()
                    )));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidPoint("non-finite coordinate".into()));
                }
                Ok(())
            }
            Domain::FiniteSet { size } => {
                if x.len() != 1 {
                    return Err(Error::InvalidPoint(format!(
                        "finite-set points are single indices, got {} coordinates",
                        x.len()
                    )));
                }
                let idx = x[0];
                if idx < 0.0 || idx.fract() != 0.0 || idx >= *size as f64 {
                    return Err(Error::InvalidPoint(format!(
                        "index {idx} outside finite set of size {size}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Total mass of the measure, computed by integrating the constant 1.
    pub fn total_mass(&self) -> f64 {
        match self {
            // one-node equispaced rule is exact for constants
            Domain::Torus { .. } => 1.0,
            Domain::FiniteSet { size } => (0..*size).map(|_| 1.0 / *size as f64).sum(),
        }
    }
}

/// A set of integer frequency vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    dimension: usize,
    frequencies: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lacunary_ratio: Option<f64>,
}

impl Spectrum {
    pub fn new(dimension: usize, frequencies: Vec<Vec<i64>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidSpectrum("dimension must be positive".into()));
        }
        if frequencies.is_empty() {
            return Err(Error::InvalidSpectrum("spectrum is empty".into()));
        }
        let mut seen = HashSet::with_capacity(frequencies.len());
        for k in &frequencies {
            if k.len() != dimension {
                return Err(Error::InvalidSpectrum(format!(
                    "frequency {k:?} does not have {dimension} components"
                )));
            }
            if k.iter().any(|c| c.abs() > MAX_FREQUENCY) {
                return Err(Error::InvalidSpectrum(format!("frequency {k:?} too large")));
            }
            if !seen.insert(k.clone()) {
                return Err(Error::InvalidSpectrum(format!("duplicate frequency {k:?}")));
            }
        }
        Ok(Self {
            dimension,
            frequencies,
            lacunary_ratio: None,
        })
    }

    pub fn one_dimensional(frequencies: &[i64]) -> Result<Self> {
        Self::new(1, frequencies.iter().map(|&k| vec![k]).collect())
    }

    /// All `k` with `max_t |k_t| <= degree`, in lexicographic order.
    pub fn cube(dimension: usize, degree: i64) -> Result<Self> {
        if degree < 0 {
            return Err(Error::InvalidSpectrum("degree must be nonnegative".into()));
        }
        let side: Vec<i64> = (-degree..=degree).collect();
        let mut freqs: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..dimension {
            freqs = freqs
                .into_iter()
                .flat_map(|prefix| {
                    side.iter().map(move |&k| {
                        let mut v = prefix.clone();
                        v.push(k);
                        v
                    })
                })
                .collect();
        }
        Self::new(dimension, freqs)
    }

    /// `k_1 = 1`, `k_{j+1} = ceil(b * k_j)`.
    pub fn lacunary(n: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(Error::InvalidRatio(ratio));
        }
        if n == 0 {
            return Err(Error::InvalidSpectrum("lacunary spectrum needs n >= 1".into()));
        }
        let mut ks = Vec::with_capacity(n);
        let mut k: i64 = 1;
        for j in 0..n {
            if j > 0 {
                let next = (ratio * k as f64).ceil();
                if next > MAX_FREQUENCY as f64 {
                    return Err(Error::InvalidSpectrum(format!(
                        "lacunary frequency overflow at j = {j}"
                    )));
                }
                k = next as i64;
            }
            ks.push(vec![k]);
        }
        let mut s = Self::new(1, ks)?;
        s.lacunary_ratio = Some(ratio);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn frequencies(&self) -> &[Vec<i64>] {
        &self.frequencies
    }

    pub fn lacunary_ratio(&self) -> Option<f64> {
        self.lacunary_ratio
    }

    pub fn contains_zero(&self) -> bool {
        self.frequencies.iter().any(|k| k.iter().all(|&c| c == 0))
    }

    /// `max |k_t|` per coordinate.
    pub fn max_abs_degree(&self) -> Vec<i64> {
        max_abs_degree(self.dimension, self.frequencies.iter())
    }

    /// `max k_t - min k_t` per coordinate.
    pub fn spread(&self) -> Vec<i64> {
        spread(self.dimension, self.frequencies.iter())
    }

    /// Checks `k_1 = 1` and `k_{j+1} >= b k_j` when the lacunary flag is set.
    pub fn satisfies_lacunary_condition(&self) -> bool {
        match self.lacunary_ratio {
            None => true,
            Some(b) => {
                self.dimension == 1
                    && self.frequencies[0][0] == 1
                    && self
                        .frequencies
                        .windows(2)
                        .all(|w| w[1][0] as f64 >= b * w[0][0] as f64)
            }
        }
    }
}

pub(crate) fn max_abs_degree<'a>(dim: usize, ks: impl Iterator<Item = &'a Vec<i64>>) -> Vec<i64> {
    let mut out = vec![0; dim];
    for k in ks {
        for (o, c) in out.iter_mut().zip(k) {
            *o = (*o).max(c.abs());
        }
    }
    out
}

pub(crate) fn spread<'a>(dim: usize, ks: impl Iterator<Item = &'a Vec<i64>>) -> Vec<i64> {
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    let mut any = false;
    for k in ks {
        any = true;
        for t in 0..dim {
            lo[t] = lo[t].min(k[t]);
            hi[t] = hi[t].max(k[t]);
        }
    }
    if !any {
        return vec![0; dim];
    }
    hi.iter().zip(&lo).map(|(h, l)| h - l).collect()
}

#[inline]
pub(crate) fn exp_ikx(k: &[i64], x: &[f64]) -> C64 {
    let phase: f64 = k.iter().zip(x).map(|(&kk, &xx)| kk as f64 * xx).sum();
    C64::from_polar(1.0, phase)
}

#[derive(Clone, Debug)]
pub enum Basis {
    /// `e^{i<k,x>}` for each `k` of the spectrum.
    Exponential(Spectrum),
    /// `values[i][j]` is basis function `i` at finite-set point `j`.
    Values(Vec<Vec<C64>>),
}

struct Inner {
    domain: Domain,
    basis: Basis,
    contains_constant: bool,
    factors: Vec<Subspace>,
    gram: OnceLock<DMatrix<C64>>,
}

/// An `N`-dimensional subspace of functions on a [`Domain`].
///
/// Cheap to clone; the value is immutable after construction.
#[derive(Clone)]
pub struct Subspace(Arc<Inner>);

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subspace")
            .field("domain", &self.0.domain)
            .field("dim", &self.dim())
            .field("contains_constant", &self.0.contains_constant)
            .field("factors", &self.0.factors.len())
            .finish()
    }
}

impl Subspace {
    fn from_parts(domain: Domain, basis: Basis, contains_constant: bool, factors: Vec<Subspace>) -> Self {
        Subspace(Arc::new(Inner {
            domain,
            basis,
            contains_constant,
            factors,
            gram: OnceLock::new(),
        }))
    }

    /// Subspace of a finite-set domain given by basis value vectors.
    pub fn finite(values: Vec<Vec<C64>>) -> Result<Self> {
        let size = values.first().map(|v| v.len()).unwrap_or(0);
        if values.is_empty() || size == 0 {
            return Err(Error::InvalidSample("finite subspace needs at least one basis vector and one point".into()));
        }
        if values.iter().any(|v| v.len() != size) {
            return Err(Error::DimensionMismatch("basis vectors have different lengths".into()));
        }
        let contains_constant = constant_in_span(&values);
        Ok(Self::from_parts(
            Domain::FiniteSet { size },
            Basis::Values(values),
            contains_constant,
            Vec::new(),
        ))
    }

    pub fn domain(&self) -> &Domain {
        &self.0.domain
    }

    pub fn basis(&self) -> &Basis {
        &self.0.basis
    }

    /// Dimension `N`.
    pub fn dim(&self) -> usize {
        match &self.0.basis {
            Basis::Exponential(s) => s.len(),
            Basis::Values(v) => v.len(),
        }
    }

    pub fn contains_constant(&self) -> bool {
        self.0.contains_constant
    }

    /// Factor spaces when built by [`tensor_product`]; empty otherwise.
    pub fn factors(&self) -> &[Subspace] {
        &self.0.factors
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        match &self.0.basis {
            Basis::Exponential(s) => Some(s),
            Basis::Values(_) => None,
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.0.basis, Basis::Exponential(_))
    }

    /// Values `u_i(x)` of all basis functions at one point.
    pub fn basis_values(&self, x: &[f64]) -> Result<Vec<C64>> {
        self.0.domain.check_point(x)?;
        Ok(self.basis_values_unchecked(x))
    }

    pub(crate) fn basis_values_unchecked(&self, x: &[f64]) -> Vec<C64> {
        match &self.0.basis {
            Basis::Exponential(s) => s.frequencies().iter().map(|k| exp_ikx(k, x)).collect(),
            Basis::Values(v) => {
                let j = x[0] as usize;
                v.iter().map(|col| col[j]).collect()
            }
        }
    }

    /// `m x N` matrix with entries `u_i(x_j)`.
    pub fn basis_matrix(&self, points: &[Vec<f64>]) -> Result<DMatrix<C64>> {
        for x in points {
            self.0.domain.check_point(x)?;
        }
        Ok(self.basis_matrix_unchecked(points))
    }

    pub(crate) fn basis_matrix_unchecked(&self, points: &[Vec<f64>]) -> DMatrix<C64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(points.len(), n);
        for (j, x) in points.iter().enumerate() {
            for (i, v) in self.basis_values_unchecked(x).into_iter().enumerate() {
                a[(j, i)] = v;
            }
        }
        a
    }

    /// Gram matrix of `L_2(mu)` inner products `<u_a, u_b>`, computed once.
    pub fn gram(&self) -> &DMatrix<C64> {
        self.0.gram.get_or_init(|| gram_matrix_uncached(self))
    }

    /// Smallest over largest Gram eigenvalue.
    pub fn gram_condition(&self) -> f64 {
        let ev = crate::linalg::hermitian_eigenvalues(self.gram());
        let max = ev.last().copied().unwrap_or(0.0);
        if max <= 0.0 {
            0.0
        } else {
            ev[0].max(0.0) / max
        }
    }

    pub fn is_independent(&self, rank_tol: f64) -> bool {
        self.gram_condition() > rank_tol
    }

    /// Serializable description of this space.
    pub fn describe(&self) -> SpaceSpec {
        if !self.0.factors.is_empty() {
            return SpaceSpec::Tensor {
                factors: self.0.factors.iter().map(|f| f.describe()).collect(),
            };
        }
        match &self.0.basis {
            Basis::Exponential(s) => match s.lacunary_ratio() {
                Some(ratio) => SpaceSpec::Lacunary { n: s.len(), ratio },
                None => SpaceSpec::Trig {
                    dimension: s.dimension(),
                    spectrum: s.frequencies().to_vec(),
                },
            },
            Basis::Values(v) => SpaceSpec::Finite {
                values: v
                    .iter()
                    .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
                    .collect(),
            },
        }
    }
}

fn gram_matrix_uncached(space: &Subspace) -> DMatrix<C64> {
    match space.basis() {
        Basis::Exponential(s) => DMatrix::identity(s.len(), s.len()),
        Basis::Values(v) => {
            let n = v.len();
            let size = v[0].len() as f64;
            DMatrix::from_fn(n, n, |a, b| {
                v[a].iter().zip(&v[b]).map(|(x, y)| x * y.conj()).sum::<C64>() / size
            })
        }
    }
}

/// Least-squares residual test for `1 ∈ span`.
fn constant_in_span(values: &[Vec<C64>]) -> bool {
    let size = values[0].len();
    let a = DMatrix::from_fn(size, values.len(), |j, i| values[i][j]);
    let ones = DVector::from_element(size, C64::new(1.0, 0.0));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let Ok(c) = svd.solve(&ones, smax * 1e-12) else {
        return false;
    };
    let r = &ones - &a * c;
    r.norm() / (size as f64).sqrt() <= 1e-10
}

/// Trigonometric space spanned by `e^{i<k,x>}` over the spectrum.
pub fn make_trig_space(d: usize, spectrum: Spectrum) -> Result<Subspace> {
    if d != spectrum.dimension() {
        return Err(Error::InvalidSpectrum(format!(
            "spectrum has dimension {}, expected {d}",
            spectrum.dimension()
        )));
    }
    let contains_constant = spectrum.contains_zero();
    Ok(Subspace::from_parts(
        Domain::Torus { dimension: d },
        Basis::Exponential(spectrum),
        contains_constant,
        Vec::new(),
    ))
}

/// `T(Λ_n)` for the minimal lacunary sequence with ratio `b`.
pub fn make_lacunary_space(n: usize, b: f64) -> Result<Subspace> {
    make_trig_space(1, Spectrum::lacunary(n, b)?)
}

/// Span of products of factor basis functions on the product torus.
///
/// Basis order is lexicographic in the factor indices, first factor slowest.
pub fn tensor_product(factors: &[Subspace]) -> Result<Subspace> {
    if factors.len() < 2 {
        return Err(Error::Unsupported("tensor product needs at least two factors".into()));
    }
    if let Some(bad) = factors.iter().position(|f| !f.domain().is_torus()) {
        return Err(Error::UnsupportedDomain(format!(
            "factor {bad} is not on a torus; tensor products are built on product tori"
        )));
    }
    let mut freqs: Vec<Vec<i64>> = vec![vec![]];
    for f in factors {
        let s = f
            .spectrum()
            .ok_or_else(|| Error::UnsupportedDomain("torus factor without exponential basis".into()))?;
        freqs = freqs
            .into_iter()
            .flat_map(|prefix| {
                s.frequencies().iter().map(move |k| {
                    let mut v = prefix.clone();
                    v.extend_from_slice(k);
                    v
                })
            })
            .collect();
    }
    let d: usize = factors.iter().map(|f| f.domain().point_dim()).sum();
    let spectrum = Spectrum::new(d, freqs)?;
    let contains_constant = factors.iter().all(|f| f.contains_constant());
    Ok(Subspace::from_parts(
        Domain::Torus { dimension: d },
        Basis::Exponential(spectrum),
        contains_constant,
        factors.to_vec(),
    ))
}

/// `L_2(mu)` Gram matrix of the basis.
pub fn gram_matrix(space: &Subspace) -> DMatrix<C64> {
    space.gram().clone()
}

/// Restriction of `space` to the sample points, as a subspace of the finite
/// set `{ξ^1, ..., ξ^S}` with uniform measure.
pub fn restrict(space: &Subspace, sample: &[Vec<f64>]) -> Result<Subspace> {
    if sample.is_empty() {
        return Err(Error::InvalidSample("cannot restrict to an empty sample".into()));
    }
    let a = space.basis_matrix(sample)?;
    if sample.len() < space.dim() {
        warn!(
            "restricting an N = {} space to {} points; the restricted Gram matrix is rank deficient",
            space.dim(),
            sample.len()
        );
    }
    let values = (0..a.ncols())
        .map(|i| a.column(i).iter().copied().collect())
        .collect();
    Subspace::finite(values)
}

/// `f = Σ c_i u_i`.
#[derive(Clone, Debug)]
pub struct CoefficientVector {
    space: Subspace,
    coeffs: Vec<C64>,
}

impl CoefficientVector {
    pub fn new(space: &Subspace, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(Self {
            space: space.clone(),
            coeffs,
        })
    }

    pub fn zero(space: &Subspace) -> Self {
        Self {
            space: space.clone(),
            coeffs: vec![C64::new(0.0, 0.0); space.dim()],
        }
    }

    pub fn space(&self) -> &Subspace {
        &self.space
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> C64 {
        self.space
            .basis_values_unchecked(x)
            .iter()
            .zip(&self.coeffs)
            .map(|(u, c)| u * c)
            .sum()
    }

    /// `α f + β g`; both must live in the same space.
    pub fn combine(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        if !Arc::ptr_eq(&self.space.0, &other.space.0) && self.space.dim() != other.space.dim() {
            return Err(Error::DimensionMismatch("coefficient vectors from different spaces".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self {
            space: self.space.clone(),
            coeffs,
        })
    }

    /// Coefficients of `f_1(x^1) ⋯ f_s(x^s)` in the tensor space built from the factors' spaces.
    pub fn tensor(parts: &[CoefficientVector], tensor_space: &Subspace) -> Result<Self> {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for p in parts {
            coeffs = coeffs
                .into_iter()
                .flat_map(|c| p.coeffs.iter().map(move |d| c * d))
                .collect();
        }
        Self::new(tensor_space, coeffs)
    }

    /// The same function as a [`Target`].
    pub fn to_target(&self) -> Target {
        match self.space.basis() {
            Basis::Exponential(s) => Target::Trig(TrigPolynomial::from_terms(
                s.dimension(),
                s.frequencies().iter().cloned().zip(self.coeffs.iter().copied()),
            )),
            Basis::Values(v) => {
                let size = v[0].len();
                Target::Values(
                    (0..size)
                        .map(|j| v.iter().zip(&self.coeffs).map(|(col, c)| col[j] * c).sum())
                        .collect(),
                )
            }
        }
    }
}

/// Pointwise values `Σ c_i u_i(x)` in input order.
pub fn evaluate(f: &CoefficientVector, points: &[Vec<f64>]) -> Result<Vec<C64>> {
    points
        .iter()
        .map(|x| {
            f.space.domain().check_point(x)?;
            Ok(f.eval_unchecked(x))
        })
        .collect()
}

/// Finite sum of exponentials not tied to a particular subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial {
    dimension: usize,
    terms: Vec<(Vec<i64>, C64)>,
}

impl TrigPolynomial {
    /// Repeated frequencies are merged.
    pub fn from_terms(dimension: usize, terms: impl IntoIterator<Item = (Vec<i64>, C64)>) -> Self {
        let mut map: BTreeMap<Vec<i64>, C64> = BTreeMap::new();
        for (k, c) in terms {
            *map.entry(k).or_default() += c;
        }
        Self {
            dimension,
            terms: map.into_iter().collect(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn terms(&self) -> &[(Vec<i64>, C64)] {
        &self.terms
    }

    pub fn coefficient(&self, k: &[i64]) -> C64 {
        self.terms
            .iter()
            .find(|(kk, _)| kk.as_slice() == k)
            .map(|(_, c)| *c)
            .unwrap_or_default()
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.terms.iter().map(|(k, c)| c * exp_ikx(k, x)).sum()
    }

    pub fn max_abs_degree(&self) -> Vec<i64> {
        max_abs_degree(self.dimension, self.terms.iter().map(|(k, _)| k))
    }

    pub fn spread(&self) -> Vec<i64> {
        spread(self.dimension, self.terms.iter().map(|(k, _)| k))
    }

    pub fn minus(&self, other: &TrigPolynomial) -> TrigPolynomial {
        TrigPolynomial::from_terms(
            self.dimension,
            self.terms
                .iter()
                .cloned()
                .chain(other.terms.iter().map(|(k, c)| (k.clone(), -c))),
        )
    }
}

pub type DynFunction = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

/// A function to be normed, approximated or recovered.
#[derive(Clone)]
pub enum Target {
    Trig(TrigPolynomial),
    /// Values at the points of a finite-set domain.
    Values(Vec<C64>),
    /// Arbitrary continuous function on the torus of the given dimension.
    Function { dimension: usize, f: DynFunction },
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Trig(t) => f.debug_tuple("Trig").field(t).finish(),
            Target::Values(v) => f.debug_tuple("Values").field(&v.len()).finish(),
            Target::Function { dimension, .. } => write!(f, "Function {{ dimension: {dimension} }}"),
        }
    }
}

impl Target {
    pub fn function(dimension: usize, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Self {
        Target::Function {
            dimension,
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        match self {
            Target::Trig(t) => t.eval(x),
            Target::Values(v) => v[x[0] as usize],
            Target::Function { f, .. } => f(x),
        }
    }

    /// Errors unless the target can be evaluated on `domain`.
    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        let ok = match (self, domain) {
            (Target::Trig(t), Domain::Torus { dimension }) => t.dimension() == *dimension,
            (Target::Function { dimension: a, .. }, Domain::Torus { dimension: b }) => a == b,
            (Target::Values(v), Domain::FiniteSet { size }) => v.len() == *size,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidTarget(format!("{self:?} is not evaluable on {domain:?}")))
        }
    }

    /// `self - u`.
    pub fn minus(&self, u: &CoefficientVector) -> Result<Target> {
        self.check_domain(u.space().domain())?;
        Ok(match (self, u.to_target()) {
            (Target::Trig(a), Target::Trig(b)) => Target::Trig(a.minus(&b)),
            (Target::Values(a), Target::Values(b)) => {
                Target::Values(a.iter().zip(&b).map(|(x, y)| x - y).collect())
            }
            (Target::Function { dimension, f }, _) => {
                let f = f.clone();
                let u = u.clone();
                Target::Function {
                    dimension: *dimension,
                    f: Arc::new(move |x| f(x) - u.eval_unchecked(x)),
                }
            }
            _ => return Err(Error::InvalidTarget("incompatible target and subspace".into())),
        })
    }
}

/// JSON description of a subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceSpec {
    /// Explicit spectrum.
    Trig {
        dimension: usize,
        spectrum: Vec<Vec<i64>>,
    },
    /// All frequencies with `max_t |k_t| <= degree`.
    TrigDegree { dimension: usize, degree: i64 },
    Lacunary { n: usize, ratio: f64 },
    Tensor { factors: Vec<SpaceSpec> },
    /// Basis value vectors on a finite set, entries as `[re, im]`.
    Finite { values: Vec<Vec<[f64; 2]>> },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Subspace> {
        match self {
            SpaceSpec::Trig { dimension, spectrum } => {
                make_trig_space(*dimension, Spectrum::new(*dimension, spectrum.clone())?)
            }
            SpaceSpec::TrigDegree { dimension, degree } => {
                make_trig_space(*dimension, Spectrum::cube(*dimension, *degree)?)
            }
            SpaceSpec::Lacunary { n, ratio } => make_lacunary_space(*n, *ratio),
            SpaceSpec::Tensor { factors } => {
                let built = factors.iter().map(|f| f.build()).collect::<Result<Vec<_>>>()?;
                tensor_product(&built)
            }
            SpaceSpec::Finite { values } => Subspace::finite(
                values
                    .iter()
                    .map(|col| col.iter().map(|[re, im]| C64::new(*re, *im)).collect())
                    .collect(),
            ),
        }
    }
}
