//! Discretization nodes: plain and weighted point sets and their generators.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{christoffel_sup, christoffel_values};
use crate::rng::{self, purpose};
use crate::space::{Domain, Subspace};
use crate::tolerances::Tolerances;

/// Where a point set came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Iid { seed: u64, stream: u64 },
    Equispaced { per_dim: Vec<usize> },
    Tensor { factors: Vec<PointSet> },
    Subsample { parent_size: usize, seed: u64, stream: u64, indices: Vec<usize> },
    Leverage { seed: u64, stream: u64, acceptance_rate: f64 },
    Explicit,
}

/// Nodes `ξ = {ξ^1, ..., ξ^m}` of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dimension: usize,
    points: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl PointSet {
    pub fn new(dimension: usize, points: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSample("point set must contain at least one point".into()));
        }
        if let Some(bad) = points.iter().find(|x| x.len() != dimension) {
            return Err(Error::InvalidPoint(format!(
                "point {bad:?} does not have {dimension} coordinates"
            )));
        }
        Ok(Self {
            dimension,
            points,
            provenance,
        })
    }

    pub fn explicit(dimension: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dimension, points, Provenance::Explicit)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Checks every point against `domain`.
    pub fn check_domain(&self, domain: &Domain) -> Result<()> {
        for x in &self.points {
            domain.check_point(x)?;
        }
        Ok(())
    }

    /// The points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], seed: u64, stream: u64) -> Result<PointSet> {
        let points = indices
            .iter()
            .map(|&i| {
                self.points
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidSample(format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        PointSet::new(
            self.dimension,
            points,
            Provenance::Subsample {
                parent_size: self.len(),
                seed,
                stream,
                indices: indices.to_vec(),
            },
        )
    }
}

/// Point set with strictly positive weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPointSet {
    points: PointSet,
    weights: Vec<f64>,
    weight_sum: f64,
}

impl WeightedPointSet {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, points.len())?;
        let weight_sum = weights.iter().sum();
        Ok(Self {
            points,
            weights,
            weight_sum,
        })
    }

    /// Weights `1/m`.
    pub fn uniform(points: PointSet) -> Self {
        let m = points.len();
        Self {
            points,
            weights: vec![1.0 / m as f64; m],
            weight_sum: (0..m).map(|_| 1.0 / m as f64).sum(),
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub(crate) fn validate_weights(weights: &[f64], m: usize) -> Result<()> {
    if weights.len() != m {
        return Err(Error::InvalidWeight(format!("{} weights for {m} points", weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeight(format!("weight {w} is not strictly positive")));
    }
    Ok(())
}

/// Output of [`generate_points`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Sample {
    Plain(PointSet),
    Weighted(WeightedPointSet),
}

impl Sample {
    pub fn points(&self) -> &PointSet {
        match self {
            Sample::Plain(p) => p,
            Sample::Weighted(w) => w.points(),
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            Sample::Plain(_) => None,
            Sample::Weighted(w) => Some(w.weights()),
        }
    }

    pub fn into_plain(self) -> PointSet {
        match self {
            Sample::Plain(p) => p,
            Sample::Weighted(w) => w.points,
        }
    }

    /// Weighted view; plain sets get weights `1/m`.
    pub fn into_weighted(self) -> WeightedPointSet {
        match self {
            Sample::Plain(p) => WeightedPointSet::uniform(p),
            Sample::Weighted(w) => w,
        }
    }
}

/// Point generation mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum PointSpec {
    /// `m` independent draws from the domain measure.
    Iid { m: usize },
    /// `2πj/m` in every coordinate (full grid when `d > 1`).
    Equispaced { m: usize },
    /// Cartesian product of per-factor point sets of a tensor space.
    Tensor { factors: Vec<PointSpec> },
    /// `m` draws from the density `(Σ|u_i|^2 / N) dμ` with weights `N / (m Σ|u_i(ξ)|^2)`.
    Leverage { m: usize },
}

pub fn generate_points(space: &Subspace, spec: &PointSpec, seed: Option<u64>) -> Result<Sample> {
    generate_on_stream(space, spec, seed, 0)
}

fn generate_on_stream(space: &Subspace, spec: &PointSpec, seed: Option<u64>, stream_index: u64) -> Result<Sample> {
    let domain = space.domain();
    match spec {
        PointSpec::Iid { m } => {
            let seed = seed.ok_or(Error::MissingSeed)?;
            check_m(*m)?;
            let stream = rng::stream_id(purpose::POINTS, stream_index);
            let points = iid_points(domain, *m, seed, stream);
            Ok(Sample::Plain(PointSet::new(
                domain.point_dim(),
                points,
                Provenance::Iid { seed, stream },
            )?))
        }
        PointSpec::Equispaced { m } => {
            check_m(*m)?;
            let Domain::Torus { dimension } = domain else {
                return Err(Error::Unsupported("equispaced points need a torus domain".into()));
            };
            Ok(Sample::Plain(equispaced(*dimension, *m)))
        }
        PointSpec::Tensor { factors } => {
            let spaces = space.factors();
            if spaces.is_empty() || spaces.len() != factors.len() {
                return Err(Error::InvalidSample(format!(
                    "tensor generation needs one point spec per factor ({} factors, {} specs)",
                    spaces.len(),
                    factors.len()
                )));
            }
            let mut sets = Vec::with_capacity(factors.len());
            for (i, (fs, spec)) in spaces.iter().zip(factors).enumerate() {
                match generate_on_stream(fs, spec, seed, stream_index * 64 + i as u64 + 1)? {
                    Sample::Plain(p) => sets.push(p),
                    Sample::Weighted(_) => {
                        return Err(Error::Unsupported("weighted factor sets in tensor products".into()))
                    }
                }
            }
            Ok(Sample::Plain(tensor_points(&sets)?))
        }
        PointSpec::Leverage { m } => {
            let seed = seed.ok_or(Error::MissingSeed)?;
            check_m(*m)?;
            leverage_points(space, *m, seed, rng::stream_id(purpose::LEVERAGE, stream_index))
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidSample("m must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `m` points drawn from the domain measure on stream `(seed, stream)`.
///
/// Points are drawn sequentially, so the first `k` points do not depend on `m`.
pub fn iid_points(domain: &Domain, m: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, stream);
    (0..m).map(|_| draw(domain, &mut rng)).collect()
}

fn draw<R: Rng>(domain: &Domain, rng: &mut R) -> Vec<f64> {
    match domain {
        Domain::Torus { dimension } => (0..*dimension).map(|_| rng.random::<f64>() * TAU).collect(),
        Domain::FiniteSet { size } => vec![rng.random_range(0..*size) as f64],
    }
}

/// Full equispaced grid with `m` nodes per coordinate, lexicographic order.
pub fn equispaced(dimension: usize, m: usize) -> PointSet {
    let grid = crate::quadrature::TorusGrid::new(vec![m; dimension]);
    PointSet {
        dimension,
        points: grid.points(),
        provenance: Provenance::Equispaced {
            per_dim: vec![m; dimension],
        },
    }
}

/// Cartesian product `ξ(m_1) × ⋯ × ξ(m_s)`, first factor slowest.
pub fn tensor_points(factors: &[PointSet]) -> Result<PointSet> {
    if factors.is_empty() {
        return Err(Error::InvalidSample("tensor product of zero point sets".into()));
    }
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for f in factors {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                f.points.iter().map(move |x| {
                    let mut v = prefix.clone();
                    v.extend_from_slice(x);
                    v
                })
            })
            .collect();
    }
    let dimension = factors.iter().map(|f| f.dimension).sum();
    PointSet::new(
        dimension,
        points,
        Provenance::Tensor {
            factors: factors.to_vec(),
        },
    )
}

fn leverage_points(space: &Subspace, m: usize, seed: u64, stream: u64) -> Result<Sample> {
    let tol = Tolerances::default();
    let n = space.dim() as f64;
    let t = christoffel_sup(space, &tol)?;
    let envelope = n * t * t;
    let domain = space.domain();
    let mut rng = rng::stream(seed, stream);
    let mut points = Vec::with_capacity(m);
    let mut kvals = Vec::with_capacity(m);
    let mut proposals: u64 = 0;
    while points.len() < m {
        proposals += 1;
        if proposals > 1_000_000 * m as u64 {
            return Err(Error::DegenerateSpace("rejection sampler made no progress".into()));
        }
        let x = draw(domain, &mut rng);
        let k = christoffel_values(space, std::slice::from_ref(&x))?[0];
        let u: f64 = rng.random();
        if u * envelope <= k {
            points.push(x);
            kvals.push(k);
        }
    }
    let weights = kvals.iter().map(|k| n / (m as f64 * k)).collect();
    let ps = PointSet::new(
        domain.point_dim(),
        points,
        Provenance::Leverage {
            seed,
            stream,
            acceptance_rate: m as f64 / proposals as f64,
        },
    )?;
    Ok(Sample::Weighted(WeightedPointSet::new(ps, weights)?))
}
