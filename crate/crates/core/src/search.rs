//! Randomized constructions of good point sets: two-stage subsampling and the
//! minimal-`m` bisection.

use std::io::Write;

use log::{debug, info};
use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{certify_until, Certificate, CertifyOptions};
use crate::error::{Error, Result};
use crate::points::{equispaced, iid_points, PointSet, Provenance};
use crate::rng::{self, purpose};
use crate::space::{Domain, Subspace};

/// Success statistics of one `m` in a minimal-`m` search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub c1_min: f64,
    pub c2_max: f64,
}

impl CurveRow {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Writes curve rows as CSV with header `m,trials,successes,c1_min,c2_max`.
pub fn write_curve_csv<W: Write>(rows: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageBudgets {
    pub stage1_s: usize,
    pub stage2_m: usize,
    pub retries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageOutcome {
    pub points: PointSet,
    pub certificate: Certificate,
    pub stage1: Certificate,
    /// Stage-2 subsets certified, including the successful one.
    pub attempts: usize,
}

/// Stage 1 draws `S` iid points and certifies them; stage 2 draws uniform
/// size-`m` subsets of those points and returns the first whose certificate
/// against the continuous norm lies in `[1 - ε, 1 + ε]`. One attempt plus
/// `retries` further attempts are made.
pub fn two_stage_subsample(
    space: &Subspace,
    q: f64,
    eps: f64,
    budgets: &TwoStageBudgets,
    seed: u64,
    opts: &CertifyOptions,
) -> Result<TwoStageOutcome> {
    if !(q >= 2.0) {
        return Err(Error::InvalidExponent(q));
    }
    check_eps(eps)?;
    if budgets.stage1_s == 0 || budgets.stage2_m == 0 {
        return Err(Error::InvalidParameter("budgets must be positive".into()));
    }
    if budgets.stage2_m > budgets.stage1_s {
        return Err(Error::InvalidParameter(format!(
            "stage2_m = {} exceeds stage1_s = {}",
            budgets.stage2_m, budgets.stage1_s
        )));
    }
    let domain = space.domain();
    let stream = rng::stream_id(purpose::POINTS, 0);
    let stage1_points = PointSet::new(
        domain.point_dim(),
        iid_points(domain, budgets.stage1_s, seed, stream),
        Provenance::Iid { seed, stream },
    )?;
    let stage1 = certify_until(space, &stage1_points, None, q, opts, None)?;
    info!(
        "stage 1: S = {}, c1 = {:.6}, c2 = {:.6}",
        budgets.stage1_s, stage1.c1_pow, stage1.c2_pow
    );

    if budgets.stage2_m == budgets.stage1_s {
        if stage1.meets(eps) {
            return Ok(TwoStageOutcome {
                points: stage1_points,
                certificate: stage1.clone(),
                stage1,
                attempts: 1,
            });
        }
        return Err(Error::BudgetExhausted {
            attempts: 1,
            best: Box::new(Some(stage1)),
        });
    }

    let mut best: Option<Certificate> = None;
    let attempts = budgets.retries + 1;
    for attempt in 0..attempts {
        let sub_stream = rng::stream_id(purpose::SUBSET, attempt as u64);
        let mut r = rng::stream(seed, sub_stream);
        let idx = sample_indices(&mut r, budgets.stage1_s, budgets.stage2_m).into_vec();
        let subset = stage1_points.subset(&idx, seed, sub_stream)?;
        let sub_opts = CertifyOptions {
            seed: rng::derive(opts.seed, purpose::TRIAL_SEED, attempt as u64),
            ..opts.clone()
        };
        let cert = certify_until(space, &subset, None, q, &sub_opts, None)?;
        debug!(
            "stage 2 attempt {attempt}: c1 = {:.6}, c2 = {:.6}",
            cert.c1_pow, cert.c2_pow
        );
        if cert.meets(eps) {
            return Ok(TwoStageOutcome {
                points: subset,
                certificate: cert,
                stage1,
                attempts: attempt + 1,
            });
        }
        if best.as_ref().is_none_or(|b| cert.margin(eps) > b.margin(eps)) {
            best = Some(cert);
        }
    }
    Err(Error::BudgetExhausted {
        attempts,
        best: Box::new(best),
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("ε = {eps} must lie in (0, 1)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// `m` iid points from the measure; trial `t` uses the first `m` points of its own stream.
    Iid,
    /// The deterministic equispaced grid (one-dimensional torus only).
    Equispaced,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub m_max: usize,
    pub generator: Generator,
    pub certify: CertifyOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub m_star: usize,
    /// Every `m` evaluated, in increasing order.
    pub curve: Vec<CurveRow>,
}

/// Smallest `m` at which at least `threshold` of `trials` random point sets
/// have certificates inside `[1 - ε, 1 + ε]`, found by bisection on
/// `[N - 1, m_max]` (`N - 1` points always fail).
///
/// Trials are independent and seeded by `(seed, trial index)`, and results are
/// aggregated in trial order, so the outcome is a deterministic function of
/// the inputs.
pub fn minimal_m_search(
    space: &Subspace,
    p: f64,
    eps: f64,
    trials: usize,
    threshold: f64,
    seed: u64,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    check_eps(eps)?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} must lie in (0, 1]")));
    }
    let n = space.dim();
    if opts.m_max < n {
        return Err(Error::InvalidParameter(format!("m_max = {} is below N = {n}", opts.m_max)));
    }
    if opts.generator == Generator::Equispaced && *space.domain() != (Domain::Torus { dimension: 1 }) {
        return Err(Error::Unsupported("the equispaced generator needs a one-dimensional torus".into()));
    }
    let trials = if opts.generator == Generator::Equispaced { 1 } else { trials };

    let mut curve: Vec<CurveRow> = Vec::new();
    let mut evaluate = |m: usize| -> Result<bool> {
        let row = success_row(space, p, eps, trials, m, seed, opts)?;
        let ok = row.rate() >= threshold;
        info!(
            "m = {m}: {}/{} successes (c1_min = {:.4}, c2_max = {:.4})",
            row.successes, row.trials, row.c1_min, row.c2_max
        );
        curve.push(row);
        Ok(ok)
    };

    let mut lo = n.saturating_sub(1);
    let mut hi = opts.m_max;
    if !evaluate(hi)? {
        curve.sort_by_key(|r| r.m);
        return Err(Error::SearchFailed { m_max: opts.m_max, curve });
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if evaluate(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    curve.sort_by_key(|r| r.m);
    Ok(SearchOutcome { m_star: hi, curve })
}

fn success_row(space: &Subspace, p: f64, eps: f64, trials: usize, m: usize, seed: u64, opts: &SearchOptions) -> Result<CurveRow> {
    let domain = space.domain();
    let results: Vec<Result<Certificate>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let points = match opts.generator {
                Generator::Iid => {
                    let stream = rng::stream_id(purpose::TRIAL, t as u64);
                    PointSet::new(
                        domain.point_dim(),
                        iid_points(domain, m, seed, stream),
                        Provenance::Iid { seed, stream },
                    )?
                }
                Generator::Equispaced => equispaced(1, m),
            };
            let certify = CertifyOptions {
                seed: rng::derive(seed, purpose::TRIAL_SEED, t as u64),
                ..opts.certify.clone()
            };
            certify_until(space, &points, None, p, &certify, Some(eps))
        })
        .collect();
    let mut row = CurveRow {
        m,
        trials,
        successes: 0,
        c1_min: f64::INFINITY,
        c2_max: 0.0,
    };
    for r in results {
        let c = r?;
        if c.meets(eps) {
            row.successes += 1;
        }
        row.c1_min = row.c1_min.min(c.c1_pow);
        row.c2_max = row.c2_max.max(c.c2_pow);
    }
    Ok(row)
}
