//! Weighted least-`p`-th-power recovery from samples and the a-posteriori
//! check of its error bound `(2 C_1^{-1} C_2^{1/p} + 1) d(f, X_N)_∞`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::certify::{certify, CertMethod, CertStatus, Certificate, CertifyOptions, Weighting};
use crate::error::{Error, Result};
use crate::norms::{best_approx, check_exponent, lawson_minimax, target_norm_p, target_norm_sup, SampleVector, Sidedness};
use crate::optim::{lp_regression, OptimizerReport};
use crate::points::{validate_weights, WeightedPointSet};
use crate::space::{CoefficientVector, Subspace, Target};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub coefficients: CoefficientVector,
    /// `‖S(f - u, ξ)‖_{p,w}`.
    pub discrete_residual: f64,
    pub p: f64,
    pub weights_used: Vec<f64>,
    pub optimizer_report: OptimizerReport,
    /// The sampled system did not determine `u` uniquely; the minimum-norm solution was returned.
    pub rank_deficient: bool,
}

/// `argmin_{u ∈ X_N} Σ_ν w_ν |f(ξ^ν) - u(ξ^ν)|^p` for `p ∈ [1, ∞)`.
pub fn lpw_recover(samples: &SampleVector, space: &Subspace, p: f64, weights: &[f64], tol: &Tolerances) -> Result<RecoveryResult> {
    check_exponent(p)?;
    if p.is_infinite() {
        return linf_recover(samples, space, tol);
    }
    validate_weights(weights, samples.len())?;
    let a = space.basis_matrix(samples.points().points())?;
    let y = DVector::from_column_slice(samples.values());
    let fit = lp_regression(&a, &y, weights, p, tol);
    Ok(RecoveryResult {
        coefficients: CoefficientVector::new(space, fit.coeffs.iter().copied().collect())?,
        discrete_residual: fit.objective.max(0.0).powf(1.0 / p),
        p,
        weights_used: weights.to_vec(),
        optimizer_report: fit.report,
        rank_deficient: fit.rank_deficient,
    })
}

/// `argmin_{u ∈ X_N} max_ν |f(ξ^ν) - u(ξ^ν)|` by Lawson's iteration.
pub fn linf_recover(samples: &SampleVector, space: &Subspace, tol: &Tolerances) -> Result<RecoveryResult> {
    let a = space.basis_matrix(samples.points().points())?;
    let y = DVector::from_column_slice(samples.values());
    let fit = lawson_minimax(&a, &y, tol);
    let m = samples.len();
    Ok(RecoveryResult {
        coefficients: CoefficientVector::new(space, fit.coeffs.iter().copied().collect())?,
        discrete_residual: fit.upper,
        p: f64::INFINITY,
        weights_used: vec![1.0 / m as f64; m],
        optimizer_report: OptimizerReport {
            iterations: fit.iterations,
            final_gradient_norm: (fit.upper - fit.lower) / fit.upper.max(1e-300),
            converged: fit.converged,
        },
        rank_deficient: m < space.dim(),
    })
}

fn bound_constant(c1_norm: f64, c2: f64, p: f64) -> f64 {
    if p.is_infinite() {
        2.0 / c1_norm + 1.0
    } else {
        2.0 / c1_norm * c2.powf(1.0 / p) + 1.0
    }
}

/// Norm-form constants `(C_1, C_2)` for the recovery bound, where
/// `C_1 ‖u‖_p <= ‖S(u, ξ)‖_{p,w}` and `C_2 = Σ w_ν`.
///
/// A certificate for uniform weights bounds `(1/m) Σ |u(ξ^ν)|^p`, so it can
/// only be used with weights `1/m`; a weighted certificate must carry the
/// same weight sum.
pub fn norm_form_constants(cert: &Certificate, weights: &[f64], p: f64) -> Result<(f64, f64)> {
    check_exponent(p)?;
    if cert.p != p {
        return Err(Error::InvalidParameter(format!("certificate is for p = {}, not {p}", cert.p)));
    }
    validate_weights(weights, cert.m)?;
    let m = weights.len() as f64;
    let c2: f64 = weights.iter().sum();
    match &cert.weighting {
        Weighting::Uniform => {
            if weights.iter().any(|w| (w * m - 1.0).abs() > 1e-12) {
                return Err(Error::InvalidParameter(
                    "certificate for equal weights used with unequal weights".into(),
                ));
            }
        }
        Weighting::Weighted { weight_sum } => {
            if (weight_sum - c2).abs() > 1e-12 * c2.max(1.0) {
                return Err(Error::InvalidParameter("certificate weight sum does not match the weights".into()));
            }
        }
    }
    if cert.c1_pow <= 0.0 {
        return Err(Error::Unbounded);
    }
    let c1_norm = if p.is_infinite() { cert.c1_pow } else { cert.c1_pow.powf(1.0 / p) };
    Ok((c1_norm, c2))
}

/// `2 C_1^{-1} C_2^{1/p} + 1` from a certified certificate.
pub fn recovery_bound(cert: &Certificate, weights: &[f64], p: f64) -> Result<f64> {
    if cert.status != CertStatus::Certified {
        return Err(Error::Refused(format!(
            "certificate status {:?} does not establish the discretization inequality",
            cert.status
        )));
    }
    let (c1, c2) = norm_form_constants(cert, weights, p)?;
    Ok(bound_constant(c1, c2, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryBoundReport {
    #[serde(with = "crate::certify::exponent")]
    pub p: f64,
    pub c1_norm: f64,
    pub c2_weights: f64,
    pub bound_constant: f64,
    /// `‖f - u‖_p` for the recovered `u`.
    pub lhs: f64,
    pub lhs_tolerance: f64,
    /// Grid estimate of `d(f, X_N)_∞`.
    pub d_inf: f64,
    pub d_inf_sidedness: Sidedness,
    pub rhs: f64,
    pub slack: f64,
    pub abs_floor: f64,
    pub holds: bool,
    /// Set when the constants are not certified (always for `p = ∞`).
    pub advisory: bool,
    pub certificate: Certificate,
    pub discrete_residual: f64,
}

/// Certifies the sample, recovers `f` from its samples, and compares
/// `‖f - u‖_p` with `bound × d(f, X_N)_∞ × slack`.
///
/// For even `p` without an exact certificate the certified lower bound of the
/// enclosure is used for `C_1`.
pub fn verify_recovery(
    f: &Target,
    space: &Subspace,
    sample: &WeightedPointSet,
    p: f64,
    opts: &CertifyOptions,
) -> Result<RecoveryBoundReport> {
    check_exponent(p)?;
    f.check_domain(space.domain())?;
    let tol = &opts.tolerances;
    let m = sample.len();
    let uniform = sample
        .weights()
        .iter()
        .all(|w| (w * m as f64 - 1.0).abs() <= 1e-12);
    let cert_weights = if uniform { None } else { Some(sample.weights()) };
    let mut cert = certify(space, sample.points(), cert_weights, p, opts)
        .map_err(|e| e.context("certifying the sample"))?;
    if cert.status != CertStatus::Certified {
        if let Some(e) = cert.enclosure.clone() {
            cert = Certificate {
                c1_pow: e.c1_lower,
                c2_pow: e.c2_upper,
                method: CertMethod::ExactEigen,
                status: CertStatus::Certified,
                ..cert
            };
        }
    }
    let advisory = p.is_infinite() || cert.status != CertStatus::Certified;
    let weights: Vec<f64> = if uniform {
        vec![1.0 / m as f64; m]
    } else {
        sample.weights().to_vec()
    };
    let (c1_norm, c2) = norm_form_constants(&cert, &weights, p)?;
    let bound = bound_constant(c1_norm, c2, p);

    let samples = SampleVector::of_target(f, sample.points());
    let rec = lpw_recover(&samples, space, p, &weights, tol).map_err(|e| e.context("recovering"))?;
    let err = f.minus(&rec.coefficients)?;
    let (lhs, lhs_tolerance) = if p.is_infinite() {
        (target_norm_sup(&err, tol), tol.sup_rel_tol)
    } else {
        let e = target_norm_p(&err, space.domain(), p, tol)?;
        (e.value, e.abs_tol)
    };
    let d = best_approx(f, space, f64::INFINITY, tol).map_err(|e| e.context("estimating d(f, X_N)_∞"))?;
    let rhs = bound * d.distance;
    Ok(RecoveryBoundReport {
        p,
        c1_norm,
        c2_weights: c2,
        bound_constant: bound,
        lhs,
        lhs_tolerance,
        d_inf: d.distance,
        d_inf_sidedness: d.sidedness,
        rhs,
        slack: tol.slack,
        abs_floor: tol.abs_floor,
        holds: lhs <= rhs * tol.slack + tol.abs_floor,
        advisory,
        certificate: cert,
        discrete_residual: rec.discrete_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{equispaced, iid_points, PointSet};
    use crate::space::{make_trig_space, Domain, Spectrum, TrigPolynomial, C64};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn space3() -> Subspace {
        make_trig_space(1, Spectrum::one_dimensional(&[-1, 0, 1]).unwrap()).unwrap()
    }

    fn cos2() -> Target {
        Target::Trig(TrigPolynomial::from_terms(1, [(vec![2], c(0.5)), (vec![-2], c(0.5))]))
    }

    fn cert(c1: f64, status: CertStatus) -> Certificate {
        Certificate {
            p: 2.0,
            c1_pow: c1,
            c2_pow: 1.0,
            method: CertMethod::ExactEigen,
            status,
            tolerance: 0.0,
            weighting: Weighting::Uniform,
            m: 4,
            n: 3,
            enclosure: None,
        }
    }

    #[test]
    fn bound_examples() {
        let w = [0.25; 4];
        assert!((recovery_bound(&cert(1.0, CertStatus::Certified), &w, 2.0).unwrap() - 3.0).abs() < 1e-15);
        let b = recovery_bound(&cert(0.5, CertStatus::Certified), &w, 2.0).unwrap();
        assert!((b - (2.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
        assert!(matches!(
            recovery_bound(&cert(0.9, CertStatus::HeuristicUpperC1), &w, 2.0),
            Err(Error::Refused(_))
        ));
        assert!(matches!(recovery_bound(&cert(0.0, CertStatus::Certified), &w, 2.0), Err(Error::Unbounded)));
    }

    #[test]
    fn members_are_recovered() {
        let s = space3();
        let f = CoefficientVector::new(&s, vec![C64::new(0.5, 0.2), c(-1.0), c(0.3)]).unwrap();
        let pts = PointSet::explicit(1, iid_points(&Domain::Torus { dimension: 1 }, 7, 3, 0)).unwrap();
        let samples = SampleVector::of(&f, &pts).unwrap();
        let tol = Tolerances::default();
        for p in [1.5, 2.0, 4.0, f64::INFINITY] {
            for w in [vec![1.0 / 7.0; 7], (1..=7).map(|j| j as f64 / 28.0).collect()] {
                let r = lpw_recover(&samples, &s, p, &w, &tol).unwrap();
                assert!(r.discrete_residual <= 1e-10, "p = {p}");
                for (a, b) in r.coefficients.coeffs().iter().zip(f.coeffs()) {
                    assert!((a - b).norm() < 1e-8, "p = {p}");
                }
            }
        }
    }

    #[test]
    fn cos2_anchor() {
        let s = space3();
        let pts = equispaced(1, 9);
        let samples = SampleVector::of_target(&cos2(), &pts);
        let r = lpw_recover(&samples, &s, 2.0, &[1.0 / 9.0; 9], &Tolerances::default()).unwrap();
        assert!(r.coefficients.coeffs().iter().all(|z| z.norm() < 1e-12));
        let rep = verify_recovery(&cos2(), &s, &WeightedPointSet::uniform(pts), 2.0, &CertifyOptions::default()).unwrap();
        assert!((rep.lhs - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((rep.bound_constant - 3.0).abs() < 1e-9);
        assert!((rep.rhs - 3.0).abs() < 1e-3);
        assert!(rep.holds && !rep.advisory);
    }

    #[test]
    fn p4_anchor_uses_exact_certificate() {
        let s = space3();
        let rep = verify_recovery(&cos2(), &s, &WeightedPointSet::uniform(equispaced(1, 9)), 4.0, &CertifyOptions::default()).unwrap();
        assert_eq!(rep.certificate.method, CertMethod::ExactQuadrature);
        assert!((rep.bound_constant - 3.0).abs() < 1e-9);
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn p2_residual_is_orthogonal_and_linear() {
        let s = space3();
        let pts = PointSet::explicit(1, iid_points(&Domain::Torus { dimension: 1 }, 11, 5, 0)).unwrap();
        let w: Vec<f64> = (0..11).map(|j| (1.0 + j as f64) / 66.0).collect();
        let tol = Tolerances::default();
        let g1 = Target::function(1, |x| C64::new(x[0].sin().exp(), 0.0));
        let g2 = Target::function(1, |x| C64::new((3.0 * x[0]).cos(), x[0].cos()));
        let s1 = SampleVector::of_target(&g1, &pts);
        let s2 = SampleVector::of_target(&g2, &pts);
        let r1 = lpw_recover(&s1, &s, 2.0, &w, &tol).unwrap();
        let a = s.basis_matrix(pts.points()).unwrap();
        let res: Vec<C64> = (0..11)
            .map(|j| s1.values()[j] - r1.coefficients.eval_unchecked(&pts.points()[j]))
            .collect();
        for i in 0..3 {
            let ip: C64 = (0..11).map(|j| w[j] * res[j] * a[(j, i)].conj()).sum();
            assert!(ip.norm() < 1e-9);
        }
        let r2 = lpw_recover(&s2, &s, 2.0, &w, &tol).unwrap();
        let (al, be) = (C64::new(0.3, -1.2), c(2.5));
        let mixed: Vec<C64> = (0..11).map(|j| al * s1.values()[j] + be * s2.values()[j]).collect();
        let rm = lpw_recover(&SampleVector::new(mixed, pts.clone()).unwrap(), &s, 2.0, &w, &tol).unwrap();
        let want = r1.coefficients.combine(al, &r2.coefficients, be).unwrap();
        for (x, y) in rm.coefficients.coeffs().iter().zip(want.coeffs()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn p4_minimizer_beats_perturbations() {
        let s = space3();
        let pts = PointSet::explicit(1, iid_points(&Domain::Torus { dimension: 1 }, 15, 9, 0)).unwrap();
        let g = Target::function(1, |x| C64::new((2.0 * x[0]).sin().abs(), 0.0));
        let samples = SampleVector::of_target(&g, &pts);
        let w = vec![1.0 / 15.0; 15];
        let r = lpw_recover(&samples, &s, 4.0, &w, &Tolerances::default()).unwrap();
        let obj = |co: &[C64]| -> f64 {
            (0..15)
                .map(|j| {
                    let u: C64 = s
                        .basis_values(&pts.points()[j])
                        .unwrap()
                        .iter()
                        .zip(co)
                        .map(|(b, c)| b * c)
                        .sum();
                    w[j] * (samples.values()[j] - u).norm().powi(4)
                })
                .sum()
        };
        let base = obj(r.coefficients.coeffs());
        for k in 0..100 {
            let d = crate::optim::random_unit(3, 31, k);
            let pert: Vec<C64> = r.coefficients.coeffs().iter().zip(d.iter()).map(|(a, b)| a + b * 1e-3).collect();
            assert!(obj(&pert) >= base - 1e-15);
        }
    }
}
