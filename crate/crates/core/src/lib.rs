//! Sampling discretization of `L_p` norms on finite-dimensional subspaces of
//! functions on the torus or on a finite set.
//!
//! A point set `ξ = (ξ^1, …, ξ^m)` with weights `w` discretizes the `L_p` norm
//! on `X_N` with constants `(C_1, C_2)` when
//! `C_1 ‖f‖_p^p <= Σ_ν w_ν |f(ξ^ν)|^p <= C_2 ‖f‖_p^p` for all `f ∈ X_N`.
//! The crate builds spaces, generates and certifies point sets, searches for
//! small sets, and recovers functions from samples by weighted least `p`-th powers.

pub mod budgets;
pub mod certify;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod norms;
pub mod optim;
pub mod points;
pub mod quadrature;
pub mod recovery;
pub mod rng;
pub mod search;
pub mod space;
pub mod tolerances;

pub use certify::{certify, CertMethod, CertStatus, Certificate, CertifyOptions};
pub use error::{Error, Result};
pub use norms::{best_approx, discrete_norm, nikolskii_constant, norm_p, norm_sup, SampleVector};
pub use points::{generate_points, PointSet, PointSpec, WeightedPointSet};
pub use recovery::{lpw_recover, recovery_bound, verify_recovery};
pub use search::{minimal_m_search, two_stage_subsample};
pub use space::{
    make_lacunary_space, make_trig_space, restrict, tensor_product, CoefficientVector, Domain, Spectrum,
    Subspace, Target, TrigPolynomial, C64,
};
pub use tolerances::Tolerances;
