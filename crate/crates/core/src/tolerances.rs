//! Numerical tolerances shared by the norm, certification and recovery routines.
//!
//! Every default here is part of the public contract; the CLI can override
//! individual entries with `--tolerance KEY=VAL`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Successive dyadic refinements of a Riemann sum must agree to this (relative).
    pub quadrature_rel: f64,
    /// Cap on the number of nodes of any single quadrature grid.
    pub quadrature_max_nodes: usize,
    /// Sup-norm search grid uses `sup_grid_factor * degree` nodes per dimension.
    pub sup_grid_factor: usize,
    /// Documented relative accuracy of the sup-norm estimate.
    pub sup_rel_tol: f64,
    /// Relative gap between upper and lower minimax estimates at which Lawson stops.
    pub minimax_rel_tol: f64,
    pub minimax_max_iter: usize,
    /// First-order optimality threshold for convex L_p minimization.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Random restarts for the sphere optimizer used by general-p certification.
    pub restarts: usize,
    /// Inflation applied to the right-hand side of the recovery bound.
    pub slack: f64,
    /// Absolute floor below which recovery-bound comparisons are treated as equal.
    pub abs_floor: f64,
    /// IRLS residual clip.
    pub irls_clip: f64,
    /// Relative eigenvalue threshold for declaring a Gram matrix singular.
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature_rel: 1e-9,
            quadrature_max_nodes: 1 << 22,
            sup_grid_factor: 64,
            sup_rel_tol: 1e-6,
            minimax_rel_tol: 1e-4,
            minimax_max_iter: 5000,
            gradient_tol: 1e-8,
            max_iterations: 500,
            restarts: 64,
            slack: 1.05,
            abs_floor: 1e-10,
            irls_clip: 1e-12,
            rank_tol: 1e-10,
        }
    }
}

impl Tolerances {
    /// Apply a `KEY=VAL` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, val) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config("tolerance", format!("expected KEY=VAL, got `{assignment}`")))?;
        let key = key.trim();
        let val = val.trim();
        let float = || {
            val.parse::<f64>()
                .map_err(|_| Error::config(format!("tolerance.{key}"), format!("not a number: `{val}`")))
        };
        let int = || {
            val.parse::<usize>()
                .map_err(|_| Error::config(format!("tolerance.{key}"), format!("not an integer: `{val}`")))
        };
        match key {
            "quadrature_rel" => self.quadrature_rel = float()?,
            "quadrature_max_nodes" => self.quadrature_max_nodes = int()?,
            "sup_grid_factor" => self.sup_grid_factor = int()?,
            "sup_rel_tol" => self.sup_rel_tol = float()?,
            "minimax_rel_tol" => self.minimax_rel_tol = float()?,
            "minimax_max_iter" => self.minimax_max_iter = int()?,
            "gradient_tol" => self.gradient_tol = float()?,
            "max_iterations" => self.max_iterations = int()?,
            "restarts" => self.restarts = int()?,
            "slack" => self.slack = float()?,
            "abs_floor" => self.abs_floor = float()?,
            "irls_clip" => self.irls_clip = float()?,
            "rank_tol" => self.rank_tol = float()?,
            other => {
                return Err(Error::config(
                    format!("tolerance.{other}"),
                    "unknown tolerance key",
                ))
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_known_key() {
        let mut t = Tolerances::default();
        t.set("slack=1.1").unwrap();
        t.set("restarts = 8").unwrap();
        assert_eq!(t.slack, 1.1);
        assert_eq!(t.restarts, 8);
    }

    #[test]
    fn reject_unknown_key_and_bad_value() {
        let mut t = Tolerances::default();
        assert!(matches!(t.set("nope=1"), Err(Error::Config { .. })));
        assert!(matches!(t.set("slack=abc"), Err(Error::Config { .. })));
        assert!(matches!(t.set("slack"), Err(Error::Config { .. })));
    }
}
