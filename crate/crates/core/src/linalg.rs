//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::space::{Subspace, C64};

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Linear map `W` with `W G W^* = I`, so `ũ(x) = W u(x)` is `L_2(mu)`-orthonormal.
#[derive(Clone, Debug)]
pub struct Orthonormalizer {
    w: Option<DMatrix<C64>>,
}

impl Orthonormalizer {
    pub fn for_space(space: &Subspace, rank_tol: f64) -> Result<Self> {
        if space.is_exponential() {
            return Ok(Self { w: None });
        }
        let g = hermitian_part(space.gram());
        let n = g.nrows();
        let eig = g.symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min <= rank_tol * max {
            return Err(Error::DegenerateSpace(format!(
                "Gram matrix is rank deficient (eigenvalue ratio {:.3e})",
                if max > 0.0 { min / max } else { 0.0 }
            )));
        }
        // W = Λ^{-1/2} V^*
        let mut w = eig.eigenvectors.adjoint();
        for i in 0..n {
            let s = 1.0 / eig.eigenvalues[i].sqrt();
            for j in 0..n {
                w[(i, j)] *= s;
            }
        }
        Ok(Self { w: Some(w) })
    }

    pub fn is_identity(&self) -> bool {
        self.w.is_none()
    }

    /// Rows of `a` are basis value vectors; returns rows of orthonormalized values.
    pub fn apply_rows(&self, a: DMatrix<C64>) -> DMatrix<C64> {
        match &self.w {
            None => a,
            Some(w) => a * w.transpose(),
        }
    }

    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        match &self.w {
            None => u.to_vec(),
            Some(w) => (w * DVector::from_column_slice(u)).iter().copied().collect(),
        }
    }
}

/// Minimizer of `Σ w_j |y_j - (A c)_j|^2` with minimum norm; returns `(c, rank_deficient)`.
pub fn weighted_least_squares(
    a: &DMatrix<C64>,
    y: &DVector<C64>,
    weights: &[f64],
    rank_tol: f64,
) -> (DVector<C64>, bool) {
    let mut aw = a.clone();
    let mut yw = y.clone();
    for (j, &w) in weights.iter().enumerate() {
        let s = w.sqrt();
        for i in 0..aw.ncols() {
            aw[(j, i)] *= s;
        }
        yw[j] *= s;
    }
    let n = a.ncols();
    let svd = aw.svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = smax * rank_tol.sqrt().max(1e-13);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let c = svd
        .solve(&yw, cutoff)
        .unwrap_or_else(|_| DVector::zeros(n));
    (c, rank < n || a.nrows() < n)
}

/// Solves a Hermitian positive-definite system, falling back to a pseudo-inverse.
pub fn solve_hpd(h: &DMatrix<C64>, b: &DVector<C64>) -> DVector<C64> {
    if let Some(ch) = hermitian_part(h).cholesky() {
        return ch.solve(b);
    }
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, smax * 1e-14).unwrap_or_else(|_| DVector::zeros(b.len()))
}
