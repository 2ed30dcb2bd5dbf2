//! Three least-squares paths and the verdict-driven choice between them.
//!
//! * normal equations: Cholesky on the column-equilibrated Gram matrix; the
//!   fast path, valid only for full column rank.
//! * orthogonal: Householder QR with column pivoting, basic solution on
//!   rank deficiency.
//! * min-norm: truncated SVD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_svd;
use crate::singularity::{rank_threshold, SingularityVerdict, VerdictStatus};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    NormalEquations,
    Orthogonal,
    MinNorm,
}

impl SolveMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMethod::NormalEquations => "normal_equations",
            SolveMethod::Orthogonal => "orthogonal",
            SolveMethod::MinNorm => "min_norm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqSolution {
    pub coeffs: Vec<f64>,
    pub method: SolveMethod,
    pub residual_sse: f64,
    /// Diagonal-ratio estimate from the Cholesky factor (normal equations only).
    pub condition_estimate: Option<f64>,
    /// Set when the normal equations broke down and min-norm took over.
    #[serde(default)]
    pub fallback: bool,
    /// Rank used by the orthogonal and min-norm paths.
    pub rank: Option<usize>,
}

/// `‖B x - y‖²`.
pub fn residual_sse(b: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let r = b * DVector::from_column_slice(x);
    r.iter().zip(y).map(|(bx, yi)| (bx - yi).powi(2)).sum()
}

fn check_rhs(b: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if b.nrows() != y.len() {
        return Err(Error::RhsLength {
            rows: b.nrows(),
            len: y.len(),
        });
    }
    Ok(())
}

const REFINEMENT_STEPS: usize = 3;

/// Above this estimated condition number of the scaled Gram matrix the
/// Cholesky route is declined: refinement no longer converges there.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Solves `(BᵀB) x = Bᵀy` by Cholesky. Columns are scaled to unit norm first
/// (the solution is unscaled afterwards), which does not change the method
/// but keeps the Gram matrix's condition number as low as the data allow.
pub fn solve_normal_equations(b: &DMatrix<f64>, y: &[f64]) -> Result<LsqSolution> {
    check_rhs(b, y)?;
    let scales: Vec<f64> = b.column_iter().map(|c| c.norm()).collect();
    if scales.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::NormalEquations);
    }
    let mut scaled = b.clone();
    for (mut col, &s) in scaled.column_iter_mut().zip(&scales) {
        col /= s;
    }
    let gram = scaled.tr_mul(&scaled);
    let rhs = scaled.tr_mul(&DVector::from_column_slice(y));
    let chol = gram.cholesky().ok_or(Error::NormalEquations)?;
    let mut z = chol.solve(&rhs);
    // Refinement against the true residual: each pass shrinks the error by
    // roughly κ²ε, recovering most of what forming BᵀB gave away.
    let yv = DVector::from_column_slice(y);
    for _ in 0..REFINEMENT_STEPS {
        if z.iter().any(|v| !v.is_finite()) {
            break;
        }
        let r = &yv - &scaled * &z;
        let dz = chol.solve(&scaled.tr_mul(&r));
        z += &dz;
        if dz.norm() <= f64::EPSILON * z.norm() {
            break;
        }
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NormalEquations);
    }
    let coeffs: Vec<f64> = z.iter().zip(&scales).map(|(v, s)| v / s).collect();
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if dmin.is_nan() || dmin <= 0.0 || (dmax / dmin).powi(2) > MAX_GRAM_CONDITION {
        return Err(Error::NormalEquations);
    }
    let condition_estimate = Some((dmax / dmin).powi(2));
    Ok(LsqSolution {
        residual_sse: residual_sse(b, &coeffs, y),
        coeffs,
        method: SolveMethod::NormalEquations,
        condition_estimate,
        fallback: false,
        rank: None,
    })
}

/// Householder QR with column pivoting. Columns whose `|R_kk|` falls at or
/// below `eps_rank · |R_00| · max(rows, cols)` are treated as dependent and
/// their coefficients set to zero (basic solution).
pub fn solve_orthogonal(b: &DMatrix<f64>, y: &[f64], eps_rank: f64) -> Result<LsqSolution> {
    check_rhs(b, y)?;
    let (rows, cols) = b.shape();
    let mut a = b.clone();
    let mut qty = DVector::from_column_slice(y);
    let mut perm: Vec<usize> = (0..cols).collect();
    let steps = rows.min(cols);
    let mut rank = 0;
    let mut threshold = 0.0;

    for k in 0..steps {
        // pivot: largest remaining column norm below row k
        let (pivot, pivot_norm) = (k..cols)
            .map(|j| (j, a.view((k, j), (rows - k, 1)).norm()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if k == 0 {
            threshold = rank_threshold(pivot_norm, rows, cols, eps_rank);
        }
        if pivot_norm <= threshold || pivot_norm == 0.0 {
            break;
        }
        a.swap_columns(k, pivot);
        perm.swap(k, pivot);

        // reflector H = I - 2 v vᵀ / (vᵀv) mapping a[k.., k] to (-sign·‖·‖, 0, …)
        let x0 = a[(k, k)];
        let alpha = if x0 >= 0.0 { -pivot_norm } else { pivot_norm };
        let mut v: DVector<f64> = a.view((k, k), (rows - k, 1)).column(0).into_owned();
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            for j in k..cols {
                let mut col = a.column_mut(j);
                let mut col = col.rows_mut(k, rows - k);
                let dot = v.dot(&col);
                col.axpy(-2.0 * dot / vnorm2, &v, 1.0);
            }
            let mut tail = qty.rows_mut(k, rows - k);
            let dot = v.dot(&tail);
            tail.axpy(-2.0 * dot / vnorm2, &v, 1.0);
        }
        rank = k + 1;
    }

    // back substitution on the leading rank × rank triangle
    let mut z = vec![0.0; cols];
    for i in (0..rank).rev() {
        let mut s = qty[i];
        for j in i + 1..rank {
            s -= a[(i, j)] * z[j];
        }
        z[i] = s / a[(i, i)];
    }
    let mut coeffs = vec![0.0; cols];
    for (k, &p) in perm.iter().enumerate() {
        coeffs[p] = z[k];
    }
    Ok(LsqSolution {
        residual_sse: residual_sse(b, &coeffs, y),
        coeffs,
        method: SolveMethod::Orthogonal,
        condition_estimate: None,
        fallback: false,
        rank: Some(rank),
    })
}

/// Minimum-norm solution through the SVD, dropping `σ_i ≤ eps_rank · σ_max ·
/// max(rows, cols)`.
pub fn solve_min_norm(b: &DMatrix<f64>, y: &[f64], eps_rank: f64) -> Result<LsqSolution> {
    check_rhs(b, y)?;
    let (rows, cols) = b.shape();
    let mut coeffs = vec![0.0; cols];
    let mut rank = 0;
    if !b.is_empty() {
        let svd = jacobi_svd(b);
        let smax = svd.sigma.iter().cloned().fold(0.0, f64::max);
        let thr = rank_threshold(smax, rows, cols, eps_rank);
        let yv = DVector::from_column_slice(y);
        for (i, &s) in svd.sigma.iter().enumerate() {
            if s > thr && s > 0.0 {
                rank += 1;
                let w = svd.u.column(i).dot(&yv) / s;
                for (c, x) in coeffs.iter_mut().enumerate() {
                    *x += w * svd.v[(c, i)];
                }
            }
        }
    }
    Ok(LsqSolution {
        residual_sse: residual_sse(b, &coeffs, y),
        coeffs,
        method: SolveMethod::MinNorm,
        condition_estimate: None,
        fallback: false,
        rank: Some(rank),
    })
}

/// Full rank → normal equations (min-norm if they break down);
/// deficient → min-norm; unknown → orthogonal.
pub fn dispatch_solve(
    b: &DMatrix<f64>,
    y: &[f64],
    verdict: &SingularityVerdict,
    tol: &Tolerances,
) -> Result<LsqSolution> {
    match verdict.status {
        VerdictStatus::CertifiedFullRank { .. } => match solve_normal_equations(b, y) {
            Ok(sol) => Ok(sol),
            Err(Error::NormalEquations) => {
                let mut sol = solve_min_norm(b, y, tol.eps_rank)?;
                sol.fallback = true;
                Ok(sol)
            }
            Err(e) => Err(e),
        },
        VerdictStatus::CertifiedDeficient { .. } => solve_min_norm(b, y, tol.eps_rank),
        VerdictStatus::Unknown { .. } => solve_orthogonal(b, y, tol.eps_rank),
    }
}
