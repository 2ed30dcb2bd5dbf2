//! One-sided Jacobi SVD.
//!
//! nalgebra 0.35's `svd(true, true)` occasionally returns factors that do
//! not reconstruct exactly rank-deficient inputs (the singular values alone
//! are fine), so the min-norm solver goes through this instead.

use nalgebra::DMatrix;

pub struct Svd {
    /// `rows × k`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Unsorted, `k = min(rows, cols)` entries.
    pub sigma: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub v: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 80;

/// `a = u · diag(sigma) · vᵀ`, by Hestenes rotations on the columns of the
/// taller orientation of `a`.
pub fn jacobi_svd(a: &DMatrix<f64>) -> Svd {
    if a.nrows() < a.ncols() {
        let t = jacobi_svd(&a.transpose());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    let mut u = a.clone();
    let n = u.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    // columns at roundoff level carry no direction worth keeping; they are
    // replaced by an orthonormal completion so that u (and, for wide input,
    // v) stays orthonormal
    let cutoff = sigma.iter().cloned().fold(0.0, f64::max) * n as f64 * f64::EPSILON;
    let mut weak = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            u.column_mut(j).unscale_mut(s);
        } else {
            weak.push(j);
        }
    }
    complete_basis(&mut u, &weak);
    Svd { u, sigma, v }
}

/// Overwrites the listed columns with unit vectors orthogonal to every other
/// column, trying coordinate axes in turn.
fn complete_basis(u: &mut DMatrix<f64>, weak: &[usize]) {
    if weak.is_empty() {
        return;
    }
    let rows = u.nrows();
    let mut accepted: Vec<usize> = (0..u.ncols()).filter(|j| !weak.contains(j)).collect();
    let mut axis = 0;
    for &j in weak {
        while axis < rows {
            let mut x = nalgebra::DVector::<f64>::zeros(rows);
            x[axis] = 1.0;
            axis += 1;
            for _ in 0..2 {
                for &a in &accepted {
                    let d = u.column(a).dot(&x);
                    x.axpy(-d, &u.column(a), 1.0);
                }
            }
            let norm = x.norm();
            if norm > 0.5 {
                u.set_column(j, &(x / norm));
                accepted.push(j);
                break;
            }
        }
    }
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let mp = m[(i, p)];
        let mq = m[(i, q)];
        m[(i, p)] = c * mp - s * mq;
        m[(i, q)] = s * mp + c * mq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn reconstructs_and_is_orthogonal(seed in any::<u64>(), rows in 1usize..25, cols in 1usize..8, drop in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rank = rows.min(cols).saturating_sub(drop).max(1);
            let l = DMatrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0));
            let r = DMatrix::from_fn(rank, cols, |_, _| rng.random_range(-1.0..1.0));
            let a = l * r;
            let svd = jacobi_svd(&a);
            let rec = &svd.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(svd.sigma.clone())) * svd.v.transpose();
            prop_assert!((rec - &a).norm() <= 1e-12 * a.norm().max(1.0));
            let k = svd.sigma.len();
            prop_assert!((svd.v.transpose() * &svd.v - DMatrix::<f64>::identity(k, k)).norm() < 1e-12);
            // singular values agree with nalgebra's values-only routine
            let mut ours = svd.sigma.clone();
            ours.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut theirs: Vec<f64> = a.singular_values().iter().cloned().collect();
            theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (x, y) in ours.iter().zip(&theirs) {
                prop_assert!((x - y).abs() <= 1e-12 * theirs[0]);
            }
        }
    }
}
