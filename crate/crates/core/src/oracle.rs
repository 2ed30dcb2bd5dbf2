//! Independent checks used by tests, the acceptance suite and
//! `splinefit-verify`. Nothing here sits on the fitting path.
//!
//! Rank is recomputed with a one-sided Jacobi SVD rather than the
//! bidiagonalisation used by [`crate::numeric_rank`], so a bug in one route
//! does not silently confirm itself.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::design::{Model, SplineBasis};
use crate::linalg::jacobi_svd;
use crate::prototype::{sample, PrototypeFn, PrototypeSamples};
use crate::singularity::{analyze_matrix, rank_threshold, VerdictStatus};
use crate::spline::{SplineSpec, TimeGrid, TimeMap};
use crate::Tolerances;

/// `∏_{i<j} (x_j - x_i)`, the determinant of `V[i][j] = x_i^j`.
pub fn vandermonde_det(nodes: &[f64]) -> f64 {
    let mut det = 1.0;
    for j in 0..nodes.len() {
        for i in 0..j {
            det *= nodes[j] - nodes[i];
        }
    }
    det
}

pub fn vandermonde_matrix(nodes: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    DMatrix::from_fn(n, n, |i, j| nodes[i].powi(j as i32))
}

/// Laplace expansion along the first row, in exact rational arithmetic.
/// Every `f64` is a dyadic rational, so the only rounding is the final
/// conversion. Exponential in the size; meant for small checks.
pub fn cofactor_det(a: &DMatrix<f64>) -> f64 {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let exact: Vec<Vec<BigRational>> = a
        .row_iter()
        .map(|row| {
            row.iter()
                .map(|&v| BigRational::from_float(v).expect("finite entry"))
                .collect()
        })
        .collect();
    let cols: Vec<usize> = (0..a.ncols()).collect();
    exact_det(&exact, 0, &cols)
        .to_f64()
        .expect("representable determinant")
}

fn exact_det(a: &[Vec<BigRational>], row: usize, cols: &[usize]) -> BigRational {
    if cols.is_empty() {
        return BigRational::one();
    }
    let mut det = BigRational::zero();
    for (pos, &j) in cols.iter().enumerate() {
        if a[row][j].is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
        let term = &a[row][j] * exact_det(a, row + 1, &rest);
        if pos % 2 == 0 {
            det += term;
        } else {
            det -= term;
        }
    }
    det
}

/// Singular values through the Jacobi route. Unsorted.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    jacobi_svd(a).sigma
}

/// Rank with the same cut-off policy as [`crate::numeric_rank`], computed
/// through [`jacobi_singular_values`].
pub fn oracle_rank(a: &DMatrix<f64>, eps_rank: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = jacobi_singular_values(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    let thr = rank_threshold(smax, a.nrows(), a.ncols(), eps_rank);
    sv.iter().filter(|&&s| s > thr).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstance {
    pub seed: u64,
    pub model: Model,
    pub spec: SplineSpec,
    pub grid: TimeGrid,
    pub prototype: PrototypeFn,
}

/// Knobs for [`RandomInstance::generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceConfig {
    pub max_degree: usize,
    pub max_intervals: usize,
    pub max_samples: usize,
    /// `None` picks the model at random.
    pub model: Option<Model>,
    /// Guarantee `N_k ≥ 2c_k` in every interval.
    pub elimination_rows: bool,
    /// Use a constant prototype instead of a sinusoid.
    pub constant_prototype: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            max_degree: 4,
            max_intervals: 5,
            max_samples: 200,
            model: None,
            elimination_rows: false,
            constant_prototype: false,
        }
    }
}

impl RandomInstance {
    /// Deterministic in `(seed, cfg)`.
    ///
    /// Grids are jittered-uniform, knots are jittered-equidistant and some
    /// grid times are moved onto exact zeros of the sinusoid so that zero
    /// counting is exercised.
    pub fn generate(seed: u64, cfg: &InstanceConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=cfg.max_degree);
        let n = rng.random_range(1..=cfg.max_intervals);
        let model = cfg.model.unwrap_or(if rng.random_bool(0.5) {
            Model::One
        } else {
            Model::Two
        });
        // the widest interval count per sample we can tolerate after knot
        // jitter: each interval gets at least ~0.6 of its equal share
        let per_interval = if cfg.elimination_rows {
            2 * (m + 1)
        } else {
            m + 1
        };
        let min_samples = ((per_interval as f64 / 0.55).ceil() as usize * n + 2).max(8);
        let n_samples = rng.random_range(min_samples.min(cfg.max_samples)..=cfg.max_samples);
        let duration = rng.random_range(1.0..10.0);

        let h = duration / (n_samples - 1) as f64;
        let mut times: Vec<f64> = (0..n_samples)
            .map(|i| {
                if i == 0 || i == n_samples - 1 {
                    i as f64 * h
                } else {
                    (i as f64 + rng.random_range(-0.4..0.4)) * h
                }
            })
            .collect();
        times[n_samples - 1] = duration;

        let knot_h = duration / n as f64;
        let mut knots: Vec<f64> = (0..=n)
            .map(|k| {
                if k == 0 || k == n {
                    k as f64 * knot_h
                } else {
                    (k as f64 + rng.random_range(-0.2..0.2)) * knot_h
                }
            })
            .collect();
        knots[n] = duration;

        let prototype = if cfg.constant_prototype {
            let c = rng.random_range(0.5..3.0);
            PrototypeFn::constant(if rng.random_bool(0.5) { c } else { -c })
        } else {
            let omega = rng.random_range(0.5..16.0);
            let tau = rng.random_range(0.0..2.0 * PI);
            if rng.random_bool(0.5) {
                snap_to_zeros(&mut times, omega, tau, &mut rng);
            }
            PrototypeFn::sinusoid(omega, tau)
        };

        RandomInstance {
            seed,
            model,
            spec: SplineSpec::new(m, knots).expect("valid knots"),
            grid: TimeGrid::new(times).expect("increasing grid"),
            prototype,
        }
    }

    pub fn samples(&self) -> PrototypeSamples {
        sample(&self.prototype, &self.grid).expect("prototype matches grid")
    }

    pub fn full_rank(&self) -> usize {
        self.model.families() * self.spec.basis_dim()
    }
}

/// Moves interior grid times onto zeros `(jπ - τ)/ω` of `sin(ωt + τ)` where
/// that keeps the grid strictly increasing.
fn snap_to_zeros(times: &mut [f64], omega: f64, tau: f64, rng: &mut ChaCha8Rng) {
    let last = times.len() - 1;
    let end = times[last];
    let j_lo = (tau / PI).ceil() as i64;
    let j_hi = ((omega * end + tau) / PI).floor() as i64;
    for j in j_lo..=j_hi {
        if !rng.random_bool(0.7) {
            continue;
        }
        let z = (j as f64 * PI - tau) / omega;
        let i = times.partition_point(|&t| t < z);
        let i = if i > 0 && (i > last || z - times[i - 1] < times[i] - z) {
            i - 1
        } else {
            i
        };
        if i == 0 || i >= last {
            continue;
        }
        if times[i - 1] < z && z < times[i + 1] {
            times[i] = z;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankComparison {
    pub seed: u64,
    pub model: Model,
    /// Verdict of the model's sufficient condition alone (no fallback).
    pub theorem_verdict: VerdictStatus,
    pub oracle_rank: usize,
    pub full_rank: usize,
    /// A certification is contradicted by the oracle when this is false.
    pub consistent: bool,
}

/// Builds the instance's matrix with the default normalization, runs the
/// applicable sufficient condition and the oracle rank, and checks that
/// every certification agrees with the oracle.
pub fn exhaustive_rank_compare(instance: &RandomInstance, tol: &Tolerances) -> RankComparison {
    let map = TimeMap::normalizing(&instance.grid);
    let basis = SplineBasis::new(&instance.spec, &instance.grid, map).expect("bound instance");
    let samples = instance.samples();
    let dm = basis.build(instance.model, &samples).expect("matrix");
    let theorem_only = Tolerances {
        certify: false,
        ..*tol
    };
    let verdict = analyze_matrix(
        &dm,
        &instance.spec,
        basis.assignment(),
        &samples,
        &theorem_only,
    );
    let oracle_rank = oracle_rank(&dm.data, tol.eps_rank);
    let full_rank = dm.ncols();
    let consistent = match verdict.status {
        VerdictStatus::CertifiedFullRank { .. } => oracle_rank == full_rank,
        VerdictStatus::CertifiedDeficient { .. } => oracle_rank < full_rank,
        VerdictStatus::Unknown { .. } => true,
    };
    RankComparison {
        seed: instance.seed,
        model: instance.model,
        theorem_verdict: verdict.status,
        oracle_rank,
        full_rank,
        consistent,
    }
}
