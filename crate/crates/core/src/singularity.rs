//! Rank screening for the design matrices before choosing a solver.
//!
//! Two sufficient conditions are implemented, one per model, together with
//! an SVD-based numerical rank that serves as fallback and ground truth.
//!
//! * Model 1: after discarding the rows where the prototype vanishes, every
//!   interval still needs enough samples to pin its polynomial piece:
//!   `N_1 - Z_1 ≥ m + 1` and `N_k - Z_k ≥ m` for `k ≥ 2`. The diagonal blocks
//!   are then scaled Vandermonde matrices with full column rank, and the
//!   block lower triangular structure carries that to the whole matrix.
//! * Model 2: each diagonal block `[B₁ₖ B₂ₖ]` is split into a top part and
//!   its last `c_k` rows. The bottom rows of the shift family form a square
//!   Vandermonde-type block; eliminating the shift columns of the top part
//!   with it leaves the reduced block `B̃ = B₁₁ - Λᵀ B₂₁`. If every reduced
//!   block has full column rank, so does the matrix. A constant prototype
//!   makes the two families proportional and the matrix rank deficient.
//!
//! Neither condition is necessary; failing one yields `Unknown`.

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{interleave_blocks, DesignMatrix, Family, Model, SplineBasis};
use crate::error::Result;
use crate::prototype::{count_zero_samples, PrototypeSamples};
use crate::spline::{IntervalAssignment, SplineSpec, TimeGrid, TimeMap};
use crate::Tolerances;

/// Largest allowed `max|Λᵀ B₂₂ - B₁₂| / max|B₁₂|` for an elimination to count.
pub const LAMBDA_RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certifier {
    Theorem1,
    Theorem2,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum VerdictStatus {
    CertifiedFullRank { by: Certifier },
    CertifiedDeficient { by: Certifier, reason: String },
    Unknown { reason: String },
}

impl VerdictStatus {
    pub fn is_full_rank(&self) -> bool {
        matches!(self, VerdictStatus::CertifiedFullRank { .. })
    }

    pub fn is_deficient(&self) -> bool {
        matches!(self, VerdictStatus::CertifiedDeficient { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, VerdictStatus::Unknown { .. })
    }
}

/// One row of the per-interval table: `k` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDiagnostic {
    pub k: usize,
    pub n_k: usize,
    pub z_k: usize,
    pub required: usize,
    pub margin: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    #[serde(flatten)]
    pub status: VerdictStatus,
    pub per_interval: Vec<IntervalDiagnostic>,
    pub columns: usize,
    pub numeric_rank: Option<usize>,
    pub eps_zero: f64,
    pub eps_rank: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalElimination {
    /// 1-based interval index.
    pub k: usize,
    /// Absolute row indices of the bottom part.
    pub bottom_rows: Range<usize>,
    /// `Λ_k`, `c_k × (N_k - c_k)`: column `j` holds the multipliers that
    /// rebuild top row `j` of the shift block from the bottom rows.
    pub lambda: DMatrix<f64>,
    pub reconstruction_error: f64,
    pub residual_block_rank: usize,
    /// Lower bound on the smallest singular value of the interval's
    /// diagonal block.
    pub sigma_min_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EliminationCertificate {
    pub intervals: Vec<IntervalElimination>,
}

/// Singular-value threshold `eps · σ_max · max(rows, cols)`.
pub fn rank_threshold(sigma_max: f64, rows: usize, cols: usize, eps_rank: f64) -> f64 {
    eps_rank * sigma_max * rows.max(cols) as f64
}

/// Number of singular values above `eps_rank · σ_max · max(rows, cols)`.
pub fn numeric_rank(matrix: &DMatrix<f64>, eps_rank: f64) -> usize {
    if matrix.is_empty() {
        return 0;
    }
    let sv = matrix.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let thr = rank_threshold(smax, matrix.nrows(), matrix.ncols(), eps_rank);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Counting condition for Model 1. Never reports a deficiency.
pub fn theorem1_check(
    spec: &SplineSpec,
    assignment: &IntervalAssignment,
    samples: &PrototypeSamples,
    eps_zero: f64,
) -> SingularityVerdict {
    let zeros = count_zero_samples(samples, assignment, eps_zero);
    let per_interval: Vec<IntervalDiagnostic> = assignment
        .counts()
        .iter()
        .zip(&zeros)
        .enumerate()
        .map(|(k, (&n_k, &z_k))| {
            let required = spec.block_width(k);
            IntervalDiagnostic {
                k: k + 1,
                n_k,
                z_k,
                required,
                margin: n_k as i64 - z_k as i64 - required as i64,
                note: None,
            }
        })
        .collect();
    let status = match per_interval.iter().find(|d| d.margin < 0) {
        None => VerdictStatus::CertifiedFullRank {
            by: Certifier::Theorem1,
        },
        Some(d) => VerdictStatus::Unknown {
            reason: format!(
                "interval {}: N_k - Z_k = {} < {}",
                d.k,
                d.n_k - d.z_k,
                d.required
            ),
        },
    };
    SingularityVerdict {
        status,
        per_interval,
        columns: spec.basis_dim(),
        numeric_rank: None,
        eps_zero,
        eps_rank: crate::DEFAULT_EPS_RANK,
    }
}

/// Elimination condition for Model 2. `dm` must be an interleaved Model 2
/// matrix built on `spec` and `assignment`.
pub fn theorem2_check(
    dm: &DesignMatrix,
    spec: &SplineSpec,
    assignment: &IntervalAssignment,
    samples: &PrototypeSamples,
    tol: &Tolerances,
) -> (SingularityVerdict, EliminationCertificate) {
    assert_eq!(
        dm.model,
        Model::Two,
        "theorem2_check needs a Model 2 matrix"
    );
    assert!(
        dm.layout.interleaved,
        "theorem2_check needs an interleaved matrix"
    );

    let zeros = count_zero_samples(samples, assignment, tol.eps_zero);
    let mut per_interval = Vec::with_capacity(assignment.counts().len());
    let mut certificate = EliminationCertificate::default();
    let mut failure: Option<String> = None;

    let verdict = |status, per_interval| SingularityVerdict {
        status,
        per_interval,
        columns: dm.ncols(),
        numeric_rank: None,
        eps_zero: tol.eps_zero,
        eps_rank: tol.eps_rank,
    };

    if samples.is_constant(tol.eps_zero) {
        for (k, (&n_k, &z_k)) in assignment.counts().iter().zip(&zeros).enumerate() {
            let required = 2 * spec.block_width(k);
            per_interval.push(IntervalDiagnostic {
                k: k + 1,
                n_k,
                z_k,
                required,
                margin: n_k as i64 - required as i64,
                note: None,
            });
        }
        let status = VerdictStatus::CertifiedDeficient {
            by: Certifier::Theorem2,
            reason: "constant prototype".into(),
        };
        return (verdict(status, per_interval), certificate);
    }

    // reduced blocks are judged on the scale of the whole matrix
    let frobenius = dm.data.norm();
    let reduced_threshold = rank_threshold(frobenius, dm.nrows(), dm.ncols(), tol.eps_rank);

    for (k, rows) in dm.row_ranges.iter().enumerate() {
        let c = spec.block_width(k);
        let n_k = rows.len();
        let required = 2 * c;
        let mut diag = IntervalDiagnostic {
            k: k + 1,
            n_k,
            z_k: zeros[k],
            required,
            margin: n_k as i64 - required as i64,
            note: None,
        };
        let outcome = if n_k < required {
            Err("insufficient rows".to_string())
        } else {
            eliminate_interval(dm, k, rows.clone(), c, tol.eps_rank, reduced_threshold)
        };
        match outcome {
            Ok(elim) => certificate.intervals.push(elim),
            Err(note) => {
                if failure.is_none() {
                    failure = Some(format!("interval {}: {}", k + 1, note));
                }
                diag.note = Some(note);
            }
        }
        per_interval.push(diag);
    }

    let status = match failure {
        None => VerdictStatus::CertifiedFullRank {
            by: Certifier::Theorem2,
        },
        Some(reason) => VerdictStatus::Unknown { reason },
    };
    (verdict(status, per_interval), certificate)
}

fn eliminate_interval(
    dm: &DesignMatrix,
    k: usize,
    rows: Range<usize>,
    c: usize,
    eps_rank: f64,
    reduced_threshold: f64,
) -> std::result::Result<IntervalElimination, String> {
    let modulated = dm
        .layout
        .block(Family::Modulated, k)
        .expect("modulated block")
        .columns();
    let shift = dm
        .layout
        .block(Family::Shift, k)
        .expect("shift block")
        .columns();
    let n_top = rows.len() - c;
    let top = rows.start..rows.start + n_top;
    let bottom = rows.start + n_top..rows.end;

    let view = |r: &Range<usize>, cols: &Range<usize>| {
        dm.data
            .view((r.start, cols.start), (r.len(), cols.len()))
            .into_owned()
    };
    let b111 = view(&top, &modulated);
    let b121 = view(&top, &shift);
    let b211 = view(&bottom, &modulated);
    let b221 = view(&bottom, &shift);

    if numeric_rank(&b221, eps_rank) < c {
        return Err("singular bottom block".into());
    }
    // B221ᵀ Λ = B121ᵀ
    let lambda = b221
        .transpose()
        .lu()
        .solve(&b121.transpose())
        .ok_or_else(|| "singular bottom block".to_string())?;

    let rebuilt = lambda.transpose() * &b221;
    let scale = b121.amax();
    let err = (&rebuilt - &b121).amax();
    let rel = if scale > 0.0 { err / scale } else { err };
    if !rel.is_finite() || rel > LAMBDA_RECONSTRUCTION_TOL {
        return Err(format!(
            "inaccurate elimination (relative residual {rel:.3e})"
        ));
    }

    let reduced = b111 - lambda.transpose() * &b211;
    let reduced_sv = reduced.singular_values();
    let rank = reduced_sv
        .iter()
        .filter(|&&s| s > reduced_threshold)
        .count();
    if rank < c {
        return Err(format!("reduced block has rank {rank} < {c}"));
    }

    // The diagonal block factors as [[I, Λᵀ], [0, I]] · [[B̃, 0], [B211, B221]],
    // which bounds its smallest singular value from below. Exact-arithmetic
    // rank is not enough: the whole matrix must clear the rank threshold too.
    let s_red = reduced_sv.min();
    let s_bottom = b221.singular_values().min();
    let lambda_norm = lambda.singular_values().max();
    let b211_norm = b211.singular_values().max();
    let sigma_min_bound =
        1.0 / ((1.0 + lambda_norm) * (1.0 / s_red + (1.0 + b211_norm / s_red) / s_bottom));
    if sigma_min_bound.is_nan() || sigma_min_bound <= reduced_threshold {
        return Err(format!(
            "ill-conditioned elimination (σ_min bound {sigma_min_bound:.3e} ≤ {reduced_threshold:.3e})"
        ));
    }
    Ok(IntervalElimination {
        k: k + 1,
        bottom_rows: bottom,
        lambda,
        reconstruction_error: rel,
        residual_block_rank: rank,
        sigma_min_bound,
    })
}

/// Runs the model's sufficient condition on an assembled (non-interleaved or
/// interleaved) matrix, then, if undecided and `tol.certify` is set, settles
/// the question with [`numeric_rank`].
pub fn analyze_matrix(
    dm: &DesignMatrix,
    spec: &SplineSpec,
    assignment: &IntervalAssignment,
    samples: &PrototypeSamples,
    tol: &Tolerances,
) -> SingularityVerdict {
    let mut verdict = match dm.model {
        Model::One => {
            let mut v = theorem1_check(spec, assignment, samples, tol.eps_zero);
            v.eps_rank = tol.eps_rank;
            v
        }
        Model::Two => {
            let interleaved = interleave_blocks(dm);
            theorem2_check(&interleaved, spec, assignment, samples, tol).0
        }
    };
    if verdict.status.is_unknown() && tol.certify {
        let rank = numeric_rank(&dm.data, tol.eps_rank);
        verdict.numeric_rank = Some(rank);
        verdict.status = if rank == dm.ncols() {
            VerdictStatus::CertifiedFullRank {
                by: Certifier::Numeric,
            }
        } else {
            VerdictStatus::CertifiedDeficient {
                by: Certifier::Numeric,
                reason: format!("numeric rank {rank} < {} columns", dm.ncols()),
            }
        };
    }
    verdict
}

pub fn analyze(
    model: Model,
    spec: &SplineSpec,
    grid: &TimeGrid,
    samples: &PrototypeSamples,
    time_map: TimeMap,
    tol: &Tolerances,
) -> Result<SingularityVerdict> {
    let basis = SplineBasis::new(spec, grid, time_map)?;
    let dm = basis.build(model, samples)?;
    Ok(analyze_matrix(&dm, spec, basis.assignment(), samples, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_model1, build_model2};
    use crate::prototype::{sample, PrototypeFn};
    use crate::spline::assign_intervals;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn numeric_rank_examples() {
        assert_eq!(numeric_rank(&DMatrix::identity(3, 3), 1e-10), 3);
        assert_eq!(numeric_rank(&DMatrix::zeros(4, 3), 1e-10), 0);

        // α ≡ 1 duplicates the column families: 4 columns, rank 2
        let spec = SplineSpec::new(1, vec![0.0, 1.0]).unwrap();
        let grid = TimeGrid::new(vec![0.0, 0.2, 0.7, 1.0]).unwrap();
        let s = sample(&PrototypeFn::constant(1.0), &grid).unwrap();
        let b = build_model2(&spec, &grid, &s, TimeMap::IDENTITY).unwrap();
        assert_eq!(numeric_rank(&b.data, 1e-10), 2);
    }

    #[test]
    fn theorem1_thousand_sample_configuration() {
        // 1000 samples over 10 s, 5 intervals, degree 4, sin(16 t + τ)
        let grid = TimeGrid::uniform(0.0, 10.0, 1000).unwrap();
        let spec = SplineSpec::equidistant(4, 5, 0.0, 10.0).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        let s = sample(&PrototypeFn::sinusoid(16.0, 0.0), &grid).unwrap();
        let v = theorem1_check(&spec, &a, &s, 1e-12);
        assert_eq!(
            v.status,
            VerdictStatus::CertifiedFullRank {
                by: Certifier::Theorem1
            }
        );
        for d in &v.per_interval {
            assert_eq!(d.n_k, 200);
            assert!(d.z_k <= 65);
        }
    }

    #[test]
    fn theorem1_margins_from_counts() {
        // N_k = 200, Z_k = 65 everywhere: margins 130 then 131
        let n = 1000;
        let grid = TimeGrid::uniform(0.0, 10.0, n).unwrap();
        let spec = SplineSpec::equidistant(4, 5, 0.0, 10.0).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        let mut values = vec![1.0; n];
        for k in 0..5 {
            for v in values.iter_mut().skip(200 * k).take(65) {
                *v = 0.0;
            }
        }
        let s = sample(&PrototypeFn::Tabulated { values }, &grid).unwrap();
        let v = theorem1_check(&spec, &a, &s, 1e-12);
        let margins: Vec<i64> = v.per_interval.iter().map(|d| d.margin).collect();
        assert_eq!(margins, vec![130, 131, 131, 131, 131]);
        assert!(v.status.is_full_rank());
    }

    #[test]
    fn theorem1_unknown_cases() {
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.0]).unwrap();
        let spec = SplineSpec::new(3, vec![0.0, 1.0]).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        let s = sample(
            &PrototypeFn::Tabulated {
                values: vec![0.0, 1.0, 2.0],
            },
            &grid,
        )
        .unwrap();
        let v = theorem1_check(&spec, &a, &s, 1e-12);
        assert!(v.status.is_unknown());
        assert_eq!(v.per_interval[0].margin, -2);

        let grid = TimeGrid::uniform(0.0, 1.0, 20).unwrap();
        let spec = SplineSpec::equidistant(2, 3, 0.0, 1.0).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        let s = sample(&PrototypeFn::constant(0.0), &grid).unwrap();
        let v = theorem1_check(&spec, &a, &s, 1e-12);
        assert!(v.status.is_unknown());
        assert!(v.per_interval.iter().all(|d| d.margin < 0));
    }

    fn model2_check(
        spec: &SplineSpec,
        grid: &TimeGrid,
        proto: &PrototypeFn,
    ) -> (SingularityVerdict, EliminationCertificate, DesignMatrix) {
        let s = sample(proto, grid).unwrap();
        let a = assign_intervals(grid, spec).unwrap();
        let b = build_model2(spec, grid, &s, TimeMap::IDENTITY).unwrap();
        let m = interleave_blocks(&b);
        let (v, c) = theorem2_check(&m, spec, &a, &s, &tol());
        (v, c, b)
    }

    #[test]
    fn theorem2_constant_prototype() {
        let spec = SplineSpec::new(2, vec![0.0, 0.5, 1.0]).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 30).unwrap();
        let (v, _, _) = model2_check(&spec, &grid, &PrototypeFn::constant(3.0));
        assert_eq!(
            v.status,
            VerdictStatus::CertifiedDeficient {
                by: Certifier::Theorem2,
                reason: "constant prototype".into()
            }
        );
    }

    #[test]
    fn model2_thousand_sample_configuration() {
        // Same grid as the counting-condition case. The elimination cannot
        // certify it (the trailing rows of each interval are too close
        // together), but the matrix itself is numerically full rank.
        let grid = TimeGrid::uniform(0.0, 10.0, 1000).unwrap();
        let spec = SplineSpec::equidistant(4, 5, 0.0, 10.0).unwrap();
        let s = sample(&PrototypeFn::sinusoid(16.0, 0.3), &grid).unwrap();
        let v = analyze(
            Model::Two,
            &spec,
            &grid,
            &s,
            TimeMap::normalizing(&grid),
            &tol(),
        )
        .unwrap();
        assert!(v.per_interval.iter().all(|d| d.note.is_some()));
        assert_eq!(
            v.status,
            VerdictStatus::CertifiedFullRank {
                by: Certifier::Numeric
            }
        );
        assert_eq!(v.numeric_rank, Some(42));
    }

    #[test]
    fn theorem2_small_certified() {
        let spec = SplineSpec::new(1, vec![0.0, 1.0]).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        let proto = PrototypeFn::sinusoid(PI / 2.0, 0.3);
        let (v, cert, b) = model2_check(&spec, &grid, &proto);
        assert_eq!(
            v.status,
            VerdictStatus::CertifiedFullRank {
                by: Certifier::Theorem2
            }
        );
        assert_eq!(cert.intervals.len(), 1);
        assert_eq!(cert.intervals[0].residual_block_rank, 2);
        assert_eq!(cert.intervals[0].bottom_rows, 2..4);
        assert_eq!(numeric_rank(&b.data, 1e-10), 4);
    }

    #[test]
    fn theorem2_insufficient_rows() {
        let spec = SplineSpec::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0, 1.2, 1.5, 1.7, 2.0]).unwrap();
        let (v, _, _) = model2_check(&spec, &grid, &PrototypeFn::sinusoid(1.3, 0.2));
        assert!(v.status.is_unknown());
        assert_eq!(v.per_interval[0].n_k, 2);
        assert_eq!(v.per_interval[0].note.as_deref(), Some("insufficient rows"));
    }

    #[test]
    fn lambda_rebuilds_top_shift_rows() {
        let spec = SplineSpec::new(2, vec![0.0, 0.5, 1.0]).unwrap();
        let grid = TimeGrid::uniform(0.0, 1.0, 16).unwrap();
        let proto = PrototypeFn::sinusoid(9.0, 0.7);
        let s = sample(&proto, &grid).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        let m = interleave_blocks(&build_model2(&spec, &grid, &s, TimeMap::IDENTITY).unwrap());
        let (v, cert) = theorem2_check(&m, &spec, &a, &s, &tol());
        assert!(v.status.is_full_rank(), "{:?}", v.status);
        for e in &cert.intervals {
            let k = e.k - 1;
            let shift = m.layout.block(Family::Shift, k).unwrap().columns();
            let rows = &m.row_ranges[k];
            let c = shift.len();
            let top = m.data.view((rows.start, shift.start), (rows.len() - c, c));
            let bottom = m.data.view((e.bottom_rows.start, shift.start), (c, c));
            let rebuilt = e.lambda.transpose() * bottom;
            assert!((rebuilt - top).amax() <= 1e-8 * top.amax());
        }
    }

    #[test]
    fn analyze_falls_back_to_numeric_rank() {
        let grid = TimeGrid::uniform(0.0, 1.0, 12).unwrap();
        let spec = SplineSpec::equidistant(2, 2, 0.0, 1.0).unwrap();
        let s = sample(&PrototypeFn::constant(0.0), &grid).unwrap();
        let v = analyze(Model::One, &spec, &grid, &s, TimeMap::IDENTITY, &tol()).unwrap();
        assert!(matches!(
            v.status,
            VerdictStatus::CertifiedDeficient {
                by: Certifier::Numeric,
                ..
            }
        ));
        assert_eq!(v.numeric_rank, Some(0));

        let screen_only = Tolerances {
            certify: false,
            ..tol()
        };
        let v = analyze(
            Model::One,
            &spec,
            &grid,
            &s,
            TimeMap::IDENTITY,
            &screen_only,
        )
        .unwrap();
        assert!(v.status.is_unknown());
        assert_eq!(v.numeric_rank, None);
    }

    #[test]
    fn theorem1_is_one_sided() {
        // g vanishes on all of interval 2, but interval 3 rows still see the
        // interval 2 truncated power column, so the matrix keeps full rank
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]).unwrap();
        let spec = SplineSpec::new(1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        let values = vec![1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let s = sample(&PrototypeFn::Tabulated { values }, &grid).unwrap();
        let v = theorem1_check(&spec, &a, &s, 1e-12);
        assert!(v.status.is_unknown());
        assert_eq!(v.per_interval[1].margin, -1);
        let b = build_model1(&spec, &grid, &s, TimeMap::IDENTITY).unwrap();
        assert_eq!(numeric_rank(&b.data, 1e-10), 4);
    }
}
