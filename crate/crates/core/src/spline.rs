//! Fixed-knot polynomial splines in the truncated power basis.
//!
//! A spline of degree `m` on `n` subintervals is
//!
//! ```text
//! S(x, θ, t) = x_0 + Σ_j x_{1j} t^j + Σ_{l=2..n} Σ_j x_{lj} ((t - θ_{l-1})_+)^j
//! ```
//!
//! with `j = 1..m`, giving `m*n + 1` coefficients. Coefficients are always
//! stored in that summation order, and every matrix in this crate uses the
//! same column order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(t - knot)^j` for `t > knot`, exactly zero otherwise.
#[inline]
pub fn truncated_power(t: f64, knot: f64, j: u32) -> f64 {
    if t > knot {
        (t - knot).powi(j as i32)
    } else {
        0.0
    }
}

/// Degree and knot chain `θ_0 ≤ θ_1 ≤ … ≤ θ_n` of a spline.
///
/// Coincident knots are accepted here; the matrix builders reject the empty
/// intervals they produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    degree: usize,
    knots: Vec<f64>,
}

impl SplineSpec {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::ZeroDegree);
        }
        if knots.len() < 2 {
            return Err(Error::TooFewKnots(knots.len()));
        }
        for (index, &value) in knots.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if index > 0 && value < knots[index - 1] {
                return Err(Error::KnotsDecreasing { index, value });
            }
        }
        Ok(Self { degree, knots })
    }

    /// Equidistant knots `θ_k = start + k (end - start) / n`, with the end
    /// points set exactly so the spec binds to a grid spanning `[start, end]`.
    pub fn equidistant(degree: usize, n_intervals: usize, start: f64, end: f64) -> Result<Self> {
        if n_intervals == 0 {
            return Err(Error::TooFewKnots(1));
        }
        let width = (end - start) / n_intervals as f64;
        let mut knots: Vec<f64> = (0..=n_intervals)
            .map(|k| start + k as f64 * width)
            .collect();
        knots[0] = start;
        knots[n_intervals] = end;
        Self::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_intervals(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Interior knots `θ_1 … θ_{n-1}`, the ones carrying truncated powers.
    pub fn interior_knots(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    /// `m*n + 1`.
    pub fn basis_dim(&self) -> usize {
        self.degree * self.n_intervals() + 1
    }

    /// Column width of interval block `k` (0-based): `m + 1` for the first
    /// interval, `m` for the others.
    pub fn block_width(&self, k: usize) -> usize {
        if k == 0 {
            self.degree + 1
        } else {
            self.degree
        }
    }

    /// First column of interval block `k` (0-based) within one basis family.
    pub fn block_start(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            1 + k * self.degree
        }
    }

    /// Checks that the outer knots coincide with the first and last sample.
    pub fn check_bound(&self, grid: &TimeGrid) -> Result<()> {
        let (first, last) = (grid.first(), grid.last());
        let (start, end) = (self.knots[0], self.knots[self.knots.len() - 1]);
        if start != first || end != last {
            return Err(Error::Unbound {
                start,
                end,
                first,
                last,
            });
        }
        Ok(())
    }

    /// The same spline expressed in the coordinates of `map`.
    pub fn mapped(&self, map: &TimeMap) -> SplineSpec {
        SplineSpec {
            degree: self.degree,
            knots: self.knots.iter().map(|&k| map.apply(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineCoeffs(Vec<f64>);

impl SplineCoeffs {
    pub fn new(spec: &SplineSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.basis_dim() {
            return Err(Error::CoeffLength {
                expected: spec.basis_dim(),
                got: values.len(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(spec: &SplineSpec) -> Self {
        Self(vec![0.0; spec.basis_dim()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Evaluates the spline at `t`.
pub fn eval_spline(spec: &SplineSpec, coeffs: &[f64], t: f64) -> Result<f64> {
    if coeffs.len() != spec.basis_dim() {
        return Err(Error::CoeffLength {
            expected: spec.basis_dim(),
            got: coeffs.len(),
        });
    }
    let m = spec.degree();
    let mut acc = coeffs[0];
    for (j, c) in coeffs[1..=m].iter().enumerate() {
        acc += c * t.powi(j as i32 + 1);
    }
    for (l, &knot) in spec.interior_knots().iter().enumerate() {
        let base = 1 + (l + 1) * m;
        for j in 1..=m {
            acc += coeffs[base + j - 1] * truncated_power(t, knot, j as u32);
        }
    }
    Ok(acc)
}

/// Strictly increasing sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for (index, &value) in times.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index, value });
            }
            if index > 0 && value <= times[index - 1] {
                return Err(Error::NotIncreasing { index, value });
            }
        }
        Ok(Self(times))
    }

    /// `n` samples evenly spaced over `[start, end]`, end points exact.
    pub fn uniform(start: f64, end: f64, n: usize) -> Result<Self> {
        if n == 1 {
            return Self::new(vec![start]);
        }
        let step = (end - start) / (n - 1) as f64;
        let mut times: Vec<f64> = (0..n).map(|i| start + i as f64 * step).collect();
        if let Some(last) = times.last_mut() {
            *last = end;
        }
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.last() - self.first()
    }
}

/// Sample-to-interval map. Intervals are `[θ_0, θ_1]` and `(θ_{k-1}, θ_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAssignment {
    interval_of: Vec<usize>,
    counts: Vec<usize>,
}

impl IntervalAssignment {
    /// 0-based interval index of sample `i`.
    pub fn interval_of(&self, i: usize) -> usize {
        self.interval_of[i]
    }

    pub fn intervals(&self) -> &[usize] {
        &self.interval_of
    }

    /// `N_1 … N_n`.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Contiguous row range of each interval, valid because times are sorted.
    pub fn row_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.counts
            .iter()
            .map(|&c| {
                let r = start..start + c;
                start += c;
                r
            })
            .collect()
    }

    pub fn first_empty(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c == 0)
    }
}

pub fn assign_intervals(grid: &TimeGrid, spec: &SplineSpec) -> Result<IntervalAssignment> {
    let knots = spec.knots();
    let (start, end) = (knots[0], knots[knots.len() - 1]);
    let upper = &knots[1..];
    let mut counts = vec![0usize; spec.n_intervals()];
    let mut interval_of = Vec::with_capacity(grid.len());
    for (index, &time) in grid.times().iter().enumerate() {
        if time < start || time > end {
            return Err(Error::OutsideKnots {
                index,
                time,
                start,
                end,
            });
        }
        // number of right borders θ_1..θ_n strictly below t
        let k = upper.partition_point(|&knot| knot < time);
        interval_of.push(k);
        counts[k] += 1;
    }
    Ok(IntervalAssignment {
        interval_of,
        counts,
    })
}

/// Affine change of time coordinates `t ↦ (t - origin) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMap {
    pub origin: f64,
    pub scale: f64,
}

impl TimeMap {
    pub const IDENTITY: TimeMap = TimeMap {
        origin: 0.0,
        scale: 1.0,
    };

    /// Maps the grid span onto `[0, 1]`.
    pub fn normalizing(grid: &TimeGrid) -> Self {
        let scale = grid.duration();
        if scale > 0.0 {
            TimeMap {
                origin: grid.first(),
                scale,
            }
        } else {
            TimeMap {
                origin: grid.first(),
                scale: 1.0,
            }
        }
    }

    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        (t - self.origin) / self.scale
    }
}
