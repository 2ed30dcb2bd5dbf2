//! Prototype functions `g(t)` and their zeros on a sampling grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{IntervalAssignment, TimeGrid};

/// Default relative threshold below which a prototype sample counts as zero.
pub const DEFAULT_EPS_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrototypeFn {
    /// `sin(omega * t + tau)`.
    Sinusoid {
        omega: f64,
        tau: f64,
    },
    Constant {
        value: f64,
    },
    /// Values already aligned with a grid.
    Tabulated {
        values: Vec<f64>,
    },
}

impl PrototypeFn {
    pub fn sinusoid(omega: f64, tau: f64) -> Self {
        PrototypeFn::Sinusoid { omega, tau }
    }

    pub fn constant(value: f64) -> Self {
        PrototypeFn::Constant { value }
    }
}

/// `α_i = g(t_i)` for every sample of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSamples {
    alpha: Vec<f64>,
    source: PrototypeFn,
}

impl PrototypeSamples {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn source(&self) -> &PrototypeFn {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// True when every sample equals the first one within
    /// `eps_zero * max|α|`. An all-zero prototype is constant too.
    pub fn is_constant(&self, eps_zero: f64) -> bool {
        let tol = eps_zero * self.max_abs();
        let first = self.alpha[0];
        self.alpha.iter().all(|a| (a - first).abs() <= tol)
    }
}

pub fn sample(proto: &PrototypeFn, grid: &TimeGrid) -> Result<PrototypeSamples> {
    let alpha = match proto {
        PrototypeFn::Sinusoid { omega, tau } => grid
            .times()
            .iter()
            .map(|&t| (omega * t + tau).sin())
            .collect(),
        PrototypeFn::Constant { value } => vec![*value; grid.len()],
        PrototypeFn::Tabulated { values } => {
            if values.len() != grid.len() {
                return Err(Error::TabulatedLength {
                    expected: grid.len(),
                    got: values.len(),
                });
            }
            values.clone()
        }
    };
    Ok(PrototypeSamples {
        alpha,
        source: proto.clone(),
    })
}

/// `Z_k`: samples in interval `k` with `|α_i| ≤ eps_zero · max|α|`.
/// An identically zero prototype gives `Z_k = N_k`.
pub fn count_zero_samples(
    samples: &PrototypeSamples,
    assignment: &IntervalAssignment,
    eps_zero: f64,
) -> Vec<usize> {
    let tol = eps_zero * samples.max_abs();
    let mut zeros = vec![0usize; assignment.counts().len()];
    for (i, &a) in samples.alpha().iter().enumerate() {
        if a.abs() <= tol {
            zeros[assignment.interval_of(i)] += 1;
        }
    }
    zeros
}

/// `⌈2·ω·D⌉ + 1`: a-priori bound on zero crossings of a sinusoid of
/// frequency `omega` (Hz) over a window of `duration` seconds.
pub fn sinusoid_zero_bound(omega: f64, duration: f64) -> usize {
    (2.0 * omega * duration).ceil() as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::{assign_intervals, SplineSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup() -> (TimeGrid, IntervalAssignment) {
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        let spec = SplineSpec::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let a = assign_intervals(&grid, &spec).unwrap();
        (grid, a)
    }

    #[test]
    fn sampling() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let s = sample(&PrototypeFn::constant(1.0), &grid).unwrap();
        assert_eq!(s.alpha(), &[1.0, 1.0, 1.0]);

        let s = sample(&PrototypeFn::sinusoid(PI, 0.0), &grid).unwrap();
        assert_eq!(s.alpha()[0], 0.0);
        assert!(s.alpha()[1].abs() < 1e-15 && s.alpha()[2].abs() < 1e-15);

        let grid = TimeGrid::new(vec![1.0]).unwrap();
        let s = sample(&PrototypeFn::sinusoid(PI / 2.0, 0.0), &grid).unwrap();
        assert_eq!(s.alpha(), &[1.0]);
    }

    #[test]
    fn tabulated_length_checked() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let t = PrototypeFn::Tabulated {
            values: vec![1.0, 2.0],
        };
        assert_eq!(
            sample(&t, &grid),
            Err(Error::TabulatedLength {
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn zero_counts() {
        let (grid, a) = setup();
        let zero = sample(&PrototypeFn::constant(0.0), &grid).unwrap();
        assert_eq!(count_zero_samples(&zero, &a, 1e-12), vec![3, 2]);
        let five = sample(&PrototypeFn::constant(5.0), &grid).unwrap();
        assert_eq!(count_zero_samples(&five, &a, 1e-12), vec![0, 0]);

        // sin(πt) on (0, .5, 1, 1.5, 2): |α| = (0, 1, ~1e-16, 1, ~2e-16),
        // so zeros at t = 0, 1 (interval 1) and t = 2 (interval 2)
        let sine = sample(&PrototypeFn::sinusoid(PI, 0.0), &grid).unwrap();
        let expected: Vec<usize> = {
            let mut z = vec![0, 0];
            for (i, t) in grid.times().iter().enumerate() {
                if (PI * t).sin().abs() <= 1e-9 {
                    z[a.interval_of(i)] += 1;
                }
            }
            z
        };
        assert_eq!(expected, vec![2, 1]);
        assert_eq!(count_zero_samples(&sine, &a, 1e-9), expected);
    }

    #[test]
    fn zero_bound() {
        assert_eq!(sinusoid_zero_bound(16.0, 2.0), 65);
        assert_eq!(sinusoid_zero_bound(0.0, 10.0), 1);
        assert_eq!(sinusoid_zero_bound(1.0, 1.0), 3);
    }

    #[test]
    fn constant_detection() {
        let (grid, _) = setup();
        assert!(sample(&PrototypeFn::constant(3.0), &grid)
            .unwrap()
            .is_constant(1e-12));
        assert!(!sample(&PrototypeFn::sinusoid(1.0, 0.2), &grid)
            .unwrap()
            .is_constant(1e-12));
    }

    proptest! {
        #[test]
        fn exact_zeros_within_bound(
            omega in 0.1f64..20.0,
            tau in 0.0f64..6.3,
            n_samples in 2usize..400,
            duration in 0.5f64..10.0,
        ) {
            let grid = TimeGrid::uniform(0.0, duration, n_samples).unwrap();
            let spec = SplineSpec::equidistant(2, 3, 0.0, duration).unwrap();
            let a = assign_intervals(&grid, &spec).unwrap();
            let s = sample(&PrototypeFn::sinusoid(omega, tau), &grid).unwrap();
            let z: usize = count_zero_samples(&s, &a, 0.0).iter().sum();
            // the bound is stated in Hz, so it also covers ω in rad/s
            prop_assert!(z <= sinusoid_zero_bound(omega, duration));
        }

        #[test]
        fn monotone_in_threshold(
            omega in 0.1f64..20.0,
            tau in 0.0f64..6.3,
            e1 in 0.0f64..0.5,
            e2 in 0.0f64..0.5,
        ) {
            let (grid, a) = setup();
            let s = sample(&PrototypeFn::sinusoid(omega, tau), &grid).unwrap();
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let zl = count_zero_samples(&s, &a, lo);
            let zh = count_zero_samples(&s, &a, hi);
            for (l, h) in zl.iter().zip(&zh) {
                prop_assert!(l <= h);
            }
        }

        #[test]
        fn constant_prototype_all_or_nothing(c in -5.0f64..5.0) {
            let (grid, a) = setup();
            let s = sample(&PrototypeFn::constant(c), &grid).unwrap();
            let z = count_zero_samples(&s, &a, 1e-12);
            if c == 0.0 {
                prop_assert_eq!(z, a.counts().to_vec());
            } else {
                prop_assert_eq!(z, vec![0, 0]);
            }
        }
    }
}
