//! Least-squares design matrices for the two signal models.
//!
//! Model 1 approximates `y ≈ S(x, t)·g(t)`; its matrix `B` has entry
//! `α_i · φ_c(t_i)` where `φ_c` runs over the truncated power basis.
//! Model 2 adds an unmodulated spline, `y ≈ S(x₁, t)·g(t) + S(x₂, t)`, with
//! matrix `[B₁ B₂]`: `B₁` is the Model 1 matrix and `B₂` the plain basis.
//!
//! Rows follow the (sorted) sample order, so every interval owns a
//! contiguous row range. Because `(t - θ_{l-1})_+ = 0` for `t ≤ θ_{l-1}`,
//! grouping columns by interval gives a block lower triangular matrix.

use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prototype::PrototypeSamples;
use crate::spline::{assign_intervals, IntervalAssignment, SplineSpec, TimeGrid, TimeMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Model {
    /// Modulated spline only.
    One,
    /// Modulated spline plus a vertical-shift spline.
    Two,
}

impl Model {
    pub fn families(self) -> usize {
        match self {
            Model::One => 1,
            Model::Two => 2,
        }
    }
}

impl From<Model> for u8 {
    fn from(m: Model) -> u8 {
        match m {
            Model::One => 1,
            Model::Two => 2,
        }
    }
}

impl TryFrom<u8> for Model {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Model::One),
            2 => Ok(Model::Two),
            other => Err(format!("model must be 1 or 2, got {other}")),
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Modulated,
    Shift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnBlock {
    pub family: Family,
    /// 0-based interval index.
    pub interval: usize,
    /// First column of the block in the matrix it describes.
    pub start: usize,
    pub width: usize,
}

impl ColumnBlock {
    pub fn columns(&self) -> Range<usize> {
        self.start..self.start + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnLayout {
    pub blocks: Vec<ColumnBlock>,
    /// `source[c]` is the column of the assembled (Eq.-order) matrix now
    /// stored at column `c`. Identity unless the matrix was interleaved.
    pub source: Vec<usize>,
    pub interleaved: bool,
}

impl ColumnLayout {
    fn assembled(spec: &SplineSpec, model: Model) -> Self {
        let dim = spec.basis_dim();
        let mut blocks = Vec::new();
        for (f, family) in [Family::Modulated, Family::Shift]
            .into_iter()
            .take(model.families())
            .enumerate()
        {
            for k in 0..spec.n_intervals() {
                blocks.push(ColumnBlock {
                    family,
                    interval: k,
                    start: f * dim + spec.block_start(k),
                    width: spec.block_width(k),
                });
            }
        }
        let width = dim * model.families();
        ColumnLayout {
            blocks,
            source: (0..width).collect(),
            interleaved: false,
        }
    }

    pub fn width(&self) -> usize {
        self.blocks.iter().map(|b| b.width).sum()
    }

    pub fn block(&self, family: Family, interval: usize) -> Option<&ColumnBlock> {
        self.blocks
            .iter()
            .find(|b| b.family == family && b.interval == interval)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub data: DMatrix<f64>,
    pub layout: ColumnLayout,
    pub row_ranges: Vec<Range<usize>>,
    pub model: Model,
    pub time_map: TimeMap,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    /// Reorders a coefficient vector given in this matrix's column order
    /// back to the assembled order `(x₁, x₂)`.
    pub fn to_assembled_order(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; coeffs.len()];
        for (c, &src) in self.layout.source.iter().enumerate() {
            out[src] = coeffs[c];
        }
        out
    }

    /// Row-major text dump, one row per line, `%.17g` formatting.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for row in self.data.row_iter() {
            let line: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// C's `%.17g`.
pub fn format_g17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..17).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The unmodulated truncated power basis on a bound grid, plus the interval
/// assignment. Both are independent of the prototype, so a frequency/phase
/// sweep builds this once and rescales rows per cell.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    spec: SplineSpec,
    assignment: IntervalAssignment,
    time_map: TimeMap,
    values: DMatrix<f64>,
}

impl SplineBasis {
    pub fn new(spec: &SplineSpec, grid: &TimeGrid, time_map: TimeMap) -> Result<Self> {
        spec.check_bound(grid)?;
        let assignment = assign_intervals(grid, spec)?;
        if let Some(k) = assignment.first_empty() {
            return Err(Error::EmptyInterval(k + 1));
        }
        let m = spec.degree();
        let dim = spec.basis_dim();
        let interior = spec.interior_knots();
        let mut values = DMatrix::zeros(grid.len(), dim);
        for (i, &t) in grid.times().iter().enumerate() {
            let u = time_map.apply(t);
            values[(i, 0)] = 1.0;
            for j in 1..=m {
                values[(i, j)] = u.powi(j as i32);
            }
            for (l, &knot) in interior.iter().enumerate() {
                // decide positivity in raw time so rows on a knot stay exactly zero
                if t > knot {
                    let beta = (t - knot) / time_map.scale;
                    let base = 1 + (l + 1) * m;
                    for j in 1..=m {
                        values[(i, base + j - 1)] = beta.powi(j as i32);
                    }
                }
            }
        }
        Ok(Self {
            spec: spec.clone(),
            assignment,
            time_map,
            values,
        })
    }

    pub fn spec(&self) -> &SplineSpec {
        &self.spec
    }

    pub fn assignment(&self) -> &IntervalAssignment {
        &self.assignment
    }

    pub fn time_map(&self) -> TimeMap {
        self.time_map
    }

    /// Unmodulated basis values (`B₂`).
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    fn check_samples(&self, samples: &PrototypeSamples) -> Result<()> {
        if samples.len() != self.values.nrows() {
            return Err(Error::SamplesLength {
                expected: self.values.nrows(),
                got: samples.len(),
            });
        }
        Ok(())
    }

    fn modulated(&self, samples: &PrototypeSamples) -> DMatrix<f64> {
        let mut b = self.values.clone();
        for (mut row, &a) in b.row_iter_mut().zip(samples.alpha()) {
            row *= a;
        }
        b
    }

    pub fn model1(&self, samples: &PrototypeSamples) -> Result<DesignMatrix> {
        self.check_samples(samples)?;
        Ok(DesignMatrix {
            data: self.modulated(samples),
            layout: ColumnLayout::assembled(&self.spec, Model::One),
            row_ranges: self.assignment.row_ranges(),
            model: Model::One,
            time_map: self.time_map,
        })
    }

    pub fn model2(&self, samples: &PrototypeSamples) -> Result<DesignMatrix> {
        self.check_samples(samples)?;
        let dim = self.spec.basis_dim();
        let n = self.values.nrows();
        let mut data = DMatrix::zeros(n, 2 * dim);
        data.columns_mut(0, dim).copy_from(&self.modulated(samples));
        data.columns_mut(dim, dim).copy_from(&self.values);
        Ok(DesignMatrix {
            data,
            layout: ColumnLayout::assembled(&self.spec, Model::Two),
            row_ranges: self.assignment.row_ranges(),
            model: Model::Two,
            time_map: self.time_map,
        })
    }

    pub fn build(&self, model: Model, samples: &PrototypeSamples) -> Result<DesignMatrix> {
        match model {
            Model::One => self.model1(samples),
            Model::Two => self.model2(samples),
        }
    }
}

pub fn build_model1(
    spec: &SplineSpec,
    grid: &TimeGrid,
    samples: &PrototypeSamples,
    time_map: TimeMap,
) -> Result<DesignMatrix> {
    SplineBasis::new(spec, grid, time_map)?.model1(samples)
}

pub fn build_model2(
    spec: &SplineSpec,
    grid: &TimeGrid,
    samples: &PrototypeSamples,
    time_map: TimeMap,
) -> Result<DesignMatrix> {
    SplineBasis::new(spec, grid, time_map)?.model2(samples)
}

/// Permutes columns into interval-major order `[B^{1,1}, B^{2,1}, B^{1,2},
/// B^{2,2}, …]`, exposing the block lower triangular structure. Model 1
/// matrices are already in that order.
pub fn interleave_blocks(dm: &DesignMatrix) -> DesignMatrix {
    if dm.layout.interleaved || dm.model == Model::One {
        let mut out = dm.clone();
        out.layout.interleaved = true;
        return out;
    }
    let n_intervals = dm.row_ranges.len();
    let mut order: Vec<ColumnBlock> = Vec::with_capacity(dm.layout.blocks.len());
    for k in 0..n_intervals {
        for family in [Family::Modulated, Family::Shift] {
            if let Some(b) = dm.layout.block(family, k) {
                order.push(*b);
            }
        }
    }
    let mut source = Vec::with_capacity(dm.ncols());
    let mut blocks = Vec::with_capacity(order.len());
    for b in &order {
        blocks.push(ColumnBlock {
            start: source.len(),
            ..*b
        });
        source.extend(b.columns().map(|c| dm.layout.source[c]));
    }
    let data = dm.data.select_columns(
        order
            .iter()
            .flat_map(|b| b.columns())
            .collect::<Vec<_>>()
            .iter(),
    );
    DesignMatrix {
        data,
        layout: ColumnLayout {
            blocks,
            source,
            interleaved: true,
        },
        row_ranges: dm.row_ranges.clone(),
        model: dm.model,
        time_map: dm.time_map,
    }
}
