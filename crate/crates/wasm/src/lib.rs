//! Browser bindings for the static demo page in `www/`.
//!
//! Three operations are exported: synthesize a signal, analyze the design
//! matrix for one `(ω, τ)` cell, and sweep a grid to get an SSE heat map plus
//! the best fit. Results cross the boundary as JSON strings. The plain Rust
//! functions below do the work, so they are testable off the browser; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wasm_bindgen::prelude::*;

use splinefit::{
    analyze, model_values, FitOptions, Fitter, GridConfig, Model, PrototypeFn, Signal, SplineSpec,
    TimeGrid, TimeMap, Tolerances,
};

fn model(m: u8) -> Result<Model, String> {
    match m {
        1 => Ok(Model::One),
        2 => Ok(Model::Two),
        _ => Err(format!("model must be 1 or 2, got {m}")),
    }
}

fn setup(t: &[f64], degree: usize, intervals: usize) -> Result<(TimeGrid, SplineSpec), String> {
    let grid = TimeGrid::new(t.to_vec()).map_err(|e| e.to_string())?;
    let spec = SplineSpec::equidistant(degree, intervals, grid.first(), grid.last())
        .map_err(|e| e.to_string())?;
    Ok((grid, spec))
}

/// Samples of a random spline (coefficients in `[-1, 1]`) times the
/// sinusoid, plus uniform noise of the given amplitude, on a uniform grid
/// over `[0, t_end]`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize(
    model_id: u8,
    degree: usize,
    intervals: usize,
    samples: usize,
    t_end: f64,
    omega: f64,
    tau: f64,
    seed: u32,
    noise: f64,
) -> Result<Vec<f64>, String> {
    let model = model(model_id)?;
    let grid = TimeGrid::uniform(0.0, t_end, samples).map_err(|e| e.to_string())?;
    let spec = SplineSpec::equidistant(degree, intervals, 0.0, t_end).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.into());
    let mut draw = || -> Vec<f64> {
        (0..spec.basis_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect()
    };
    let x1 = draw();
    let x2 = (model == Model::Two).then(&mut draw);
    let mut y = model_values(
        &spec,
        TimeMap::normalizing(&grid),
        omega,
        tau,
        &x1,
        x2.as_deref(),
        grid.times(),
    );
    if noise > 0.0 {
        for v in &mut y {
            *v += rng.random_range(-noise..=noise);
        }
    }
    Ok(y)
}

/// Singularity verdict for one cell, as JSON.
pub fn analyze_cell(
    t: &[f64],
    model_id: u8,
    degree: usize,
    intervals: usize,
    omega: f64,
    tau: f64,
) -> Result<String, String> {
    let model = model(model_id)?;
    let (grid, spec) = setup(t, degree, intervals)?;
    let samples =
        splinefit::sample(&PrototypeFn::sinusoid(omega, tau), &grid).map_err(|e| e.to_string())?;
    let verdict = analyze(
        model,
        &spec,
        &grid,
        &samples,
        TimeMap::normalizing(&grid),
        &Tolerances::default(),
    )
    .map_err(|e| e.to_string())?;
    serde_json::to_string(&verdict).map_err(|e| e.to_string())
}

/// Grid sweep: `sse` is row-major with one row per ω. `fitted` holds the
/// best model evaluated on `t`.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    t: &[f64],
    y: &[f64],
    model_id: u8,
    degree: usize,
    intervals: usize,
    omega_range: [f64; 3],
    tau_range: [f64; 3],
) -> Result<String, String> {
    let model = model(model_id)?;
    let (grid, spec) = setup(t, degree, intervals)?;
    let signal = Signal::new(grid, y.to_vec()).map_err(|e| e.to_string())?;
    let cfg = GridConfig {
        omega_start: omega_range[0],
        omega_end: omega_range[1],
        omega_step: omega_range[2],
        tau_start: tau_range[0],
        tau_end: tau_range[1],
        tau_step: tau_range[2],
    };
    let fitter =
        Fitter::new(model, signal, &spec, FitOptions::default()).map_err(|e| e.to_string())?;
    let result = fitter.grid_search(&cfg).map_err(|e| e.to_string())?;
    let best = &result.best;
    Ok(json!({
        "omegas": cfg.omegas(),
        "taus": cfg.taus(),
        "sse": result.table.iter().map(|c| c.sse).collect::<Vec<_>>(),
        "best": {
            "omega": best.omega,
            "tau": best.tau,
            "sse": best.sse,
            "method": best.method().as_str(),
            "index": result.best_index,
        },
        "ties": result.ties,
        "fitted": best.predict(t),
    })
    .to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn synth_signal(
    model_id: u8,
    degree: usize,
    intervals: usize,
    samples: usize,
    t_end: f64,
    omega: f64,
    tau: f64,
    seed: u32,
    noise: f64,
) -> Result<Vec<f64>, JsError> {
    synthesize(
        model_id, degree, intervals, samples, t_end, omega, tau, seed, noise,
    )
    .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze_json(
    t: &[f64],
    model_id: u8,
    degree: usize,
    intervals: usize,
    omega: f64,
    tau: f64,
) -> Result<String, JsError> {
    analyze_cell(t, model_id, degree, intervals, omega, tau).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn sweep_json(
    t: &[f64],
    y: &[f64],
    model_id: u8,
    degree: usize,
    intervals: usize,
    omega_start: f64,
    omega_end: f64,
    omega_step: f64,
    tau_start: f64,
    tau_end: f64,
    tau_step: f64,
) -> Result<String, JsError> {
    sweep(
        t,
        y,
        model_id,
        degree,
        intervals,
        [omega_start, omega_end, omega_step],
        [tau_start, tau_end, tau_step],
    )
    .map_err(|e| JsError::new(&e))
}
