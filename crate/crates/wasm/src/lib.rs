//! Browser bindings for the demo page in `www/`. Each export returns a JSON
//! string; the plain functions behind them are usable (and tested) natively.

use epn_core::exact::rational_from_i64;
use epn_core::hamiltonians::{build_toy7, ModelFamily};
use epn_core::matrix::Number;
use epn_core::metric::{corridor_sweep, KappaPolicy};
use epn_core::spectral::{eigen, DEFAULT_TOL};
use epn_core::symbols::{enumerate_decompositions, Decomposition};
use epn_core::Result;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Toy-model spectrum on `steps` couplings `g ∈ [0, g_max]`, continued past
/// the EP at `g = 2`.
pub fn toy_spectrum_curve(g_max: f64, steps: usize) -> Result<Value> {
    let steps = steps.clamp(2, 2000);
    let mut points = Vec::with_capacity(steps);
    for i in 0..steps {
        let g = g_max * i as f64 / (steps - 1) as f64;
        let h = if g <= 2.0 {
            build_toy7(&Number::Float(g))?.into_matrix()
        } else {
            ModelFamily::toy7().at_native(g)?
        };
        let r = eigen(&h, DEFAULT_TOL)?;
        points.push(json!({
            "g": g,
            "re": r.eigenvalues.iter().map(|e| e.re).collect::<Vec<_>>(),
            "im": r.eigenvalues.iter().map(|e| e.im).collect::<Vec<_>>(),
            "is_real": r.is_real,
        }));
    }
    Ok(Value::Array(points))
}

/// All decompositions of `D(n)` with their component diagonals.
pub fn decomposition_list(n: usize) -> Result<Value> {
    let decs = enumerate_decompositions(n, false)?;
    Ok(Value::Array(
        decs.iter()
            .map(|d| {
                json!({
                    "label": d.label(),
                    "K": d.k(),
                    "partition": d.partition_label(),
                    "components": d.components().iter().map(|c| json!({
                        "n": c.length(),
                        "c": c.integer_scale(),
                        "diagonal": c.integer_diagonal(),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect(),
    ))
}

/// Minimal gap and smallest metric eigenvalue along `t ∈ [0, t_max]` for the
/// direct sum labelled `label`.
pub fn corridor(label: &str, t_max: f64, steps: usize) -> Result<Value> {
    let dec = Decomposition::parse(label)?;
    let fam = ModelFamily::direct_sum(dec, rational_from_i64(0));
    let steps = steps.clamp(2, 2000);
    let grid: Vec<f64> = (0..steps).map(|i| t_max * i as f64 / (steps - 1) as f64).collect();
    let rows = corridor_sweep(&fam, &grid, &KappaPolicy::Unit)?;
    let num = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
    Ok(Value::Array(
        rows.iter()
            .map(|r| json!({"t": r.t, "min_gap": num(r.min_gap), "theta_min_eig": num(r.theta_min_eig), "is_real": r.is_real}))
            .collect(),
    ))
}

fn to_js(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = toySpectrum)]
pub fn toy_spectrum(g_max: f64, steps: usize) -> std::result::Result<String, JsError> {
    to_js(toy_spectrum_curve(g_max, steps))
}

#[wasm_bindgen(js_name = decompositions)]
pub fn decompositions(n: usize) -> std::result::Result<String, JsError> {
    to_js(decomposition_list(n))
}

#[wasm_bindgen(js_name = corridorSweep)]
pub fn corridor_sweep_js(label: &str, t_max: f64, steps: usize) -> std::result::Result<String, JsError> {
    to_js(corridor(label, t_max, steps))
}
