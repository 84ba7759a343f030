//! Browser bindings: three small experiments returning JSON strings.

use cocycle_lab::arithmetic::{check_dc_tilde, dist_z};
use cocycle_lab::cocycle::{
    corollary_frame, generator_distance, normal_form_cocycle, second_iterate_closed_form,
    NormalFormParams,
};
use cocycle_lab::reduction::reduce_second_iterate_once;
use cocycle_lab::renorm::{two_periodic_pipeline, PipelineConfig};
use num_complex::Complex64;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn check_alpha(alpha: f64) -> Result<(), String> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(format!("α must lie in (0, 1), got {alpha}"))
    }
}

/// Margins `|kα − 1/2|_Z − γ⁻¹k^{−τ}` for `k = 1..=k_max` and the worst one.
pub fn dc_tilde_json(alpha: f64, gamma: f64, tau: f64, k_max: u32) -> Result<String, String> {
    check_alpha(alpha)?;
    if gamma.is_nan() || gamma <= 0.0 || k_max == 0 || k_max > 100_000 {
        return Err("need γ > 0 and 1 ≤ K ≤ 100000".into());
    }
    let report = check_dc_tilde(alpha, gamma, tau, k_max);
    let margins: Vec<f64> = (1..=k_max)
        .map(|k| {
            let k = k as f64;
            dist_z(k * alpha - 0.5) - 1.0 / (gamma * k.powf(tau))
        })
        .collect();
    Ok(json!({ "report": report, "margins": margins }).to_string())
}

/// Direct versus closed-form second iterate and one explicit reduction step.
pub fn corollary_json(alpha: f64, z_re: f64, z_im: f64) -> Result<String, String> {
    check_alpha(alpha)?;
    let nf = NormalFormParams {
        alpha_n: alpha,
        z_n: Complex64::new(z_re, z_im),
    };
    let direct = normal_form_cocycle(nf)
        .second_iterate()
        .conjugate(&corollary_frame())
        .map_err(|e| e.to_string())?;
    let closed = second_iterate_closed_form(nf);
    let red = reduce_second_iterate_once(nf).map_err(|e| e.to_string())?;
    let z2 = nf.z_n.norm_sqr();
    Ok(json!({
        "so3_distance": generator_distance(&direct, &closed, 256),
        "input_size": red.input_size,
        "reduced_size": red.size,
        "size_over_z_squared": if z2 > 0.0 { red.size / z2 } else { 0.0 },
        "outside_window": red.outside_window,
    })
    .to_string())
}

/// Distances to constants along the two-periodic pipeline.
pub fn pipeline_json(alpha: f64, z_re: f64, z_im: f64, steps: usize) -> Result<String, String> {
    check_alpha(alpha)?;
    let c = normal_form_cocycle(NormalFormParams {
        alpha_n: alpha,
        z_n: Complex64::new(z_re, z_im),
    });
    let cfg = PipelineConfig {
        kam_steps: steps.min(6),
        ..PipelineConfig::default()
    };
    let out = two_periodic_pipeline(&c, &cfg).map_err(|e| e.to_string())?;
    Ok(json!({
        "distances": out.trace.distances.iter().map(|r| r.distance_to_constant).collect::<Vec<_>>(),
        "nf_periodicity_defect": out.trace.nf_periodicity_defect,
        "partial_quotient": out.trace.partial_quotient,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn dc_tilde_scan(alpha: f64, gamma: f64, tau: f64, k_max: u32) -> Result<String, JsError> {
    dc_tilde_json(alpha, gamma, tau, k_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn corollary_check(alpha: f64, z_re: f64, z_im: f64) -> Result<String, JsError> {
    corollary_json(alpha, z_re, z_im).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pipeline_decay(alpha: f64, z_re: f64, z_im: f64, steps: usize) -> Result<String, JsError> {
    pipeline_json(alpha, z_re, z_im, steps).map_err(|e| JsError::new(&e))
}
