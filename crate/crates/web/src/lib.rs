//! Browser bindings for the coordinated beamforming simulator.
//!
//! Three interactive entry points, all returning the same CSV wire formats
//! the command line produces, so the page's plotting code and any script
//! consuming `cbsim` output parse identical bytes:
//!
//! - [`bounds_csv`]: closed-form two-cell coordination bounds over an SNR
//!   grid (explore `alpha` / `beta`).
//! - [`sweep_csv`]: a full Monte Carlo sweep from a config document.
//! - [`oci_samples`]: squared amplitudes of one OCI element for histogram
//!   views of the Nakagami/Gamma interference model.

use wasm_bindgen::prelude::*;

use cbsim_core::config::parse_config;
use cbsim_core::model::sample_oci;
use cbsim_core::report::{emit_bounds_csv, emit_csv};
use cbsim_core::simulate::run_sweep;

fn to_js_error(err: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&err.to_string())
}

/// Closed-form two-cell bounds (`snr_db,full_reuse,orthogonal,ia,jt`) over
/// the given SNR grid.
#[wasm_bindgen]
pub fn bounds_csv(snr_db: Vec<f64>, alpha: f64, beta: f64) -> Result<String, JsValue> {
    emit_bounds_csv(&snr_db, alpha, beta).map_err(to_js_error)
}

/// Parse a scenario config document, run the sweep single-threaded, and
/// return the result CSV. `seed` overrides the config's master seed.
#[wasm_bindgen]
pub fn sweep_csv(config_text: &str, seed: u32) -> Result<String, JsValue> {
    let (cfg, mut scenario, schemes) = parse_config(config_text).map_err(to_js_error)?;
    scenario.master_seed = u64::from(seed);
    let table = run_sweep(&cfg, &scenario, &schemes, Some(1)).map_err(to_js_error)?;
    Ok(emit_csv(&table))
}

/// Draw `count` squared amplitudes of a single OCI element under the
/// Nakagami-m model with `E{|g|^2} = beta * P / n_rx`.
#[wasm_bindgen]
pub fn oci_samples(
    m: f64,
    beta: f64,
    power: f64,
    n_rx: usize,
    count: usize,
    seed: u32,
) -> Result<Vec<f64>, JsValue> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(u64::from(seed));
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let g = sample_oci(n_rx, beta, power, m, &mut rng).map_err(to_js_error)?;
        out.push(g[0].norm_sqr());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_csv_has_one_row_per_point() {
        let csv = bounds_csv(vec![0.0, 10.0, 20.0], 1.0, 0.25).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn sweep_csv_runs_a_small_config() {
        let config = "\
B = 2
nT = 2
nR = 2
alpha = 1.0
beta = 0.1
np = 10
snr_db = 0,10
trials = 2
schemes = full_reuse,wmmse
";
        let csv = sweep_csv(config, 42).unwrap();
        // header + 2 schemes x 2 points x (2 trials + mean + stderr)
        assert_eq!(csv.lines().count(), 1 + 2 * 2 * 4);
        let again = sweep_csv(config, 42).unwrap();
        assert_eq!(csv, again);
    }

    #[test]
    fn oci_samples_have_the_model_mean() {
        let samples = oci_samples(2.0, 0.25, 1.0, 4, 50_000, 7).unwrap();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let expected = 0.25 / 4.0;
        assert!((mean - expected).abs() / expected < 0.05, "mean {mean}");
    }
}
