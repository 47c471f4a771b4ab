//! Two-part reconfigurable design with explicit stream adaptation.
//!
//! Receive combiners come from the system-wide MMSE metric. Each precoder
//! column mixes the cooperative weighted-MMSE-optimal direction with the
//! egoistic own-link singular direction, `lambda * v_mmse + (1 - lambda) *
//! v_ego`, renormalised; the MMSE-implied per-stream powers are kept. After
//! the iteration converges, streams whose design-channel SINR falls below a
//! threshold are dropped and the design is re-run once with the reduced
//! stream counts, so the scheme outputs its stream numbers explicitly.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::linalg::{dominant_right_singular_vectors, CMat, CVec};
use crate::{Error, Result};

use super::wmmse::mse_weights;
use super::{
    design_stream_sinr, design_sum_rate_cov, mmse_combiner, mmse_rx_update,
    power_constrained_precoder, precoder_normal_equations, BeamformerSolution, DesignProblem,
};

/// Knobs of the reconfigurable scheme. Both are scenario-exposed.
#[derive(Debug, Clone, Copy)]
pub struct ReconfigOpts {
    /// Mixing weight `lambda` between the cooperative MMSE direction
    /// (`lambda = 1`) and the egoistic own-link direction (`lambda = 0`).
    pub mix_weight: f64,
    /// Streams below this design SINR (dB) are dropped at adaptation time.
    pub min_sinr_db: f64,
}

impl Default for ReconfigOpts {
    fn default() -> Self {
        Self {
            mix_weight: 0.75,
            min_sinr_db: 0.0,
        }
    }
}

pub fn reconfigurable(
    problem: &DesignProblem,
    opts: &ReconfigOpts,
) -> Result<BeamformerSolution> {
    if !(0.0..=1.0).contains(&opts.mix_weight) {
        return Err(Error::InvalidArgument("lambda must lie in [0, 1]".into()));
    }
    let n_bs = problem.n_bs();
    let full: Vec<usize> = (0..n_bs).map(|b| problem.max_streams(b)).collect();
    let (precoders, powers, mut trace, mut iterations) = design_pass(problem, &full, opts)?;
    let combiners = mmse_combiner(problem, &precoders, &powers)?;

    // Explicit stream adaptation: keep streams whose design SINR clears the
    // threshold, at least one per base station.
    let threshold = crate::db_to_linear(opts.min_sinr_db);
    let mut reduced = Vec::with_capacity(n_bs);
    for b in 0..n_bs {
        let sinrs: Vec<f64> = (0..full[b])
            .map(|k| design_stream_sinr(problem, &precoders, &powers, &combiners, b, k))
            .collect();
        let surviving = sinrs.iter().filter(|&&s| s >= threshold).count();
        reduced.push(surviving.max(1));
    }

    let (precoders, powers) = if reduced == full {
        (precoders, powers)
    } else {
        let (v, p, t2, i2) = design_pass(problem, &reduced, opts)?;
        trace.extend(t2);
        iterations += i2;
        (v, p)
    };

    let combiners = mmse_combiner(problem, &precoders, &powers)?;
    let solution = BeamformerSolution {
        precoders,
        powers,
        combiners,
        trace,
        iterations,
        residual_leakage: None,
        orthogonal_allocation: false,
        fallback_columns: 0,
    };
    solution.check(problem)?;
    Ok(solution)
}

/// One full design iteration phase at fixed stream counts. Returns unit-norm
/// precoders, per-stream powers, the design-rate trace, and iterations used.
fn design_pass(
    problem: &DesignProblem,
    streams: &[usize],
    opts: &ReconfigOpts,
) -> Result<(Vec<CMat>, Vec<DVector<f64>>, Vec<f64>, usize)> {
    problem.check_streams(streams)?;
    let n_bs = problem.n_bs();
    let lambda = Complex64::from(opts.mix_weight);
    let ego: Vec<CMat> = (0..n_bs)
        .map(|b| dominant_right_singular_vectors(problem.channel(b, b), streams[b]))
        .collect();
    // warm start on the egoistic directions, as for WMMSE
    let mut x: Vec<CMat> = ego
        .iter()
        .zip(streams)
        .map(|(e, &d)| e.scale((problem.power() / d as f64).sqrt()))
        .collect();

    let mut trace = Vec::new();
    let mut iterations = 0;
    for it in 0..problem.max_iters() {
        iterations = it + 1;
        let u = mmse_rx_update(problem, &x)?;
        let w = mse_weights(problem, &x, &u)?;
        for b in 0..n_bs {
            let (a, c) = precoder_normal_equations(problem, &u, Some(&w), b);
            let x_mmse = power_constrained_precoder(&a, &c, problem.power())?;
            x[b] = mix_columns(&x_mmse, &ego[b], lambda);
        }
        let covs: Vec<CMat> = x.iter().map(|xb| xb * xb.adjoint()).collect();
        let objective = design_sum_rate_cov(problem, &covs)?;
        trace.push(objective);
        if it > 0 {
            let prev = trace[it - 1];
            if (objective - prev).abs() <= problem.tol() * prev.abs().max(1e-12) {
                break;
            }
        }
    }

    let mut precoders = Vec::with_capacity(n_bs);
    let mut powers = Vec::with_capacity(n_bs);
    for (b, xb) in x.iter().enumerate() {
        let mut v = CMat::zeros(xb.nrows(), xb.ncols());
        let mut p = DVector::zeros(xb.ncols());
        for k in 0..xb.ncols() {
            let norm = xb.column(k).norm();
            p[k] = norm * norm;
            if norm > 0.0 {
                v.set_column(k, &(xb.column(k) / Complex64::from(norm)));
            } else {
                v.set_column(k, &ego[b].column(k).clone_owned());
            }
        }
        precoders.push(v);
        powers.push(p);
    }
    Ok((precoders, powers, trace, iterations))
}

/// Column-wise mixture `lambda * v_mmse + (1 - lambda) * v_ego`, renormalised
/// and rescaled back to the MMSE-implied per-stream power.
fn mix_columns(x_mmse: &CMat, ego: &CMat, lambda: Complex64) -> CMat {
    let one_minus = Complex64::from(1.0) - lambda;
    let mut out = CMat::zeros(x_mmse.nrows(), x_mmse.ncols());
    for k in 0..x_mmse.ncols() {
        let col = x_mmse.column(k);
        let power = col.norm_squared();
        let norm = power.sqrt();
        let direction: CVec = if norm > 1e-150 {
            let unit = col / Complex64::from(norm);
            let mixed = unit * lambda + ego.column(k) * one_minus;
            let mixed_norm = mixed.norm();
            if mixed_norm > 1e-150 {
                mixed / Complex64::from(mixed_norm)
            } else {
                ego.column(k).into_owned()
            }
        } else {
            ego.column(k).into_owned()
        };
        out.set_column(k, &(direction * Complex64::from(norm)));
    }
    out
}
