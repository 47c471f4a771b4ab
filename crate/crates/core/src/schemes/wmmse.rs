//! Weighted-MMSE sum-rate design.
//!
//! Block-coordinate iteration over (a) per-terminal MMSE receivers, (b)
//! per-terminal weights equal to the inverse MSE matrix, and (c) per-BS
//! precoders minimising the weighted sum MSE under the power budget, with
//! the power multiplier found by bisection on its eigenbasis trace. Streams
//! start at `min(nT, nR)` per terminal; after the final iteration, streams
//! whose power fell below `1e-6 * P` are pruned, which is how this design
//! selects stream counts.

use nalgebra::DVector;

use crate::linalg::{
    dominant_right_singular_vectors, eig_hermitian_asc, hermitianize, scaled_eye, CMat,
};
use crate::{Error, Result};

use super::{design_sum_rate_cov, mmse_combiner, BeamformerSolution, DesignProblem};

/// Relative power level below which a stream counts as switched off.
const PRUNE_FRACTION: f64 = 1e-6;

/// Design precoders by weighted-MMSE minimisation. Uses the problem's
/// iteration cap and relative tolerance; the trace records the design-channel
/// sum rate after each iteration and is nondecreasing.
pub fn wmmse(problem: &DesignProblem) -> Result<BeamformerSolution> {
    let n_bs = problem.n_bs();
    // full stream load, warm-started on the own-link singular directions
    let mut x: Vec<CMat> = (0..n_bs)
        .map(|b| {
            let d = problem.max_streams(b);
            let v = dominant_right_singular_vectors(problem.channel(b, b), d);
            v.scale((problem.power() / d as f64).sqrt())
        })
        .collect();

    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    for it in 0..problem.max_iters() {
        iterations = it + 1;
        let u = mmse_rx_update(problem, &x)?;
        let w = mse_weights(problem, &x, &u)?;
        for b in 0..n_bs {
            let (a, c) = precoder_normal_equations(problem, &u, Some(&w), b);
            x[b] = power_constrained_precoder(&a, &c, problem.power())?;
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

    // Power-based stream selection: surviving columns become unit-norm
    // precoder columns with their powers made explicit.
    let mut precoders = Vec::with_capacity(n_bs);
    let mut powers = Vec::with_capacity(n_bs);
    for (b, xb) in x.iter().enumerate() {
        let col_powers: Vec<f64> = (0..xb.ncols())
            .map(|k| xb.column(k).norm_squared())
            .collect();
        let mut keep: Vec<usize> = (0..xb.ncols())
            .filter(|&k| col_powers[k] >= PRUNE_FRACTION * problem.power())
            .collect();
        if keep.is_empty() {
            let best = (0..xb.ncols())
                .max_by(|&i, &j| col_powers[i].total_cmp(&col_powers[j]))
                .expect("at least one stream");
            keep.push(best);
        }
        let mut v = CMat::zeros(xb.nrows(), keep.len());
        let mut p = DVector::zeros(keep.len());
        for (dst, &k) in keep.iter().enumerate() {
            let norm = col_powers[k].sqrt();
            if norm > 0.0 {
                v.set_column(dst, &(xb.column(k) / num_complex::Complex64::from(norm)));
            } else {
                // a fully switched-off sole survivor: point it along the
                // own-link dominant direction, still with zero power
                let ego = dominant_right_singular_vectors(problem.channel(b, b), 1);
                v.set_column(dst, &ego.column(0).clone_owned());
            }
            p[dst] = col_powers[k];
        }
        precoders.push(v);
        powers.push(p);
    }

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

/// MMSE receivers for the running (power-carrying) precoders `x`:
/// `U_b = R_b^{-1} G_{b,b} X_b`.
pub(crate) fn mmse_rx_update(problem: &DesignProblem, x: &[CMat]) -> Result<Vec<CMat>> {
    let mut u = Vec::with_capacity(problem.n_bs());
    for b in 0..problem.n_bs() {
        let mut r = scaled_eye(problem.n_rx(b), problem.noise(b));
        for l in 0..problem.n_bs() {
            let gx = problem.channel(b, l) * &x[l];
            r += &gx * gx.adjoint();
        }
        let own = problem.channel(b, b) * &x[b];
        let sol = r
            .lu()
            .solve(&own)
            .ok_or_else(|| Error::NumericalFailure("received covariance singular".into()))?;
        u.push(sol);
    }
    Ok(u)
}

/// Per-terminal weights `W_b = (I - U_b^H G_{b,b} X_b)^{-1}`, valid at the
/// MMSE receiver where this equals the inverse MSE matrix.
pub(crate) fn mse_weights(problem: &DesignProblem, x: &[CMat], u: &[CMat]) -> Result<Vec<CMat>> {
    let mut w = Vec::with_capacity(problem.n_bs());
    for b in 0..problem.n_bs() {
        let d = x[b].ncols();
        let e = scaled_eye(d, 1.0) - u[b].adjoint() * problem.channel(b, b) * &x[b];
        let e = hermitianize(&e);
        let inv = e
            .try_inverse()
            .ok_or_else(|| Error::NumericalFailure("MSE matrix singular".into()))?;
        w.push(inv);
    }
    Ok(w)
}

/// Normal-equation pieces of the precoder update at base station `b`:
/// `a = sum_l G_{l,b}^H U_l W_l U_l^H G_{l,b}` and `c = G_{b,b}^H U_b W_b`
/// (`w = None` means unit weights).
pub(crate) fn precoder_normal_equations(
    problem: &DesignProblem,
    u: &[CMat],
    w: Option<&[CMat]>,
    b: usize,
) -> (CMat, CMat) {
    let n_tx = problem.n_tx(b);
    let mut a = CMat::zeros(n_tx, n_tx);
    for l in 0..problem.n_bs() {
        let g = problem.channel(l, b);
        let uw = match w {
            Some(w) => &u[l] * &w[l],
            None => u[l].clone(),
        };
        a += g.adjoint() * &uw * u[l].adjoint() * g;
    }
    let c = match w {
        Some(w) => problem.channel(b, b).adjoint() * &u[b] * &w[b],
        None => problem.channel(b, b).adjoint() * &u[b],
    };
    (hermitianize(&a), c)
}

/// Solve `x = (a + mu I)^{-1} c` with the smallest `mu >= 0` that keeps
/// `tr(x x^H) <= p_max`, by bisection on the eigenbasis of `a`.
pub(crate) fn power_constrained_precoder(a: &CMat, c: &CMat, p_max: f64) -> Result<CMat> {
    if a.iter().chain(c.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(
            "non-finite precoder normal equations".into(),
        ));
    }
    let (evals, q) = eig_hermitian_asc(a);
    let evals: Vec<f64> = evals.into_iter().map(|l| l.max(0.0)).collect();
    let ct = q.adjoint() * c;
    let row_power: Vec<f64> = (0..ct.nrows())
        .map(|i| ct.row(i).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    let allocated = |mu: f64| -> f64 {
        let mut total = 0.0;
        for (i, &cp) in row_power.iter().enumerate() {
            if cp == 0.0 {
                continue;
            }
            let denom = evals[i] + mu;
            total += if denom > 0.0 { cp / (denom * denom) } else { f64::INFINITY };
        }
        total
    };

    let mut mu = 0.0;
    if !(allocated(0.0) <= p_max) {
        let lambda_max = evals.last().copied().unwrap_or(0.0);
        let mut hi = 1e-16 * lambda_max.max(1.0);
        let mut bracketed = false;
        for _ in 0..128 {
            if allocated(hi) <= p_max {
                bracketed = true;
                break;
            }
            hi *= 2.0;
        }
        if !bracketed {
            return Err(Error::NumericalFailure(
                "power multiplier bracket not found within 128 doublings".into(),
            ));
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if allocated(mid) > p_max {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu = hi;
    }

    let mut scaled = ct;
    for i in 0..scaled.nrows() {
        let denom = evals[i] + mu;
        let factor = if denom > 1e-300 { 1.0 / denom } else { 0.0 };
        let row = scaled.row(i) * num_complex::Complex64::from(factor);
        scaled.set_row(i, &row);
    }
    Ok(&q * scaled)
}
