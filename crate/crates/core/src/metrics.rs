//! Rate and SINR metrics: the closed-form two-cell coordination bounds, the
//! cluster sum rate on actual channels, per-stream SINR, and the relative
//! received OCI power.

use crate::linalg::{log2_det_whitened, scaled_eye, CMat};
use crate::model::{ClusterConfig, Pilots, ReceptionNoise};
use crate::schemes::BeamformerSolution;
use crate::{Error, Result};

/// Closed-form cluster sum rates for the two-cell example, in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    /// Full reuse of time-frequency resources.
    pub full_reuse: f64,
    /// Orthogonal allocation (prelog `1/2` per terminal).
    pub orthogonal: f64,
    /// Coordinated beamforming with interference alignment.
    pub ia: f64,
    /// Ideal joint transmission.
    pub jt: f64,
}

/// The four theoretical per-terminal rates of the `B = 2` cluster, summed
/// over both terminals:
///
/// - full reuse: `log2(1 + SNR / (alpha SNR + beta SNR + 1))`
/// - orthogonal: `0.5 log2(1 + SNR / (beta SNR + 1))`
/// - IA:         `log2(1 + SNR / (beta SNR + 1))`
/// - JT:         `log2(1 + (1 + alpha) SNR / (beta SNR + 1))`
pub fn theory_bounds(snr: f64, alpha: f64, beta: f64, n_bs: usize) -> Result<RateBounds> {
    if n_bs != 2 {
        return Err(Error::Unsupported(
            "closed-form bounds are stated for the two-cell cluster".into(),
        ));
    }
    if !(snr >= 0.0) {
        return Err(Error::InvalidArgument("snr must be nonnegative".into()));
    }
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument("alpha, beta must lie in [0, 1]".into()));
    }
    let oci_floor = beta * snr + 1.0;
    let per_mt_full = (1.0 + snr / (alpha * snr + oci_floor)).log2();
    let per_mt_orth = 0.5 * (1.0 + snr / oci_floor).log2();
    let per_mt_ia = (1.0 + snr / oci_floor).log2();
    let per_mt_jt = (1.0 + (1.0 + alpha) * snr / oci_floor).log2();
    Ok(RateBounds {
        full_reuse: 2.0 * per_mt_full,
        orthogonal: 2.0 * per_mt_orth,
        ia: 2.0 * per_mt_ia,
        jt: 2.0 * per_mt_jt,
    })
}

/// Cluster sum rate for one channel realization and one design.
#[derive(Debug, Clone)]
pub struct SumRateSample {
    /// Sum over the cluster's terminals, bits/s/Hz.
    pub value: f64,
    /// Per-terminal contributions.
    pub per_terminal: Vec<f64>,
}

/// Achievable cluster sum rate on the *actual* channels:
/// `sum_b log2 det(I + H_bb S_b H_bb^H Q_b^{-1})` with
/// `S_b = V_b P_b V_b^H` and the interference-plus-noise covariance
/// `Q_b = alpha/(B-1) sum_{l != b} H_bl S_l H_bl^H + (beta P / n_rx + N0) I`.
/// Receive combiners are deliberately not part of this metric.
///
/// Solutions tagged as orthogonal allocation are evaluated without the ICI
/// term and with a `1/B` prelog per terminal.
pub fn cluster_sum_rate(
    cfg: &ClusterConfig,
    alpha: f64,
    beta: f64,
    actual: &[Vec<CMat>],
    solution: &BeamformerSolution,
) -> Result<SumRateSample> {
    cfg.validate()?;
    let n_bs = cfg.n_bs;
    if actual.len() != n_bs || solution.precoders.len() != n_bs {
        return Err(Error::InvalidArgument(
            "channels and solution must cover every base station".into(),
        ));
    }
    let covs: Vec<CMat> = (0..n_bs).map(|b| solution.transmit_covariance(b)).collect();
    let include_ici = !solution.orthogonal_allocation && n_bs > 1;
    let prelog = if solution.orthogonal_allocation {
        1.0 / n_bs as f64
    } else {
        1.0
    };
    let mut per_terminal = Vec::with_capacity(n_bs);
    for b in 0..n_bs {
        let n_rx = cfg.n_rx[b];
        let mut q = scaled_eye(n_rx, beta * cfg.power / n_rx as f64 + cfg.noise_var);
        if include_ici {
            let scale = alpha / (n_bs as f64 - 1.0);
            for l in 0..n_bs {
                if l == b {
                    continue;
                }
                let h = &actual[b][l];
                q += (h * &covs[l] * h.adjoint()).scale(scale);
            }
        }
        let h = &actual[b][b];
        let signal = h * &covs[b] * h.adjoint();
        per_terminal.push(prelog * log2_det_whitened(&q, &signal)?);
    }
    Ok(SumRateSample {
        value: per_terminal.iter().sum(),
        per_terminal,
    })
}

/// Received SINR of stream `kappa` at terminal `b` on the actual channels.
///
/// The numerator is `P_k |[U^H H V]_kk|^2`; the denominator adds inter-stream
/// interference, intra-cluster interference (with the received `alpha/(B-1)`
/// power scaling), and the OCI-plus-noise term. The latter defaults to its
/// expectation `(beta P / n_rx + N0) ||u_k||^2`; passing a realized
/// [`ReceptionNoise`] uses `|[U^H (g + n)]_k|^2` instead.
pub fn stream_sinr(
    cfg: &ClusterConfig,
    alpha: f64,
    beta: f64,
    actual: &[Vec<CMat>],
    solution: &BeamformerSolution,
    b: usize,
    kappa: usize,
    realized: Option<&ReceptionNoise>,
) -> Result<f64> {
    cfg.validate()?;
    let n_bs = cfg.n_bs;
    if b >= n_bs {
        return Err(Error::InvalidArgument("terminal index out of range".into()));
    }
    if kappa >= solution.precoders[b].ncols() {
        return Err(Error::InvalidArgument("stream index out of range".into()));
    }
    let u = &solution.combiners[b];
    let u_k = u.column(kappa);
    let own = u.adjoint() * &actual[b][b] * &solution.precoders[b];
    let signal = solution.powers[b][kappa] * own[(kappa, kappa)].norm_sqr();

    let mut inter_stream = 0.0;
    for lam in 0..solution.precoders[b].ncols() {
        if lam != kappa {
            inter_stream += solution.powers[b][lam] * own[(kappa, lam)].norm_sqr();
        }
    }
    let mut ici = 0.0;
    if n_bs > 1 {
        let scale = alpha / (n_bs as f64 - 1.0);
        for l in 0..n_bs {
            if l == b {
                continue;
            }
            let cross = u.adjoint() * &actual[b][l] * &solution.precoders[l];
            for mu in 0..solution.precoders[l].ncols() {
                ici += scale * solution.powers[l][mu] * cross[(kappa, mu)].norm_sqr();
            }
        }
    }
    let oci_noise = match realized {
        Some(noise) => {
            let combined = u_k.adjoint() * (&noise.oci[b] + &noise.awgn[b]);
            combined[(0, 0)].norm_sqr()
        }
        None => (beta * cfg.power / cfg.n_rx[b] as f64 + cfg.noise_var) * u_k.norm_squared(),
    };
    Ok(signal / (inter_stream + ici + oci_noise))
}

/// Ratio of the received aggregate OCI power to the power of the estimated
/// intended channel: `beta / (n_tx n_rx (1 + rho SNR)^{-1} + 1)` with
/// `rho = Np / n_tx`. Tends to `beta` as the pilot budget grows.
pub fn relative_oci_power(
    beta: f64,
    n_tx: usize,
    n_rx: usize,
    pilots: Pilots,
    snr: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument("beta must lie in [0, 1]".into()));
    }
    let err_var = crate::model::estimation_error_variance(pilots, n_tx, snr)?;
    Ok(beta / ((n_tx * n_rx) as f64 * err_var + 1.0))
}
