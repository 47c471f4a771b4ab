//! System model: cluster topology, scenario knobs, and every random quantity
//! of a link-level trial — cluster channels, pilot-based estimation errors,
//! out-of-cluster interference (OCI) vectors, and receiver AWGN.
//!
//! Conventions used throughout the crate:
//!
//! - `actual[b][l]` / `estimated[b][l]` is the channel from base station `l`
//!   to the terminal served by base station `b`, with shape
//!   `n_rx[b] x n_tx[l]`.
//! - Channel entries are circularly-symmetric complex Gaussian with variance
//!   `1 / (n_tx * n_rx)`, so every link has unit mean Frobenius-norm power.
//! - Cross links inside the cluster are scaled by `sqrt(alpha / (B - 1))` at
//!   reception; `alpha` is the relative intra-cluster interference power.
//! - OCI element amplitudes are Nakagami-m: squared amplitudes are
//!   `Gamma(m, beta * P / (m * n_rx))`, phases independent uniform.
//!
//! All samplers are pure functions of an explicit generator: identical seeds
//! give bit-identical draws.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, Uniform};

use crate::linalg::{CMat, CVec};
use crate::schemes::BeamformerSolution;
use crate::{Error, Result};

/// Pilot budget for channel estimation. `Infinite` is the explicit
/// perfect-CSI sentinel; it makes estimates equal the actual channels exactly
/// instead of approximating them with a huge pilot count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pilots {
    Finite(u64),
    Infinite,
}

impl Pilots {
    pub fn is_perfect(self) -> bool {
        matches!(self, Pilots::Infinite)
    }
}

impl std::fmt::Display for Pilots {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Pilots::Finite(n) => write!(f, "{n}"),
            Pilots::Infinite => write!(f, "inf"),
        }
    }
}

/// Cluster topology: `B` coordinated base stations, each serving one
/// scheduled terminal on the evaluated resource unit.
#[derive(Debug, Clone)]
pub struct ClusterConfig {
    /// Number of coordinated base stations (and scheduled terminals).
    pub n_bs: usize,
    /// Transmit antennas per base station.
    pub n_tx: Vec<usize>,
    /// Receive antennas per terminal.
    pub n_rx: Vec<usize>,
    /// Total per-BS transmit power (linear).
    pub power: f64,
    /// Noise variance per receive antenna (linear).
    pub noise_var: f64,
}

impl ClusterConfig {
    /// Cluster with identical antenna counts at every node.
    pub fn uniform(n_bs: usize, n_tx: usize, n_rx: usize, power: f64, noise_var: f64) -> Self {
        Self {
            n_bs,
            n_tx: vec![n_tx; n_bs],
            n_rx: vec![n_rx; n_bs],
            power,
            noise_var,
        }
    }

    /// Same cluster evaluated at a different noise level (used per SNR point;
    /// the SNR axis is `P / N0` with `P` fixed).
    pub fn with_noise_var(&self, noise_var: f64) -> Self {
        Self {
            noise_var,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs < 1 {
            return Err(Error::Validation("B must be at least 1".into()));
        }
        if self.n_tx.len() != self.n_bs || self.n_rx.len() != self.n_bs {
            return Err(Error::Validation(
                "nT and nR must list one entry per base station".into(),
            ));
        }
        if self.n_tx.iter().any(|&n| n < 1) || self.n_rx.iter().any(|&n| n < 1) {
            return Err(Error::Validation("antenna counts must be positive".into()));
        }
        if !(self.power > 0.0) {
            return Err(Error::Validation("P must be positive".into()));
        }
        if !(self.noise_var > 0.0) {
            return Err(Error::Validation("N0 must be positive".into()));
        }
        Ok(())
    }
}

/// Experiment knobs for one scenario sweep.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Relative intra-cluster interference power, in `[0, 1]`.
    pub alpha: f64,
    /// Relative out-of-cluster interference power, in `[0, 1]`.
    pub beta: f64,
    /// Nakagami shape of the OCI element amplitudes, `m >= 0.5`.
    pub nakagami_m: f64,
    /// Pilot budget for channel estimation.
    pub pilots: Pilots,
    /// SNR grid in dB (`SNR = P / N0`).
    pub snr_db: Vec<f64>,
    /// Monte Carlo realizations per (scheme, SNR) point.
    pub trials: usize,
    /// Master seed; all per-trial seeds derive from it.
    pub master_seed: u64,
    /// Iteration cap for the iterative schemes (max-SINR, WMMSE,
    /// reconfigurable).
    pub max_iters: usize,
    /// Relative convergence tolerance for the iterative schemes.
    pub tol: f64,
    /// Preset stream count per terminal for IA and max-SINR. `None` applies
    /// the feasibility rule `max(1, min(nT, nR) / 2)`.
    pub preset_streams: Option<usize>,
    /// Mixing weight between the cooperative and egoistic precoder parts of
    /// the reconfigurable scheme.
    pub mix_weight: f64,
    /// Stream-retention SINR threshold of the reconfigurable scheme, in dB.
    pub min_stream_sinr_db: f64,
    /// Iteration cap for the IA leakage minimisation (IA is run to
    /// convergence; the paper's closed form is not iterative).
    pub ia_max_iters: usize,
    /// Absolute leakage level at which IA is considered aligned.
    pub ia_leakage_tol: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            nakagami_m: 1.0,
            pilots: Pilots::Infinite,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            trials: 100,
            master_seed: 0,
            max_iters: 10,
            tol: 1e-4,
            preset_streams: None,
            mix_weight: 0.75,
            min_stream_sinr_db: 0.0,
            ia_max_iters: 2000,
            ia_leakage_tol: 1e-10,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.nakagami_m >= 0.5) {
            return Err(Error::Validation("m must be at least 0.5".into()));
        }
        if let Pilots::Finite(n) = self.pilots {
            if n < 1 {
                return Err(Error::Validation("np must be at least 1".into()));
            }
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Validation("snr_db must be a nonempty finite list".into()));
        }
        if self.trials < 1 {
            return Err(Error::Validation("trials must be at least 1".into()));
        }
        if self.max_iters < 1 || self.ia_max_iters < 1 {
            return Err(Error::Validation("iteration caps must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.ia_leakage_tol > 0.0) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::Validation("lambda must lie in [0, 1]".into()));
        }
        if let Some(d) = self.preset_streams {
            if d < 1 {
                return Err(Error::Validation("d must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// One draw of every channel in the cluster, together with its pilot-based
/// estimate. `estimated == actual` when the pilot budget is infinite.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub actual: Vec<Vec<CMat>>,
    pub estimated: Vec<Vec<CMat>>,
}

impl ChannelRealization {
    /// Draw all `B x B` cluster channels and their estimates. `snr` is the
    /// linear `P / N0` at the evaluated point (it sets the estimation error
    /// variance).
    pub fn sample<R: Rng>(
        cfg: &ClusterConfig,
        pilots: Pilots,
        snr: f64,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut actual = Vec::with_capacity(cfg.n_bs);
        for b in 0..cfg.n_bs {
            let mut row = Vec::with_capacity(cfg.n_bs);
            for l in 0..cfg.n_bs {
                row.push(sample_channel(cfg.n_rx[b], cfg.n_tx[l], rng)?);
            }
            actual.push(row);
        }
        let estimated = estimate_channels(&actual, pilots, snr, rng)?;
        Ok(Self { actual, estimated })
    }
}

/// One draw of the additive reception terms at every terminal: the aggregate
/// OCI vector and the thermal noise vector.
#[derive(Debug, Clone)]
pub struct ReceptionNoise {
    pub oci: Vec<CVec>,
    pub awgn: Vec<CVec>,
}

impl ReceptionNoise {
    pub fn sample<R: Rng>(
        cfg: &ClusterConfig,
        beta: f64,
        nakagami_m: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut oci = Vec::with_capacity(cfg.n_bs);
        let mut awgn = Vec::with_capacity(cfg.n_bs);
        for b in 0..cfg.n_bs {
            oci.push(sample_oci(cfg.n_rx[b], beta, cfg.power, nakagami_m, rng)?);
            awgn.push(sample_awgn(cfg.n_rx[b], cfg.noise_var, rng)?);
        }
        Ok(Self { oci, awgn })
    }

    /// All-zero noise, for deterministic reception checks.
    pub fn zero(cfg: &ClusterConfig) -> Self {
        Self {
            oci: cfg.n_rx.iter().map(|&n| CVec::zeros(n)).collect(),
            awgn: cfg.n_rx.iter().map(|&n| CVec::zeros(n)).collect(),
        }
    }
}

fn standard_complex<R: Rng>(rng: &mut R, std_dev: f64) -> Complex64 {
    let scale = std_dev / std::f64::consts::SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Draw an `n_rx x n_tx` channel with i.i.d. `CN(0, 1/(n_tx n_rx))` entries,
/// so the expected squared Frobenius norm is one.
pub fn sample_channel<R: Rng>(n_rx: usize, n_tx: usize, rng: &mut R) -> Result<CMat> {
    if n_rx < 1 || n_tx < 1 {
        return Err(Error::InvalidArgument(
            "channel dimensions must be positive".into(),
        ));
    }
    let std_dev = 1.0 / ((n_tx * n_rx) as f64).sqrt();
    Ok(CMat::from_fn(n_rx, n_tx, |_, _| {
        standard_complex(rng, std_dev)
    }))
}

/// Per-entry variance of the pilot-based MMSE estimation error:
/// `(1 + rho * SNR)^{-1}` with `rho = Np / n_tx`. Zero for infinite pilots.
pub fn estimation_error_variance(pilots: Pilots, n_tx: usize, snr: f64) -> Result<f64> {
    if n_tx < 1 {
        return Err(Error::InvalidArgument("n_tx must be positive".into()));
    }
    if !(snr >= 0.0) {
        return Err(Error::InvalidArgument("snr must be nonnegative".into()));
    }
    match pilots {
        Pilots::Infinite => Ok(0.0),
        Pilots::Finite(np) => {
            if np < 1 {
                return Err(Error::InvalidArgument("np must be at least 1".into()));
            }
            let rho = np as f64 / n_tx as f64;
            Ok(1.0 / (1.0 + rho * snr))
        }
    }
}

/// Corrupt actual channels with i.i.d. estimation-error matrices:
/// `estimated = actual + error`, errors independent across links.
pub fn estimate_channels<R: Rng>(
    actual: &[Vec<CMat>],
    pilots: Pilots,
    snr: f64,
    rng: &mut R,
) -> Result<Vec<Vec<CMat>>> {
    if pilots.is_perfect() {
        return Ok(actual.to_vec());
    }
    let mut estimated = Vec::with_capacity(actual.len());
    for row in actual {
        let mut est_row = Vec::with_capacity(row.len());
        for h in row {
            let var = estimation_error_variance(pilots, h.ncols(), snr)?;
            let std_dev = var.sqrt();
            let e = CMat::from_fn(h.nrows(), h.ncols(), |_, _| standard_complex(rng, std_dev));
            est_row.push(h + e);
        }
        estimated.push(est_row);
    }
    Ok(estimated)
}

/// Draw an aggregate OCI vector: element squared amplitudes are
/// `Gamma(m, beta * P / (m * n_rx))`, phases independent uniform, so that
/// `E{||g||^2} = beta * P`. `beta = 0` gives the zero vector.
pub fn sample_oci<R: Rng>(
    n_rx: usize,
    beta: f64,
    power: f64,
    m: f64,
    rng: &mut R,
) -> Result<CVec> {
    if n_rx < 1 {
        return Err(Error::InvalidArgument("n_rx must be positive".into()));
    }
    if !(m >= 0.5) {
        return Err(Error::InvalidArgument("m must be at least 0.5".into()));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument("beta must lie in [0, 1]".into()));
    }
    if !(power > 0.0) {
        return Err(Error::InvalidArgument("P must be positive".into()));
    }
    if beta == 0.0 {
        return Ok(CVec::zeros(n_rx));
    }
    let scale = beta * power / (m * n_rx as f64);
    let gamma = Gamma::new(m, scale)
        .map_err(|e| Error::InvalidArgument(format!("gamma parameters: {e}")))?;
    let phase = Uniform::new(0.0, std::f64::consts::TAU)
        .map_err(|e| Error::InvalidArgument(format!("phase range: {e}")))?;
    Ok(CVec::from_fn(n_rx, |_, _| {
        let amplitude = gamma.sample(rng).sqrt();
        let theta = phase.sample(rng);
        Complex64::from_polar(amplitude, theta)
    }))
}

/// Draw a receiver AWGN vector with i.i.d. `CN(0, N0)` entries.
pub fn sample_awgn<R: Rng>(n_rx: usize, noise_var: f64, rng: &mut R) -> Result<CVec> {
    if n_rx < 1 {
        return Err(Error::InvalidArgument("n_rx must be positive".into()));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument("N0 must be nonnegative".into()));
    }
    let std_dev = noise_var.sqrt();
    Ok(CVec::from_fn(n_rx, |_, _| standard_complex(rng, std_dev)))
}

/// Run the reception chain for every terminal: form the transmitted vectors
/// `x_l = V_l P_l^{1/2} s_l`, superpose the own link, the `sqrt(alpha/(B-1))`
/// scaled cross links, the OCI and the AWGN, and apply the combiners.
///
/// Returns the received vectors `y[b]` and the stream estimates
/// `s_hat[b] = U_b^H y_b`.
pub fn simulate_reception(
    cfg: &ClusterConfig,
    alpha: f64,
    actual: &[Vec<CMat>],
    solution: &BeamformerSolution,
    symbols: &[CVec],
    noise: &ReceptionNoise,
) -> Result<(Vec<CVec>, Vec<CVec>)> {
    let n_bs = cfg.n_bs;
    if actual.len() != n_bs || symbols.len() != n_bs || solution.precoders.len() != n_bs {
        return Err(Error::InvalidArgument(
            "reception inputs must cover every base station".into(),
        ));
    }
    let mut transmitted = Vec::with_capacity(n_bs);
    for l in 0..n_bs {
        let d = solution.precoders[l].ncols();
        if symbols[l].len() != d {
            return Err(Error::InvalidArgument(format!(
                "symbol vector {l} must have {d} streams"
            )));
        }
        let total: f64 = solution.powers[l].iter().sum();
        if total > cfg.power + 1e-9 {
            return Err(Error::InvalidArgument(
                "transmit covariance exceeds the power budget".into(),
            ));
        }
        let mut scaled = symbols[l].clone();
        for k in 0..d {
            scaled[k] *= Complex64::new(solution.powers[l][k].sqrt(), 0.0);
        }
        transmitted.push(&solution.precoders[l] * scaled);
    }
    let cross_scale = if n_bs > 1 {
        (alpha / (n_bs as f64 - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut received = Vec::with_capacity(n_bs);
    let mut estimates = Vec::with_capacity(n_bs);
    for b in 0..n_bs {
        if noise.oci[b].len() != cfg.n_rx[b] || noise.awgn[b].len() != cfg.n_rx[b] {
            return Err(Error::InvalidArgument("noise vector dimensions".into()));
        }
        let mut y = &actual[b][b] * &transmitted[b];
        for l in 0..n_bs {
            if l != b {
                y += (&actual[b][l] * &transmitted[l]).scale(cross_scale);
            }
        }
        y += &noise.oci[b];
        y += &noise.awgn[b];
        estimates.push(solution.combiners[b].adjoint() * &y);
        received.push(y);
    }
    Ok((received, estimates))
}
