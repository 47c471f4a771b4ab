//! Transmit precoder and receive combiner design for the coordination
//! cluster.
//!
//! Every scheme consumes a [`DesignProblem`] built from *estimated* channels
//! only — actual channels never reach the design path — and returns a
//! [`BeamformerSolution`] with unit-norm precoder columns, per-stream powers
//! within the per-BS budget, and reception combiners.
//!
//! Schemes:
//! - [`ia_min_leakage`]: interference alignment by alternating leakage
//!   minimisation, run to convergence.
//! - [`max_sinr`]: alternating per-stream SINR maximisation.
//! - [`wmmse`]: weighted-MMSE sum-rate design with per-BS power constraints
//!   and implicit stream selection by power pruning.
//! - [`reconfigurable`]: system-wide MMSE combiners with two-part precoders
//!   (cooperative MMSE direction mixed with the egoistic own-link direction)
//!   and explicit stream adaptation.
//! - [`full_reuse_baseline`] / [`orthogonal_baseline`]: non-coordinated
//!   eigen-beamforming references.

mod baselines;
mod ia;
mod max_sinr;
mod reconfigurable;
mod wmmse;

pub use baselines::{full_reuse_baseline, orthogonal_baseline};
pub use ia::{ia_min_leakage, nulling_combiners, IaOpts};
pub use max_sinr::max_sinr;
pub use reconfigurable::{reconfigurable, ReconfigOpts};
pub use wmmse::wmmse;

pub(crate) use wmmse::{mmse_rx_update, power_constrained_precoder, precoder_normal_equations};

use nalgebra::DVector;

use crate::linalg::{scaled_eye, CMat};
use crate::model::ClusterConfig;
use crate::{Error, Result};

/// The inputs a scheme is allowed to see: effective design channels (cross
/// links already scaled by `sqrt(alpha/(B-1))`), the per-BS power budget, the
/// per-terminal effective noise floor, and the iteration budget.
///
/// OCI-aware designs receive `noise = N0 + beta * P / n_rx`; OCI-agnostic
/// ones receive the bare `N0`. The evaluation-time MMSE combiner of every
/// scheme uses whatever floor the problem carries.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    channels: Vec<Vec<CMat>>,
    power: f64,
    noise: Vec<f64>,
    max_iters: usize,
    tol: f64,
}

impl DesignProblem {
    /// Build the design problem from estimated channels.
    pub fn new(
        cfg: &ClusterConfig,
        alpha: f64,
        beta: f64,
        oci_aware: bool,
        estimated: &[Vec<CMat>],
        max_iters: usize,
        tol: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidArgument("alpha, beta must lie in [0, 1]".into()));
        }
        if estimated.len() != cfg.n_bs || estimated.iter().any(|row| row.len() != cfg.n_bs) {
            return Err(Error::InvalidArgument(
                "estimated channels must form a B x B grid".into(),
            ));
        }
        let cross = if cfg.n_bs > 1 {
            (alpha / (cfg.n_bs as f64 - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut channels = Vec::with_capacity(cfg.n_bs);
        for b in 0..cfg.n_bs {
            let mut row = Vec::with_capacity(cfg.n_bs);
            for l in 0..cfg.n_bs {
                let h = &estimated[b][l];
                if h.nrows() != cfg.n_rx[b] || h.ncols() != cfg.n_tx[l] {
                    return Err(Error::InvalidArgument(format!(
                        "estimated channel ({b},{l}) has wrong shape"
                    )));
                }
                row.push(if l == b { h.clone() } else { h.scale(cross) });
            }
            channels.push(row);
        }
        let noise = (0..cfg.n_bs)
            .map(|b| {
                cfg.noise_var
                    + if oci_aware {
                        beta * cfg.power / cfg.n_rx[b] as f64
                    } else {
                        0.0
                    }
            })
            .collect();
        Ok(Self {
            channels,
            power: cfg.power,
            noise,
            max_iters,
            tol,
        })
    }

    /// Build a problem directly from pre-scaled design channels. Used by
    /// synthetic tests; `channels[b][l]` must already carry any cross-link
    /// scaling.
    pub fn from_channels(
        channels: Vec<Vec<CMat>>,
        power: f64,
        noise: Vec<f64>,
        max_iters: usize,
        tol: f64,
    ) -> Result<Self> {
        let n_bs = channels.len();
        if n_bs == 0 || channels.iter().any(|row| row.len() != n_bs) {
            return Err(Error::InvalidArgument("channels must form a B x B grid".into()));
        }
        if noise.len() != n_bs || noise.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument(
                "one positive noise floor per terminal required".into(),
            ));
        }
        if !(power > 0.0) {
            return Err(Error::InvalidArgument("power must be positive".into()));
        }
        Ok(Self {
            channels,
            power,
            noise,
            max_iters,
            tol,
        })
    }

    pub fn n_bs(&self) -> usize {
        self.channels.len()
    }

    /// Effective design channel from base station `l` to terminal `b`.
    pub fn channel(&self, b: usize, l: usize) -> &CMat {
        &self.channels[b][l]
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Effective noise floor at terminal `b`.
    pub fn noise(&self, b: usize) -> f64 {
        self.noise[b]
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn n_tx(&self, b: usize) -> usize {
        self.channels[b][b].ncols()
    }

    pub fn n_rx(&self, b: usize) -> usize {
        self.channels[b][b].nrows()
    }

    /// `min(n_tx, n_rx)` for terminal `b` — the stream-count ceiling.
    pub fn max_streams(&self, b: usize) -> usize {
        self.n_tx(b).min(self.n_rx(b))
    }

    pub(crate) fn check_streams(&self, streams: &[usize]) -> Result<()> {
        if streams.len() != self.n_bs() {
            return Err(Error::InvalidArgument(
                "one stream count per base station required".into(),
            ));
        }
        for (b, &d) in streams.iter().enumerate() {
            if d < 1 || d > self.max_streams(b) {
                return Err(Error::InvalidArgument(format!(
                    "stream count {d} at base station {b} outside [1, min(nT, nR)]"
                )));
            }
        }
        Ok(())
    }
}

/// A complete linear design for the cluster: per-BS precoders with unit-norm
/// columns and per-stream powers, per-terminal combiners, and the solver's
/// convergence trace.
#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    /// `n_tx[b] x d_b` precoders, unit-norm columns.
    pub precoders: Vec<CMat>,
    /// Per-stream transmit powers, `sum <= P` per base station.
    pub powers: Vec<DVector<f64>>,
    /// `n_rx[b] x d_b` receive combiners.
    pub combiners: Vec<CMat>,
    /// Per-iteration objective values (leakage for IA, min stream SINR for
    /// max-SINR, design-channel sum rate for WMMSE/reconfigurable).
    pub trace: Vec<f64>,
    /// Iterations actually used.
    pub iterations: usize,
    /// Final leakage of the alignment solution (IA only).
    pub residual_leakage: Option<f64>,
    /// Marks the orthogonal-allocation baseline: evaluated without the ICI
    /// term and with a `1/B` prelog.
    pub orthogonal_allocation: bool,
    /// Number of filter columns replaced by an arbitrary unit vector because
    /// the effective channel column vanished.
    pub fallback_columns: usize,
}

impl BeamformerSolution {
    pub fn stream_counts(&self) -> Vec<usize> {
        self.precoders.iter().map(|v| v.ncols()).collect()
    }

    /// Transmit covariance `S_b = V_b P_b V_b^H`.
    pub fn transmit_covariance(&self, b: usize) -> CMat {
        let v = &self.precoders[b];
        let mut s = CMat::zeros(v.nrows(), v.nrows());
        for k in 0..v.ncols() {
            let col = v.column(k);
            s += (&col * col.adjoint()).scale(self.powers[b][k]);
        }
        s
    }

    /// Check the solution invariants against its design problem.
    pub fn check(&self, problem: &DesignProblem) -> Result<()> {
        let n_bs = problem.n_bs();
        if self.precoders.len() != n_bs
            || self.powers.len() != n_bs
            || self.combiners.len() != n_bs
        {
            return Err(Error::NumericalFailure(
                "solution does not cover every base station".into(),
            ));
        }
        for b in 0..n_bs {
            let v = &self.precoders[b];
            let d = v.ncols();
            if d < 1 || d > problem.max_streams(b) {
                return Err(Error::NumericalFailure(format!(
                    "stream count {d} at base station {b} out of range"
                )));
            }
            if v.nrows() != problem.n_tx(b)
                || self.combiners[b].nrows() != problem.n_rx(b)
                || self.combiners[b].ncols() != d
                || self.powers[b].len() != d
            {
                return Err(Error::NumericalFailure("solution dimensions".into()));
            }
            for k in 0..d {
                if (v.column(k).norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::NumericalFailure(format!(
                        "precoder column ({b},{k}) is not unit norm"
                    )));
                }
                if self.powers[b][k] < 0.0 {
                    return Err(Error::NumericalFailure("negative stream power".into()));
                }
                if self.combiners[b].column(k).norm() == 0.0 {
                    return Err(Error::NumericalFailure("zero combiner column".into()));
                }
            }
            let total: f64 = self.powers[b].iter().sum();
            if total > problem.power() + 1e-9 {
                return Err(Error::NumericalFailure(format!(
                    "power budget exceeded at base station {b}: {total}"
                )));
            }
        }
        Ok(())
    }
}

/// Equal split of the budget over `d` streams.
pub(crate) fn equal_powers(power: f64, d: usize) -> DVector<f64> {
    DVector::from_element(d, power / d as f64)
}

/// Total received covariance at terminal `b` for the given design:
/// own-stream plus cross-link terms plus the effective noise floor.
pub(crate) fn received_covariance(
    problem: &DesignProblem,
    precoders: &[CMat],
    powers: &[DVector<f64>],
    b: usize,
    include_cross: bool,
) -> CMat {
    let n_rx = problem.n_rx(b);
    let mut r = scaled_eye(n_rx, problem.noise(b));
    for l in 0..problem.n_bs() {
        if l != b && !include_cross {
            continue;
        }
        let g = problem.channel(b, l);
        for k in 0..precoders[l].ncols() {
            let eff = g * precoders[l].column(k);
            r += (&eff * eff.adjoint()).scale(powers[l][k]);
        }
    }
    r
}

/// Per-stream MMSE reception combiners shared by all schemes at evaluation
/// time: `U_b^(k) = R_b^{-1} G_{b,b} v_k P_k`, the minimiser of the stream's
/// mean squared error against the power-scaled symbol.
pub fn mmse_combiner(
    problem: &DesignProblem,
    precoders: &[CMat],
    powers: &[DVector<f64>],
) -> Result<Vec<CMat>> {
    mmse_combiner_inner(problem, precoders, powers, true)
}

pub(crate) fn mmse_combiner_inner(
    problem: &DesignProblem,
    precoders: &[CMat],
    powers: &[DVector<f64>],
    include_cross: bool,
) -> Result<Vec<CMat>> {
    let mut combiners = Vec::with_capacity(problem.n_bs());
    for b in 0..problem.n_bs() {
        let r = received_covariance(problem, precoders, powers, b, include_cross);
        let lu = r.lu();
        let mut u = CMat::zeros(problem.n_rx(b), precoders[b].ncols());
        for k in 0..precoders[b].ncols() {
            // a switched-off stream keeps the unscaled MMSE direction so the
            // combiner column stays nonzero
            let scale = if powers[b][k] > 0.0 { powers[b][k] } else { 1.0 };
            let eff = (problem.channel(b, b) * precoders[b].column(k)).scale(scale);
            let col = lu.solve(&eff).ok_or_else(|| {
                Error::NumericalFailure("received covariance is singular".into())
            })?;
            u.set_column(k, &col);
        }
        combiners.push(u);
    }
    Ok(combiners)
}

/// Total interference power left after combining:
/// `sum_b sum_{l != b} || U_b^H G_{b,l} V_l P_l^{1/2} ||_F^2`.
/// Zero exactly when all intra-cluster interference is nulled.
pub fn interference_leakage(solution: &BeamformerSolution, problem: &DesignProblem) -> f64 {
    leakage_of(
        problem,
        &solution.combiners,
        &solution.precoders,
        &solution.powers,
    )
}

pub(crate) fn leakage_of(
    problem: &DesignProblem,
    combiners: &[CMat],
    precoders: &[CMat],
    powers: &[DVector<f64>],
) -> f64 {
    let mut total = 0.0;
    for b in 0..problem.n_bs() {
        for l in 0..problem.n_bs() {
            if l == b {
                continue;
            }
            let cross = combiners[b].adjoint() * problem.channel(b, l) * &precoders[l];
            for k in 0..cross.ncols() {
                total += powers[l][k] * cross.column(k).norm_squared();
            }
        }
    }
    total
}

/// Cluster sum rate evaluated on the *design* channels with the problem's
/// effective noise floor — the objective traced by the WMMSE-family schemes.
pub fn design_sum_rate(
    problem: &DesignProblem,
    precoders: &[CMat],
    powers: &[DVector<f64>],
) -> Result<f64> {
    let covs: Vec<CMat> = (0..problem.n_bs())
        .map(|b| {
            let v = &precoders[b];
            let mut s = CMat::zeros(v.nrows(), v.nrows());
            for k in 0..v.ncols() {
                let col = v.column(k);
                s += (&col * col.adjoint()).scale(powers[b][k]);
            }
            s
        })
        .collect();
    design_sum_rate_cov(problem, &covs)
}

pub(crate) fn design_sum_rate_cov(problem: &DesignProblem, covs: &[CMat]) -> Result<f64> {
    let mut rate = 0.0;
    for b in 0..problem.n_bs() {
        let n_rx = problem.n_rx(b);
        let mut q = scaled_eye(n_rx, problem.noise(b));
        for l in 0..problem.n_bs() {
            if l == b {
                continue;
            }
            let g = problem.channel(b, l);
            q += g * &covs[l] * g.adjoint();
        }
        let g = problem.channel(b, b);
        let signal = g * &covs[b] * g.adjoint();
        rate += crate::linalg::log2_det_whitened(&q, &signal)?;
    }
    Ok(rate)
}

/// Per-stream SINR on the design channels with the expected OCI-plus-noise
/// floor — the quantity the reconfigurable scheme thresholds for stream
/// adaptation.
pub(crate) fn design_stream_sinr(
    problem: &DesignProblem,
    precoders: &[CMat],
    powers: &[DVector<f64>],
    combiners: &[CMat],
    b: usize,
    kappa: usize,
) -> f64 {
    let u_k = combiners[b].column(kappa);
    let own = combiners[b].adjoint() * problem.channel(b, b) * &precoders[b];
    let signal = powers[b][kappa] * own[(kappa, kappa)].norm_sqr();
    let mut interference = 0.0;
    for lam in 0..precoders[b].ncols() {
        if lam != kappa {
            interference += powers[b][lam] * own[(kappa, lam)].norm_sqr();
        }
    }
    for l in 0..problem.n_bs() {
        if l == b {
            continue;
        }
        let cross = combiners[b].adjoint() * problem.channel(b, l) * &precoders[l];
        for mu in 0..precoders[l].ncols() {
            interference += powers[l][mu] * cross[(kappa, mu)].norm_sqr();
        }
    }
    let floor = problem.noise(b) * u_k.norm_squared();
    signal / (interference + floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    /// Clone a problem with a longer iteration budget, for convergence tests.
    pub(crate) fn long_budget(p: DesignProblem, max_iters: usize, tol: f64) -> DesignProblem {
        DesignProblem::from_channels(
            (0..p.n_bs())
                .map(|b| (0..p.n_bs()).map(|l| p.channel(b, l).clone()).collect())
                .collect(),
            p.power(),
            (0..p.n_bs()).map(|b| p.noise(b)).collect(),
            max_iters,
            tol,
        )
        .unwrap()
    }

    pub(crate) fn random_problem(
        seed: u64,
        n_bs: usize,
        n_tx: usize,
        n_rx: usize,
        noise: f64,
    ) -> DesignProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels: Vec<Vec<CMat>> = (0..n_bs)
            .map(|_| {
                (0..n_bs)
                    .map(|_| {
                        CMat::from_fn(n_rx, n_tx, |_, _| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            Complex64::new(re, im) / (2.0 * (n_tx * n_rx) as f64).sqrt()
                        })
                    })
                    .collect()
            })
            .collect();
        DesignProblem::from_channels(channels, 1.0, vec![noise; n_bs], 10, 1e-4).unwrap()
    }

    /// Problem drawn from the physical model at an operating point, with the
    /// same cross-link scaling and OCI-aware noise floor the sweep harness
    /// builds (perfect CSI, `P = 1`, `N0 = 1 / SNR`).
    pub(crate) fn scenario_problem(
        seed: u64,
        n_bs: usize,
        n_tx: usize,
        n_rx: usize,
        alpha: f64,
        beta: f64,
        snr_db: f64,
        max_iters: usize,
        tol: f64,
    ) -> DesignProblem {
        use crate::model::{ChannelRealization, Pilots};
        let snr = crate::db_to_linear(snr_db);
        let cfg = crate::model::ClusterConfig::uniform(n_bs, n_tx, n_rx, 1.0, 1.0 / snr);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = ChannelRealization::sample(&cfg, Pilots::Infinite, snr, &mut rng).unwrap();
        DesignProblem::new(&cfg, alpha, beta, true, &ch.estimated, max_iters, tol).unwrap()
    }

    /// Dominant right-singular-vector precoders per base station.
    pub(crate) fn egoistic_precoders(problem: &DesignProblem, streams: &[usize]) -> Vec<CMat> {
        (0..problem.n_bs())
            .map(|b| {
                crate::linalg::dominant_right_singular_vectors(problem.channel(b, b), streams[b])
            })
            .collect()
    }

    fn scalar_problem(h: Complex64, power: f64, noise: f64) -> (DesignProblem, Vec<CMat>) {
        let channels = vec![vec![CMat::from_element(1, 1, h)]];
        let problem = DesignProblem::from_channels(channels, power, vec![noise], 10, 1e-4).unwrap();
        let v = vec![CMat::from_element(1, 1, Complex64::new(1.0, 0.0))];
        (problem, v)
    }

    #[test]
    fn mmse_combiner_matches_scalar_closed_form() {
        let h = Complex64::new(0.6, -0.8);
        let (p, sigma2) = (2.0, 0.3);
        let (problem, v) = scalar_problem(h, p, sigma2);
        let powers = vec![DVector::from_element(1, p)];
        let u = mmse_combiner(&problem, &v, &powers).unwrap();
        let expected = h * p / (p * h.norm_sqr() + sigma2);
        assert_relative_eq!(u[0][(0, 0)].re, expected.re, epsilon = 1e-12);
        assert_relative_eq!(u[0][(0, 0)].im, expected.im, epsilon = 1e-12);
    }

    #[test]
    fn mmse_combiner_minimises_stream_mse() {
        // Perturbing any combiner column must not lower the stream MSE
        // E|u^H y - sqrt(P_k) s_k|^2 = u^H R u - 2 Re(u^H G v_k P_k) + P_k.
        let problem = random_problem(40, 3, 4, 3, 0.2);
        let streams = vec![2usize; 3];
        let v = egoistic_precoders(&problem, &streams);
        let powers: Vec<DVector<f64>> = (0..3).map(|_| equal_powers(1.0, 2)).collect();
        let u = mmse_combiner(&problem, &v, &powers).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for b in 0..3 {
            let r = received_covariance(&problem, &v, &powers, b, true);
            for k in 0..2 {
                let eff = (problem.channel(b, b) * v[b].column(k)).scale(powers[b][k]);
                let mse = |col: &CVec| -> f64 {
                    let quad = (col.adjoint() * &r * col)[(0, 0)].re;
                    let lin = (col.adjoint() * &eff)[(0, 0)].re;
                    quad - 2.0 * lin + powers[b][k]
                };
                let opt = u[b].column(k).clone_owned();
                let base = mse(&opt);
                for _ in 0..100 {
                    let noise = CVec::from_fn(opt.len(), |_, _| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im) * 1e-2
                    });
                    let perturbed = &opt + noise;
                    assert!(mse(&perturbed) >= base - 1e-12);
                }
            }
        }
    }

    #[test]
    fn mmse_combiner_tends_to_matched_filter_in_noise_limit() {
        let problem = random_problem(42, 2, 4, 3, 1e9);
        let streams = vec![1usize; 2];
        let v = egoistic_precoders(&problem, &streams);
        let powers: Vec<DVector<f64>> = (0..2).map(|_| equal_powers(1.0, 1)).collect();
        let u = mmse_combiner(&problem, &v, &powers).unwrap();
        for b in 0..2 {
            let mf = problem.channel(b, b) * v[b].column(0);
            let cosine = (u[b].column(0).adjoint() * &mf)[(0, 0)].norm()
                / (u[b].column(0).norm() * mf.norm());
            assert!(cosine > 1.0 - 1e-6, "cosine {cosine}");
        }
    }

    #[test]
    fn leakage_is_quadratic_in_cross_channels() {
        let problem = random_problem(43, 3, 3, 2, 0.1);
        let streams = vec![1usize; 3];
        let v = egoistic_precoders(&problem, &streams);
        let powers: Vec<DVector<f64>> = (0..3).map(|_| equal_powers(1.0, 1)).collect();
        let u = mmse_combiner(&problem, &v, &powers).unwrap();
        let base = leakage_of(&problem, &u, &v, &powers);
        // double every cross channel
        let mut channels: Vec<Vec<CMat>> = (0..3)
            .map(|b| (0..3).map(|l| problem.channel(b, l).clone()).collect())
            .collect();
        for b in 0..3 {
            for l in 0..3 {
                if l != b {
                    channels[b][l] = channels[b][l].scale(2.0);
                }
            }
        }
        let doubled =
            DesignProblem::from_channels(channels, 1.0, vec![0.1; 3], 10, 1e-4).unwrap();
        let scaled = leakage_of(&doubled, &u, &v, &powers);
        assert_relative_eq!(scaled, 4.0 * base, epsilon = 1e-12 * base.max(1.0));
    }

    #[test]
    fn leakage_is_zero_without_interferers() {
        let problem = random_problem(44, 1, 3, 2, 0.1);
        let streams = vec![2usize];
        let v = egoistic_precoders(&problem, &streams);
        let powers = vec![equal_powers(1.0, 2)];
        let u = mmse_combiner(&problem, &v, &powers).unwrap();
        assert_eq!(leakage_of(&problem, &u, &v, &powers), 0.0);
    }

    #[test]
    fn stream_bounds_are_enforced() {
        let problem = random_problem(45, 2, 2, 2, 0.1);
        assert!(problem.check_streams(&[1, 2]).is_ok());
        assert!(problem.check_streams(&[0, 1]).is_err());
        assert!(problem.check_streams(&[3, 1]).is_err());
        assert!(problem.check_streams(&[1]).is_err());
    }
}
