//! Seeded Monte Carlo harness: sweep (scheme, SNR, trial) cells, average the
//! cluster sum rate, and keep everything reproducible.
//!
//! Channel and noise draws take their seed from `(master, snr, trial)` only,
//! so every scheme evaluates the identical realization of each trial (paired
//! comparison). Trials may execute on any number of workers; results are
//! collected in canonical (scheme, SNR, trial) order, so the table is
//! bit-identical regardless of parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::metrics::cluster_sum_rate;
use crate::model::{ChannelRealization, ClusterConfig, Scenario};
use crate::schemes::{
    full_reuse_baseline, ia_min_leakage, max_sinr, orthogonal_baseline, reconfigurable,
    wmmse, DesignProblem, IaOpts, ReconfigOpts,
};
use crate::{db_to_linear, Error, Result};

/// The five transmission strategies plus the orthogonal reference, in
/// canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Ia,
    MaxSinr,
    Wmmse,
    Reconfigurable,
    FullReuse,
    Orthogonal,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::Ia,
        SchemeId::MaxSinr,
        SchemeId::Wmmse,
        SchemeId::Reconfigurable,
        SchemeId::FullReuse,
        SchemeId::Orthogonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Ia => "ia",
            SchemeId::MaxSinr => "max_sinr",
            SchemeId::Wmmse => "wmmse",
            SchemeId::Reconfigurable => "reconfigurable",
            SchemeId::FullReuse => "full_reuse",
            SchemeId::Orthogonal => "orthogonal",
        }
    }

    pub fn index(self) -> u32 {
        self as u32
    }
}

impl std::str::FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ia" => Ok(SchemeId::Ia),
            "max_sinr" => Ok(SchemeId::MaxSinr),
            "wmmse" => Ok(SchemeId::Wmmse),
            "reconfigurable" => Ok(SchemeId::Reconfigurable),
            "full_reuse" => Ok(SchemeId::FullReuse),
            "orthogonal" => Ok(SchemeId::Orthogonal),
            other => Err(Error::Validation(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Scheme slot used when deriving the seed of the channel and noise draws,
/// reserved so those draws depend only on the (SNR, trial) cell.
pub const CHANNEL_STREAM: u32 = u32::MAX;

/// Deterministic, collision-resistant seed for one (scheme, SNR, trial)
/// cell: the leading 64 bits of a SHA-256 over the domain-tagged tuple.
pub fn derive_trial_seed(master: u64, scheme_index: u32, snr_index: u32, trial_index: u32) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"cbsim.trial.v1");
    hasher.update(master.to_le_bytes());
    hasher.update(scheme_index.to_le_bytes());
    hasher.update(snr_index.to_le_bytes());
    hasher.update(trial_index.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Result of one (scheme, SNR, trial) cell.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub scheme: SchemeId,
    pub snr_db: f64,
    pub trial: usize,
    pub sum_rate: f64,
    /// Stream count sent by each base station.
    pub streams: Vec<usize>,
    /// Iterations spent by the design (both passes for the reconfigurable
    /// scheme).
    pub iterations: usize,
    /// Final alignment leakage (IA only).
    pub residual_leakage: Option<f64>,
}

/// A trial whose design broke down numerically; recorded, not fatal.
#[derive(Debug, Clone)]
pub struct TrialFailure {
    pub scheme: SchemeId,
    pub snr_db: f64,
    pub trial: usize,
    pub message: String,
}

/// Mean and standard error of one (scheme, SNR) cell.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub scheme: SchemeId,
    pub snr_db: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Trials excluded from the mean because the design failed.
    pub excluded: usize,
}

/// All trial results of a sweep in canonical order, with per-cell
/// aggregates appended.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub alpha: f64,
    pub beta: f64,
    pub nakagami_m: f64,
    pub pilots: crate::model::Pilots,
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Vec<Aggregate>,
}

impl ResultTable {
    /// Fraction of attempted trials that failed numerically.
    pub fn failure_rate(&self) -> f64 {
        let attempted = self.trials.len() + self.failures.len();
        if attempted == 0 {
            0.0
        } else {
            self.failures.len() as f64 / attempted as f64
        }
    }

    /// Aggregate for one (scheme, SNR) cell.
    pub fn aggregate(&self, scheme: SchemeId, snr_db: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.scheme == scheme && a.snr_db == snr_db)
    }
}

/// Per-terminal stream counts for IA and max-SINR: the scenario preset, or
/// the alignment feasibility rule `max(1, min(nT, nR) / 2)`.
pub fn preset_streams(cfg: &ClusterConfig, scenario: &Scenario) -> Vec<usize> {
    (0..cfg.n_bs)
        .map(|b| {
            let ceiling = cfg.n_tx[b].min(cfg.n_rx[b]);
            scenario
                .preset_streams
                .unwrap_or_else(|| (ceiling / 2).max(1))
                .min(ceiling)
        })
        .collect()
}

/// Run one (scheme, SNR, trial) cell: draw the channels and estimates, build
/// the design problem from the estimates, run the scheme, and evaluate the
/// sum rate on the actual channels.
pub fn run_trial(
    cfg: &ClusterConfig,
    scenario: &Scenario,
    scheme: SchemeId,
    snr_index: usize,
    trial_index: usize,
) -> Result<TrialResult> {
    let snr_db = *scenario
        .snr_db
        .get(snr_index)
        .ok_or_else(|| Error::InvalidArgument("snr index out of range".into()))?;
    if trial_index >= scenario.trials {
        return Err(Error::InvalidArgument("trial index out of range".into()));
    }
    let snr = db_to_linear(snr_db);
    let at_point = cfg.with_noise_var(cfg.power / snr);

    let seed = derive_trial_seed(
        scenario.master_seed,
        CHANNEL_STREAM,
        snr_index as u32,
        trial_index as u32,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = ChannelRealization::sample(&at_point, scenario.pilots, snr, &mut rng)?;

    let problem = DesignProblem::new(
        &at_point,
        scenario.alpha,
        scenario.beta,
        true,
        &channels.estimated,
        scenario.max_iters,
        scenario.tol,
    )?;
    let solution = match scheme {
        SchemeId::Ia => {
            let opts = IaOpts {
                max_iters: scenario.ia_max_iters,
                leakage_tol: scenario.ia_leakage_tol,
                ..IaOpts::default()
            };
            ia_min_leakage(&problem, &preset_streams(&at_point, scenario), &opts)?
        }
        SchemeId::MaxSinr => max_sinr(&problem, &preset_streams(&at_point, scenario))?,
        SchemeId::Wmmse => wmmse(&problem)?,
        SchemeId::Reconfigurable => {
            let opts = ReconfigOpts {
                mix_weight: scenario.mix_weight,
                min_sinr_db: scenario.min_stream_sinr_db,
            };
            reconfigurable(&problem, &opts)?
        }
        SchemeId::FullReuse => full_reuse_baseline(&problem)?,
        SchemeId::Orthogonal => orthogonal_baseline(&problem)?,
    };

    let rate = cluster_sum_rate(
        &at_point,
        scenario.alpha,
        scenario.beta,
        &channels.actual,
        &solution,
    )?;
    Ok(TrialResult {
        scheme,
        snr_db,
        trial: trial_index,
        sum_rate: rate.value,
        streams: solution.stream_counts(),
        iterations: solution.iterations,
        residual_leakage: solution.residual_leakage,
    })
}

/// Cartesian sweep over (scheme, SNR, trial). `workers` limits the thread
/// count when the `parallel` feature is active (`None` or `Some(0)` uses all
/// cores); execution order never changes the output.
pub fn run_sweep(
    cfg: &ClusterConfig,
    scenario: &Scenario,
    schemes: &[SchemeId],
    workers: Option<usize>,
) -> Result<ResultTable> {
    cfg.validate()?;
    scenario.validate()?;
    if schemes.is_empty() {
        return Err(Error::Validation("schemes list must not be empty".into()));
    }
    let mut ordered: Vec<SchemeId> = schemes.to_vec();
    ordered.sort();
    ordered.dedup();

    let mut tasks = Vec::new();
    for &scheme in &ordered {
        for snr_index in 0..scenario.snr_db.len() {
            for trial_index in 0..scenario.trials {
                tasks.push((scheme, snr_index, trial_index));
            }
        }
    }

    let outcomes = execute(cfg, scenario, &tasks, workers)?;

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for ((scheme, snr_index, trial_index), outcome) in tasks.into_iter().zip(outcomes) {
        match outcome {
            Ok(result) => trials.push(result),
            Err(err) => failures.push(TrialFailure {
                scheme,
                snr_db: scenario.snr_db[snr_index],
                trial: trial_index,
                message: err.to_string(),
            }),
        }
    }

    let mut aggregates = Vec::new();
    for &scheme in &ordered {
        for &snr_db in &scenario.snr_db {
            let values: Vec<f64> = trials
                .iter()
                .filter(|t| t.scheme == scheme && t.snr_db == snr_db)
                .map(|t| t.sum_rate)
                .collect();
            let excluded = failures
                .iter()
                .filter(|f| f.scheme == scheme && f.snr_db == snr_db)
                .count();
            if values.is_empty() {
                aggregates.push(Aggregate {
                    scheme,
                    snr_db,
                    mean: f64::NAN,
                    std_error: f64::NAN,
                    excluded,
                });
                continue;
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_error = if values.len() > 1 {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            aggregates.push(Aggregate {
                scheme,
                snr_db,
                mean,
                std_error,
                excluded,
            });
        }
    }

    Ok(ResultTable {
        alpha: scenario.alpha,
        beta: scenario.beta,
        nakagami_m: scenario.nakagami_m,
        pilots: scenario.pilots,
        trials,
        failures,
        aggregates,
    })
}

#[cfg(feature = "parallel")]
fn execute(
    cfg: &ClusterConfig,
    scenario: &Scenario,
    tasks: &[(SchemeId, usize, usize)],
    workers: Option<usize>,
) -> Result<Vec<Result<TrialResult>>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::NumericalFailure(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(scheme, snr_index, trial_index)| {
                run_trial(cfg, scenario, scheme, snr_index, trial_index)
            })
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn execute(
    cfg: &ClusterConfig,
    scenario: &Scenario,
    tasks: &[(SchemeId, usize, usize)],
    _workers: Option<usize>,
) -> Result<Vec<Result<TrialResult>>> {
    Ok(tasks
        .iter()
        .map(|&(scheme, snr_index, trial_index)| {
            run_trial(cfg, scenario, scheme, snr_index, trial_index)
        })
        .collect())
}
