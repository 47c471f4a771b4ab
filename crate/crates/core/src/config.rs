//! Flat `key = value` scenario configuration.
//!
//! One assignment per line, `#` starts a comment, lists are comma-separated.
//! Unknown and duplicate keys are rejected; every value is checked against
//! the model invariants. Example:
//!
//! ```text
//! # three-cell cluster, perfect CSI
//! B = 3
//! nT = 8
//! nR = 4
//! alpha = 1.0
//! beta = 0.0
//! np = inf
//! snr_db = 0,5,10,15,20,25,30
//! schemes = ia,max_sinr,wmmse,reconfigurable,full_reuse,orthogonal
//! ```

use std::collections::HashMap;

use crate::model::{ClusterConfig, Pilots, Scenario};
use crate::simulate::SchemeId;
use crate::{Error, Result};

const KNOWN_KEYS: &[&str] = &[
    "B",
    "nT",
    "nR",
    "P",
    "alpha",
    "beta",
    "m",
    "np",
    "snr_db",
    "trials",
    "seed",
    "max_iters",
    "tol",
    "d",
    "lambda",
    "gamma_min_db",
    "ia_max_iters",
    "ia_tol",
    "schemes",
];

/// A tokenised configuration document: raw values by key, with the line each
/// key appeared on.
#[derive(Debug, Clone)]
pub struct ConfigDocument {
    values: HashMap<String, (usize, String)>,
}

impl ConfigDocument {
    /// Tokenise the text. Syntax errors carry line numbers; key-level
    /// validation happens in [`parse_config`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (index, raw_line) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: line_no,
                message: "expected 'key = value'".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            if values.insert(key.to_string(), (line_no, value.to_string())).is_some() {
                return Err(Error::Validation(format!("duplicate key '{key}'")));
            }
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Validation(format!("missing required key '{key}'")))
    }
}

fn parse_number<T: std::str::FromStr>(key: &str, line: usize, value: &str) -> Result<T> {
    value.parse::<T>().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse value '{value}' for key '{key}'"),
    })
}

fn number<T: std::str::FromStr>(doc: &ConfigDocument, key: &str) -> Result<Option<T>> {
    match doc.get(key) {
        None => Ok(None),
        Some((line, value)) => parse_number(key, *line, value).map(Some),
    }
}

fn required_number<T: std::str::FromStr>(doc: &ConfigDocument, key: &str) -> Result<T> {
    doc.require(key)?;
    Ok(number(doc, key)?.expect("key present"))
}

fn counts_list(doc: &ConfigDocument, key: &str, n_bs: usize) -> Result<Vec<usize>> {
    let (line, value) = doc
        .get(key)
        .ok_or_else(|| Error::Validation(format!("missing required key '{key}'")))?;
    let parts: Vec<usize> = value
        .split(',')
        .map(|p| parse_number(key, *line, p.trim()))
        .collect::<Result<_>>()?;
    match parts.len() {
        1 => Ok(vec![parts[0]; n_bs]),
        n if n == n_bs => Ok(parts),
        _ => Err(Error::Validation(format!(
            "key '{key}' must list one value or one per base station"
        ))),
    }
}

/// Parse and validate a configuration document into the cluster topology,
/// the scenario, and the scheme list. Defaults: `P = 1`, `m = 1`,
/// `trials = 100`, `seed = 0`, `max_iters = 10`, `tol = 1e-4`,
/// `lambda = 0.75`, `gamma_min_db = 0`, `ia_max_iters = 2000`,
/// `ia_tol = 1e-10`.
pub fn parse_config(text: &str) -> Result<(ClusterConfig, Scenario, Vec<SchemeId>)> {
    let doc = ConfigDocument::parse(text)?;
    for (key, (_, _)) in doc.values.iter() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Validation(format!("unknown key '{key}'")));
        }
    }

    let n_bs: usize = required_number(&doc, "B")?;
    if n_bs < 1 {
        return Err(Error::Validation("B must be at least 1".into()));
    }
    let n_tx = counts_list(&doc, "nT", n_bs)?;
    let n_rx = counts_list(&doc, "nR", n_bs)?;
    let power: f64 = number(&doc, "P")?.unwrap_or(1.0);

    // noise_var is a per-SNR-point quantity; carry a placeholder consistent
    // with the first grid point so the config validates standalone.
    let cfg = ClusterConfig {
        n_bs,
        n_tx,
        n_rx,
        power,
        noise_var: 1.0,
    };
    cfg.validate()?;

    let pilots = {
        let raw = doc.require("np")?;
        if raw == "inf" {
            Pilots::Infinite
        } else {
            let (line, value) = doc.get("np").expect("np present");
            Pilots::Finite(parse_number("np", *line, value)?)
        }
    };

    let snr_db: Vec<f64> = {
        let (line, value) = doc
            .get("snr_db")
            .ok_or_else(|| Error::Validation("missing required key 'snr_db'".into()))?;
        value
            .split(',')
            .map(|p| parse_number("snr_db", *line, p.trim()))
            .collect::<Result<_>>()?
    };

    let scenario = Scenario {
        alpha: required_number(&doc, "alpha")?,
        beta: required_number(&doc, "beta")?,
        nakagami_m: number(&doc, "m")?.unwrap_or(1.0),
        pilots,
        snr_db,
        trials: number(&doc, "trials")?.unwrap_or(100),
        master_seed: number(&doc, "seed")?.unwrap_or(0),
        max_iters: number(&doc, "max_iters")?.unwrap_or(10),
        tol: number(&doc, "tol")?.unwrap_or(1e-4),
        preset_streams: number(&doc, "d")?,
        mix_weight: number(&doc, "lambda")?.unwrap_or(0.75),
        min_stream_sinr_db: number(&doc, "gamma_min_db")?.unwrap_or(0.0),
        ia_max_iters: number(&doc, "ia_max_iters")?.unwrap_or(2000),
        ia_leakage_tol: number(&doc, "ia_tol")?.unwrap_or(1e-10),
    };
    scenario.validate().map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(msg),
        other => other,
    })?;
    if let Some(d) = scenario.preset_streams {
        for b in 0..cfg.n_bs {
            if d > cfg.n_tx[b].min(cfg.n_rx[b]) {
                return Err(Error::Validation(format!(
                    "d = {d} exceeds min(nT, nR) at base station {b}"
                )));
            }
        }
    }

    let schemes: Vec<SchemeId> = {
        let raw = doc.require("schemes")?;
        let mut list = Vec::new();
        for part in raw.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            list.push(part.parse::<SchemeId>()?);
        }
        if list.is_empty() {
            return Err(Error::Validation("schemes list must not be empty".into()));
        }
        list
    };

    Ok((cfg, scenario, schemes))
}
