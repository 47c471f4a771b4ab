//! CSV result format.
//!
//! `emit_csv` writes one row per trial under the fixed header
//! `scheme,snr_db,alpha,beta,m,np,trial,sum_rate_bps_hz`, followed per
//! (scheme, SNR) group by aggregate rows flagged `trial = mean` and
//! `trial = stderr`. Floats carry 10 significant digits in locale-independent
//! scientific notation, so output is byte-identical across runs and every
//! numeric field round-trips to better than 1e-9 relative error (9 digits
//! would quantize at up to 5e-9 and break the round-trip guarantee).

use crate::metrics::theory_bounds;
use crate::model::Pilots;
use crate::simulate::{ResultTable, SchemeId};
use crate::{db_to_linear, Error, Result};

pub const RESULT_HEADER: &str = "scheme,snr_db,alpha,beta,m,np,trial,sum_rate_bps_hz";
pub const BOUNDS_HEADER: &str = "snr_db,full_reuse,orthogonal,ia,jt";

/// Format a float with 10 significant digits, enough for 1e-9 relative
/// round-trips.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.9e}")
}

/// Render a result table as CSV text.
pub fn emit_csv(table: &ResultTable) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    let context = |snr_db: f64| {
        format!(
            "{},{},{},{}",
            fmt_sig(snr_db),
            fmt_sig(table.alpha),
            fmt_sig(table.beta),
            fmt_sig(table.nakagami_m),
        )
    };
    // canonical order: scheme, then the grid order trials were produced in
    let mut schemes: Vec<SchemeId> = table.trials.iter().map(|t| t.scheme).collect();
    schemes.extend(table.aggregates.iter().map(|a| a.scheme));
    schemes.sort();
    schemes.dedup();
    for scheme in schemes {
        let mut grid: Vec<f64> = table
            .aggregates
            .iter()
            .filter(|a| a.scheme == scheme)
            .map(|a| a.snr_db)
            .collect();
        if grid.is_empty() {
            grid = table
                .trials
                .iter()
                .filter(|t| t.scheme == scheme)
                .map(|t| t.snr_db)
                .collect();
            grid.dedup();
        }
        for snr_db in grid {
            for trial in table
                .trials
                .iter()
                .filter(|t| t.scheme == scheme && t.snr_db == snr_db)
            {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    scheme.name(),
                    context(snr_db),
                    table.pilots,
                    trial.trial,
                    fmt_sig(trial.sum_rate),
                ));
            }
            if let Some(agg) = table.aggregate(scheme, snr_db) {
                out.push_str(&format!(
                    "{},{},{},mean,{}\n",
                    scheme.name(),
                    context(snr_db),
                    table.pilots,
                    fmt_sig(agg.mean),
                ));
                out.push_str(&format!(
                    "{},{},{},stderr,{}\n",
                    scheme.name(),
                    context(snr_db),
                    table.pilots,
                    fmt_sig(agg.std_error),
                ));
            }
        }
    }
    out
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scheme: String,
    pub snr_db: f64,
    pub alpha: f64,
    pub beta: f64,
    pub nakagami_m: f64,
    pub pilots: Pilots,
    /// `None` for the `mean` / `stderr` aggregate rows.
    pub trial: Option<usize>,
    pub kind: RowKind,
    pub sum_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Trial,
    Mean,
    StdError,
}

/// Parse result CSV text back into rows (used for round-trip checks and by
/// consumers of the wire format).
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty document".into(),
    })?;
    if header != RESULT_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header '{header}'"),
        });
    }
    let mut rows = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad number '{s}'"),
            })
        };
        let (trial, kind) = match fields[6] {
            "mean" => (None, RowKind::Mean),
            "stderr" => (None, RowKind::StdError),
            t => (
                Some(t.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad trial index '{t}'"),
                })?),
                RowKind::Trial,
            ),
        };
        let pilots = if fields[5] == "inf" {
            Pilots::Infinite
        } else {
            Pilots::Finite(fields[5].parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad pilot count '{}'", fields[5]),
            })?)
        };
        rows.push(CsvRow {
            scheme: fields[0].to_string(),
            snr_db: parse_f64(fields[1])?,
            alpha: parse_f64(fields[2])?,
            beta: parse_f64(fields[3])?,
            nakagami_m: parse_f64(fields[4])?,
            pilots,
            trial,
            kind,
            sum_rate: parse_f64(fields[7])?,
        });
    }
    Ok(rows)
}

/// Closed-form bounds over an SNR grid, one row per point.
pub fn emit_bounds_csv(snr_db: &[f64], alpha: f64, beta: f64) -> Result<String> {
    let mut out = String::from(BOUNDS_HEADER);
    out.push('\n');
    for &db in snr_db {
        let b = theory_bounds(db_to_linear(db), alpha, beta, 2)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig(db),
            fmt_sig(b.full_reuse),
            fmt_sig(b.orthogonal),
            fmt_sig(b.ia),
            fmt_sig(b.jt),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ClusterConfig, Scenario};
    use crate::simulate::run_sweep;

    fn tiny_table() -> ResultTable {
        let cfg = ClusterConfig::uniform(2, 2, 2, 1.0, 1.0);
        let scenario = Scenario {
            alpha: 0.5,
            beta: 0.25,
            pilots: Pilots::Finite(10),
            snr_db: vec![0.0, 10.0],
            trials: 2,
            master_seed: 3,
            ..Scenario::default()
        };
        run_sweep(
            &cfg,
            &scenario,
            &[SchemeId::FullReuse, SchemeId::Orthogonal],
            Some(1),
        )
        .unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        let table = ResultTable {
            alpha: 0.0,
            beta: 0.0,
            nakagami_m: 1.0,
            pilots: Pilots::Infinite,
            trials: vec![],
            failures: vec![],
            aggregates: vec![],
        };
        assert_eq!(emit_csv(&table), format!("{RESULT_HEADER}\n"));
    }

    #[test]
    fn one_trial_gives_three_rows_per_cell() {
        let cfg = ClusterConfig::uniform(1, 2, 2, 1.0, 1.0);
        let scenario = Scenario {
            snr_db: vec![5.0],
            trials: 1,
            pilots: Pilots::Infinite,
            ..Scenario::default()
        };
        let table = run_sweep(&cfg, &scenario, &[SchemeId::FullReuse], Some(1)).unwrap();
        let csv = emit_csv(&table);
        let rows = parse_csv(&csv).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].kind, RowKind::Trial);
        assert_eq!(rows[1].kind, RowKind::Mean);
        assert_eq!(rows[2].kind, RowKind::StdError);
        assert_eq!(rows[2].sum_rate, 0.0);
        assert_eq!(rows[0].sum_rate, rows[1].sum_rate);
    }

    #[test]
    fn csv_round_trips_numeric_fields() {
        let table = tiny_table();
        let rows = parse_csv(&emit_csv(&table)).unwrap();
        let trial_rows: Vec<_> = rows.iter().filter(|r| r.kind == RowKind::Trial).collect();
        assert_eq!(trial_rows.len(), table.trials.len());
        for (row, trial) in trial_rows.iter().zip(table.trials.iter()) {
            assert_eq!(row.scheme, trial.scheme.name());
            assert_eq!(row.trial, Some(trial.trial));
            let rel = (row.sum_rate - trial.sum_rate).abs() / trial.sum_rate.abs().max(1e-300);
            assert!(rel < 1e-9, "sum rate round-trip error {rel}");
            assert!((row.snr_db - trial.snr_db).abs() <= 1e-9 * trial.snr_db.abs().max(1.0));
            assert!((row.alpha - table.alpha).abs() <= 1e-9);
            assert!((row.beta - table.beta).abs() <= 1e-9);
        }
    }

    #[test]
    fn csv_emission_is_byte_stable() {
        let a = emit_csv(&tiny_table());
        let b = emit_csv(&tiny_table());
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_csv_carries_the_quoted_values() {
        let csv = emit_bounds_csv(&[15.0], 1.0, 0.25).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), BOUNDS_HEADER);
        let row: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|f| f.parse().unwrap())
            .collect();
        assert!((row[2] - 2.186).abs() < 1e-3, "orthogonal {}", row[2]);
        assert!((row[3] - 4.373).abs() < 1e-3, "ia {}", row[3]);
        assert!((row[4] - 6.036).abs() < 1e-3, "jt {}", row[4]);
    }

    #[test]
    fn bounds_csv_limits() {
        // snr -> 0 gives all-zero rates
        let csv = emit_bounds_csv(&[f64::NEG_INFINITY], 1.0, 0.25).unwrap();
        let row: Vec<f64> = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .skip(1)
            .map(|f| f.parse().unwrap())
            .collect();
        assert!(row.iter().all(|&r| r == 0.0));
        // full reuse saturates at 2 log2(1.5) when alpha = beta = 1
        let csv = emit_bounds_csv(&[120.0], 1.0, 1.0).unwrap();
        let full: f64 = csv
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert!((full - 2.0 * 1.5f64.log2()).abs() < 1e-6, "full {full}");
    }

    #[test]
    fn sig_formatting_round_trips_below_1e9() {
        for x in [
            0.0,
            1.0,
            -2.1863348,
            1.234567891234e-7,
            9.87e12,
            1.000000004999,
        ] {
            let text = fmt_sig(x);
            let back: f64 = text.parse().unwrap();
            let rel = (back - x).abs() / x.abs().max(1e-300);
            assert!(rel < 1e-9 || x == 0.0, "{text} -> {back}");
        }
    }
}
