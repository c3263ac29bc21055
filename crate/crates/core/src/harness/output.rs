//! CSV persistence of trial records with appended summary rows.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub sweep_value: f64,
    /// Second coordinate for two-axis experiments (`M` or `η_r` dB).
    pub sweep_value_2: Option<f64>,
    pub scheme: String,
    pub rate_lower: f64,
    pub rate_upper: f64,
    pub tau_star: f64,
    pub zeta: f64,
    pub converged: bool,
    /// Seconds spent optimizing; only recorded on request so that outputs
    /// stay reproducible byte for byte.
    pub wall_time: Option<f64>,
}

/// Mean and sample standard deviation over the trials of one
/// `(sweep_value, sweep_value_2, scheme)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub sweep_value: f64,
    pub sweep_value_2: Option<f64>,
    pub scheme: String,
    pub count: usize,
    pub mean: [f64; 4],
    pub std: [f64; 4],
    pub mean_wall_time: Option<f64>,
}

impl Summary {
    pub fn rate_lower(&self) -> f64 {
        self.mean[0]
    }

    pub fn rate_upper(&self) -> f64 {
        self.mean[1]
    }
}

pub const HEADER: [&str; 11] = [
    "row_kind",
    "trial_index",
    "sweep_value",
    "sweep_value_2",
    "scheme",
    "rate_lower",
    "rate_upper",
    "tau_star",
    "zeta",
    "converged",
    "wall_time",
];

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

fn same_key(a: &TrialRecord, b: &Summary) -> bool {
    a.sweep_value.to_bits() == b.sweep_value.to_bits()
        && a.sweep_value_2.map(f64::to_bits) == b.sweep_value_2.map(f64::to_bits)
        && a.scheme == b.scheme
}

/// Groups in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    let mut groups: Vec<(Summary, Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(s, _)| same_key(r, s)) {
            Some((_, members)) => members.push(r),
            None => groups.push((
                Summary {
                    sweep_value: r.sweep_value,
                    sweep_value_2: r.sweep_value_2,
                    scheme: r.scheme.clone(),
                    count: 0,
                    mean: [0.0; 4],
                    std: [0.0; 4],
                    mean_wall_time: None,
                },
                vec![r],
            )),
        }
    }
    groups
        .into_iter()
        .map(|(mut s, members)| {
            let n = members.len() as f64;
            let cols = |r: &TrialRecord| [r.rate_lower, r.rate_upper, r.tau_star, r.zeta];
            for r in &members {
                for (m, v) in s.mean.iter_mut().zip(cols(r)) {
                    *m += v;
                }
            }
            s.mean.iter_mut().for_each(|m| *m /= n);
            if members.len() > 1 {
                for r in &members {
                    for ((sd, m), v) in s.std.iter_mut().zip(s.mean).zip(cols(r)) {
                        *sd += (v - m) * (v - m);
                    }
                }
                s.std.iter_mut().for_each(|sd| *sd = (*sd / (n - 1.0)).sqrt());
            }
            let times: Option<Vec<f64>> = members.iter().map(|r| r.wall_time).collect();
            s.mean_wall_time = times.map(|t| t.iter().sum::<f64>() / n);
            s.count = members.len();
            s
        })
        .collect()
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            "trial".to_string(),
            r.trial_index.to_string(),
            fmt_f(r.sweep_value),
            fmt_opt(r.sweep_value_2),
            r.scheme.clone(),
            fmt_f(r.rate_lower),
            fmt_f(r.rate_upper),
            fmt_f(r.tau_star),
            fmt_f(r.zeta),
            r.converged.to_string(),
            fmt_opt(r.wall_time),
        ])?;
    }
    for s in summarize(records) {
        for (kind, vals, wt) in [("mean", s.mean, s.mean_wall_time), ("std", s.std, None)] {
            w.write_record([
                kind.to_string(),
                String::new(),
                fmt_f(s.sweep_value),
                fmt_opt(s.sweep_value_2),
                s.scheme.clone(),
                fmt_f(vals[0]),
                fmt_f(vals[1]),
                fmt_f(vals[2]),
                fmt_f(vals[3]),
                String::new(),
                fmt_opt(wt),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `records` plus summary rows to `path`.
pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to write".into()));
    }
    write_csv(records, File::create(path)?)
}

fn parse_f(field: &str, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("column {field}: `{s}` is not a number")))
}

fn parse_opt(field: &str, s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f(field, s).map(Some)
    }
}

/// Reads back the per-trial rows of a CSV written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != HEADER {
        return Err(Error::InvalidInput(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if &row[0] != "trial" {
            continue;
        }
        out.push(TrialRecord {
            trial_index: row[1]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("column trial_index: `{}`", &row[1])))?,
            sweep_value: parse_f("sweep_value", &row[2])?,
            sweep_value_2: parse_opt("sweep_value_2", &row[3])?,
            scheme: row[4].to_string(),
            rate_lower: parse_f("rate_lower", &row[5])?,
            rate_upper: parse_f("rate_upper", &row[6])?,
            tau_star: parse_f("tau_star", &row[7])?,
            zeta: parse_f("zeta", &row[8])?,
            converged: row[9]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("column converged: `{}`", &row[9])))?,
            wall_time: parse_opt("wall_time", &row[10])?,
        });
    }
    Ok(out)
}

/// `results.csv` → `results.<suffix>`
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}
