//! Experiment configuration: defaults, key=value / JSON files and
//! command-line overrides. Every power is given in dB.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::optimizer::{GpConfig, SchemeId};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TrainingSweep,
    InrSweep,
    SnrSweep,
    Contour,
    AntennaSweep,
    ApproxContour,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::TrainingSweep,
        ExperimentKind::InrSweep,
        ExperimentKind::SnrSweep,
        ExperimentKind::Contour,
        ExperimentKind::AntennaSweep,
        ExperimentKind::ApproxContour,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::TrainingSweep => "training_sweep",
            ExperimentKind::InrSweep => "inr_sweep",
            ExperimentKind::SnrSweep => "snr_sweep",
            ExperimentKind::Contour => "contour",
            ExperimentKind::AntennaSweep => "antenna_sweep",
            ExperimentKind::ApproxContour => "approx_contour",
        }
    }

    pub fn is_contour(self) -> bool {
        matches!(self, ExperimentKind::Contour | ExperimentKind::ApproxContour)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.trim().to_ascii_lowercase().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == n)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub rho_r_db: f64,
    /// `ρ_r / ρ_d` in dB; ignored when `rho_d_db` is set.
    pub rho_ratio_db: f64,
    pub rho_d_db: Option<f64>,
    pub eta_r_db: f64,
    pub eta_d_db: f64,
    pub kappa_db: f64,
    pub beta_db: f64,
    pub n_s: usize,
    pub n_r: usize,
    pub m_r: usize,
    pub m_d: usize,
    pub train_len: usize,
    /// Training lengths, INRs (dB) or SNRs (dB) depending on the experiment.
    pub sweep_values: Vec<f64>,
    /// `(N, M)` splits for the antenna sweep.
    pub antennas: Vec<(usize, usize)>,
    pub contour_rho_r_db: Vec<f64>,
    pub contour_eta_r_db: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub trials: usize,
    pub seed: u64,
    pub tau_grid: Vec<f64>,
    pub gp: GpConfig,
    pub out_path: PathBuf,
    pub record_timing: bool,
    pub full_scale: bool,
}

fn range(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

impl ExperimentConfig {
    /// Defaults for `kind`. Desk scale uses 20 trials, τ ∈ {0.3, 0.5, 0.7}
    /// and 9×9 contour grids; full scale uses 100 trials and τ ∈ {0.1, …, 0.9}.
    pub fn defaults(kind: ExperimentKind, full_scale: bool) -> Self {
        let mut c = Self {
            experiment: kind,
            rho_r_db: 15.0,
            rho_ratio_db: 10.0 * 2f64.log10(),
            rho_d_db: None,
            eta_r_db: 40.0,
            eta_d_db: 0.0,
            kappa_db: -40.0,
            beta_db: -40.0,
            n_s: 3,
            n_r: 3,
            m_r: 4,
            m_d: 4,
            train_len: 50,
            sweep_values: Vec::new(),
            antennas: Vec::new(),
            contour_rho_r_db: Vec::new(),
            contour_eta_r_db: Vec::new(),
            schemes: vec![SchemeId::Tco2Ic],
            trials: if full_scale { 100 } else { 20 },
            seed: 1,
            tau_grid: if full_scale {
                range(0.1, 0.1, 9).into_iter().map(|t| (t * 10.0).round() / 10.0).collect()
            } else {
                vec![0.3, 0.5, 0.7]
            },
            gp: GpConfig::default(),
            out_path: PathBuf::from(format!("{}.csv", kind.as_str())),
            record_timing: false,
            full_scale,
        };
        match kind {
            ExperimentKind::TrainingSweep => {
                c.sweep_values = if full_scale {
                    vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
                } else {
                    vec![1.0, 5.0, 50.0]
                };
            }
            ExperimentKind::InrSweep => {
                c.sweep_values = if full_scale { range(0.0, 10.0, 13) } else { range(0.0, 20.0, 6) };
                c.schemes = vec![SchemeId::Tco2Ic, SchemeId::Tco2, SchemeId::Tco1Ic, SchemeId::Ohd];
            }
            ExperimentKind::SnrSweep => {
                c.eta_r_db = 60.0;
                c.sweep_values = if full_scale { range(0.0, 5.0, 11) } else { range(0.0, 10.0, 6) };
                c.schemes = vec![SchemeId::Tco2Ic, SchemeId::Ohd];
            }
            ExperimentKind::AntennaSweep => {
                c.eta_r_db = 30.0;
                c.antennas = (1..=6).map(|n| (n, 7 - n)).collect();
                c.schemes = vec![SchemeId::Tco2Ic, SchemeId::Ohd];
            }
            ExperimentKind::Contour | ExperimentKind::ApproxContour => {
                let (nr, ne) = if full_scale { (17, 21) } else { (9, 9) };
                c.contour_rho_r_db = range(0.0, 40.0 / (nr - 1) as f64, nr);
                c.contour_eta_r_db = range(0.0, 100.0 / (ne - 1) as f64, ne);
                if full_scale && kind == ExperimentKind::Contour {
                    c.trials = 250;
                }
            }
        }
        c
    }

    /// Scenario at the configured operating point, in linear units.
    pub fn system_params(&self) -> SystemParams {
        let rho_r = db_to_linear(self.rho_r_db);
        let rho_d = match self.rho_d_db {
            Some(d) => db_to_linear(d),
            None => rho_r / db_to_linear(self.rho_ratio_db),
        };
        SystemParams {
            rho_r,
            rho_d,
            eta_r: db_to_linear(self.eta_r_db),
            eta_d: db_to_linear(self.eta_d_db),
            kappa: db_to_linear(self.kappa_db),
            beta: db_to_linear(self.beta_db),
            n_s: self.n_s,
            n_r: self.n_r,
            m_r: self.m_r,
            m_d: self.m_d,
            train_len: self.train_len,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment" => {
                let k: ExperimentKind = v.parse()?;
                if k != self.experiment {
                    return Err(Error::config(
                        "experiment",
                        format!("file asks for `{k}` but `{}` is being run", self.experiment),
                    ));
                }
            }
            "rho_r_db" => self.rho_r_db = num(key, v)?,
            "rho_ratio_db" => self.rho_ratio_db = num(key, v)?,
            "rho_d_db" => self.rho_d_db = Some(num(key, v)?),
            "eta_r_db" => self.eta_r_db = num(key, v)?,
            "eta_d_db" => self.eta_d_db = num(key, v)?,
            "kappa_db" => self.kappa_db = num(key, v)?,
            "beta_db" => self.beta_db = num(key, v)?,
            "n_s" => self.n_s = count(key, v)?,
            "n_r" => self.n_r = count(key, v)?,
            "m_r" => self.m_r = count(key, v)?,
            "m_d" => self.m_d = count(key, v)?,
            "train_len" => self.train_len = count(key, v)?,
            "sweep_values" if self.experiment == ExperimentKind::AntennaSweep => self.antennas = pairs(key, v)?,
            "sweep_values" => self.sweep_values = nums(key, v)?,
            "antennas" => self.antennas = pairs(key, v)?,
            "contour_rho_r_db" => self.contour_rho_r_db = nums(key, v)?,
            "contour_eta_r_db" => self.contour_eta_r_db = nums(key, v)?,
            "schemes" => {
                self.schemes = list(v)
                    .map(|s| s.parse::<SchemeId>().map_err(|e| Error::config(key, e.to_string())))
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = count(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| Error::config(key, format!("`{v}` is not an unsigned integer")))?,
            "tau_grid" => self.tau_grid = nums(key, v)?,
            "sigma" => self.gp.sigma = num(key, v)?,
            "nu" => self.gp.nu = num(key, v)?,
            "eps_stop" => self.gp.eps_stop = num(key, v)?,
            "max_outer_iters" => self.gp.max_outer_iters = count(key, v)?,
            "s_step" => self.gp.s_step = num(key, v)?,
            "max_backtracks" => self.gp.max_backtracks = count(key, v)?,
            "bisect_tol" => self.gp.bisect_tol = num(key, v)?,
            "bisect_max_iters" => self.gp.bisect_max_iters = count(key, v)?,
            "out_path" => self.out_path = PathBuf::from(v),
            "record_timing" => self.record_timing = boolean(key, v)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("rho_r_db", self.rho_r_db),
            ("rho_ratio_db", self.rho_ratio_db),
            ("eta_r_db", self.eta_r_db),
            ("eta_d_db", self.eta_d_db),
            ("kappa_db", self.kappa_db),
            ("beta_db", self.beta_db),
        ] {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        for (key, v) in [("kappa_db", self.kappa_db), ("beta_db", self.beta_db)] {
            if v >= 0.0 {
                return Err(Error::config(key, "must be below 0 dB"));
            }
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.schemes.is_empty() && self.experiment != ExperimentKind::ApproxContour {
            return Err(Error::config("schemes", "must not be empty"));
        }
        crate::optimizer::check_tau_grid(&self.tau_grid)?;
        self.gp.validate()?;
        match self.experiment {
            ExperimentKind::TrainingSweep => {
                if self.sweep_values.is_empty() {
                    return Err(Error::config("sweep_values", "must not be empty"));
                }
                if let Some(t) = self.sweep_values.iter().find(|t| !(t.fract() == 0.0 && **t >= 1.0)) {
                    return Err(Error::config("sweep_values", format!("training lengths must be integers >= 1, got {t}")));
                }
            }
            ExperimentKind::InrSweep | ExperimentKind::SnrSweep => {
                if self.sweep_values.is_empty() {
                    return Err(Error::config("sweep_values", "must not be empty"));
                }
                if let Some(v) = self.sweep_values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::config("sweep_values", format!("must be finite, got {v}")));
                }
            }
            ExperimentKind::AntennaSweep => {
                if self.antennas.is_empty() {
                    return Err(Error::config("antennas", "must not be empty"));
                }
            }
            ExperimentKind::Contour | ExperimentKind::ApproxContour => {
                for (key, axis) in [("contour_rho_r_db", &self.contour_rho_r_db), ("contour_eta_r_db", &self.contour_eta_r_db)] {
                    if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) {
                        return Err(Error::config(key, "must be a non-empty list of finite values"));
                    }
                }
                if self.experiment == ExperimentKind::ApproxContour && (self.n_s != self.n_r || self.m_r != self.m_d) {
                    return Err(Error::config("n_s", "the approximation needs n_s = n_r and m_r = m_d"));
                }
            }
        }
        self.system_params().validate()
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::config(key, format!("`{v}` is not a number")))?;
    if x.is_nan() {
        return Err(Error::config(key, "must not be NaN"));
    }
    Ok(x)
}

fn count(key: &str, v: &str) -> Result<usize> {
    let n: usize = v.parse().map_err(|_| Error::config(key, format!("`{v}` is not a positive integer")))?;
    if n == 0 {
        return Err(Error::config(key, "must be >= 1"));
    }
    Ok(n)
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("`{v}` is not a boolean"))),
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.trim_matches(|c| c == '[' || c == ']')
        .split(|c: char| c == ',' || c.is_whitespace())
        .map(|s| s.trim().trim_matches('"'))
        .filter(|s| !s.is_empty())
}

fn nums(key: &str, v: &str) -> Result<Vec<f64>> {
    list(v).map(|s| num(key, s)).collect()
}

fn pairs(key: &str, v: &str) -> Result<Vec<(usize, usize)>> {
    list(v)
        .map(|s| {
            let (a, b) = s
                .split_once(['x', 'X'])
                .ok_or_else(|| Error::config(key, format!("`{s}` is not of the form NxM")))?;
            Ok((count(key, a)?, count(key, b)?))
        })
        .collect()
}

/// Ordered `key → value` settings from a config file.
pub type Settings = Vec<(String, String)>;

/// Reads a key=value file (`#` starts a comment) or a JSON object whose
/// nested objects are flattened into their leaf keys.
pub fn read_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path)?;
    parse_settings(&text)
}

pub fn parse_settings(text: &str) -> Result<Settings> {
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let mut out = BTreeMap::new();
        flatten_json(&v, None, &mut out)?;
        return Ok(out.into_iter().collect());
    }
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", i + 1), format!("expected key = value, got `{line}`")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn flatten_json(v: &serde_json::Value, key: Option<&str>, out: &mut BTreeMap<String, String>) -> Result<()> {
    use serde_json::Value;
    match (v, key) {
        (Value::Object(map), _) => {
            for (k, child) in map {
                flatten_json(child, Some(k), out)?;
            }
        }
        (_, None) => return Err(Error::config("<root>", "config JSON must be an object")),
        (Value::Array(items), Some(k)) => {
            let parts: Vec<String> = items
                .iter()
                .map(|x| match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.insert(k.to_string(), parts.join(","));
        }
        (Value::String(s), Some(k)) => {
            out.insert(k.to_string(), s.clone());
        }
        (Value::Null, Some(k)) => return Err(Error::config(k, "null is not allowed")),
        (other, Some(k)) => {
            out.insert(k.to_string(), other.to_string());
        }
    }
    Ok(())
}

/// Defaults for `kind`, then the file settings, then `overrides` in order.
pub fn parse_config(
    kind: ExperimentKind,
    file: Option<&Path>,
    overrides: &[(String, String)],
    full_scale: bool,
) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(kind, full_scale);
    if let Some(path) = file {
        for (k, v) in read_settings(path)? {
            cfg.set(&k, &v)?;
        }
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}
