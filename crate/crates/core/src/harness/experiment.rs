//! Seeded Monte-Carlo sweeps.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{approx_rate, DuplexMode, RegimeParams};
use crate::error::Result;
use crate::model::{draw_channels_with, SystemParams};
use crate::optimizer::{optimize_over_tau, SchemeRegistry};
use crate::rates::{end_to_end_rate, BoundKind, EstimateBundle};
use crate::rng::trial_rng;

use super::config::{db_to_linear, ExperimentConfig, ExperimentKind};
use super::output::{emit_csv, sidecar_path, summarize, TrialRecord};

/// One operating point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub value_2: Option<f64>,
    pub params: SystemParams,
}

pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let base = cfg.system_params();
    let ratio = base.rho_r / base.rho_d;
    let scalar = |v: f64, p: SystemParams| SweepPoint {
        value: v,
        value_2: None,
        params: p,
    };
    match cfg.experiment {
        ExperimentKind::TrainingSweep => cfg
            .sweep_values
            .iter()
            .map(|&t| {
                scalar(
                    t,
                    SystemParams {
                        train_len: t as usize,
                        ..base.clone()
                    },
                )
            })
            .collect(),
        ExperimentKind::InrSweep => cfg
            .sweep_values
            .iter()
            .map(|&db| {
                scalar(
                    db,
                    SystemParams {
                        eta_r: db_to_linear(db),
                        ..base.clone()
                    },
                )
            })
            .collect(),
        ExperimentKind::SnrSweep => cfg
            .sweep_values
            .iter()
            .map(|&db| {
                let rho_r = db_to_linear(db);
                scalar(
                    db,
                    SystemParams {
                        rho_r,
                        rho_d: rho_r / ratio,
                        ..base.clone()
                    },
                )
            })
            .collect(),
        ExperimentKind::AntennaSweep => cfg
            .antennas
            .iter()
            .map(|&(n, m)| SweepPoint {
                value: n as f64,
                value_2: Some(m as f64),
                params: base.clone().with_antennas(n, m),
            })
            .collect(),
        ExperimentKind::Contour | ExperimentKind::ApproxContour => {
            let mut pts = Vec::new();
            for &r in &cfg.contour_rho_r_db {
                for &e in &cfg.contour_eta_r_db {
                    let rho_r = db_to_linear(r);
                    pts.push(SweepPoint {
                        value: r,
                        value_2: Some(e),
                        params: SystemParams {
                            rho_r,
                            rho_d: rho_r / ratio,
                            eta_r: db_to_linear(e),
                            ..base.clone()
                        },
                    });
                }
            }
            pts
        }
    }
}

/// All schemes on one channel draw. The draw depends only on the seed and
/// the trial index, so every sweep value sees the same channels.
pub fn run_trial(cfg: &ExperimentConfig, point: &SweepPoint, trial_index: usize) -> Result<Vec<TrialRecord>> {
    let params = &point.params;
    let mut rng = trial_rng(cfg.seed, trial_index as u64);
    let ch = draw_channels_with(params, &mut rng);
    let est = EstimateBundle::from_training(&ch, params, &mut rng)?;
    let registry = SchemeRegistry::global();
    let mut out = Vec::with_capacity(cfg.schemes.len());
    for id in &cfg.schemes {
        let scheme = registry.get(id.as_str())?;
        let start = Instant::now();
        let res = optimize_over_tau(scheme, &est, params, &cfg.tau_grid, &cfg.gp)?;
        let elapsed = start.elapsed().as_secs_f64();
        let upper = end_to_end_rate(&est, &res.sched, params, BoundKind::Upper, scheme.cancellation())?;
        out.push(TrialRecord {
            trial_index,
            sweep_value: point.value,
            sweep_value_2: point.value_2,
            scheme: scheme.name().to_string(),
            rate_lower: res.rate.i_end,
            rate_upper: upper.i_end,
            tau_star: res.tau_star,
            zeta: res.zeta,
            converged: res.converged,
            wall_time: cfg.record_timing.then_some(elapsed),
        });
    }
    Ok(out)
}

fn approx_record(point: &SweepPoint) -> Result<TrialRecord> {
    let (rate, mode) = approx_rate(&RegimeParams::from_system(&point.params)?);
    Ok(TrialRecord {
        trial_index: 0,
        sweep_value: point.value,
        sweep_value_2: point.value_2,
        scheme: match mode {
            DuplexMode::Full => "APPROX-FD",
            DuplexMode::Half => "APPROX-HD",
        }
        .to_string(),
        rate_lower: rate,
        rate_upper: rate,
        tau_star: 0.5,
        zeta: 0.5,
        converged: true,
        wall_time: None,
    })
}

/// Runs every (sweep point, trial) pair on the rayon pool; records come back
/// in point-major, trial-minor, scheme order whatever the scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let points = sweep_points(cfg);
    if cfg.experiment == ExperimentKind::ApproxContour {
        return points.iter().map(approx_record).collect();
    }
    info!(
        "{}: {} points x {} trials x {} schemes",
        cfg.experiment,
        points.len(),
        cfg.trials,
        cfg.schemes.len()
    );
    let work: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let chunks = work
        .par_iter()
        .map(|&(p, t)| run_trial(cfg, &points[p], t))
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Mean optimized rate over a (ρ_r, η_r) grid next to the closed-form
/// approximation at each cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourGrid {
    pub rho_r_db: Vec<f64>,
    pub eta_r_db: Vec<f64>,
    /// `[i_rho][j_eta]`; `None` when the cell has no optimized records.
    pub mean_rate: Vec<Vec<Option<f64>>>,
    pub approx_rate: Vec<Vec<f64>>,
    pub approx_full_duplex: Vec<Vec<bool>>,
}

impl ContourGrid {
    pub fn from_records(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Result<Self> {
        let sums = summarize(records);
        let base = cfg.system_params();
        let ratio = base.rho_r / base.rho_d;
        let mut grid = Self {
            rho_r_db: cfg.contour_rho_r_db.clone(),
            eta_r_db: cfg.contour_eta_r_db.clone(),
            mean_rate: Vec::new(),
            approx_rate: Vec::new(),
            approx_full_duplex: Vec::new(),
        };
        for &r in &cfg.contour_rho_r_db {
            let (mut mr, mut ar, mut af) = (Vec::new(), Vec::new(), Vec::new());
            for &e in &cfg.contour_eta_r_db {
                let rho_r = db_to_linear(r);
                let p = RegimeParams::new(base.n_s, base.m_r, rho_r, rho_r / ratio, db_to_linear(e), base.kappa, base.beta)?;
                let (a, mode) = approx_rate(&p);
                ar.push(a);
                af.push(mode == DuplexMode::Full);
                let cell = sums.iter().find(|s| {
                    s.sweep_value == r && s.sweep_value_2 == Some(e) && !s.scheme.starts_with("APPROX")
                });
                mr.push(cell.map(|s| s.rate_lower()));
            }
            grid.mean_rate.push(mr);
            grid.approx_rate.push(ar);
            grid.approx_full_duplex.push(af);
        }
        Ok(grid)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rho_r_db", "eta_r_db", "mean_rate_lower", "approx_rate", "approx_mode"])?;
        for (i, r) in self.rho_r_db.iter().enumerate() {
            for (j, e) in self.eta_r_db.iter().enumerate() {
                w.write_record([
                    format!("{r:e}"),
                    format!("{e:e}"),
                    self.mean_rate[i][j].map(|m| format!("{m:e}")).unwrap_or_default(),
                    format!("{:e}", self.approx_rate[i][j]),
                    if self.approx_full_duplex[i][j] { "full" } else { "half" }.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs a contour experiment and tabulates it.
pub fn contour_grid(cfg: &ExperimentConfig) -> Result<ContourGrid> {
    let records = run_experiment(cfg)?;
    ContourGrid::from_records(cfg, &records)
}

#[derive(Serialize)]
struct Meta<'a> {
    version: &'static str,
    seed: u64,
    records: usize,
    config: &'a ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrialRecord>,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
    pub grid_path: Option<PathBuf>,
}

/// Runs `cfg` and writes the CSV, a `<stem>.meta.json` sidecar with the
/// resolved config and, for contour experiments, a `<stem>.grid.csv` table.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let csv_path = cfg.out_path.clone();
    // fail on an unwritable path before doing any work
    File::create(&csv_path)?;
    let records = run_experiment(cfg)?;
    emit_csv(&records, &csv_path)?;

    let meta_path = sidecar_path(&csv_path, "meta.json");
    let meta = Meta {
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        records: records.len(),
        config: cfg,
    };
    let mut f = File::create(&meta_path)?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;

    let grid_path = if cfg.experiment.is_contour() {
        let p = sidecar_path(&csv_path, "grid.csv");
        ContourGrid::from_records(cfg, &records)?.write_csv(File::create(&p)?)?;
        Some(p)
    } else {
        None
    };
    Ok(RunOutput {
        records,
        csv_path,
        meta_path,
        grid_path,
    })
}

pub fn default_out_path(dir: &Path, kind: ExperimentKind) -> PathBuf {
    dir.join(format!("{}.csv", kind.as_str()))
}
