use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fdrelay::harness::{parse_config, run_and_write, summarize, ExperimentKind};

#[derive(Parser)]
#[command(name = "fdrelay", version, about = "Full-duplex MIMO relay rate experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate versus pilot training length T
    SweepTraining(Common),
    /// Rate versus relay INR
    SweepInr(Common),
    /// Rate versus relay SNR
    SweepSnr(Common),
    /// Optimized rate over a (SNR, INR) grid
    Contour(Common),
    /// Closed-form approximation over a (SNR, INR) grid
    ApproxContour(Common),
    /// Rate versus (N, M) antenna splits
    SweepAntennas(Common),
}

#[derive(Args)]
struct Common {
    /// key=value or JSON config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full trial counts and tau grid instead of desk-scale defaults
    #[arg(long)]
    full_scale: bool,
    #[arg(long, allow_hyphen_values = true)]
    rho_r_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta_r_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta_db: Option<f64>,
    /// Transmit antennas at source and relay
    #[arg(long)]
    nt: Option<usize>,
    /// Receive antennas at relay and destination
    #[arg(long)]
    mr: Option<usize>,
    #[arg(long)]
    train_len: Option<usize>,
    /// Comma-separated sweep values (NxM pairs for the antenna sweep)
    #[arg(long)]
    sweep_values: Option<String>,
    /// Comma-separated scheme names
    #[arg(long)]
    schemes: Option<String>,
    /// Record per-scheme wall time (makes the CSV run-dependent)
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        put("seed", self.seed.map(|v| v.to_string()));
        put("trials", self.trials.map(|v| v.to_string()));
        put("out_path", self.out.as_ref().map(|p| p.display().to_string()));
        put("rho_r_db", self.rho_r_db.map(|v| v.to_string()));
        put("eta_r_db", self.eta_r_db.map(|v| v.to_string()));
        put("kappa_db", self.kappa_db.map(|v| v.to_string()));
        put("beta_db", self.beta_db.map(|v| v.to_string()));
        put("n_s", self.nt.map(|v| v.to_string()));
        put("n_r", self.nt.map(|v| v.to_string()));
        put("m_r", self.mr.map(|v| v.to_string()));
        put("m_d", self.mr.map(|v| v.to_string()));
        put("train_len", self.train_len.map(|v| v.to_string()));
        put("sweep_values", self.sweep_values.clone());
        put("schemes", self.schemes.clone());
        put("record_timing", self.timing.then(|| "true".to_string()));
        o
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, common) = match &cli.cmd {
        Command::SweepTraining(c) => (ExperimentKind::TrainingSweep, c),
        Command::SweepInr(c) => (ExperimentKind::InrSweep, c),
        Command::SweepSnr(c) => (ExperimentKind::SnrSweep, c),
        Command::Contour(c) => (ExperimentKind::Contour, c),
        Command::ApproxContour(c) => (ExperimentKind::ApproxContour, c),
        Command::SweepAntennas(c) => (ExperimentKind::AntennaSweep, c),
    };
    let result = parse_config(kind, common.config.as_deref(), &common.overrides(), common.full_scale)
        .and_then(|cfg| run_and_write(&cfg));
    match result {
        Ok(out) => {
            for s in summarize(&out.records) {
                let v2 = s.sweep_value_2.map(|v| format!(" / {v}")).unwrap_or_default();
                println!(
                    "{:>10}{v2:<8} {:<10} lower {:8.4}  upper {:8.4}  (n={})",
                    s.sweep_value,
                    s.scheme,
                    s.rate_lower(),
                    s.rate_upper(),
                    s.count
                );
            }
            println!("wrote {}", out.csv_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
