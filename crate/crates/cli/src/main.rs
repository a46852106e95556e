//! Command-line front end for the beamforming experiments.
//!
//! Exit status is 0 when every requested solve is optimal, 2 when some are
//! not (the CSV is still written) and 1 on configuration or I/O errors.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use isac_crb::backend::{cholesky_ok, CORETYPE_VAR, SAFE_CORETYPE};
use isac_crb::experiment::{
    run_single, run_sweep, summarize, write_outputs, ExperimentConfig, Profile, ResultRow,
};
use isac_crb::{Error, ModelKind, Result};

#[derive(Parser)]
#[command(
    name = "isac-crb",
    version,
    about = "CRB-minimizing transmit beamforming for extended targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel draw at the configured operating point.
    Single(Common),
    /// Monte-Carlo sweep over power or array size.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file overriding the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Result CSV; the summary goes to `<out>.summary.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Base profile, used unless the config file names one.
    #[arg(long, default_value = "desk")]
    profile: Profile,
    /// Comma-separated subset of psm,dsm,ucm.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long)]
    trials: Option<usize>,
    /// Record solver wall time (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p, self.profile)?,
            None => ExperimentConfig::profile(self.profile),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = &self.models {
            cfg.models = m.clone();
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn print_row(r: &ResultRow) {
    println!(
        "{:<4} {:<18} rcrb_theta0={}deg rcrb_delta={}deg sinr_min={}dB power={}",
        r.model,
        r.solver_status,
        fmt_opt(r.rcrb_theta0_deg),
        fmt_opt(r.rcrb_delta_deg),
        fmt_opt(r.sinr_min_db),
        fmt_opt(r.power_used)
    );
}

fn run(cli: Cli) -> Result<bool> {
    let rows = match &cli.command {
        Command::Single(c) => {
            let cfg = c.config()?;
            let runs = run_single(&cfg)?;
            for m in &runs {
                print_row(&m.row);
                let err = match &m.outcome {
                    Ok(out) => out.error.clone(),
                    Err(e) => Some(e.clone()),
                };
                if let Some(e) = err {
                    eprintln!("{}: {e}", m.row.model);
                }
            }
            let rows: Vec<ResultRow> = runs.into_iter().map(|m| m.row).collect();
            if let Some(out) = &c.out {
                write_outputs(out, &rows)?;
            }
            rows
        }
        Command::Sweep(c) => {
            let out = c
                .out
                .as_ref()
                .ok_or_else(|| Error::Config("sweep needs --out".into()))?;
            let cfg = c.config()?;
            let rows = run_sweep(&cfg)?;
            write_outputs(out, &rows)?;
            for s in summarize(&rows) {
                println!(
                    "{}={} {:<4} ok={} fail={} median_rcrb_theta0={}deg median_rcrb_delta={}deg",
                    cfg.sweep_variable,
                    s.sweep_value,
                    s.model,
                    s.n_ok,
                    s.n_fail,
                    fmt_opt(s.median_rcrb_theta0_deg),
                    fmt_opt(s.median_rcrb_delta_deg)
                );
            }
            rows
        }
    };
    Ok(rows.iter().all(ResultRow::is_optimal))
}

/// Restarts under a safe OpenBLAS kernel family when the loaded one is broken.
fn reexec_if_backend_broken() -> Option<ExitCode> {
    if cholesky_ok() {
        return None;
    }
    if std::env::var_os(CORETYPE_VAR).is_some() {
        eprintln!(
            "warning: LAPACK self-check failed with {CORETYPE_VAR} set; large solves may fail"
        );
        return None;
    }
    let exe = std::env::current_exe().ok()?;
    let status = std::process::Command::new(exe)
        .args(std::env::args_os().skip(1))
        .env(CORETYPE_VAR, SAFE_CORETYPE)
        .status()
        .ok()?;
    Some(ExitCode::from(
        status.code().unwrap_or(1).clamp(0, 255) as u8
    ))
}

fn main() -> ExitCode {
    if let Some(code) = reexec_if_backend_broken() {
        return code;
    }
    // Usage errors exit 1 like other configuration errors; 2 is reserved.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
