//! Seeded Monte-Carlo experiments over the three designs.
//!
//! A sweep runs every `(sweep value, trial)` pair as an independent job.
//! Within a job all models see the same channel draw, so model comparisons
//! are paired. Output rows are sorted by `(sweep value, model, trial)`
//! whatever order the jobs finish in.

mod config;

pub use config::{db_to_linear, ExperimentConfig, GammaDb, Profile, SweepVariable};

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::channel::{draw_user_angles, generate_channels_stream, trial_stream};
use crate::error::Result;
use crate::sdp::{design, DesignInputs, DesignOutcome, SolverStatus};
use crate::target::ModelKind;

/// One `(sweep value, model, trial)` outcome; field order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_variable: String,
    pub sweep_value: f64,
    pub model: String,
    pub trial: usize,
    pub solver_status: String,
    pub rcrb_theta0_deg: Option<f64>,
    pub rcrb_delta_deg: Option<f64>,
    /// `CRB(θ₀) + CRB(Δ)` in rad².
    pub crb_trace: Option<f64>,
    #[serde(rename = "sinr_min_dB")]
    pub sinr_min_db: Option<f64>,
    pub power_used: Option<f64>,
    pub solve_time_ms: Option<f64>,
}

impl ResultRow {
    pub fn is_optimal(&self) -> bool {
        self.solver_status == SolverStatus::Optimal.as_str()
    }

    /// Optimal with a defined CRB, the rows summary statistics use.
    pub fn is_usable(&self) -> bool {
        self.is_optimal() && self.rcrb_theta0_deg.is_some() && self.rcrb_delta_deg.is_some()
    }
}

/// Per `(sweep value, model)` statistics over usable rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub model: String,
    pub n_ok: usize,
    pub n_fail: usize,
    pub mean_rcrb_theta0_deg: Option<f64>,
    pub median_rcrb_theta0_deg: Option<f64>,
    pub mean_rcrb_delta_deg: Option<f64>,
    pub median_rcrb_delta_deg: Option<f64>,
}

/// Full outcome of one model in one trial.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub row: ResultRow,
    /// `Err` when the design could not be set up at all.
    pub outcome: std::result::Result<DesignOutcome, String>,
}

/// Users keep the same angles for a given seed across trials and sweep values.
fn user_angles(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    draw_user_angles(
        cfg.n_users,
        cfg.user_angle_limit_deg.to_radians(),
        cfg.excluded_sector(),
        cfg.seed,
    )
}

fn run_trial(
    cfg: &ExperimentConfig,
    angles: &[f64],
    sweep_value: f64,
    trial: usize,
) -> Result<Vec<ModelRun>> {
    let arrays = cfg.arrays()?;
    let channels = generate_channels_stream(
        cfg.n_users,
        cfg.n_tx,
        cfg.rician_kappa,
        angles,
        cfg.seed,
        trial_stream(trial),
    )?;
    let inputs = DesignInputs {
        channels: channels.h,
        gamma: cfg.gamma(),
        power: db_to_linear(cfg.power_dbm),
        sigma2_k: vec![db_to_linear(cfg.sigma2_k_dbm); cfg.n_users],
        target_prior: cfg.target()?,
        noise: cfg.noise()?,
    };
    let mut runs = Vec::with_capacity(cfg.models.len());
    for &model in &cfg.models {
        let outcome = design(model, &inputs, &arrays, &cfg.solver).map_err(|e| e.to_string());
        let row = make_row(cfg, sweep_value, model, trial, &outcome);
        runs.push(ModelRun { row, outcome });
    }
    Ok(runs)
}

fn make_row(
    cfg: &ExperimentConfig,
    sweep_value: f64,
    model: ModelKind,
    trial: usize,
    outcome: &std::result::Result<DesignOutcome, String>,
) -> ResultRow {
    let mut row = ResultRow {
        sweep_variable: cfg.sweep_variable.as_str().to_string(),
        sweep_value,
        model: model.as_str().to_string(),
        trial,
        solver_status: "error".to_string(),
        rcrb_theta0_deg: None,
        rcrb_delta_deg: None,
        crb_trace: None,
        sinr_min_db: None,
        power_used: None,
        solve_time_ms: None,
    };
    let Ok(out) = outcome else { return row };
    let mut status = out.status;
    if cfg.timing {
        row.solve_time_ms = Some(out.relaxed.solve_time.as_secs_f64() * 1e3);
    }
    if let Some(v) = &out.verification {
        // A solve whose recovered beams break a constraint is not reported as optimal.
        if status == SolverStatus::Optimal && !v.feasible() {
            status = SolverStatus::Inaccurate;
        }
        row.sinr_min_db = v.sinr_min_db;
        row.power_used = Some(v.total_power);
        if let Ok(c) = &v.crb_psm {
            row.rcrb_theta0_deg = Some(c.rcrb_theta0_deg);
            row.rcrb_delta_deg = Some(c.rcrb_delta_deg);
            row.crb_trace = Some(c.crb_theta0 + c.crb_delta);
        }
    }
    row.solver_status = status.as_str().to_string();
    row
}

/// First trial of the configured operating point, every enabled model.
///
/// The swept variable takes its first value.
pub fn run_single(cfg: &ExperimentConfig) -> Result<Vec<ModelRun>> {
    cfg.validate()?;
    let value = cfg.sweep_values[0];
    let point = cfg.at_sweep_value(value);
    run_trial(&point, &user_angles(cfg)?, value, 0)
}

/// All `(value, model, trial)` rows, sorted.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let angles = user_angles(cfg)?;
    let points: Vec<ExperimentConfig> = cfg
        .sweep_values
        .iter()
        .map(|&v| cfg.at_sweep_value(v))
        .collect();
    for p in &points {
        p.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..cfg.trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<Result<Vec<ModelRun>>> = jobs
        .par_iter()
        .map(|&(i, t)| run_trial(&points[i], &angles, cfg.sweep_values[i], t))
        .collect();
    let mut rows = Vec::with_capacity(jobs.len() * cfg.models.len());
    for (&(i, _), r) in jobs.iter().zip(results) {
        rows.extend(r?.into_iter().map(|m| (i, m.row)));
    }
    let rank = |m: &str| {
        cfg.models
            .iter()
            .position(|k| k.as_str() == m)
            .unwrap_or(usize::MAX)
    };
    rows.sort_by(|(ia, a), (ib, b)| {
        ia.cmp(ib)
            .then(rank(&a.model).cmp(&rank(&b.model)))
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Groups rows by `(sweep value, model)` in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, String)> = Vec::new();
    for r in rows {
        if !keys
            .iter()
            .any(|(v, m)| *v == r.sweep_value && *m == r.model)
        {
            keys.push((r.sweep_value, r.model.clone()));
        }
    }
    keys.into_iter()
        .map(|(value, model)| {
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.sweep_value == value && r.model == model)
                .collect();
            let ok: Vec<&&ResultRow> = group.iter().filter(|r| r.is_usable()).collect();
            let th: Vec<f64> = ok.iter().filter_map(|r| r.rcrb_theta0_deg).collect();
            let de: Vec<f64> = ok.iter().filter_map(|r| r.rcrb_delta_deg).collect();
            SummaryRow {
                sweep_value: value,
                model,
                n_ok: ok.len(),
                n_fail: group.len() - ok.len(),
                mean_rcrb_theta0_deg: mean(&th),
                median_rcrb_theta0_deg: median(&th),
                mean_rcrb_delta_deg: mean(&de),
                median_rcrb_delta_deg: median(&de),
            }
        })
        .collect()
}

fn write_records<W: Write, T: Serialize>(out: W, records: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    // Written by hand so an empty run still gets its header.
    w.write_record(header)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const RESULT_COLUMNS: [&str; 11] = [
    "sweep_variable",
    "sweep_value",
    "model",
    "trial",
    "solver_status",
    "rcrb_theta0_deg",
    "rcrb_delta_deg",
    "crb_trace",
    "sinr_min_dB",
    "power_used",
    "solve_time_ms",
];

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "sweep_value",
    "model",
    "n_ok",
    "n_fail",
    "mean_rcrb_theta0_deg",
    "median_rcrb_theta0_deg",
    "mean_rcrb_delta_deg",
    "median_rcrb_delta_deg",
];

pub fn write_results<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    write_records(out, rows, &RESULT_COLUMNS)
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    write_records(out, rows, &SUMMARY_COLUMNS)
}

/// `results.csv` → `results.csv.summary.csv`
pub fn summary_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".summary.csv");
    PathBuf::from(s)
}

/// Writes the rows to `out` and their summary next to it.
pub fn write_outputs(out: &Path, rows: &[ResultRow]) -> Result<()> {
    write_results(std::fs::File::create(out)?, rows)?;
    write_summary(std::fs::File::create(summary_path(out))?, &summarize(rows))?;
    Ok(())
}
