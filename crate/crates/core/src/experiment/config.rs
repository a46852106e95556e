//! Experiment configuration: built-in profiles and a flat TOML overlay.

use serde::Deserialize;
use std::path::Path;

use crate::array::ArrayConfig;
use crate::error::{Error, Result};
use crate::fisher::NoiseAndDwell;
use crate::sdp::SolverOptions;
use crate::target::{ModelKind, TargetParams};

/// `10^(x/10)`, so 0 dBm maps to 1.0.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Small arrays, fast enough for routine test runs.
    Desk,
    /// The full-size system: 20 transmit and 60 receive antennas.
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (expected desk or paper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    PowerDbm,
    NTx,
    NRx,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::PowerDbm => "power_dBm",
            SweepVariable::NTx => "n_tx",
            SweepVariable::NRx => "n_rx",
        }
    }
}

impl std::fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "power_dbm" | "power" => Ok(SweepVariable::PowerDbm),
            "n_tx" => Ok(SweepVariable::NTx),
            "n_rx" => Ok(SweepVariable::NRx),
            other => Err(Error::Config(format!(
                "unknown sweep variable '{other}' (expected power_dBm, n_tx or n_rx)"
            ))),
        }
    }
}

/// SINR target for every user, or one per user.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GammaDb {
    Scalar(f64),
    PerUser(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub theta0_deg: f64,
    pub delta_deg: f64,
    pub n_scatterers: usize,
    /// Real gain shared by all scatterers.
    pub alpha: f64,
    pub n_users: usize,
    /// Snapshots per coherent dwell.
    pub dwell: usize,
    pub power_dbm: f64,
    pub gamma_db: GammaDb,
    pub sigma2_k_dbm: f64,
    pub sigma2_r_dbm: f64,
    /// Linear Rician factor.
    pub rician_kappa: f64,
    /// User angles are drawn from `(−limit, limit)`.
    pub user_angle_limit_deg: f64,
    /// Margin around the target sector kept free of users; `None` disables
    /// the exclusion.
    pub target_guard_deg: Option<f64>,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverOptions,
    /// Fill the `solve_time_ms` column. Off by default so output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let (n_tx, n_rx, n_users, n_scatterers, dwell, trials) = match profile {
            Profile::Desk => (8, 12, 2, 3, 12, 20),
            Profile::Paper => (20, 60, 4, 4, 30, 1),
        };
        Self {
            n_tx,
            n_rx,
            spacing: ArrayConfig::HALF_WAVELENGTH,
            theta0_deg: 30.0,
            delta_deg: 6.0,
            n_scatterers,
            alpha: 0.001,
            n_users,
            dwell,
            power_dbm: 30.0,
            gamma_db: GammaDb::Scalar(10.0),
            sigma2_k_dbm: 0.0,
            sigma2_r_dbm: 0.0,
            rician_kappa: 10.0,
            user_angle_limit_deg: 60.0,
            target_guard_deg: Some(5.0),
            sweep_variable: SweepVariable::PowerDbm,
            sweep_values: vec![30.0],
            models: ModelKind::ALL.to_vec(),
            trials,
            seed: 1,
            solver: SolverOptions::default(),
            timing: false,
        }
    }

    pub fn desk() -> Self {
        Self::profile(Profile::Desk)
    }

    pub fn paper() -> Self {
        Self::profile(Profile::Paper)
    }

    /// Profile named in the file (or `fallback`), then every key present.
    pub fn from_toml_str(text: &str, fallback: Profile) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let base = match &file.profile {
            Some(p) => p.parse()?,
            None => fallback,
        };
        let mut cfg = Self::profile(base);
        file.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, fallback: Profile) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, fallback)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("at least one model is required".into());
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return bad(format!("model {m} listed twice"));
            }
        }
        if self.sweep_values.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if self.sweep_values.windows(2).any(|w| !(w[1] > w[0])) {
            return bad(format!(
                "sweep values must be strictly increasing: {:?}",
                self.sweep_values
            ));
        }
        if self.sweep_values.iter().any(|v| !v.is_finite()) {
            return bad("sweep values must be finite".into());
        }
        if matches!(self.sweep_variable, SweepVariable::NTx | SweepVariable::NRx)
            && self
                .sweep_values
                .iter()
                .any(|&v| v < 1.0 || v.fract() != 0.0)
        {
            return bad(format!(
                "{} sweep values must be positive integers",
                self.sweep_variable
            ));
        }
        if let GammaDb::PerUser(g) = &self.gamma_db {
            if g.len() != self.n_users {
                return bad(format!(
                    "{} SINR targets for {} users",
                    g.len(),
                    self.n_users
                ));
            }
        }
        if !(self.rician_kappa >= 0.0) {
            return bad(format!(
                "rician_kappa must be non-negative, got {}",
                self.rician_kappa
            ));
        }
        if !(self.user_angle_limit_deg > 0.0 && self.user_angle_limit_deg < 90.0) {
            return bad(format!(
                "user_angle_limit_deg must lie in (0, 90), got {}",
                self.user_angle_limit_deg
            ));
        }
        if let Some(g) = self.target_guard_deg {
            if !(g >= 0.0) {
                return bad(format!("target_guard_deg must be non-negative, got {g}"));
            }
        }
        self.arrays()?;
        self.target()?;
        self.noise()?;
        Ok(())
    }

    pub fn arrays(&self) -> Result<ArrayConfig> {
        ArrayConfig::new(self.n_tx, self.n_rx, self.spacing)
    }

    /// Target parameters in radians.
    pub fn target(&self) -> Result<TargetParams> {
        TargetParams::uniform(
            self.theta0_deg.to_radians(),
            self.delta_deg.to_radians(),
            self.n_scatterers,
            self.alpha,
        )
    }

    pub fn noise(&self) -> Result<NoiseAndDwell> {
        NoiseAndDwell::new(db_to_linear(self.sigma2_r_dbm), self.dwell)
    }

    /// Linear per-user SINR targets.
    pub fn gamma(&self) -> Vec<f64> {
        match &self.gamma_db {
            GammaDb::Scalar(g) => vec![db_to_linear(*g); self.n_users],
            GammaDb::PerUser(g) => g.iter().map(|&x| db_to_linear(x)).collect(),
        }
    }

    /// Users stay out of `[θ₀ − Δ/2 − guard, θ₀ + Δ/2 + guard]`.
    pub fn excluded_sector(&self) -> Option<(f64, f64)> {
        self.target_guard_deg.map(|g| {
            let half = self.delta_deg / 2.0 + g;
            (
                (self.theta0_deg - half).to_radians(),
                (self.theta0_deg + half).to_radians(),
            )
        })
    }

    /// Copy with the swept variable set to `value`.
    pub fn at_sweep_value(&self, value: f64) -> Self {
        let mut c = self.clone();
        match self.sweep_variable {
            SweepVariable::PowerDbm => c.power_dbm = value,
            SweepVariable::NTx => c.n_tx = value as usize,
            SweepVariable::NRx => c.n_rx = value as usize,
        }
        c
    }
}

/// On-disk form. Every key is optional and overrides the profile.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    profile: Option<String>,
    n_tx: Option<usize>,
    n_rx: Option<usize>,
    spacing: Option<f64>,
    theta0_deg: Option<f64>,
    delta_deg: Option<f64>,
    n_scatterers: Option<usize>,
    alpha: Option<f64>,
    n_users: Option<usize>,
    dwell: Option<usize>,
    power_dbm: Option<f64>,
    gamma_db: Option<GammaDb>,
    sigma2_k_dbm: Option<f64>,
    sigma2_r_dbm: Option<f64>,
    rician_kappa: Option<f64>,
    user_angle_limit_deg: Option<f64>,
    target_guard_deg: Option<f64>,
    exclude_target_sector: Option<bool>,
    sweep_variable: Option<String>,
    sweep_values: Option<Vec<f64>>,
    models: Option<Vec<String>>,
    trials: Option<usize>,
    seed: Option<u64>,
    timing: Option<bool>,
    tol_gap_rel: Option<f64>,
    tol_gap_abs: Option<f64>,
    tol_feas: Option<f64>,
    max_iter: Option<u32>,
    time_limit: Option<f64>,
}

impl ConfigFile {
    fn apply(self, c: &mut ExperimentConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field { c.$field = v; })* };
        }
        set!(
            n_tx,
            n_rx,
            spacing,
            theta0_deg,
            delta_deg,
            n_scatterers,
            alpha,
            n_users,
            dwell,
            power_dbm,
            gamma_db,
            sigma2_k_dbm,
            sigma2_r_dbm,
            rician_kappa,
            user_angle_limit_deg,
            trials,
            seed,
            timing
        );
        if let Some(g) = self.target_guard_deg {
            c.target_guard_deg = Some(g);
        }
        if self.exclude_target_sector == Some(false) {
            c.target_guard_deg = None;
        }
        if let Some(v) = self.sweep_variable {
            c.sweep_variable = v.parse()?;
        }
        // Without explicit values the sweep degenerates to the configured point.
        c.sweep_values = match self.sweep_values {
            Some(v) => v,
            None => vec![match c.sweep_variable {
                SweepVariable::PowerDbm => c.power_dbm,
                SweepVariable::NTx => c.n_tx as f64,
                SweepVariable::NRx => c.n_rx as f64,
            }],
        };
        if let Some(m) = self.models {
            c.models = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        let s = &mut c.solver;
        if let Some(v) = self.tol_gap_rel {
            s.tol_gap_rel = v;
        }
        if let Some(v) = self.tol_gap_abs {
            s.tol_gap_abs = v;
        }
        if let Some(v) = self.tol_feas {
            s.tol_feas = v;
        }
        if let Some(v) = self.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = self.time_limit {
            s.time_limit = v;
        }
        Ok(())
    }
}
