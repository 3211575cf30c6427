//! Named scenarios, flat TOML configuration and CSV output.
//!
//! A configuration file names a scenario and overrides any of its preset
//! values:
//!
//! ```toml
//! scenario = "table1"
//! n_cells = 200
//! sweep = [0.0, 5.0, 10.0]
//! ```
//!
//! Each sweep value becomes one paired truth/observer run. Rows run in
//! parallel and are reported in sweep order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{estimate_decay, fit_rate_vs_length, steady_amplitude, FitWindow, LinearFit};
use crate::error::{Error, Result};
use crate::fourier::{off_mode_energy_fraction, Fft1d};
use crate::observer::{perturbed_state, run_pair, ErrorSeries, ObserverConfig, RunOptions, Snapshot};
use crate::solver::{
    write_snapshot, FieldState, FluxKind, GridSpec, Model, Reconstruction, Scheme, Solver,
    TimeStepper,
};
use crate::spectral::{
    design_kernels_density, design_kernels_velocity, eigenvalues_closed_form, forced_amplitude,
    partial_obs_rate, FluidParams, ForcingEntry, ForcingSpec, KernelCoeffs, Observation,
    WaveNumber,
};

/// Relative drift tolerated between the halves of a forced steady tail.
const STEADY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    Table1,
    Table2,
    PartialObs,
    PartialObsMeanFix,
    Forced,
    Nonlinear,
    DensityObs,
    KernelDesignDemo,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 8] = [
        ScenarioId::Table1,
        ScenarioId::Table2,
        ScenarioId::PartialObs,
        ScenarioId::PartialObsMeanFix,
        ScenarioId::Forced,
        ScenarioId::Nonlinear,
        ScenarioId::DensityObs,
        ScenarioId::KernelDesignDemo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioId::Table1 => "table1",
            ScenarioId::Table2 => "table2",
            ScenarioId::PartialObs => "partial_obs",
            ScenarioId::PartialObsMeanFix => "partial_obs_mean_fix",
            ScenarioId::Forced => "forced",
            ScenarioId::Nonlinear => "nonlinear",
            ScenarioId::DensityObs => "density_obs",
            ScenarioId::KernelDesignDemo => "kernel_design_demo",
        }
    }

    fn is_partial(self) -> bool {
        matches!(self, ScenarioId::PartialObs | ScenarioId::PartialObsMeanFix)
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// Same coefficients on every mode.
    Uniform,
    /// Coefficients from the decay-rate design rule.
    Designed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitTarget {
    U,
    Rho,
    /// `sqrt(err_rho^2 + err_u^2)`
    Both,
}

/// Flat scenario configuration; every field can be overridden by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    pub gamma: f64,
    pub mu: f64,
    pub lam: f64,
    pub rho0: f64,
    pub n_cells: usize,
    pub dt: f64,
    pub cfl: f64,
    pub strict_dt: bool,
    pub t_final: f64,
    pub mode: i64,
    pub amplitude: f64,
    pub model: Model,
    pub observe: Observation,
    pub kernel: KernelKind,
    pub phi_rho: f64,
    pub phi_u: f64,
    pub design_rate: f64,
    pub design_cutoff: f64,
    pub allow_negative: bool,
    pub obs_length: f64,
    pub mean_correction: bool,
    pub mean_gain: f64,
    pub forcing_amplitude: f64,
    pub forcing_frequency: f64,
    pub forcing_mode: i64,
    pub forcing_known: bool,
    pub flux: FluxKind,
    pub reconstruction: Reconstruction,
    pub fit_on: FitTarget,
    pub fit_skip: f64,
    pub fit_floor: f64,
    /// Start of the steady window for forced amplitudes.
    pub t_min: f64,
    pub snapshot_times: Vec<f64>,
    pub write_snapshots: bool,
    pub sweep_param: String,
    pub sweep: Vec<f64>,
    /// Parallel rows; 0 uses all cores.
    pub workers: usize,
}

impl ScenarioConfig {
    fn base(scenario: ScenarioId) -> Self {
        Self {
            scenario,
            gamma: 1.4,
            mu: 0.025,
            lam: 0.0,
            rho0: 1.0,
            n_cells: 100,
            dt: 1e-3,
            cfl: 0.9,
            strict_dt: true,
            t_final: 5.0,
            mode: 1,
            amplitude: 5e-2,
            model: Model::Nonlinear,
            observe: Observation::Velocity,
            kernel: KernelKind::Uniform,
            phi_rho: 0.0,
            phi_u: 0.0,
            design_rate: 5.0,
            design_cutoff: 3.0,
            allow_negative: false,
            obs_length: 1.0,
            mean_correction: false,
            mean_gain: 1.0,
            forcing_amplitude: 0.0,
            forcing_frequency: 1.0,
            forcing_mode: 1,
            forcing_known: false,
            flux: FluxKind::Vfroe,
            reconstruction: Reconstruction::VanLeer,
            fit_on: FitTarget::U,
            fit_skip: 0.1,
            fit_floor: 1e-10,
            t_min: 0.0,
            snapshot_times: Vec::new(),
            write_snapshots: false,
            sweep_param: String::new(),
            sweep: Vec::new(),
            workers: 0,
        }
    }

    /// Defaults of a named scenario.
    pub fn preset(scenario: ScenarioId) -> Self {
        let mut c = Self::base(scenario);
        match scenario {
            ScenarioId::Table1 => {
                c.sweep_param = "phi_u".into();
                c.sweep = vec![0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 12.895, 15.0, 20.0];
            }
            ScenarioId::Table2 => {
                c.phi_u = 20.0;
                c.sweep_param = "phi_rho".into();
                c.sweep = vec![0.0, 0.5, 1.184, 1.5, 5.0, 10.0];
            }
            ScenarioId::PartialObs | ScenarioId::PartialObsMeanFix => {
                c.phi_rho = 0.5;
                c.phi_u = 10.0;
                c.mean_correction = scenario == ScenarioId::PartialObsMeanFix;
                c.sweep_param = "obs_length".into();
                c.sweep = (1..=10).map(|i| i as f64 / 10.0).collect();
                c.snapshot_times = vec![0.16];
            }
            ScenarioId::Forced => {
                c.model = Model::Linear;
                c.t_final = 15.0;
                c.t_min = 8.0;
                c.amplitude = 0.0;
                c.forcing_amplitude = 1.0;
                c.forcing_frequency = 1.0;
                c.forcing_mode = 1;
                c.sweep_param = "phi_u".into();
                c.sweep = vec![0.0, 1.0, 2.0, 4.0, 8.0];
            }
            ScenarioId::Nonlinear => {
                c.amplitude = 0.5;
                c.phi_rho = 0.2;
                c.phi_u = 10.0;
                c.strict_dt = false;
                c.cfl = 0.5;
                c.sweep_param = "mode".into();
                c.sweep = vec![1.0, 3.0];
                c.snapshot_times = vec![0.1];
            }
            ScenarioId::DensityObs => {
                c.observe = Observation::Density;
                // density feedback moves the mean momentum of the nonlinear
                // observer, so the velocity error keeps a constant floor
                c.fit_on = FitTarget::Rho;
                c.kernel = KernelKind::Designed;
                c.design_cutoff = 3.0;
                c.sweep_param = "design_rate".into();
                c.sweep = vec![2.0, 5.0, 10.0];
            }
            ScenarioId::KernelDesignDemo => {
                c.kernel = KernelKind::Designed;
                c.design_rate = 5.0;
                c.design_cutoff = 3.0;
                c.sweep_param = "mode".into();
                c.sweep = vec![1.0, 2.0, 3.0];
            }
        }
        c
    }

    /// Parses a TOML document over the preset of its `scenario`, then
    /// applies `key=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        let id: ScenarioId = match table.get("scenario") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => return Err(Error::invalid("scenario", "must be a string")),
            None => return Err(Error::invalid("scenario", "missing scenario id")),
        };
        let mut merged = Self::preset(id).to_table()?;
        for (k, v) in table {
            merged.insert(k, v);
        }
        let config = Self::from_table(merged)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        // numeric keys may be written as integers in hand-edited files
        let reference = Self::base(ScenarioId::Table1).to_table()?;
        let mut table = table;
        for (key, value) in table.iter_mut() {
            if let (Some(toml::Value::Float(_)), toml::Value::Integer(i)) = (reference.get(key), &*value) {
                *value = toml::Value::Float(*i as f64);
            }
            if let (Some(toml::Value::Array(_)), toml::Value::Array(items)) = (reference.get(key), &*value) {
                let floats = items
                    .iter()
                    .map(|v| match v {
                        toml::Value::Integer(i) => toml::Value::Float(*i as f64),
                        other => other.clone(),
                    })
                    .collect();
                *value = toml::Value::Array(floats);
            }
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    /// Copy of this configuration with one field set to a sweep value.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self> {
        let mut table = self.to_table()?;
        let slot = match table.get(key) {
            Some(toml::Value::Float(_)) => toml::Value::Float(value),
            Some(toml::Value::Integer(_)) => {
                if value.fract() != 0.0 {
                    return Err(Error::invalid(key, format!("expects an integer, got {value}")));
                }
                toml::Value::Integer(value as i64)
            }
            Some(_) => return Err(Error::invalid("sweep_param", format!("`{key}` is not numeric"))),
            None => return Err(Error::invalid("sweep_param", format!("unknown field `{key}`"))),
        };
        table.insert(key.to_string(), slot);
        let mut c = Self::from_table(table)?;
        c.sweep.clear();
        Ok(c)
    }

    pub fn params(&self) -> Result<FluidParams> {
        FluidParams::new(self.gamma, self.mu, self.lam, self.rho0, 1)
    }

    pub fn kernels(&self) -> Result<KernelCoeffs> {
        let params = self.params()?;
        match self.kernel {
            KernelKind::Uniform => Ok(KernelCoeffs::uniform(self.observe, self.phi_rho, self.phi_u)),
            KernelKind::Designed => match self.observe {
                Observation::Velocity => {
                    design_kernels_velocity(self.design_rate, self.design_cutoff, &params)
                }
                Observation::Density => {
                    design_kernels_density(self.design_rate, self.design_cutoff, &params)
                }
            },
        }
    }

    pub fn forcing(&self) -> Result<ForcingSpec> {
        if self.forcing_amplitude == 0.0 {
            return Ok(ForcingSpec::default());
        }
        ForcingSpec::single(self.forcing_mode, self.forcing_amplitude, self.forcing_frequency)
    }

    pub fn observer_config(&self) -> Result<ObserverConfig> {
        let mut cfg = ObserverConfig::new(self.kernels()?);
        cfg.obs_length = self.obs_length;
        cfg.mean_correction = self.mean_correction.then_some(self.mean_gain);
        cfg.forcing = self.forcing()?;
        cfg.forcing_known = self.forcing_known;
        cfg.allow_negative = self.allow_negative;
        Ok(cfg)
    }

    pub fn stepper(&self) -> TimeStepper {
        TimeStepper {
            cfl: self.cfl,
            dt_max: self.dt,
            strict: self.strict_dt,
        }
    }

    pub fn solver(&self) -> Result<Solver> {
        Solver::new(
            GridSpec::new(self.n_cells)?,
            self.params()?,
            Scheme {
                model: self.model,
                flux: self.flux,
                reconstruction: self.reconstruction,
            },
        )
    }

    pub fn fit_window(&self) -> FitWindow {
        FitWindow {
            skip_fraction: self.fit_skip,
            floor: self.fit_floor,
            ..FitWindow::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        GridSpec::new(self.n_cells)?;
        self.stepper().validate()?;
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be positive"));
        }
        if self.mode == 0 {
            return Err(Error::ZeroWaveNumber);
        }
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("amplitude", "must be finite"));
        }
        if self.model == Model::Nonlinear && self.amplitude.abs() >= self.rho0 {
            return Err(Error::invalid("amplitude", "perturbation would create vacuum"));
        }
        if !(0.0..1.0).contains(&self.fit_skip) {
            return Err(Error::invalid("fit_skip", "must lie in [0, 1)"));
        }
        if !(self.fit_floor >= 0.0 && self.fit_floor < 1.0) {
            return Err(Error::invalid("fit_floor", "must lie in [0, 1)"));
        }
        if !(self.t_min >= 0.0) {
            return Err(Error::invalid("t_min", "must be non-negative"));
        }
        if self.snapshot_times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::invalid("snapshot_times", "must be non-negative"));
        }
        self.forcing()?;
        self.observer_config()?.validate()?;
        if !self.sweep.is_empty() && self.sweep_param.is_empty() {
            return Err(Error::invalid("sweep_param", "required when sweep is given"));
        }
        for &v in &self.sweep {
            self.with_value(&self.sweep_param, v)?.validate()?;
        }
        Ok(())
    }
}

fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

/// Outcome of one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub value: Option<f64>,
    pub theory_rate: Option<f64>,
    pub theory_period: Option<f64>,
    pub numerical_rate: Option<f64>,
    pub numerical_period: Option<f64>,
    pub r_squared: Option<f64>,
    pub theory_amplitude: Option<f64>,
    pub measured_amplitude: Option<f64>,
    /// Energy outside the seed mode in the observer error at the first snapshot.
    pub off_mode_fraction: Option<f64>,
    /// `None` on success, otherwise the error kind and message.
    pub failure: Option<(String, String)>,
    pub series: Option<ErrorSeries>,
    pub snapshots: Vec<Snapshot>,
}

impl RowResult {
    fn empty(value: Option<f64>) -> Self {
        Self {
            value,
            theory_rate: None,
            theory_period: None,
            numerical_rate: None,
            numerical_period: None,
            r_squared: None,
            theory_amplitude: None,
            measured_amplitude: None,
            off_mode_fraction: None,
            failure: None,
            series: None,
            snapshots: Vec::new(),
        }
    }

    pub fn status(&self) -> &str {
        self.failure.as_ref().map_or("ok", |f| f.0.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub rows: Vec<RowResult>,
    /// Rate against observation length (partial-observation scenarios).
    pub length_fit: Option<LinearFit>,
}

fn theory(config: &ScenarioConfig, row: &mut RowResult) -> Result<()> {
    let params = config.params()?;
    let kernels = config.kernels()?;
    if config.scenario.is_partial() {
        row.theory_rate = Some(partial_obs_rate(&params, config.phi_u, config.obs_length, config.mode)?);
    } else {
        let e = eigenvalues_closed_form(&params, &kernels, &WaveNumber::scalar(config.mode)?)?;
        row.theory_rate = Some(e.decay_rate);
        row.theory_period = e.period;
    }
    if config.forcing_amplitude != 0.0 && config.observe == Observation::Velocity {
        let entry = ForcingEntry {
            k: config.forcing_mode,
            amplitude: config.forcing_amplitude,
            frequency: config.forcing_frequency,
        };
        row.theory_amplitude = Some(forced_amplitude(&params, &kernels, &entry)?.velocity_amplitude);
    }
    Ok(())
}

fn simulate(config: &ScenarioConfig, row: &mut RowResult) -> Result<()> {
    let solver = config.solver()?;
    let params = solver.params;
    let truth = FieldState::uniform(&solver.grid, params.rho0, 0.0);
    let observer = perturbed_state(&truth, config.model, &params, config.mode, config.amplitude);
    let forced = config.forcing_amplitude != 0.0;
    let options = RunOptions {
        probe_mode: forced.then_some(config.forcing_mode),
        snapshot_times: config.snapshot_times.clone(),
    };
    let run = run_pair(
        &solver,
        &truth,
        &observer,
        &config.observer_config()?,
        config.t_final,
        &config.stepper(),
        &options,
    )?;
    let s = &run.series;
    if let Some(first) = run.snapshots.first() {
        let fft = Fft1d::new(solver.grid.n_cells());
        let du: Vec<f64> = first
            .observer
            .velocity()
            .iter()
            .zip(first.truth.velocity())
            .map(|(a, b)| a - b)
            .collect();
        row.off_mode_fraction = Some(off_mode_energy_fraction(
            &fft,
            &du,
            config.mode.unsigned_abs() as usize,
        ));
    }
    let outcome = if forced && !config.forcing_known {
        let sin = s.probe_sin().unwrap_or_default();
        steady_amplitude(&s.t, &sin, config.t_min, STEADY_TOLERANCE)
            .map(|a| row.measured_amplitude = Some(a))
    } else {
        let y: Vec<f64> = match config.fit_on {
            FitTarget::U => s.err_u.clone(),
            FitTarget::Rho => s.err_rho.clone(),
            FitTarget::Both => s.err_u.iter().zip(&s.err_rho).map(|(u, r)| u.hypot(*r)).collect(),
        };
        estimate_decay(&s.t, &y, config.fit_window()).map(|est| {
            row.numerical_rate = Some(est.rate);
            row.numerical_period = est.period;
            row.r_squared = Some(est.r_squared);
        })
    };
    // keep the trace even when the fit fails
    row.series = Some(run.series);
    row.snapshots = run.snapshots;
    outcome
}

/// Runs one configuration (no sweep) and records failures in the row.
pub fn run_single(config: &ScenarioConfig, value: Option<f64>) -> RowResult {
    let mut row = RowResult::empty(value);
    let outcome = theory(config, &mut row).and_then(|_| simulate(config, &mut row));
    if let Err(e) = outcome {
        row.failure = Some((e.kind().to_string(), e.to_string()));
    }
    row
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let jobs: Vec<(Option<f64>, ScenarioConfig)> = if config.sweep.is_empty() {
        vec![(None, config.clone())]
    } else {
        config
            .sweep
            .iter()
            .map(|&v| Ok((Some(v), config.with_value(&config.sweep_param, v)?)))
            .collect::<Result<_>>()?
    };
    let work = || -> Vec<RowResult> {
        jobs.par_iter()
            .map(|(v, c)| run_single(c, *v))
            .collect()
    };
    let rows = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)
    } else {
        work()
    };
    let length_fit = if config.scenario.is_partial() && config.sweep_param == "obs_length" {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| Some((r.value?, r.numerical_rate?)))
            .collect();
        fit_rate_vs_length(&points).ok()
    } else {
        None
    };
    Ok(ScenarioResult {
        config: config.clone(),
        rows,
        length_fit,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row_stem(config: &ScenarioConfig, row: &RowResult) -> String {
    match row.value {
        Some(v) => format!("{}={}", config.sweep_param, v),
        None => "single".to_string(),
    }
}

impl ScenarioResult {
    fn forced(&self) -> bool {
        self.config.forcing_amplitude != 0.0
    }

    fn has_snapshots(&self) -> bool {
        !self.config.snapshot_times.is_empty()
    }

    /// Summary table, one row per sweep value, full precision.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "param,value,status,theory_rate,numerical_rate,rate_base10,r_squared,theory_period,numerical_period",
        );
        if self.forced() {
            out.push_str(",theory_amplitude,measured_amplitude");
        }
        if self.has_snapshots() {
            out.push_str(",off_mode_fraction");
        }
        if self.config.scenario.is_partial() {
            out.push_str(",fit_slope,fit_intercept,fit_r2");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.config.sweep_param,
                opt(row.value),
                row.status(),
                opt(row.theory_rate),
                opt(row.numerical_rate),
                opt(row.numerical_rate.map(|r| r / std::f64::consts::LN_10)),
                opt(row.r_squared),
                opt(row.theory_period),
                opt(row.numerical_period),
            );
            if self.forced() {
                let _ = write!(out, ",{},{}", opt(row.theory_amplitude), opt(row.measured_amplitude));
            }
            if self.has_snapshots() {
                let _ = write!(out, ",{}", opt(row.off_mode_fraction));
            }
            if self.config.scenario.is_partial() {
                let f = self.length_fit;
                let _ = write!(
                    out,
                    ",{},{},{}",
                    opt(f.map(|f| f.slope)),
                    opt(f.map(|f| f.intercept)),
                    opt(f.map(|f| f.r_squared))
                );
            }
            out.push('\n');
        }
        out
    }

    /// Console table with three decimals.
    pub fn pretty_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let mut out = format!(
            "{:>14} {:>10} {:>10} {:>10} {:>10}",
            if self.config.sweep_param.is_empty() { "run" } else { &self.config.sweep_param },
            "d_th",
            "d_num",
            "T_th",
            "T_num"
        );
        if self.forced() {
            let _ = write!(out, " {:>10} {:>10}", "D_th", "D_num");
        }
        out.push_str("  status\n");
        for row in &self.rows {
            let _ = write!(
                out,
                "{:>14} {:>10} {:>10} {:>10} {:>10}",
                row.value.map_or("-".to_string(), |v| v.to_string()),
                cell(row.theory_rate),
                cell(row.numerical_rate),
                cell(row.theory_period),
                cell(row.numerical_period)
            );
            if self.forced() {
                let _ = write!(out, " {:>10} {:>10}", cell(row.theory_amplitude), cell(row.measured_amplitude));
            }
            let _ = writeln!(out, "  {}", row.status());
        }
        if let Some(f) = self.length_fit {
            let _ = writeln!(
                out,
                "rate = {:.3} L + {:.3}  (r^2 = {:.3})",
                f.slope, f.intercept, f.r_squared
            );
        }
        out
    }
}

/// Writes `<dir>/<scenario>/<param>=<value>.csv` traces and `summary.csv`.
/// Returns the written paths.
pub fn emit_plot_data(result: &ScenarioResult, dir: &Path) -> Result<Vec<PathBuf>> {
    let root = dir.join(result.config.scenario.as_str());
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let mut written = Vec::new();
    let params = result.config.params()?;
    let grid = GridSpec::new(result.config.n_cells)?;
    for row in &result.rows {
        let stem = row_stem(&result.config, row);
        if let Some(series) = &row.series {
            let path = root.join(format!("{stem}.csv"));
            series.write_csv(&path)?;
            written.push(path);
        }
        if result.config.write_snapshots {
            for snap in &row.snapshots {
                for (tag, state) in [("truth", &snap.truth), ("observer", &snap.observer)] {
                    let path = root.join(format!("{stem}_t={}_{tag}.snapshot.csv", snap.time));
                    write_snapshot(&path, state, &grid, &params, tag)?;
                    written.push(path);
                }
            }
        }
    }
    let path = root.join("summary.csv");
    std::fs::write(&path, result.summary_csv()).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}
