//! Observer coupled to a truth run.
//!
//! The truth `(rho, u)` and the observer `(rho_hat, u_hat)` are advanced as
//! one system so that both see the same time steps. Feedback only reaches
//! the observer and is computed from the mismatch `w` between observed and
//! estimated fields, restricted to `[0, L]`.
//!
//! Velocity observations (`w = u - u_hat`):
//!
//! ```text
//! F_u   = phi_u   * (1_L rho0 w)
//! F_rho = phi_rho * (1_L rho0 (w_x - g <w_x>_L))      (g = 0 without mean correction)
//! ```
//!
//! Density observations (`w = rho - rho_hat`):
//!
//! ```text
//! F_rho = psi_rho * (1_L w)
//! F_u   = psi_u   * (1_L gamma rho0^(gamma-1) w_x)
//! ```
//!
//! `*` is applied mode by mode with the kernel's Fourier coefficients.
//! `F_u` enters the velocity equation, so in momentum form the nonlinear
//! observer receives `F_u + u_hat F_rho`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fourier::{mode_coefficients, Fft1d};
use crate::solver::{ssp_rk3, FieldState, Model, RkState, Solver, StepLimits, TimeStepper};
use crate::spectral::{FluidParams, ForcingSpec, KernelCoeffs, Observation};

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverConfig {
    pub kernels: KernelCoeffs,
    pub observed: Observation,
    /// Observations cover `[0, obs_length]`.
    pub obs_length: f64,
    /// Gain of the zero-mean correction of the density feedback, if enabled.
    pub mean_correction: Option<f64>,
    /// Forcing applied to the truth.
    pub forcing: ForcingSpec,
    /// Whether the observer also receives the forcing.
    pub forcing_known: bool,
    /// Permit negative kernel coefficients.
    pub allow_negative: bool,
}

impl ObserverConfig {
    pub fn new(kernels: KernelCoeffs) -> Self {
        Self {
            observed: kernels.target,
            kernels,
            obs_length: 1.0,
            mean_correction: None,
            forcing: ForcingSpec::default(),
            forcing_known: false,
            allow_negative: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.target != self.observed {
            return Err(Error::KernelMismatch {
                kernels: self.kernels.target.to_string(),
                observer: self.observed.to_string(),
            });
        }
        self.kernels.validate(self.allow_negative)?;
        if !(self.obs_length > 0.0 && self.obs_length <= 1.0) {
            return Err(Error::invalid("obs_length", "must lie in (0, 1]"));
        }
        if let Some(g) = self.mean_correction {
            if !(g >= 0.0) || !g.is_finite() {
                return Err(Error::invalid("mean_gain", "must be non-negative"));
            }
            if self.observed == Observation::Density {
                return Err(Error::invalid(
                    "mean_correction",
                    "only defined for velocity observations",
                ));
            }
        }
        Ok(())
    }
}

/// Precomputed feedback operator for one grid.
#[derive(Debug, Clone)]
pub struct Feedback {
    observed: Observation,
    fft: Fft1d,
    mask: Vec<bool>,
    coef_rho: Vec<f64>,
    coef_u: Vec<f64>,
    rho0: f64,
    sound_sq: f64,
    mean_gain: f64,
}

impl Feedback {
    pub fn new(config: &ObserverConfig, params: &FluidParams, n_cells: usize) -> Result<Self> {
        config.validate()?;
        let fft = Fft1d::new(n_cells);
        let mask = (0..n_cells)
            .map(|j| (j as f64 + 0.5) / n_cells as f64 <= config.obs_length + 1e-12)
            .collect();
        let norm2 = |j: usize| {
            let k = fft.wavenumber(j);
            (k * k) as u64
        };
        let coef_rho = (0..n_cells)
            .map(|j| config.kernels.rho_coeff(norm2(j)))
            .collect();
        let coef_u = (0..n_cells)
            .map(|j| config.kernels.u_coeff(norm2(j)))
            .collect();
        Ok(Self {
            observed: config.observed,
            fft,
            mask,
            coef_rho,
            coef_u,
            rho0: params.rho0,
            sound_sq: params.sound_speed_sq(params.rho0),
            mean_gain: config.mean_correction.unwrap_or(0.0),
        })
    }

    pub fn observed(&self) -> Observation {
        self.observed
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn convolve(&self, x: &[f64], coef: &[f64]) -> Vec<f64> {
        let mut spec = self.fft.forward(x);
        for (c, k) in spec.iter_mut().zip(coef) {
            *c *= *k;
        }
        self.fft.inverse_real(spec)
    }

    fn masked(&self, x: impl Iterator<Item = f64>) -> Vec<f64> {
        x.zip(&self.mask)
            .map(|(v, &m)| if m { v } else { 0.0 })
            .collect()
    }

    /// `(F_rho, F_u)` for the mismatch `w = observed - estimated`.
    pub fn apply(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let w_x = self.fft.derivative(w);
        match self.observed {
            Observation::Velocity => {
                let mut shift = 0.0;
                if self.mean_gain != 0.0 {
                    let (sum, count) = w_x
                        .iter()
                        .zip(&self.mask)
                        .filter(|(_, &m)| m)
                        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
                    shift = self.mean_gain * sum / count.max(1) as f64;
                }
                let d = self.masked(w_x.iter().map(|v| self.rho0 * (v - shift)));
                let u = self.masked(w.iter().map(|v| self.rho0 * v));
                (self.convolve(&d, &self.coef_rho), self.convolve(&u, &self.coef_u))
            }
            Observation::Density => {
                let r = self.masked(w.iter().copied());
                let d = self.masked(w_x.iter().map(|v| self.sound_sq * v));
                (self.convolve(&r, &self.coef_rho), self.convolve(&d, &self.coef_u))
            }
        }
    }
}

/// One-shot feedback evaluation; builds the operator each call.
pub fn apply_feedback(
    w: &[f64],
    config: &ObserverConfig,
    params: &FluidParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(Feedback::new(config, params, w.len())?.apply(w))
}

/// Velocity as seen by the model: `mom / rho0` in the linear model.
fn model_velocity(state: &FieldState, model: Model, rho0: f64) -> Vec<f64> {
    match model {
        Model::Linear => state.mom.iter().map(|m| m / rho0).collect(),
        Model::Nonlinear => state.velocity(),
    }
}

/// Observer initial state: truth plus `amplitude sin(2 pi k x)` in density
/// and velocity.
///
/// In the nonlinear model the momentum perturbation has its mean removed,
/// so the observer starts with the truth's total momentum.
pub fn perturbed_state(
    truth: &FieldState,
    model: Model,
    params: &FluidParams,
    mode: i64,
    amplitude: f64,
) -> FieldState {
    let n = truth.len();
    let wave: Vec<f64> = crate::fourier::cell_centers(n)
        .iter()
        .map(|x| amplitude * (2.0 * std::f64::consts::PI * mode as f64 * x).sin())
        .collect();
    let rho: Vec<f64> = truth.rho.iter().zip(&wave).map(|(r, w)| r + w).collect();
    let extra: Vec<f64> = match model {
        Model::Linear => wave.iter().map(|w| params.rho0 * w).collect(),
        Model::Nonlinear => {
            let raw: Vec<f64> = rho.iter().zip(&wave).map(|(r, w)| r * w).collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            raw.iter().map(|v| v - mean).collect()
        }
    };
    let mom = truth.mom.iter().zip(&extra).map(|(m, e)| m + e).collect();
    FieldState {
        rho,
        mom,
        time: truth.time,
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PairState {
    truth: FieldState,
    observer: FieldState,
}

impl RkState for PairState {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        self.truth.add_scaled(a, &other.truth);
        self.observer.add_scaled(a, &other.observer);
    }

    fn blend(&mut self, w: f64, other: &Self, w_other: f64) {
        self.truth.blend(w, &other.truth, w_other);
        self.observer.blend(w, &other.observer, w_other);
    }
}

/// Per-step L2 error norms, plus optional mode coefficients of the
/// velocity error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSeries {
    pub t: Vec<f64>,
    pub err_rho: Vec<f64>,
    pub err_u: Vec<f64>,
    /// Probed mode and its `(cos, sin)` coefficients of `u_hat - u` per sample.
    pub probe: Option<(i64, Vec<(f64, f64)>)>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn probe_sin(&self) -> Option<Vec<f64>> {
        self.probe
            .as_ref()
            .map(|(_, c)| c.iter().map(|p| p.1).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,err_rho,err_u");
        if self.probe.is_some() {
            out.push_str(",mode_cos,mode_sin");
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(out, "{},{},{}", self.t[i], self.err_rho[i], self.err_u[i]);
            if let Some((_, c)) = &self.probe {
                let _ = write!(out, ",{},{}", c[i].0, c[i].1);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Truth and observer captured at the first step reaching `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub truth: FieldState,
    pub observer: FieldState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedRun {
    pub truth: FieldState,
    pub observer: FieldState,
    pub series: ErrorSeries,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Record mode coefficients of the velocity error for this wave number.
    pub probe_mode: Option<i64>,
    /// Requested snapshot times.
    pub snapshot_times: Vec<f64>,
}

struct Pair<'a> {
    solver: &'a Solver,
    feedback: Feedback,
    config: &'a ObserverConfig,
    centers: Vec<f64>,
}

impl Pair<'_> {
    fn model(&self) -> Model {
        self.solver.scheme.model
    }

    fn add_forcing(&self, t: f64, state: &FieldState, d: &mut FieldState) {
        if self.config.forcing.entries.is_empty() {
            return;
        }
        let rho0 = self.solver.params.rho0;
        for (j, x) in self.centers.iter().enumerate() {
            let rho = match self.model() {
                Model::Linear => rho0,
                Model::Nonlinear => state.rho[j],
            };
            d.mom[j] += rho * self.config.forcing.value(*x, t);
        }
    }

    fn rhs(&self, t: f64, s: &PairState) -> Result<PairState> {
        let mut truth = self.solver.rhs(&s.truth)?;
        self.add_forcing(t, &s.truth, &mut truth);
        let mut obs = self.solver.rhs(&s.observer)?;
        if self.config.forcing_known {
            self.add_forcing(t, &s.observer, &mut obs);
        }
        let rho0 = self.solver.params.rho0;
        let w: Vec<f64> = match self.feedback.observed() {
            Observation::Velocity => {
                let u = model_velocity(&s.truth, self.model(), rho0);
                let u_hat = model_velocity(&s.observer, self.model(), rho0);
                u.iter().zip(&u_hat).map(|(a, b)| a - b).collect()
            }
            Observation::Density => s
                .truth
                .rho
                .iter()
                .zip(&s.observer.rho)
                .map(|(a, b)| a - b)
                .collect(),
        };
        let (f_rho, f_u) = self.feedback.apply(&w);
        let u_hat = model_velocity(&s.observer, self.model(), rho0);
        for j in 0..w.len() {
            obs.rho[j] += f_rho[j];
            obs.mom[j] += match self.model() {
                Model::Linear => f_u[j],
                Model::Nonlinear => f_u[j] + u_hat[j] * f_rho[j],
            };
        }
        Ok(PairState {
            truth,
            observer: obs,
        })
    }

    fn record(&self, s: &PairState, t: f64, series: &mut ErrorSeries) {
        let dx = self.solver.grid.dx();
        let rho0 = self.solver.params.rho0;
        let u = model_velocity(&s.truth, self.model(), rho0);
        let u_hat = model_velocity(&s.observer, self.model(), rho0);
        let dv: Vec<f64> = u_hat.iter().zip(&u).map(|(a, b)| a - b).collect();
        let er: f64 = s
            .observer
            .rho
            .iter()
            .zip(&s.truth.rho)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let eu: f64 = dv.iter().map(|v| v * v).sum();
        series.t.push(t);
        series.err_rho.push((er * dx).sqrt());
        series.err_u.push((eu * dx).sqrt());
        if let Some((k, coeffs)) = series.probe.as_mut() {
            coeffs.push(mode_coefficients(&dv, *k));
        }
    }
}

/// Advances truth and observer together to `t_final`.
///
/// With a strict stepper exactly `round(t_final / dt)` steps are taken.
pub fn run_pair(
    solver: &Solver,
    truth: &FieldState,
    observer: &FieldState,
    config: &ObserverConfig,
    t_final: f64,
    stepper: &TimeStepper,
    options: &RunOptions,
) -> Result<PairedRun> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::invalid("t_final", "must be positive"));
    }
    stepper.validate()?;
    if truth.len() != solver.grid.n_cells() || observer.len() != solver.grid.n_cells() {
        return Err(Error::invalid("state", "field length differs from the grid"));
    }
    let positive = solver.scheme.model == Model::Nonlinear;
    truth.check(positive)?;
    observer.check(positive)?;
    let pair = Pair {
        solver,
        feedback: Feedback::new(config, &solver.params, solver.grid.n_cells())?,
        config,
        centers: solver.grid.centers(),
    };
    let mut series = ErrorSeries {
        probe: options.probe_mode.map(|k| (k, Vec::new())),
        ..ErrorSeries::default()
    };
    let t0 = truth.time;
    let mut state = PairState {
        truth: truth.clone(),
        observer: observer.clone(),
    };
    pair.record(&state, t0, &mut series);
    let mut pending: Vec<f64> = options.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let mut snapshots = Vec::new();
    let mut capture = |state: &PairState, t: f64, snapshots: &mut Vec<Snapshot>| {
        while pending.last().is_some_and(|&ts| t >= ts - 1e-12) {
            let ts = pending.pop().unwrap();
            snapshots.push(Snapshot {
                time: ts,
                truth: state.truth.clone(),
                observer: state.observer.clone(),
            });
        }
    };
    capture(&state, t0, &mut snapshots);

    let fixed_steps = stepper
        .strict
        .then(|| ((t_final - t0) / stepper.dt_max).round().max(1.0) as usize);
    let mut step = 0usize;
    let mut t = t0;
    loop {
        let dt = match fixed_steps {
            Some(n) => {
                if step == n {
                    break;
                }
                stepper.dt_max
            }
            None => {
                if t >= t_final - 1e-12 {
                    break;
                }
                let mut st = *stepper;
                st.dt_max = st.dt_max.min(t_final - t);
                st.select(StepLimits::unbounded())?
            }
        };
        let limit = solver
            .stable_dt(&state.truth)
            .min(solver.stable_dt(&state.observer));
        let mut st = *stepper;
        st.dt_max = dt;
        let dt = st.select(limit)?;
        state = ssp_rk3(t, &state, dt, |ts, s| pair.rhs(ts, s))?;
        step += 1;
        t = match fixed_steps {
            Some(_) => t0 + step as f64 * stepper.dt_max,
            None => t + dt,
        };
        state.truth.time = t;
        state.observer.time = t;
        state.truth.check(positive)?;
        state.observer.check(positive)?;
        pair.record(&state, t, &mut series);
        capture(&state, t, &mut snapshots);
    }
    Ok(PairedRun {
        truth: state.truth,
        observer: state.observer,
        series,
        snapshots,
    })
}
