//! Periodic 1D finite-volume solver for the isentropic compressible
//! Navier-Stokes equations in conservative variables `(rho, rho u)`.
//!
//! ```text
//! rho_t + (rho u)_x = 0
//! (rho u)_t + (rho u^2 + rho^gamma)_x = nu u_xx
//! ```
//!
//! The linearized model about `(rho0, 0)` shares the state layout: `rho`
//! holds `rho0 + r` and `mom` holds `rho0 v`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::cell_centers;
use crate::spectral::FluidParams;

/// Real-axis stability bound of SSP-RK3 is about 2.51; keep a margin.
const VISCOUS_LIMIT: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n_cells: usize,
    dx: f64,
}

impl GridSpec {
    pub const MIN_CELLS: usize = 8;

    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < Self::MIN_CELLS {
            return Err(Error::invalid(
                "n_cells",
                format!("need at least {} cells", Self::MIN_CELLS),
            ));
        }
        Ok(Self {
            n_cells,
            dx: 1.0 / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        cell_centers(self.n_cells)
    }
}

/// Vector-space operations needed by the Runge-Kutta driver.
pub trait RkState: Clone {
    /// `self += a * other`
    fn add_scaled(&mut self, a: f64, other: &Self);
    /// `self = w * self + w_other * other`
    fn blend(&mut self, w: f64, other: &Self, w_other: f64);
}

impl RkState for f64 {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }

    fn blend(&mut self, w: f64, other: &Self, w_other: f64) {
        *self = w * *self + w_other * other;
    }
}

impl RkState for Vec<f64> {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        for (x, y) in self.iter_mut().zip(other) {
            *x += a * y;
        }
    }

    fn blend(&mut self, w: f64, other: &Self, w_other: f64) {
        for (x, y) in self.iter_mut().zip(other) {
            *x = w * *x + w_other * y;
        }
    }
}

/// Cell averages of density and momentum at a given time.
///
/// Tendencies reuse this type; their `time` is the stage time they were
/// evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn uniform(grid: &GridSpec, rho: f64, u: f64) -> Self {
        let n = grid.n_cells();
        Self {
            rho: vec![rho; n],
            mom: vec![rho * u; n],
            time: 0.0,
        }
    }

    pub fn from_primitive(rho: Vec<f64>, u: &[f64]) -> Self {
        let mom = rho.iter().zip(u).map(|(r, v)| r * v).collect();
        Self { rho, mom, time: 0.0 }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            rho: vec![0.0; self.rho.len()],
            mom: vec![0.0; self.mom.len()],
            time: self.time,
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.mom.iter().zip(&self.rho).map(|(m, r)| m / r).collect()
    }

    pub fn mass(&self, grid: &GridSpec) -> f64 {
        self.rho.iter().sum::<f64>() * grid.dx()
    }

    pub fn total_momentum(&self, grid: &GridSpec) -> f64 {
        self.mom.iter().sum::<f64>() * grid.dx()
    }

    /// Rejects non-finite entries and, when `positive` is set, `rho <= 0`.
    pub fn check(&self, positive: bool) -> Result<()> {
        for (cell, (&r, &m)) in self.rho.iter().zip(&self.mom).enumerate() {
            if !r.is_finite() || !m.is_finite() {
                return Err(Error::NonFinite {
                    cell,
                    time: self.time,
                });
            }
            if positive && r <= 0.0 {
                return Err(Error::Vacuum {
                    cell,
                    time: self.time,
                    rho: r,
                });
            }
        }
        Ok(())
    }

    /// Circular shift by `cells` (positive moves data to the right).
    pub fn shifted(&self, cells: usize) -> Self {
        let mut out = self.clone();
        out.rho.rotate_right(cells % self.len().max(1));
        out.mom.rotate_right(cells % self.len().max(1));
        out
    }
}

impl RkState for FieldState {
    fn add_scaled(&mut self, a: f64, other: &Self) {
        self.rho.add_scaled(a, &other.rho);
        self.mom.add_scaled(a, &other.mom);
    }

    fn blend(&mut self, w: f64, other: &Self, w_other: f64) {
        self.rho.blend(w, &other.rho, w_other);
        self.mom.blend(w, &other.mom, w_other);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Linear,
    #[default]
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    /// Linearized Riemann problem in primitive variables about the face average.
    #[default]
    Vfroe,
    /// Local Lax-Friedrichs.
    Rusanov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reconstruction {
    FirstOrder,
    Minmod,
    #[default]
    VanLeer,
    /// Centered slopes without limiting.
    Unlimited,
}

impl Reconstruction {
    fn slope(self, dl: f64, dr: f64) -> f64 {
        match self {
            Reconstruction::FirstOrder => 0.0,
            Reconstruction::Minmod => {
                if dl * dr <= 0.0 {
                    0.0
                } else if dl.abs() < dr.abs() {
                    dl
                } else {
                    dr
                }
            }
            Reconstruction::VanLeer => {
                if dl * dr <= 0.0 {
                    0.0
                } else {
                    2.0 * dl * dr / (dl + dr)
                }
            }
            Reconstruction::Unlimited => 0.5 * (dl + dr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Scheme {
    pub model: Model,
    pub flux: FluxKind,
    pub reconstruction: Reconstruction,
}

/// Time-step control. In strict mode `dt_max` is used as-is and a step
/// above the stability limit is an error instead of being shortened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStepper {
    pub cfl: f64,
    pub dt_max: f64,
    pub strict: bool,
}

impl TimeStepper {
    pub fn fixed(dt: f64) -> Self {
        Self {
            cfl: 0.9,
            dt_max: dt,
            strict: true,
        }
    }

    pub fn adaptive(cfl: f64, dt_max: f64) -> Self {
        Self {
            cfl,
            dt_max,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::invalid("cfl", "must lie in (0, 1]"));
        }
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::invalid("dt", "must be positive"));
        }
        Ok(())
    }

    /// Step to take given the stability limits; the Courant number only
    /// scales the acoustic limit.
    pub fn select(&self, limits: StepLimits) -> Result<f64> {
        let limit = (self.cfl * limits.acoustic).min(limits.viscous);
        if self.strict {
            if self.dt_max > limit {
                return Err(Error::CflViolation {
                    dt: self.dt_max,
                    limit,
                });
            }
            Ok(self.dt_max)
        } else {
            Ok(self.dt_max.min(limit))
        }
    }
}

impl Default for TimeStepper {
    fn default() -> Self {
        Self::fixed(1e-3)
    }
}

/// Largest stable steps: acoustic at Courant number 1, and viscous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLimits {
    pub acoustic: f64,
    pub viscous: f64,
}

impl StepLimits {
    pub fn unbounded() -> Self {
        Self {
            acoustic: f64::INFINITY,
            viscous: f64::INFINITY,
        }
    }

    pub fn min(self, other: Self) -> Self {
        Self {
            acoustic: self.acoustic.min(other.acoustic),
            viscous: self.viscous.min(other.viscous),
        }
    }
}

/// One SSP-RK3 (Shu-Osher) step of `y' = rhs(t, y)`.
pub fn ssp_rk3<S, F>(t: f64, y: &S, dt: f64, mut rhs: F) -> Result<S>
where
    S: RkState,
    F: FnMut(f64, &S) -> Result<S>,
{
    let k0 = rhs(t, y)?;
    let mut stage = y.clone();
    stage.add_scaled(dt, &k0);
    let k1 = rhs(t + dt, &stage)?;
    stage.add_scaled(dt, &k1);
    stage.blend(0.25, y, 0.75);
    let k2 = rhs(t + 0.5 * dt, &stage)?;
    stage.add_scaled(dt, &k2);
    stage.blend(2.0 / 3.0, y, 1.0 / 3.0);
    Ok(stage)
}

fn physical_flux(params: &FluidParams, rho: f64, u: f64) -> (f64, f64) {
    let m = rho * u;
    (m, m * u + params.pressure(rho))
}

fn rusanov(params: &FluidParams, l: (f64, f64), r: (f64, f64)) -> (f64, f64) {
    let fl = physical_flux(params, l.0, l.1);
    let fr = physical_flux(params, r.0, r.1);
    let sl = l.1.abs() + params.sound_speed_sq(l.0).sqrt();
    let sr = r.1.abs() + params.sound_speed_sq(r.0).sqrt();
    let s = sl.max(sr);
    (
        0.5 * (fl.0 + fr.0) - 0.5 * s * (r.0 - l.0),
        0.5 * (fl.1 + fr.1) - 0.5 * s * (r.0 * r.1 - l.0 * l.1),
    )
}

fn vfroe(params: &FluidParams, l: (f64, f64), r: (f64, f64)) -> (f64, f64) {
    let rho_bar = 0.5 * (l.0 + r.0);
    let u_bar = 0.5 * (l.1 + r.1);
    let c_bar = params.sound_speed_sq(rho_bar).sqrt();
    let d_rho = r.0 - l.0;
    let d_u = r.1 - l.1;
    let a_plus = 0.5 * (d_rho / rho_bar + d_u / c_bar);
    let a_minus = 0.5 * (d_rho / rho_bar - d_u / c_bar);
    let (mut rho, mut u) = l;
    if u_bar - c_bar < 0.0 {
        rho += a_minus * rho_bar;
        u -= a_minus * c_bar;
    }
    if u_bar + c_bar < 0.0 {
        rho += a_plus * rho_bar;
        u += a_plus * c_bar;
    }
    if rho <= 0.0 || !rho.is_finite() {
        return rusanov(params, l, r);
    }
    physical_flux(params, rho, u)
}

fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

/// Convective plus viscous tendency of the nonlinear system.
pub fn rhs_nonlinear(
    state: &FieldState,
    params: &FluidParams,
    grid: &GridSpec,
    flux: FluxKind,
    reconstruction: Reconstruction,
) -> Result<FieldState> {
    state.check(true)?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let u = state.velocity();
    let slopes = |w: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| {
                let jm = wrap(j as isize - 1, n);
                let jp = wrap(j as isize + 1, n);
                reconstruction.slope(w[j] - w[jm], w[jp] - w[j])
            })
            .collect()
    };
    let s_rho = slopes(&state.rho);
    let s_u = slopes(&u);

    // face j+1/2 between cells j and j+1
    let mut f_rho = vec![0.0; n];
    let mut f_mom = vec![0.0; n];
    for j in 0..n {
        let jp = wrap(j as isize + 1, n);
        let mut l = (state.rho[j] + 0.5 * s_rho[j], u[j] + 0.5 * s_u[j]);
        let mut r = (state.rho[jp] - 0.5 * s_rho[jp], u[jp] - 0.5 * s_u[jp]);
        if l.0 <= 0.0 || r.0 <= 0.0 {
            l = (state.rho[j], u[j]);
            r = (state.rho[jp], u[jp]);
        }
        let (fr, fm) = match flux {
            FluxKind::Vfroe => vfroe(params, l, r),
            FluxKind::Rusanov => rusanov(params, l, r),
        };
        f_rho[j] = fr;
        f_mom[j] = fm - params.nu() * (u[jp] - u[j]) / dx;
    }

    let mut out = state.zeros_like();
    for j in 0..n {
        let jm = wrap(j as isize - 1, n);
        out.rho[j] = -(f_rho[j] - f_rho[jm]) / dx;
        out.mom[j] = -(f_mom[j] - f_mom[jm]) / dx;
    }
    Ok(out)
}

/// Linearized tendency about `(rho0, 0)` with centered stencils.
pub fn rhs_linear(state: &FieldState, params: &FluidParams, grid: &GridSpec) -> Result<FieldState> {
    state.check(false)?;
    let n = grid.n_cells();
    let dx = grid.dx();
    let rho0 = params.rho0;
    let c2 = params.sound_speed_sq(rho0);
    let nu = params.nu();
    let mut out = state.zeros_like();
    for j in 0..n {
        let jm = wrap(j as isize - 1, n);
        let jp = wrap(j as isize + 1, n);
        let v = |i: usize| state.mom[i] / rho0;
        out.rho[j] = -(state.mom[jp] - state.mom[jm]) / (2.0 * dx);
        out.mom[j] = nu * (v(jp) - 2.0 * v(j) + v(jm)) / (dx * dx)
            - c2 * (state.rho[jp] - state.rho[jm]) / (2.0 * dx);
    }
    Ok(out)
}

/// A configured solver for one fluid on one grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    pub grid: GridSpec,
    pub params: FluidParams,
    pub scheme: Scheme,
}

impl Solver {
    pub fn new(grid: GridSpec, params: FluidParams, scheme: Scheme) -> Result<Self> {
        params.validate()?;
        if params.dim != 1 {
            return Err(Error::invalid("dim", "the finite-volume solver is one-dimensional"));
        }
        Ok(Self {
            grid,
            params,
            scheme,
        })
    }

    pub fn rhs(&self, state: &FieldState) -> Result<FieldState> {
        match self.scheme.model {
            Model::Linear => rhs_linear(state, &self.params, &self.grid),
            Model::Nonlinear => rhs_nonlinear(
                state,
                &self.params,
                &self.grid,
                self.scheme.flux,
                self.scheme.reconstruction,
            ),
        }
    }

    /// `max |u| + sqrt(gamma rho^(gamma-1))` over the grid.
    pub fn max_wave_speed(&self, state: &FieldState) -> f64 {
        let linear = self.scheme.model == Model::Linear;
        state
            .rho
            .iter()
            .zip(&state.mom)
            .map(|(&r, &m)| {
                let rho = if linear { self.params.rho0 } else { r };
                (m / rho).abs() + self.params.sound_speed_sq(rho.max(0.0)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn stable_dt(&self, state: &FieldState) -> StepLimits {
        let dx = self.grid.dx();
        let acoustic = dx / self.max_wave_speed(state);
        let rho_min = match self.scheme.model {
            Model::Linear => self.params.rho0,
            Model::Nonlinear => state.rho.iter().copied().fold(f64::INFINITY, f64::min),
        };
        StepLimits {
            acoustic,
            viscous: VISCOUS_LIMIT * rho_min * dx * dx / self.params.nu(),
        }
    }

    pub fn step(&self, state: &FieldState, stepper: &TimeStepper) -> Result<FieldState> {
        let dt = stepper.select(self.stable_dt(state))?;
        let mut next = ssp_rk3(state.time, state, dt, |t, s| {
            let mut d = self.rhs(s)?;
            d.time = t;
            Ok(d)
        })?;
        next.time = state.time + dt;
        next.check(self.scheme.model == Model::Nonlinear)?;
        Ok(next)
    }

    /// Advances to `t_final`, shortening the last step to land on it.
    pub fn advance(&self, state: &FieldState, t_final: f64, stepper: &TimeStepper) -> Result<FieldState> {
        let mut s = state.clone();
        while s.time < t_final - 1e-12 {
            let mut st = *stepper;
            st.dt_max = st.dt_max.min(t_final - s.time);
            s = self.step(&s, &st)?;
        }
        Ok(s)
    }
}

/// Writes `x, rho, u` per cell with `#` header lines for time, parameters and tag.
pub fn snapshot_csv(state: &FieldState, grid: &GridSpec, params: &FluidParams, tag: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# time={}", state.time);
    let _ = writeln!(
        out,
        "# gamma={} nu={} rho0={} n_cells={}",
        params.gamma,
        params.nu(),
        params.rho0,
        grid.n_cells()
    );
    let _ = writeln!(out, "# tag={tag}");
    out.push_str("x,rho,u\n");
    for ((x, r), u) in grid.centers().iter().zip(&state.rho).zip(state.velocity()) {
        let _ = writeln!(out, "{x},{r},{u}");
    }
    out
}

pub fn write_snapshot(
    path: &Path,
    state: &FieldState,
    grid: &GridSpec,
    params: &FluidParams,
    tag: &str,
) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(snapshot_csv(state, grid, params, tag).as_bytes())
        .map_err(|e| Error::io(path, e))
}
