//! Closed-form linear theory of the observer error dynamics.
//!
//! The linearized error `(r, v)` around a constant state `(rho0, 0)` splits
//! into independent Fourier modes. For each wave number `k` the mode obeys a
//! small linear ODE whose matrix is assembled here in three flavours:
//!
//! * the damped-wave form (velocity only, `2n x 2n`),
//! * the density/velocity system under velocity observations (`(n+1) x (n+1)`),
//! * the same system under density observations.
//!
//! Eigenvalues of all three are known in closed form, which is what makes the
//! feedback kernels designable: [`design_kernels_velocity`] and
//! [`design_kernels_density`] pick per-mode coefficients that place every
//! eigenvalue left of `-D` for `|k| <= K`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spatial dimension accepted by the theory routines.
pub const MAX_DIMENSION: usize = 8;

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Physical constants of the compressible fluid, `p(rho) = rho^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    pub gamma: f64,
    /// First Lamé parameter (shear viscosity).
    pub mu: f64,
    /// Second Lamé parameter.
    pub lam: f64,
    pub rho0: f64,
    /// Spatial dimension.
    pub dim: usize,
}

impl FluidParams {
    pub fn new(gamma: f64, mu: f64, lam: f64, rho0: f64, dim: usize) -> Result<Self> {
        let params = Self {
            gamma,
            mu,
            lam,
            rho0,
            dim,
        };
        params.validate()?;
        Ok(params)
    }

    /// 1D parameters from the combined viscosity `nu = 2 mu + lam` (split as `lam = 0`).
    pub fn one_dimensional(gamma: f64, nu: f64, rho0: f64) -> Result<Self> {
        Self::new(gamma, 0.5 * nu, 0.0, rho0, 1)
    }

    /// `gamma = 1.4`, `nu = 0.05`, `rho0 = 1`, one dimension.
    pub fn reference() -> Self {
        Self {
            gamma: 1.4,
            mu: 0.025,
            lam: 0.0,
            rho0: 1.0,
            dim: 1,
        }
    }

    /// Effective 1D viscosity `2 mu + lam`.
    pub fn nu(&self) -> f64 {
        2.0 * self.mu + self.lam
    }

    /// `p'(rho) = gamma rho^(gamma - 1)`.
    pub fn sound_speed_sq(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 1.0)
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.gamma, self.mu, self.lam, self.rho0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("params", "all parameters must be finite"));
        }
        if self.rho0 <= 0.0 {
            return Err(Error::invalid("rho0", "must be positive"));
        }
        if self.mu <= 0.0 {
            return Err(Error::invalid("mu", "must be positive"));
        }
        if self.gamma <= 1.0 {
            return Err(Error::invalid("gamma", "must exceed 1"));
        }
        if self.lam + self.mu <= 0.0 {
            return Err(Error::invalid("lam", "lam + mu must be positive"));
        }
        if self.nu() <= 0.0 {
            return Err(Error::invalid("lam", "2 mu + lam must be positive"));
        }
        if self.dim == 0 || self.dim > MAX_DIMENSION {
            return Err(Error::invalid(
                "dim",
                format!("must lie in 1..={MAX_DIMENSION}"),
            ));
        }
        Ok(())
    }
}

impl Default for FluidParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: Complex64,
    pub c5: Complex64,
}

pub fn compute_constants(params: &FluidParams) -> Result<SpectralConstants> {
    params.validate()?;
    let FluidParams {
        gamma,
        mu,
        lam,
        rho0,
        ..
    } = *params;
    Ok(SpectralConstants {
        c1: mu * FOUR_PI_SQ / rho0,
        c2: (lam + mu) * FOUR_PI_SQ / rho0,
        c3: gamma * rho0.powf(gamma - 1.0) * FOUR_PI_SQ,
        c4: Complex64::new(0.0, -rho0 * 2.0 * PI),
        c5: Complex64::new(0.0, gamma * rho0.powf(gamma - 2.0) * 2.0 * PI),
    })
}

/// Nonzero integer wave vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WaveNumber(Vec<i64>);

impl WaveNumber {
    pub fn new(components: Vec<i64>) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_DIMENSION {
            return Err(Error::invalid(
                "k",
                format!("wave vector must have 1..={MAX_DIMENSION} components"),
            ));
        }
        if components.iter().all(|&c| c == 0) {
            return Err(Error::ZeroWaveNumber);
        }
        Ok(Self(components))
    }

    pub fn scalar(k: i64) -> Result<Self> {
        Self::new(vec![k])
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k|^2`.
    pub fn norm2(&self) -> u64 {
        self.0.iter().map(|&c| (c * c) as u64).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    fn check_dim(&self, params: &FluidParams) -> Result<()> {
        if self.dim() != params.dim {
            return Err(Error::invalid(
                "k",
                format!(
                    "wave vector has {} components, params dimension is {}",
                    self.dim(),
                    params.dim
                ),
            ));
        }
        Ok(())
    }
}

/// Which field the observer receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation {
    Velocity,
    Density,
}

impl std::fmt::Display for Observation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observation::Velocity => f.write_str("velocity"),
            Observation::Density => f.write_str("density"),
        }
    }
}

impl std::str::FromStr for Observation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "velocity" | "u" => Ok(Observation::Velocity),
            "density" | "rho" => Ok(Observation::Density),
            other => Err(Error::invalid(
                "observe",
                format!("expected `velocity` or `density`, got `{other}`"),
            )),
        }
    }
}

/// Feedback coefficients of a single mode: `(phi_rho, phi_u)` for velocity
/// observations, `(psi_rho, psi_u)` for density observations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeFeedback {
    pub rho: f64,
    pub u: f64,
}

impl ModeFeedback {
    pub fn new(rho: f64, u: f64) -> Self {
        Self { rho, u }
    }
}

/// Fourier coefficients of the two isotropic feedback kernels, keyed by `|k|^2`.
///
/// Modes absent from the tables take the default coefficient. Every
/// coefficient vanishes for `|k| > cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoeffs {
    pub target: Observation,
    pub rho: BTreeMap<u64, f64>,
    pub u: BTreeMap<u64, f64>,
    pub default_rho: f64,
    pub default_u: f64,
    pub cutoff: f64,
}

impl KernelCoeffs {
    /// Same coefficients on every mode, including the mean (a scaled Dirac kernel).
    pub fn uniform(target: Observation, rho: f64, u: f64) -> Self {
        Self {
            target,
            rho: BTreeMap::new(),
            u: BTreeMap::new(),
            default_rho: rho,
            default_u: u,
            cutoff: f64::INFINITY,
        }
    }

    pub fn zero(target: Observation) -> Self {
        Self::uniform(target, 0.0, 0.0)
    }

    pub fn rho_coeff(&self, norm2: u64) -> f64 {
        if self.truncated(norm2) {
            return 0.0;
        }
        self.rho.get(&norm2).copied().unwrap_or(self.default_rho)
    }

    pub fn u_coeff(&self, norm2: u64) -> f64 {
        if self.truncated(norm2) {
            return 0.0;
        }
        self.u.get(&norm2).copied().unwrap_or(self.default_u)
    }

    pub fn mode(&self, norm2: u64) -> ModeFeedback {
        ModeFeedback::new(self.rho_coeff(norm2), self.u_coeff(norm2))
    }

    fn truncated(&self, norm2: u64) -> bool {
        (norm2 as f64).sqrt() > self.cutoff
    }

    pub fn min_coefficient(&self) -> f64 {
        self.rho
            .values()
            .chain(self.u.values())
            .copied()
            .chain([self.default_rho, self.default_u])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, allow_negative: bool) -> Result<()> {
        let all_finite = self
            .rho
            .values()
            .chain(self.u.values())
            .chain([&self.default_rho, &self.default_u])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("kernels", "coefficients must be finite"));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::invalid("cutoff", "must be positive"));
        }
        if !allow_negative && self.min_coefficient() < 0.0 {
            return Err(Error::invalid(
                "kernels",
                "negative feedback coefficients require the unsafe flag",
            ));
        }
        Ok(())
    }
}

/// Eigen-structure of one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigen {
    pub target: Observation,
    pub dim: usize,
    pub norm2: u64,
    /// Zero eigenvalue of the damped-wave form (velocity observations, `n >= 2`).
    pub lambda_0: Option<f64>,
    /// Divergence-free diffusion eigenvalue (`n >= 2`), multiplicity `n - 1`.
    pub lambda_d: Option<f64>,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub discriminant: f64,
    /// Slowest decay among the physical eigenvalues (positive means decaying).
    pub decay_rate: f64,
    /// `4 pi / sqrt(-discriminant)`, only for a negative discriminant.
    pub period: Option<f64>,
}

impl ModeEigen {
    fn multiplicity(&self) -> usize {
        self.dim - 1
    }

    /// Eigenvalue multiset of the `(n+1) x (n+1)` density/velocity system.
    pub fn system_spectrum(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dim + 1);
        if let Some(ld) = self.lambda_d {
            out.extend(std::iter::repeat_n(
                Complex64::new(ld, 0.0),
                self.multiplicity(),
            ));
        }
        out.push(self.lambda_plus);
        out.push(self.lambda_minus);
        out
    }

    /// Eigenvalue multiset of the `2n x 2n` damped-wave matrix (velocity observations).
    pub fn wave_spectrum(&self) -> Vec<Complex64> {
        let mut out = self.system_spectrum();
        if let Some(l0) = self.lambda_0 {
            out.extend(std::iter::repeat_n(
                Complex64::new(l0, 0.0),
                self.multiplicity(),
            ));
        }
        out
    }
}

/// Roots of `lambda^2 + sum lambda + product = 0`, given the discriminant
/// separately so that callers can pass an exactly-formed expression.
fn quadratic_roots(sum: f64, product: f64, disc: f64) -> (Complex64, Complex64) {
    if disc < 0.0 {
        let im = 0.5 * (-disc).sqrt();
        return (
            Complex64::new(-0.5 * sum, im),
            Complex64::new(-0.5 * sum, -im),
        );
    }
    let sq = disc.sqrt();
    // larger-magnitude root first, the other from the product (no cancellation)
    let big = if sum >= 0.0 {
        -0.5 * (sum + sq)
    } else {
        0.5 * (-sum + sq)
    };
    let small = if big != 0.0 { product / big } else { 0.0 };
    let (plus, minus) = if big >= small { (big, small) } else { (small, big) };
    (Complex64::new(plus, 0.0), Complex64::new(minus, 0.0))
}

/// `p - q`, with differences at rounding level treated as an exact double
/// root (designed kernels sit on `p == q` by construction).
fn snap_zero(p: f64, q: f64) -> f64 {
    let d = p - q;
    if d.abs() <= 8.0 * f64::EPSILON * p.abs().max(q.abs()) {
        0.0
    } else {
        d
    }
}

/// Eigenvalues of one mode for given per-mode feedback coefficients.
pub fn mode_eigen(
    params: &FluidParams,
    target: Observation,
    feedback: ModeFeedback,
    k: &WaveNumber,
) -> Result<ModeEigen> {
    k.check_dim(params)?;
    let c = compute_constants(params)?;
    let m = k.norm2() as f64;
    let a = (c.c1 + c.c2) * m;
    let (sum, product, disc, lambda_0, lambda_d) = match target {
        Observation::Velocity => {
            let sum = a + feedback.u;
            let product = c.c3 * (1.0 + feedback.rho) * m;
            let disc = snap_zero(sum * sum, 4.0 * product);
            let ld = -(c.c1 * m + feedback.u);
            (sum, product, disc, Some(0.0), Some(ld))
        }
        Observation::Density => {
            let sum = a + feedback.rho;
            let product = a * feedback.rho + c.c3 * (1.0 + feedback.u) * m;
            let diff = a - feedback.rho;
            let disc = snap_zero(diff * diff, 4.0 * c.c3 * (1.0 + feedback.u) * m);
            (sum, product, disc, None, Some(-c.c1 * m))
        }
    };
    let (lambda_plus, lambda_minus) = quadratic_roots(sum, product, disc);
    let (lambda_0, lambda_d) = if params.dim >= 2 {
        (lambda_0, lambda_d)
    } else {
        (None, None)
    };
    let mut decay = (-lambda_plus.re).min(-lambda_minus.re);
    if let Some(ld) = lambda_d {
        decay = decay.min(-ld);
    }
    let period = (disc < 0.0).then(|| 4.0 * PI / (-disc).sqrt());
    Ok(ModeEigen {
        target,
        dim: params.dim,
        norm2: k.norm2(),
        lambda_0,
        lambda_d,
        lambda_plus,
        lambda_minus,
        discriminant: disc,
        decay_rate: decay,
        period,
    })
}

pub fn eigenvalues_closed_form(
    params: &FluidParams,
    kernels: &KernelCoeffs,
    k: &WaveNumber,
) -> Result<ModeEigen> {
    mode_eigen(params, kernels.target, kernels.mode(k.norm2()), k)
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    size: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            data: vec![Complex64::new(0.0, 0.0); size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.size + col] = value;
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.size).map(|i| self.get(i, i)).sum()
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

fn check_target(kernels: &KernelCoeffs, expected: Observation) -> Result<()> {
    if kernels.target != expected {
        return Err(Error::KernelMismatch {
            kernels: kernels.target.to_string(),
            observer: expected.to_string(),
        });
    }
    Ok(())
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `2n x 2n` matrix of the damped-wave mode equation (velocity observations).
pub fn assemble_mode_matrix_wave(
    params: &FluidParams,
    kernels: &KernelCoeffs,
    k: &WaveNumber,
) -> Result<ComplexMatrix> {
    check_target(kernels, Observation::Velocity)?;
    k.check_dim(params)?;
    let c = compute_constants(params)?;
    let n = params.dim;
    let kv = k.components();
    let m = k.norm2() as f64;
    let fb = kernels.mode(k.norm2());
    let mut mat = ComplexMatrix::zeros(2 * n);
    for i in 0..n {
        mat.set(i, n + i, real(1.0));
        for j in 0..n {
            let kk = (kv[i] * kv[j]) as f64;
            mat.set(n + i, j, real(-c.c3 * (1.0 + fb.rho) * kk));
            let diag = if i == j { c.c1 * m + fb.u } else { 0.0 };
            mat.set(n + i, n + j, real(-diag - c.c2 * kk));
        }
    }
    Ok(mat)
}

fn system_matrix(
    params: &FluidParams,
    k: &WaveNumber,
    top_left: Complex64,
    top_scale: f64,
    left_scale: f64,
    diag_extra: f64,
) -> Result<ComplexMatrix> {
    k.check_dim(params)?;
    let c = compute_constants(params)?;
    let n = params.dim;
    let kv = k.components();
    let m = k.norm2() as f64;
    let mut mat = ComplexMatrix::zeros(n + 1);
    mat.set(0, 0, top_left);
    for i in 0..n {
        let ki = kv[i] as f64;
        mat.set(0, 1 + i, c.c4 * top_scale * ki);
        mat.set(1 + i, 0, -c.c5 * left_scale * ki);
        for j in 0..n {
            let kk = (kv[i] * kv[j]) as f64;
            let diag = if i == j { c.c1 * m + diag_extra } else { 0.0 };
            mat.set(1 + i, 1 + j, real(-diag - c.c2 * kk));
        }
    }
    Ok(mat)
}

/// `(n+1) x (n+1)` density/velocity mode matrix under velocity observations.
pub fn assemble_mode_matrix_system(
    params: &FluidParams,
    kernels: &KernelCoeffs,
    k: &WaveNumber,
) -> Result<ComplexMatrix> {
    check_target(kernels, Observation::Velocity)?;
    let fb = kernels.mode(k.norm2());
    system_matrix(params, k, real(0.0), 1.0 + fb.rho, 1.0, fb.u)
}

/// `(n+1) x (n+1)` mode matrix under density observations.
pub fn assemble_mode_matrix_density_obs(
    params: &FluidParams,
    kernels: &KernelCoeffs,
    k: &WaveNumber,
) -> Result<ComplexMatrix> {
    check_target(kernels, Observation::Density)?;
    let fb = kernels.mode(k.norm2());
    system_matrix(params, k, real(-fb.rho), 1.0, 1.0 + fb.u, 0.0)
}

/// Values of `|k|^2` in `1..=max` reachable as a sum of `dim` squares.
pub fn lattice_norms(dim: usize, max: u64) -> Vec<u64> {
    // reachable[s] after d squares
    let mut reachable = vec![false; max as usize + 1];
    reachable[0] = true;
    for _ in 0..dim {
        let mut next = reachable.clone();
        for s in 0..=max as usize {
            if !reachable[s] {
                continue;
            }
            let mut j = 1usize;
            while s + j * j <= max as usize {
                next[s + j * j] = true;
                j += 1;
            }
        }
        reachable = next;
    }
    (1..=max).filter(|&m| reachable[m as usize]).collect()
}

fn check_design_inputs(rate: f64, cutoff: f64) -> Result<()> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::invalid("rate", "target decay rate must be positive"));
    }
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::invalid("cutoff", "mode cutoff must be positive"));
    }
    Ok(())
}

fn design<F>(params: &FluidParams, target: Observation, cutoff: f64, rule: F) -> KernelCoeffs
where
    F: Fn(u64) -> ModeFeedback,
{
    let max = (cutoff * cutoff).floor() as u64;
    let mut kernels = KernelCoeffs::zero(target);
    kernels.cutoff = cutoff;
    for m in lattice_norms(params.dim, max) {
        let fb = rule(m);
        kernels.rho.insert(m, fb.rho);
        kernels.u.insert(m, fb.u);
    }
    kernels
}

/// Kernels guaranteeing decay rate `rate` on every mode `|k| <= cutoff`
/// under velocity observations.
pub fn design_kernels_velocity(rate: f64, cutoff: f64, params: &FluidParams) -> Result<KernelCoeffs> {
    check_design_inputs(rate, cutoff)?;
    let c = compute_constants(params)?;
    let dim = params.dim;
    Ok(design(params, Observation::Velocity, cutoff, |m| {
        let m = m as f64;
        let a = (c.c1 + c.c2) * m;
        let mut phi_u = (2.0 * rate - a).max(0.0);
        if dim >= 2 {
            phi_u = phi_u.max(rate - c.c1 * m);
        }
        let s = a + phi_u;
        let phi_rho = (s * s / (4.0 * c.c3 * m) - 1.0).max(0.0);
        ModeFeedback::new(phi_rho, phi_u)
    }))
}

/// Kernels placing the controllable eigenvalues at decay `>= rate` for
/// `|k| <= cutoff` under density observations.
pub fn design_kernels_density(rate: f64, cutoff: f64, params: &FluidParams) -> Result<KernelCoeffs> {
    check_design_inputs(rate, cutoff)?;
    let c = compute_constants(params)?;
    Ok(design(params, Observation::Density, cutoff, |m| {
        let m = m as f64;
        let a = (c.c1 + c.c2) * m;
        let psi_rho = (2.0 * rate - a).max(0.0);
        let d = a - psi_rho;
        let psi_u = (d * d / (4.0 * c.c3 * m) - 1.0).max(0.0);
        ModeFeedback::new(psi_rho, psi_u)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NudgingOptimum {
    pub coefficient: f64,
    pub rate: f64,
}

/// Best decay achievable by plain nudging (only the observed variable's
/// equation is corrected) on mode `k`.
pub fn optimal_nudging(
    params: &FluidParams,
    k: &WaveNumber,
    observed: Observation,
) -> Result<NudgingOptimum> {
    k.check_dim(params)?;
    let c = compute_constants(params)?;
    let m = k.norm2() as f64;
    let a = (c.c1 + c.c2) * m;
    let b = 2.0 * c.c3.sqrt() * k.norm();
    let diffusion = c.c1 * m;
    match observed {
        Observation::Velocity => {
            // decay of lambda_{+-} as a function of x = phi_u
            let pm = |x: f64| {
                let s = a + x;
                if s <= b {
                    0.5 * s
                } else {
                    0.5 * (s - (s * s - b * b).sqrt())
                }
            };
            let x_star = (b - a).max(0.0);
            let rate_star = if a <= b { 0.5 * b } else { pm(0.0) };
            if params.dim == 1 || diffusion + x_star >= rate_star {
                let rate = if params.dim == 1 {
                    rate_star
                } else {
                    rate_star.min(diffusion + x_star)
                };
                return Ok(NudgingOptimum {
                    coefficient: x_star,
                    rate,
                });
            }
            // the diffusion eigenvalue binds: balance it against the slower
            // acoustic eigenvalue on the decreasing branch
            let e = a - 2.0 * diffusion;
            let x = (e * e - a * a + b * b) / (2.0 * (a + e));
            Ok(NudgingOptimum {
                coefficient: x,
                rate: diffusion + x,
            })
        }
        Observation::Density => {
            let rate = if params.dim == 1 {
                a + 0.5 * b
            } else {
                (a + 0.5 * b).min(diffusion)
            };
            Ok(NudgingOptimum {
                coefficient: a + b,
                rate,
            })
        }
    }
}

/// One term `c sin(2 pi omega t) sin(2 pi k x)` of a zero-mean forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingEntry {
    pub k: i64,
    pub amplitude: f64,
    /// Cycles per unit time.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub entries: Vec<ForcingEntry>,
}

impl ForcingSpec {
    pub fn new(entries: Vec<ForcingEntry>) -> Result<Self> {
        for e in &entries {
            if e.k == 0 {
                return Err(Error::invalid("forcing.k", "forcing must have zero mean (k != 0)"));
            }
            if !(e.frequency > 0.0) || !e.frequency.is_finite() || !e.amplitude.is_finite() {
                return Err(Error::invalid(
                    "forcing.frequency",
                    "frequency must be positive and finite",
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn single(k: i64, amplitude: f64, frequency: f64) -> Result<Self> {
        Self::new(vec![ForcingEntry {
            k,
            amplitude,
            frequency,
        }])
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                e.amplitude
                    * (2.0 * PI * e.frequency * t).sin()
                    * (2.0 * PI * e.k as f64 * x).sin()
            })
            .sum()
    }
}

/// Steady periodic response of a forced 1D mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcedResponse {
    /// Velocity amplitude `D_k`.
    pub velocity_amplitude: f64,
    /// Density amplitude `E_k`.
    pub density_amplitude: f64,
    /// Cosine coefficient `A_k` of the velocity particular solution.
    pub cos_coeff: f64,
    /// Sine coefficient `B_k`.
    pub sin_coeff: f64,
}

pub fn forced_amplitude(
    params: &FluidParams,
    kernels: &KernelCoeffs,
    entry: &ForcingEntry,
) -> Result<ForcedResponse> {
    if params.dim != 1 {
        return Err(Error::invalid("dim", "forced response is one-dimensional"));
    }
    check_target(kernels, Observation::Velocity)?;
    if entry.k == 0 {
        return Err(Error::ZeroWaveNumber);
    }
    if !(entry.frequency > 0.0) {
        return Err(Error::invalid("frequency", "must be positive"));
    }
    let c = compute_constants(params)?;
    let m = (entry.k * entry.k) as u64;
    let fb = kernels.mode(m);
    let kf = entry.k.unsigned_abs() as f64;
    let alpha = fb.u + (c.c1 + c.c2) * m as f64;
    let beta = c.c3 * (1.0 + fb.rho) * m as f64;
    let w = 2.0 * PI * entry.frequency;
    let detune = beta - w * w;
    let damp = w * alpha;
    let denom = detune * detune + damp * damp;
    if denom == 0.0 {
        return Err(Error::Resonance {
            k: entry.k,
            frequency: entry.frequency,
        });
    }
    let drive = entry.amplitude * w;
    let cos_coeff = drive * detune / denom;
    let sin_coeff = drive * damp / denom;
    let velocity_amplitude = drive.abs() / denom.sqrt();
    let density_amplitude =
        params.rho0 * kf / entry.frequency * (1.0 + fb.rho).abs() * velocity_amplitude;
    Ok(ForcedResponse {
        velocity_amplitude,
        density_amplitude,
        cos_coeff,
        sin_coeff,
    })
}

/// Single-mode decay estimate when the velocity is observed on `[0, L]` only.
///
/// Keeps the mean of the indicator and discards mode mixing, so it is an
/// approximation that holds while the energy stays in mode `k`.
pub fn partial_obs_rate(params: &FluidParams, phi_u: f64, length: f64, k: i64) -> Result<f64> {
    if !(0.0..=1.0).contains(&length) {
        return Err(Error::invalid("L", "observation length must lie in [0, 1]"));
    }
    if k == 0 {
        return Err(Error::ZeroWaveNumber);
    }
    let c = compute_constants(params)?;
    let m = (k * k) as f64;
    Ok(0.5 * (phi_u * length + (c.c1 + c.c2) * m))
}

/// Real Fourier series of the indicator of `[0, L]` on the unit torus:
/// `1 = mean + sum_k cos[k] cos(2 pi k x) + sin[k] sin(2 pi k x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub mean: f64,
    /// Index 0 holds mode 1.
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl IndicatorSeries {
    pub fn evaluate(&self, x: f64) -> f64 {
        let mut v = self.mean;
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let arg = 2.0 * PI * (i + 1) as f64 * x;
            v += a * arg.cos() + b * arg.sin();
        }
        v
    }
}

pub fn indicator_fourier(length: f64, kmax: usize) -> Result<IndicatorSeries> {
    if !(length > 0.0 && length <= 1.0) {
        return Err(Error::invalid("L", "observation length must lie in (0, 1]"));
    }
    if kmax == 0 {
        return Err(Error::invalid("kmax", "must be at least 1"));
    }
    let (cos, sin) = (1..=kmax)
        .map(|k| {
            let kf = k as f64;
            let arg = 2.0 * PI * kf * length;
            (arg.sin() / (PI * kf), (1.0 - arg.cos()) / (PI * kf))
        })
        .unzip();
    Ok(IndicatorSeries {
        mean: length,
        cos,
        sin,
    })
}
