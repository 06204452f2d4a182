//! The gCLM family `ω_t + a·u·ω_x = (c_ω + u_x)·ω` with `u_x = Hω`: the
//! closed-form `a = 0` solution, a dealiased RK4 integrator, and initial data.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{
    dealias, derivative, hilbert, quad_weighted, velocity, Parity, Period, PeriodicField, SingularWeight,
    SpectralError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("closed form breaks down at t = {t}, x = {x}")]
    ClosedFormBlowup { t: f64, x: f64 },
    #[error("normalization exponent {0} outside (0, 1]")]
    Alpha(f64),
    #[error("{0} has no time stepper")]
    NotIntegrable(ModelKind),
    #[error("initial field period {found:?} differs from model period {expected:?}")]
    PeriodMismatch { expected: Period, found: Period },
    #[error("invalid run control: {0}")]
    Control(&'static str),
    #[error("c_α normalization integral failed: {0}")]
    Normalization(SpectralError),
}

type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ClmExact,
    Gclm,
    Dg,
    DgRescaled,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ModelKind::ClmExact => "clm_exact",
            ModelKind::Gclm => "gclm",
            ModelKind::Dg => "dg",
            ModelKind::DgRescaled => "dg_rescaled",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Advection weight; read only for `gclm`.
    pub a: f64,
    /// Normalization exponent; read only for `dg_rescaled`.
    pub alpha: f64,
    pub period: Period,
}

impl ModelSpec {
    pub fn gclm(a: f64, period: Period) -> Self {
        Self {
            kind: ModelKind::Gclm,
            a,
            alpha: 1.0,
            period,
        }
    }

    pub fn dg(period: Period) -> Self {
        Self {
            kind: ModelKind::Dg,
            a: 1.0,
            alpha: 1.0,
            period,
        }
    }

    pub fn dg_rescaled(alpha: f64, period: Period) -> Self {
        Self {
            kind: ModelKind::DgRescaled,
            a: 1.0,
            alpha,
            period,
        }
    }

    pub fn advection(&self) -> f64 {
        match self.kind {
            ModelKind::ClmExact => 0.0,
            ModelKind::Gclm => self.a,
            ModelKind::Dg | ModelKind::DgRescaled => 1.0,
        }
    }

    /// `c_ω = (α-1)·u_x(0)` for rescaled runs, zero otherwise.
    pub fn scaling_rate(&self, ux0: f64) -> f64 {
        match self.kind {
            ModelKind::DgRescaled => (self.alpha - 1.0) * ux0,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ModelKind::DgRescaled && !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(ModelError::Alpha(self.alpha));
        }
        if !self.a.is_finite() {
            return Err(ModelError::Control("advection weight must be finite"));
        }
        Ok(())
    }
}

/// Solution slice plus the rescaling bookkeeping.
/// Invariants: `t_phys` is nondecreasing for forward runs; `C_ω = exp(log_c) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub omega: PeriodicField,
    pub t: f64,
    pub log_c: f64,
    pub t_phys: f64,
    /// `∫ u_x(0) dt` (trapezoid); for rescaled runs this equals the physical-time integral.
    pub u_integral: f64,
}

impl RunState {
    pub fn new(omega: PeriodicField) -> Self {
        Self {
            omega,
            t: 0.0,
            log_c: 0.0,
            t_phys: 0.0,
            u_integral: 0.0,
        }
    }

    pub fn c_omega_factor(&self) -> f64 {
        self.log_c.exp()
    }

    pub fn ux0(&self) -> f64 {
        hilbert(&self.omega).values()[0]
    }
}

const CLOSED_FORM_FLOOR: f64 = 1e-12;

/// Closed-form `a = 0` solution `(ω(t), Hω(t))`.
pub fn clm_exact(omega0: &PeriodicField, t: f64) -> Result<(PeriodicField, PeriodicField)> {
    let h0 = hilbert(omega0);
    let n = omega0.len();
    let (mut w, mut hw) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (j, x) in omega0.grid().enumerate() {
        let (a, b) = (omega0.values()[j], h0.values()[j]);
        let m = 2.0 - t * b;
        let den = m * m + t * t * a * a;
        if den < CLOSED_FORM_FLOOR {
            return Err(ModelError::ClosedFormBlowup { t, x });
        }
        w.push(4.0 * a / den);
        hw.push((2.0 * b * m - 2.0 * t * a * a) / den);
    }
    let parity = omega0.parity();
    let hparity = match parity {
        Parity::Odd => Parity::Even,
        Parity::Even => Parity::Odd,
        Parity::None => Parity::None,
    };
    Ok((
        PeriodicField::new(w, omega0.period(), parity)?,
        PeriodicField::new(hw, omega0.period(), hparity)?,
    ))
}

/// Right side and scaling rate at one slice.
#[derive(Debug, Clone)]
pub struct Tendency {
    pub omega_t: PeriodicField,
    pub c_omega: f64,
    pub ux0: f64,
}

/// Dealiased right side `-a·u·ω_x + (c_ω + u_x)·ω`.
pub fn rhs(omega: &PeriodicField, spec: &ModelSpec) -> Result<Tendency> {
    let u = velocity(omega)?;
    let ux = hilbert(omega);
    let wx = derivative(omega);
    let ux0 = ux.values()[0];
    let c = spec.scaling_rate(ux0);
    let a = spec.advection();
    let values: Vec<f64> = (0..omega.len())
        .map(|j| {
            let w = omega.values()[j];
            -a * u.values()[j] * wx.values()[j] + (c + ux.values()[j]) * w
        })
        .collect();
    let mut omega_t = dealias(&PeriodicField::new(values, omega.period(), Parity::None)?);
    omega_t.enforce_odd();
    Ok(Tendency {
        omega_t: omega_t.with_parity(Parity::Odd)?,
        c_omega: c,
        ux0,
    })
}

fn axpy(base: &PeriodicField, k: &PeriodicField, h: f64) -> Result<PeriodicField> {
    let values = base
        .values()
        .iter()
        .zip(k.values())
        .map(|(b, k)| b + h * k)
        .collect();
    let mut f = PeriodicField::new(values, base.period(), Parity::None)?;
    f.enforce_odd();
    Ok(f.with_parity(Parity::Odd)?)
}

/// One classical RK4 step of size `dt` (either sign). The log-amplitude
/// `log C_ω` rides along in the same scheme; `t_phys` and `∫u_x(0)` use the
/// trapezoid rule between the step ends.
pub fn step(state: &RunState, spec: &ModelSpec, dt: f64) -> Result<RunState> {
    if spec.kind == ModelKind::ClmExact {
        return Err(ModelError::NotIntegrable(spec.kind));
    }
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let w0 = &state.omega;
    let k1 = rhs(w0, spec)?;
    let k2 = rhs(&axpy(w0, &k1.omega_t, 0.5 * dt)?, spec)?;
    let k3 = rhs(&axpy(w0, &k2.omega_t, 0.5 * dt)?, spec)?;
    let k4 = rhs(&axpy(w0, &k3.omega_t, dt)?, spec)?;
    let values: Vec<f64> = (0..w0.len())
        .map(|j| {
            w0.values()[j]
                + dt / 6.0
                    * (k1.omega_t.values()[j]
                        + 2.0 * k2.omega_t.values()[j]
                        + 2.0 * k3.omega_t.values()[j]
                        + k4.omega_t.values()[j])
        })
        .collect();
    let mut omega = PeriodicField::new(values, w0.period(), Parity::None)?;
    omega.enforce_odd();
    let omega = omega.with_parity(Parity::Odd)?;
    let log_c = state.log_c + dt / 6.0 * (k1.c_omega + 2.0 * k2.c_omega + 2.0 * k3.c_omega + k4.c_omega);
    let ux0_new = hilbert(&omega).values()[0];
    let (c_old, c_new) = (state.log_c.exp(), log_c.exp());
    Ok(RunState {
        omega,
        t: state.t + dt,
        log_c,
        t_phys: state.t_phys + 0.5 * dt * (c_old + c_new),
        u_integral: state.u_integral + 0.5 * dt * (k1.ux0 + ux0_new),
    })
}

/// `dt = cfl·Δx / max(‖u‖_∞, ‖u_x‖_∞·Δx, 1e-8)`.
pub fn cfl_dt(omega: &PeriodicField, cfl: f64) -> Result<f64> {
    let dx = omega.dx();
    let u = velocity(omega)?.linf();
    let ux = hilbert(omega).linf();
    Ok(cfl * dx / u.max(ux * dx).max(1e-8))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TEnd,
    /// `u_x(0)` exceeded its threshold.
    BlowupThreshold,
    /// `‖ω‖_∞` exceeded its threshold.
    LinfThreshold,
    NonFinite,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::TEnd => "t_end",
            StopReason::BlowupThreshold => "blowup_threshold",
            StopReason::LinfThreshold => "linf_threshold",
            StopReason::NonFinite => "non_finite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunControl {
    pub t_end: f64,
    pub cfl: f64,
    /// Sampling interval; every sample time is hit exactly.
    pub sample_every: f64,
    pub ux0_limit: f64,
    pub linf_limit: f64,
}

impl Default for RunControl {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            cfl: 0.5,
            sample_every: 0.1,
            ux0_limit: 1e6,
            linf_limit: 1e8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub stop_reason: StopReason,
    pub final_state: RunState,
    pub steps: usize,
}

/// Integrates until `t_end` or a stop criterion, calling `on_sample` at
/// `t = 0`, every multiple of `sample_every`, and the final slice. The
/// callback receives the slice and the CFL step there.
pub fn run<E>(
    initial: RunState,
    spec: &ModelSpec,
    control: &RunControl,
    mut on_sample: impl FnMut(&RunState, f64) -> std::result::Result<(), E>,
) -> std::result::Result<RunReport, E>
where
    E: From<ModelError>,
{
    spec.validate()?;
    if !(control.t_end >= 0.0 && control.cfl > 0.0 && control.sample_every > 0.0) {
        return Err(ModelError::Control("t_end >= 0, cfl > 0, sample_every > 0 required").into());
    }
    if initial.omega.period() != spec.period {
        return Err(ModelError::PeriodMismatch {
            expected: spec.period,
            found: initial.omega.period(),
        }
        .into());
    }
    let mut state = initial;
    let mut steps = 0usize;
    let mut sample_index = 1u64;
    on_sample(&state, cfl_dt(&state.omega, control.cfl)?)?;
    let stop = loop {
        if state.t >= control.t_end {
            break StopReason::TEnd;
        }
        let target = (sample_index as f64 * control.sample_every).min(control.t_end);
        let mut dt = cfl_dt(&state.omega, control.cfl)?;
        let lands = state.t + dt >= target * (1.0 - 1e-14);
        if lands {
            dt = target - state.t;
        }
        let next = match step(&state, spec, dt) {
            Ok(s) => s,
            Err(ModelError::Spectral(SpectralError::NonFinite)) => break StopReason::NonFinite,
            Err(e) => return Err(e.into()),
        };
        state = next;
        steps += 1;
        if lands {
            state.t = target;
            sample_index += 1;
        }
        let ux0 = state.ux0();
        if !ux0.is_finite() {
            break StopReason::NonFinite;
        }
        if ux0 > control.ux0_limit {
            break StopReason::BlowupThreshold;
        }
        if state.omega.linf() > control.linf_limit {
            break StopReason::LinfThreshold;
        }
        if lands {
            on_sample(&state, cfl_dt(&state.omega, control.cfl)?)?;
        }
    };
    if stop != StopReason::TEnd || state.t != control.t_end {
        if let Ok(dt) = cfl_dt(&state.omega, control.cfl) {
            on_sample(&state, dt)?;
        }
    }
    Ok(RunReport {
        stop_reason: stop,
        final_state: state,
        steps,
    })
}

/// Initial-data presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// `-A sin 2x` on period `π`.
    NegSin2x { amplitude: f64 },
    /// `-sin 2x (1 - cos 2x)` on period `π`: class X, cubic at 0.
    CubicX,
    /// `ω_α = -sgn(x)|sin x|^α c_α` on period `2π`.
    ProfileAlpha { alpha: f64 },
    /// `ω_α` blended to zero near `π` by a quintic step on `[π/3, 2π/3]`.
    BlowupCandidate { alpha: f64 },
}

impl Preset {
    pub fn period(&self) -> Period {
        match self {
            Preset::NegSin2x { .. } | Preset::CubicX => Period::Pi,
            Preset::ProfileAlpha { .. } | Preset::BlowupCandidate { .. } => Period::TwoPi,
        }
    }
}

pub fn build_initial(preset: Preset, n: usize) -> Result<PeriodicField> {
    let field = match preset {
        Preset::NegSin2x { amplitude } => {
            PeriodicField::from_fn(n, Period::Pi, Parity::Odd, |x| -amplitude * (2.0 * x).sin())?
        }
        Preset::CubicX => PeriodicField::from_fn(n, Period::Pi, Parity::Odd, |x| {
            -(2.0 * x).sin() * (1.0 - (2.0 * x).cos())
        })?,
        Preset::ProfileAlpha { alpha } => profile(alpha, n, |_| 1.0)?,
        Preset::BlowupCandidate { alpha } => profile(alpha, n, |d| 1.0 - quintic_step(d))?,
    };
    Ok(field)
}

/// `c_α = (π⁻¹ ∫_0^π sin^α x · cot(x/2) dx)⁻¹`, so that `Hω_α(0) = 1`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ModelError::Alpha(alpha));
    }
    let integral = quad_weighted(
        |y, d| {
            let half = if y < FRAC_PI_2 {
                1.0 / (0.5 * d).tan()
            } else {
                (0.5 * d).tan()
            };
            d.sin().powf(alpha) * half
        },
        0.0,
        PI,
        SingularWeight {
            left: alpha - 1.0,
            right: alpha + 1.0,
        },
    )
    .map_err(ModelError::Normalization)?;
    Ok(PI / integral.value)
}

/// Smooth 0→1 ramp over `[π/3, 2π/3]` with two vanishing derivatives at both ends.
fn quintic_step(d: f64) -> f64 {
    let s = ((d - PI / 3.0) / (PI / 3.0)).clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Odd `2π` field `-sgn(x)|sin x|^α c_α · envelope(|x|)`, zero at the grid points `0` and `π`.
fn profile(alpha: f64, n: usize, envelope: impl Fn(f64) -> f64) -> Result<PeriodicField> {
    let c = c_alpha(alpha)?;
    Ok(PeriodicField::from_fn(n, Period::TwoPi, Parity::Odd, |x| {
        let d = if x <= PI { x } else { 2.0 * PI - x };
        let sign = if x <= PI { 1.0 } else { -1.0 };
        -sign * d.sin().abs().powf(alpha) * c * envelope(d)
    })?)
}

/// `-sin 2x (1 - cos 2x)·p(x)`, `p = 1 + Σ_k c_k cos(2kx)`; class X whenever `Σ|c_k| < 1`.
pub fn class_x_field(n: usize, coeffs: &[f64]) -> Result<PeriodicField> {
    Ok(PeriodicField::from_fn(n, Period::Pi, Parity::Odd, |x| {
        let p = 1.0
            + coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (2.0 * (k + 1) as f64 * x).cos())
                .sum::<f64>();
        -(2.0 * x).sin() * (1.0 - (2.0 * x).cos()) * p
    })?)
}

/// `Σ_k a_k sin(k·κx)` on the given period (`k` from 1).
pub fn sine_polynomial(n: usize, period: Period, coeffs: &[f64]) -> Result<PeriodicField> {
    let kappa = period.kappa();
    Ok(PeriodicField::from_fn(n, period, Parity::Odd, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * kappa * x).sin())
            .sum()
    })?)
}

/// Projects sine coefficients onto `Σ k·a_k = 0`, i.e. `f_x(0) = 0`.
pub fn admissible_coeffs(coeffs: &[f64]) -> Vec<f64> {
    let norm: f64 = (1..=coeffs.len()).map(|k| (k * k) as f64).sum();
    let dot: f64 = coeffs.iter().enumerate().map(|(i, a)| (i + 1) as f64 * a).sum();
    coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| a - dot * (i + 1) as f64 / norm)
        .collect()
}
