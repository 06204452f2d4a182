//! Scalar functionals of a vorticity slice and the residuals of the exact
//! identities they satisfy along the flow.
//!
//! Unless stated otherwise a slice is odd and `π`-periodic; `2π` data are
//! viewed through [`PeriodicField::retag_period`], which leaves `u_x` invariant.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;
use thiserror::Error;

use crate::kernels::{self, KernelError};
use crate::spectral::{
    derivative, gl_composite, hilbert, quad_weighted, velocity, OddSeries, Parity, Period, PeriodicField,
    SingularWeight, SpectralError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{0} expects a field of period {1:?}")]
    WrongPeriod(&'static str, Period),
    #[error("{0} expects an odd field")]
    NotOdd(&'static str),
    #[error("vorticity is positive ({value:e}) at x = {x} inside (0, π/2)")]
    SignViolation { x: f64, value: f64 },
    #[error("{what} diverges: {source}")]
    Divergent {
        what: &'static str,
        source: SpectralError,
    },
    #[error("exponent {0} outside the admissible range")]
    Exponent(f64),
    #[error("weighted norm diverges: field or its slope does not vanish at 0")]
    NotInWeightedSpace,
}

type Result<T> = std::result::Result<T, FunctionalError>;

fn require(omega: &PeriodicField, what: &'static str, period: Period) -> Result<()> {
    if omega.period() != period {
        return Err(FunctionalError::WrongPeriod(what, period));
    }
    if omega.parity() != Parity::Odd {
        return Err(FunctionalError::NotOdd(what));
    }
    Ok(())
}

/// `cot y` on `(0, π/2)` given the distance to the nearer endpoint.
fn cot_graded(y: f64, dist: f64) -> f64 {
    if y < FRAC_PI_4 {
        1.0 / dist.tan()
    } else {
        dist.tan()
    }
}

/// `u_x(0) = Hω(0)`, spectrally.
pub fn ux_at_zero(omega: &PeriodicField) -> Result<f64> {
    require(omega, "ux_at_zero", Period::Pi)?;
    Ok(hilbert(omega).values()[0])
}

/// `u_x(0) = (2/π)∫_0^{π/2} (-ω) cot y dy`, by weighted quadrature.
pub fn ux_at_zero_integral(omega: &PeriodicField) -> Result<f64> {
    require(omega, "ux_at_zero_integral", Period::Pi)?;
    let series = OddSeries::new(omega)?;
    let q = quad_weighted(
        |y, d| -series.omega(y) * cot_graded(y, d),
        0.0,
        FRAC_PI_2,
        SingularWeight {
            left: 0.0,
            right: 2.0,
        },
    )
    .map_err(|source| FunctionalError::Divergent {
        what: "u_x(0) integral",
        source,
    })?;
    Ok(2.0 / PI * q.value)
}

pub fn ux_at_half(omega: &PeriodicField) -> Result<f64> {
    require(omega, "ux_at_half", Period::Pi)?;
    Ok(hilbert(omega).values()[omega.len() / 2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AValue {
    pub value: f64,
    /// Set when `|ω|` fell below the floor strictly inside `(0, π/2)`.
    pub degenerate: bool,
}

const A_FLOOR: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-8;

/// `A(ω) = ∫ -ω_x²/ω · sin 2x dx` over one period, by the trapezoid rule.
/// The nodes `0` and `π/2` use the limit of `ω_x sin2x/ω`, extrapolated from
/// three neighbours (it is even about both points).
pub fn functional_a(omega: &PeriodicField, omega_x: &PeriodicField) -> Result<AValue> {
    require(omega, "functional_A", Period::Pi)?;
    if omega_x.period() != Period::Pi || omega_x.len() != omega.len() {
        return Err(SpectralError::PeriodMismatch.into());
    }
    let n = omega.len();
    let half = n / 2;
    let (w, wx) = (omega.values(), omega_x.values());
    let scale = omega.linf();
    if scale == 0.0 {
        return Ok(AValue {
            value: 0.0,
            degenerate: false,
        });
    }
    let h = omega.dx();
    let x = |j: usize| j as f64 * h;
    if let Some((j, &value)) = w[..half]
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, v)| **v > SIGN_TOL * scale)
    {
        return Err(FunctionalError::SignViolation { x: x(j), value });
    }
    let floor = A_FLOOR * scale;
    let mut degenerate = false;
    let ratio = |j: usize, degenerate: &mut bool| -> f64 {
        let s2 = (2.0 * x(j)).sin();
        let denom = if w[j].abs() < floor {
            *degenerate = true;
            -floor
        } else {
            w[j]
        };
        wx[j] * s2 / denom
    };
    // Even about the node: cancel the x² and x⁴ terms.
    let limit = |j: [usize; 3], degenerate: &mut bool| {
        (15.0 * ratio(j[0], degenerate) - 6.0 * ratio(j[1], degenerate) + ratio(j[2], degenerate)) / 10.0
    };
    let q0 = limit([1, 2, 3], &mut degenerate);
    let qh = limit([half - 1, half - 2, half - 3], &mut degenerate);
    let interior: f64 = (1..half).map(|j| -wx[j] * ratio(j, &mut degenerate)).sum();
    // Only interior degeneracy is reported; endpoint zeros are structural.
    let value = h * (-wx[0] * q0 + 2.0 * interior + -wx[half] * qh);
    Ok(AValue { value, degenerate })
}

/// `E(ω) = A(ω) + u_x(0) + ‖ω‖_1`, unit weights.
pub fn functional_e(omega: &PeriodicField, omega_x: &PeriodicField) -> Result<f64> {
    Ok(functional_a(omega, omega_x)?.value + ux_at_zero(omega)? + omega.l1())
}

/// Vanishing order of `ω` at 0 estimated from the first two grid cells.
pub fn vanishing_order(omega: &PeriodicField) -> f64 {
    let v = omega.values();
    let (a, b) = (v[1].abs(), v[2].abs());
    if a == 0.0 || b == 0.0 {
        return f64::INFINITY;
    }
    (b / a).log2()
}

fn check_exponent(beta: f64) -> Result<()> {
    if beta > 1.0 && beta < 3.0 {
        Ok(())
    } else {
        Err(FunctionalError::Exponent(beta))
    }
}

/// Endpoint exponent for `ω·cot^β` given the estimated vanishing order.
fn left_exponent(omega: &PeriodicField, beta: f64) -> f64 {
    (vanishing_order(omega).min(8.0) - beta).max(-1.0)
}

/// `Q(β) = -∫_0^{π/2} ω cot^β y dy`.
pub fn functional_q(omega: &PeriodicField, beta: f64) -> Result<f64> {
    require(omega, "functional_Q", Period::Pi)?;
    check_exponent(beta)?;
    if omega.linf() == 0.0 {
        return Ok(0.0);
    }
    let series = OddSeries::new(omega)?;
    let weight = SingularWeight {
        left: left_exponent(omega, beta),
        right: 1.0 + beta,
    };
    quad_weighted(
        |y, d| -series.omega(y) * cot_graded(y, d).powf(beta),
        0.0,
        FRAC_PI_2,
        weight,
    )
    .map(|q| q.value)
    .map_err(|source| FunctionalError::Divergent { what: "Q", source })
}

/// `∫_0^{π/2} (u_x ω - a·u ω_x) cot^β x dx`; `a = 1` is the production term of `Q`.
pub fn functional_b_weighted(omega: &PeriodicField, beta: f64, advection: f64) -> Result<f64> {
    require(omega, "functional_B", Period::Pi)?;
    check_exponent(beta)?;
    if omega.linf() == 0.0 {
        return Ok(0.0);
    }
    let series = OddSeries::new(omega)?;
    let weight = SingularWeight {
        left: left_exponent(omega, beta),
        right: beta,
    };
    quad_weighted(
        |y, d| {
            let p = series.at(y);
            (p.u_x * p.omega - advection * p.u * p.omega_x) * cot_graded(y, d).powf(beta)
        },
        0.0,
        FRAC_PI_2,
        weight,
    )
    .map(|q| q.value)
    .map_err(|source| FunctionalError::Divergent { what: "B", source })
}

/// `B(β) = ∫_0^{π/2} (u_x ω - u ω_x) cot^β x dx`.
pub fn functional_b(omega: &PeriodicField, beta: f64) -> Result<f64> {
    functional_b_weighted(omega, beta, 1.0)
}

/// Uniform samples of a smooth function on `[start, start + (len-1)·h]`,
/// read back by 6-point Lagrange interpolation and zero outside.
struct Sampled {
    start: f64,
    h: f64,
    values: Vec<f64>,
}

impl Sampled {
    fn at(&self, r: f64) -> f64 {
        let pos = (r - self.start) / self.h;
        let base = pos.floor() as isize - 2;
        if base < 0 || base as usize + 6 > self.values.len() {
            return 0.0;
        }
        let frac = pos - (base as f64);
        let mut acc = 0.0;
        for i in 0..6 {
            let mut wgt = 1.0;
            for j in 0..6 {
                if i != j {
                    wgt *= (frac - j as f64) / (i as f64 - j as f64);
                }
            }
            acc += wgt * self.values[base as usize + i];
        }
        acc
    }
}

/// Offsets `o ≠ 0` and weights for `∫ f(o) do` over `[-span, span]`, geometric
/// toward the logarithmic singularity at `o = 0`.
fn singular_offsets(span: f64, near: f64) -> Vec<(f64, f64)> {
    let mut rule = Vec::new();
    let push_panel = |a: f64, b: f64, rule: &mut Vec<(f64, f64)>| {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        for &(x, w) in crate::spectral::gl32() {
            rule.push((c + r * x, r * w));
        }
    };
    for j in 0..44 {
        let (a, b) = (near * 0.5f64.powi(j + 1), near * 0.5f64.powi(j));
        push_panel(a, b, &mut rule);
    }
    let panels = ((span - near) / near).ceil() as usize;
    let w = (span - near) / panels as f64;
    for i in 0..panels {
        push_panel(near + i as f64 * w, near + (i + 1) as f64 * w, &mut rule);
    }
    let mirrored: Vec<(f64, f64)> = rule.iter().map(|&(o, w)| (-o, w)).collect();
    rule.extend(mirrored);
    rule
}

/// Which kernel pair the log-variable double integral uses.
#[derive(Clone, Copy)]
enum PairKernel {
    /// `P_{1,β}, P_{2,β}`: the production term `B(β)`.
    Production,
    /// `K_{1,β}, K_{2,β}`: the modified form `B̃(β)`.
    Modified,
    /// `0, s(s^{β-1}-1)/(s²-1)`: the remainder double integral.
    Shift,
    /// `K_{1,β}, 0`: the positive-definite part on its own.
    First,
}

impl PairKernel {
    /// `(e^{-bo}·k_1(e^o), e^{-co}·k_2(e^o))`.
    fn at(self, o: f64, beta: f64) -> std::result::Result<(f64, f64), KernelError> {
        let s = o.exp();
        let c = 0.5 * (beta - 1.0);
        let damp = (-c * o).exp();
        Ok(match self {
            // s^{-b} P_1 = K̃_1 - (2-β)(s^c + s^{-c}), which stays accurate at large |o|.
            PairKernel::Production => (
                kernels::tilde_k1(s, beta)? - (2.0 - beta) * 2.0 * (c * o).cosh(),
                damp * kernels::p2(s, beta)?,
            ),
            PairKernel::Modified => (kernels::tilde_k1(s, beta)?, damp * kernels::k2(s, beta)?),
            PairKernel::Shift => (0.0, damp * kernels::k2_shift(s, beta)?),
            PairKernel::First => (kernels::tilde_k1(s, beta)?, 0.0),
        })
    }
}

/// `B(β)` through the symmetrized double integral
/// `(1/π)∬ ω(x)ω(y)[cot^{β+1}y P_{1,β}(s) + cot^{β-1}y P_{2,β}(s)] dx dy`,
/// evaluated in `r = log tan x` where the kernels depend on `t - r` only.
pub fn functional_b_symmetrized(omega: &PeriodicField, beta: f64) -> Result<f64> {
    pair_integral(omega, beta, PairKernel::Production, "functional_B_symmetrized")
}

/// `B̃(β)`: the same double integral with the modified kernels `K_{1,β}, K_{2,β}`.
/// Equals `B(β) + (2-β)(u_x(0)Q(β) + J(β))` with `J` from [`shift_integral`].
pub fn functional_b_modified(omega: &PeriodicField, beta: f64) -> Result<f64> {
    pair_integral(omega, beta, PairKernel::Modified, "functional_B_modified")
}

/// `J(β) = (1/π)∬ ω(x)ω(y) cot^{β-1}y · s(s^{β-1}-1)/(s²-1) dx dy`.
pub fn shift_integral(omega: &PeriodicField, beta: f64) -> Result<f64> {
    pair_integral(omega, beta, PairKernel::Shift, "shift_integral")
}

/// `B₁(β) = ∬ F(r)F(t) W_{1,β}(t - r) dr dt` with `F(r) = e^{-cr}ω(arctan e^r)/(1 + e^{2r})`,
/// `c = (β-1)/2`; the `x, y` form is `∬ ω(x)ω(y) cot^{β+1}y K_{1,β}(s)`.
pub fn functional_b1(omega: &PeriodicField, beta: f64) -> Result<f64> {
    Ok(PI * pair_integral(omega, beta, PairKernel::First, "functional_B1")?)
}

fn pair_integral(omega: &PeriodicField, beta: f64, pair: PairKernel, op: &'static str) -> Result<f64> {
    require(omega, op, Period::Pi)?;
    if !(beta > 1.0 && beta <= 2.0) {
        return Err(FunctionalError::Exponent(beta));
    }
    if omega.linf() == 0.0 {
        return Ok(0.0);
    }
    let series = OddSeries::new(omega)?;
    let (b, c) = (0.5 * (beta + 1.0), 0.5 * (beta - 1.0));
    let gamma = vanishing_order(omega).min(8.0);
    let decay_left = (gamma - b + 1.0).max(0.05);
    let (lo, hi) = (-(40.0 / decay_left).min(120.0), 40.0 / (1.0 + c));
    let h = 1.0 / 64.0;
    let count = ((hi - lo) / h).ceil() as usize + 7;
    let start = lo - 3.0 * h;
    let mut g1 = Vec::with_capacity(count);
    let mut g3 = Vec::with_capacity(count);
    for i in 0..count {
        let r = start + i as f64 * h;
        let x = if r < 0.0 {
            r.exp().atan()
        } else {
            FRAC_PI_2 - (-r).exp().atan()
        };
        let jac = 1.0 / (2.0 * r.cosh());
        let w = series.omega(x);
        // cot(arctan e^r) = e^{-r}
        g1.push(w * (-b * r).exp() * jac);
        g3.push(w * (-c * r).exp() * jac);
    }
    let g1 = Sampled { start, h, values: g1 };
    let g3 = Sampled { start, h, values: g3 };

    let span = hi - lo;
    let offsets = singular_offsets(span, 0.5);
    let kernel = offsets
        .iter()
        .map(|&(o, w)| {
            let (k1, k2) = pair.at(o, beta)?;
            Ok((o, w * k1, w * k2))
        })
        .collect::<Result<Vec<(f64, f64, f64)>>>()?;
    let outer = |r: f64| -> f64 {
        let (a1, a3) = (g1.at(r), g3.at(r));
        if a1 == 0.0 && a3 == 0.0 {
            return 0.0;
        }
        let (mut s1, mut s3) = (0.0, 0.0);
        for &(o, k1, k2) in &kernel {
            let t = r + o;
            if t < lo || t > hi {
                continue;
            }
            s1 += g1.at(t) * k1;
            s3 += g3.at(t) * k2;
        }
        a1 * s1 + a3 * s3
    };
    let panels = span.ceil() as usize;
    let mut f = outer;
    Ok(gl_composite(&mut f, lo, hi, panels) / PI)
}

/// `D = -∬_{x+y>π/2} ω(x)ω(y) cot(x+y)`, written with `x = π/2 - ρσ`,
/// `y = π/2 - ρ(1-σ)` so the integrand `ω ω ρ cot ρ` is smooth.
pub fn damping_d(omega: &PeriodicField) -> Result<f64> {
    damping_d_with(omega, 4)
}

pub fn damping_d_with(omega: &PeriodicField, panels: usize) -> Result<f64> {
    require(omega, "damping_D", Period::Pi)?;
    if omega.linf() == 0.0 {
        return Ok(0.0);
    }
    let series = OddSeries::new(omega)?;
    let mut outer = |rho: f64| {
        let weight = if rho == 0.0 { 1.0 } else { rho / rho.tan() };
        let mut inner = |sigma: f64| {
            series.omega(FRAC_PI_2 - rho * sigma) * series.omega(FRAC_PI_2 - rho * (1.0 - sigma))
        };
        weight * gl_composite(&mut inner, 0.0, 1.0, panels)
    };
    Ok(gl_composite(&mut outer, 0.0, FRAC_PI_2, panels))
}

fn require_two_pi(f: &PeriodicField, what: &'static str) -> Result<()> {
    if f.period() != Period::TwoPi {
        return Err(FunctionalError::WrongPeriod(what, Period::TwoPi));
    }
    Ok(())
}

/// Slope field, checked to vanish (with the field) at 0.
fn weighted_slope(f: &PeriodicField) -> Result<(PeriodicField, f64)> {
    require_two_pi(f, "h_inner")?;
    let fx = derivative(f);
    let scale = f.linf().max(fx.linf()).max(1e-300);
    if f.values()[0].abs() > 1e-10 * scale || fx.values()[0].abs() > 1e-8 * scale {
        return Err(FunctionalError::NotInWeightedSpace);
    }
    let fxx0 = derivative(&fx).values()[0];
    Ok((fx, fxx0))
}

/// `⟨f, g⟩_H = (1/4π)∫ f_x g_x / sin²(x/2) dx`. The node at `x = 0` takes the
/// limit `4 f_xx(0) g_xx(0)`, so the rule is exact on trigonometric polynomials.
pub fn h_inner(f: &PeriodicField, g: &PeriodicField) -> Result<f64> {
    let (fx, f2) = weighted_slope(f)?;
    let (gx, g2) = weighted_slope(g)?;
    if f.len() != g.len() {
        return Err(SpectralError::LengthMismatch(f.len(), g.len()).into());
    }
    let h = f.dx();
    let mut acc = 4.0 * f2 * g2;
    for (j, (a, b)) in fx.values().iter().zip(gx.values()).enumerate().skip(1) {
        let s = (0.5 * j as f64 * h).sin();
        acc += a * b / (s * s);
    }
    Ok(acc * h / (4.0 * PI))
}

pub fn h_norm(f: &PeriodicField) -> Result<f64> {
    Ok(h_inner(f, f)?.max(0.0).sqrt())
}

/// `e₀ = cos x - 1` on an `n`-point `2π` grid.
pub fn e0_field(n: usize) -> Result<PeriodicField> {
    Ok(PeriodicField::from_fn(n, Period::TwoPi, Parity::Even, |x| {
        x.cos() - 1.0
    })?)
}

/// `f_e = ⟨f, e₀⟩_H`.
pub fn e0_coeff(f: &PeriodicField) -> Result<f64> {
    h_inner(f, &e0_field(f.len())?)
}

/// `⟨f, g⟩_Y = ⟨f, g⟩_H - f_e g_e`.
pub fn y_inner(f: &PeriodicField, g: &PeriodicField) -> Result<f64> {
    Ok(h_inner(f, g)? - e0_coeff(f)? * e0_coeff(g)?)
}

pub fn y_norm(f: &PeriodicField) -> Result<f64> {
    Ok(y_inner(f, f)?.max(0.0).sqrt())
}

/// Linearization at `ω = -sin x`: `L₁ω = -sin x ω_x + cos x ω - u_x sin x + u cos x`.
pub fn apply_l1(omega: &PeriodicField) -> Result<PeriodicField> {
    require(omega, "apply_L1", Period::TwoPi)?;
    let wx = derivative(omega);
    let ux = hilbert(omega);
    let u = velocity(omega)?;
    let values = omega
        .grid()
        .enumerate()
        .map(|(j, x)| {
            let (s, c) = x.sin_cos();
            -s * wx.values()[j] + c * omega.values()[j] - ux.values()[j] * s + u.values()[j] * c
        })
        .collect();
    Ok(PeriodicField::new(values, Period::TwoPi, Parity::Odd)?)
}

/// Right side of the `u_x(0)` equation for `ω_t + a u ω_x = (u_x + c) ω`:
/// `((1+a)/2) u_x(0)² + a (2/π)∫_0^{π/2} uω/sin²y dy + c u_x(0)`.
pub fn ux0_rate(omega: &PeriodicField, advection: f64, c_omega: f64) -> Result<f64> {
    let ux0 = ux_at_zero(omega)?;
    let series = OddSeries::new(omega)?;
    let integral = if advection == 0.0 || omega.linf() == 0.0 {
        0.0
    } else {
        let weight = SingularWeight {
            left: (vanishing_order(omega).min(8.0) - 1.0).max(0.0),
            right: 0.0,
        };
        quad_weighted(
            |y, d| {
                let p = series.at(y);
                let s = if y < FRAC_PI_4 { d.sin() } else { d.cos() };
                p.u * p.omega / (s * s)
            },
            0.0,
            FRAC_PI_2,
            weight,
        )
        .map_err(|source| FunctionalError::Divergent {
            what: "u_x(0) rate",
            source,
        })?
        .value
    };
    Ok(0.5 * (1.0 + advection) * ux0 * ux0 + advection * 2.0 / PI * integral + c_omega * ux0)
}

/// Probe points for the pointwise identity, away from the zeros of `ω`.
pub const IMP_PROBES: [f64; 3] = [PI / 8.0, PI / 4.0, 3.0 * PI / 8.0];

/// Right side of `∂_t(ω_x²/ω) = (1-2a) u_x q + c q + 2 ω_x Hω_x - a u q_x`
/// with `q = ω_x²/ω`, at the probe points.
pub fn imp_rhs(series: &OddSeries, advection: f64, c_omega: f64) -> [f64; 3] {
    IMP_PROBES.map(|x| {
        let p = series.at(x);
        let q = p.omega_x * p.omega_x / p.omega;
        let qx = 2.0 * p.omega_x * p.omega_xx / p.omega - p.omega_x.powi(3) / (p.omega * p.omega);
        (1.0 - 2.0 * advection) * p.u_x * q + c_omega * q + 2.0 * p.omega_x * p.u_xx - advection * p.u * qx
    })
}

fn imp_density(series: &OddSeries) -> [f64; 3] {
    IMP_PROBES.map(|x| {
        let p = series.at(x);
        p.omega_x * p.omega_x / p.omega
    })
}

/// Dynamics parameters the residuals are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub advection: f64,
    pub c_omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub res_imp: f64,
    pub res_ux0: f64,
    pub res_q: Option<f64>,
}

/// Central-difference residuals of the three identities at the middle slice.
/// `res_q` uses `dQ/dt = -B_a + c·Q` at exponent `beta_q` and is `None` when
/// `Q` diverges.
pub fn identity_residuals(
    prev: &PeriodicField,
    cur: &PeriodicField,
    next: &PeriodicField,
    dt: f64,
    flow: FlowParams,
    beta_q: f64,
) -> Result<Residuals> {
    let (sp, sc, sn) = (OddSeries::new(prev)?, OddSeries::new(cur)?, OddSeries::new(next)?);
    let (qp, qn) = (imp_density(&sp), imp_density(&sn));
    let rhs = imp_rhs(&sc, flow.advection, flow.c_omega);
    let res_imp = (0..3)
        .map(|i| ((qn[i] - qp[i]) / (2.0 * dt) - rhs[i]).abs())
        .fold(0.0, f64::max);

    let dux = (ux_at_zero(next)? - ux_at_zero(prev)?) / (2.0 * dt);
    let res_ux0 = (dux - ux0_rate(cur, flow.advection, flow.c_omega)?).abs();

    let res_q = match (
        functional_q(prev, beta_q),
        functional_q(next, beta_q),
        functional_q(cur, beta_q),
    ) {
        (Ok(a), Ok(b), Ok(q)) => {
            let production = functional_b_weighted(cur, beta_q, flow.advection)?;
            Some(((b - a) / (2.0 * dt) + production - flow.c_omega * q).abs())
        }
        _ => None,
    };
    Ok(Residuals {
        res_imp,
        res_ux0,
        res_q,
    })
}

/// One time slice of every tracked quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub ux0: f64,
    pub uxhalf: f64,
    pub l1: f64,
    pub linf: f64,
    pub a: f64,
    pub e: f64,
    pub u_integral: f64,
    pub betas: Vec<f64>,
    pub q: Vec<Option<f64>>,
    pub b: Vec<Option<f64>>,
    pub d: f64,
    pub c_omega: Option<f64>,
    pub res_imp: Option<f64>,
    pub res_ux0: Option<f64>,
    pub res_q: Option<f64>,
    /// Relative gap between the direct and symmetrized `B(2)`.
    pub b_dual_rel: Option<f64>,
    pub a_degenerate: bool,
}

/// What to evaluate for a row beyond the always-on scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct RowOptions {
    pub betas: Vec<f64>,
    pub dual_path: bool,
}

impl Default for RowOptions {
    fn default() -> Self {
        Self {
            betas: vec![1.9, 1.95, 2.0],
            dual_path: false,
        }
    }
}

impl DiagnosticsRow {
    /// Functionals of a `π`-periodic odd slice at time `t`. Sign violations in
    /// `A` and divergent weighted integrals are recorded as NaN / `None`.
    pub fn compute(omega: &PeriodicField, t: f64, u_integral: f64, opts: &RowOptions) -> Result<Self> {
        let omega_x = derivative(omega);
        let ux0 = ux_at_zero(omega)?;
        let (a, a_degenerate) = match functional_a(omega, &omega_x) {
            Ok(v) => (v.value, v.degenerate),
            Err(FunctionalError::SignViolation { .. }) => (f64::NAN, false),
            Err(e) => return Err(e),
        };
        let q: Vec<Option<f64>> = opts.betas.iter().map(|&b| functional_q(omega, b).ok()).collect();
        let b: Vec<Option<f64>> = opts
            .betas
            .iter()
            .zip(&q)
            .map(|(&beta, qv)| qv.and_then(|_| functional_b(omega, beta).ok()))
            .collect();
        let b_dual_rel = if opts.dual_path {
            match functional_b(omega, 2.0) {
                Ok(direct) => {
                    let sym = functional_b_symmetrized(omega, 2.0)?;
                    Some((direct - sym).abs() / direct.abs().max(sym.abs()).max(1e-300))
                }
                Err(_) => None,
            }
        } else {
            None
        };
        Ok(Self {
            t,
            ux0,
            uxhalf: ux_at_half(omega)?,
            l1: omega.l1(),
            linf: omega.linf(),
            a,
            e: a + ux0 + omega.l1(),
            u_integral,
            betas: opts.betas.clone(),
            q,
            b,
            d: damping_d(omega)?,
            c_omega: None,
            res_imp: None,
            res_ux0: None,
            res_q: None,
            b_dual_rel,
            a_degenerate,
        })
    }

    pub fn with_residuals(mut self, r: Residuals) -> Self {
        self.res_imp = Some(r.res_imp);
        self.res_ux0 = Some(r.res_ux0);
        self.res_q = r.res_q;
        self
    }
}

/// Cotlar residual `max |H(f Hf) - ((Hf)² - f²)/2|`.
pub fn cotlar_residual(f: &PeriodicField) -> f64 {
    let hf = hilbert(f);
    let prod = f.zip_with(&hf, Parity::None, |a, b| a * b).expect("same grid");
    let lhs = hilbert(&prod);
    let rhs = hf
        .zip_with(f, Parity::None, |h, v| 0.5 * (h * h - v * v))
        .expect("same grid");
    lhs.max_abs_diff(&rhs).expect("same grid")
}

/// Commutator residual: spread of `H(σ f_x) - σ H f_x` with `σ = sin(2x/n)`,
/// where the field has period `nπ`; the difference must be constant.
pub fn commutator_residual(f: &PeriodicField) -> f64 {
    let n = match f.period() {
        Period::Pi => 1.0,
        Period::TwoPi => 2.0,
    };
    let sigma: Vec<f64> = f.grid().map(|x| (2.0 * x / n).sin()).collect();
    let fx = derivative(f);
    let a = PeriodicField::new(
        fx.values().iter().zip(&sigma).map(|(v, s)| v * s).collect(),
        f.period(),
        Parity::None,
    )
    .expect("valid grid");
    let hfx = hilbert(&fx);
    let lhs = hilbert(&a);
    let diff: Vec<f64> = lhs
        .values()
        .iter()
        .zip(hfx.values())
        .zip(&sigma)
        .map(|((l, h), s)| l - s * h)
        .collect();
    diff.iter().map(|d| (d - diff[0]).abs()).fold(0.0, f64::max)
}

/// `∫ ω_x Hω_x sin 2x dx` over one period of a `π`-periodic field.
pub fn cancellation_integral(omega: &PeriodicField) -> f64 {
    let wx = derivative(omega);
    let hwx = hilbert(&wx);
    let h = omega.dx();
    omega
        .grid()
        .enumerate()
        .map(|(j, x)| wx.values()[j] * hwx.values()[j] * (2.0 * x).sin())
        .sum::<f64>()
        * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi_field(n: usize, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::from_fn(n, Period::Pi, Parity::Odd, f).unwrap()
    }

    #[test]
    fn ux0_of_steady_state() {
        let w = pi_field(128, |x| -(2.0 * x).sin());
        assert!((ux_at_zero(&w).unwrap() - 1.0).abs() < 1e-14);
        assert!((ux_at_zero_integral(&w).unwrap() - 1.0).abs() < 1e-10);
        let z = pi_field(64, |_| 0.0);
        assert_eq!(ux_at_zero(&z).unwrap(), 0.0);
    }

    #[test]
    fn a_of_steady_state() {
        let w = pi_field(256, |x| -(2.0 * x).sin());
        let a = functional_a(&w, &derivative(&w)).unwrap();
        assert!((a.value - 2.0 * PI).abs() < 1e-10, "{a:?}");
        assert!(!a.degenerate);
        let w2 = w.scaled(2.0);
        assert!((functional_a(&w2, &derivative(&w2)).unwrap().value - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn a_rejects_positive_bump() {
        let w = pi_field(128, |x| (2.0 * x).sin().powi(3));
        assert!(matches!(
            functional_a(&w, &derivative(&w)),
            Err(FunctionalError::SignViolation { .. })
        ));
    }

    #[test]
    fn q_spot_values() {
        let w = pi_field(256, |x| -(2.0 * x).sin() * (1.0 - (2.0 * x).cos()));
        assert!((functional_q(&w, 2.0).unwrap() - 1.0).abs() < 1e-10);
        let steady = pi_field(256, |x| -(2.0 * x).sin());
        assert!(matches!(
            functional_q(&steady, 2.0),
            Err(FunctionalError::Divergent { .. })
        ));
        assert_eq!(functional_q(&pi_field(64, |_| 0.0), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn b_paths_agree() {
        let w = pi_field(256, |x| -(2.0 * x).sin() * (1.0 - (2.0 * x).cos()));
        let direct = functional_b(&w, 2.0).unwrap();
        let sym = functional_b_symmetrized(&w, 2.0).unwrap();
        assert!((direct - sym).abs() < 1e-5 * direct.abs(), "{direct} {sym}");
        for beta in [1.9, 1.95] {
            let d = functional_b(&w, beta).unwrap();
            let s = functional_b_symmetrized(&w, beta).unwrap();
            assert!((d - s).abs() < 1e-5 * d.abs(), "{beta}: {d} {s}");
        }
    }

    #[test]
    fn oracle_values_for_cubic_profile() {
        // Independent high-precision quadrature of the definitions.
        let w = pi_field(256, |x| -(2.0 * x).sin() * (1.0 - (2.0 * x).cos()));
        assert!((ux_at_zero(&w).unwrap() - 0.5).abs() < 1e-14);
        assert!((functional_b(&w, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert!((functional_b(&w, 1.9).unwrap() - 0.620_046_695_941_587).abs() < 1e-9);
        assert!((functional_q(&w, 1.9).unwrap() - 0.953_917_993_756_288).abs() < 1e-9);
        assert!((damping_d(&w).unwrap() - 0.563_051_438_826_084).abs() < 1e-12);
    }

    #[test]
    fn damping_is_stable_under_refinement() {
        let w = pi_field(128, |x| -(2.0 * x).sin() * (1.0 - (2.0 * x).cos()));
        let (a, b) = (damping_d_with(&w, 4).unwrap(), damping_d_with(&w, 8).unwrap());
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn e0_has_unit_norm() {
        let e0 = e0_field(256).unwrap();
        assert!((h_norm(&e0).unwrap() - 1.0).abs() < 1e-12);
        assert!(y_norm(&e0).unwrap() < 1e-6);
    }

    #[test]
    fn h_norm_rejects_nonvanishing_slope() {
        let f = PeriodicField::from_fn(64, Period::TwoPi, Parity::Odd, f64::sin).unwrap();
        assert_eq!(h_norm(&f), Err(FunctionalError::NotInWeightedSpace));
    }
}

#[cfg(test)]
mod modified_form {
    use super::*;
    use crate::models::class_x_field;

    #[test]
    fn modified_form_splits_into_production_and_shift() {
        let omega = class_x_field(256, &[0.3, -0.2]).unwrap();
        for beta in [1.9, 1.95] {
            let lhs = functional_b_modified(&omega, beta).unwrap();
            let rhs = functional_b(&omega, beta).unwrap()
                + (2.0 - beta)
                    * (ux_at_zero(&omega).unwrap() * functional_q(&omega, beta).unwrap()
                        + shift_integral(&omega, beta).unwrap());
            assert!((lhs - rhs).abs() < 1e-5 * rhs.abs(), "{beta}: {lhs} vs {rhs}");
        }
    }
}
