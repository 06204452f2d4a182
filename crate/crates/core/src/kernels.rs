//! High-accuracy point evaluation of the interaction kernels in the ratio
//! variable `s = cot x / cot y` and the log variable `z = log s`.
//!
//! `K̃` is evaluated by three routes: a direct formula with compensated
//! summation for `s` near 1, a Laurent series for `s > 10` where the leading
//! powers cancel, and the reflection `K̃(s) = K̃(1/s)` for `s < 1`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::spectral::gl_composite;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel is singular at s = 1 (z = 0)")]
    Singular,
    #[error("ratio variable must be positive and finite, got {0}")]
    BadRatio(f64),
    #[error("exponent {0} outside (1, 2]")]
    BadExponent(f64),
    #[error("derivative order {0} not available")]
    Order(u32),
    #[error("Fourier reference did not converge at xi = {xi} (change {delta:e})")]
    NonConvergence { xi: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    /// `K̃_{1,β}`, attached to `ω·cot^{(β+1)/2}`.
    One,
    /// `K̃_{2,β}`, attached to `ω·cot^{(β-1)/2}`.
    Two,
}

const SERIES_FROM: f64 = 10.0;

fn check_s(s: f64) -> Result<(), KernelError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(KernelError::BadRatio(s));
    }
    if s == 1.0 {
        return Err(KernelError::Singular);
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), KernelError> {
    if beta > 1.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(KernelError::BadExponent(beta))
    }
}

/// `log|(s+1)/(s-1)|`, accurate on both sides of 1 and for large `s`.
pub fn log_ratio(s: f64) -> f64 {
    if s > 1.0 {
        (2.0 / (s - 1.0)).ln_1p()
    } else {
        (2.0 * s / (1.0 - s)).ln_1p()
    }
}

/// `(s^p - 1)/(s^2 - 1)` without cancellation near `s = 1`.
fn power_quotient(s: f64, p: f64) -> f64 {
    let ls = s.ln();
    (p * ls).exp_m1() / (2.0 * ls).exp_m1()
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &t in terms {
        let next = sum + t;
        c += if sum.abs() >= t.abs() {
            (sum - next) + t
        } else {
            (t - next) + sum
        };
        sum = next;
    }
    sum + c
}

/// `P_{1,β}(s)`, the coefficient of `cot^{β+1} y` in the symmetrized kernel.
pub fn p1(s: f64, beta: f64) -> Result<f64, KernelError> {
    check_s(s)?;
    let e = beta + 1.0;
    let l = log_ratio(s);
    Ok(compensated_sum(&[
        0.5 * beta * (s.powf(e) + 1.0) * l,
        -2.0 * s * power_quotient(s, e),
    ]))
}

/// `P_{2,β}(s)`, the coefficient of `cot^{β-1} y`.
pub fn p2(s: f64, beta: f64) -> Result<f64, KernelError> {
    check_s(s)?;
    let e = beta - 1.0;
    let l = log_ratio(s);
    Ok(compensated_sum(&[
        0.5 * beta * (s.powf(e) + 1.0) * l,
        -2.0 * s * power_quotient(s, e),
    ]))
}

/// Modified kernel `K_{1,β} = P_{1,β} + (2-β)(s + s^β)`.
pub fn k1(s: f64, beta: f64) -> Result<f64, KernelError> {
    Ok(p1(s, beta)? + (2.0 - beta) * (s + s.powf(beta)))
}

/// Modified kernel `K_{2,β} = P_{2,β} + (2-β)·k2_shift(s)`.
pub fn k2(s: f64, beta: f64) -> Result<f64, KernelError> {
    Ok(p2(s, beta)? + (2.0 - beta) * k2_shift(s, beta)?)
}

/// `s(s^{β-1}-1)/(s²-1)`, the part of `K_{2,β}` that does not come from `P_{2,β}`.
pub fn k2_shift(s: f64, beta: f64) -> Result<f64, KernelError> {
    check_s(s)?;
    Ok(s * power_quotient(s, beta - 1.0))
}

/// `s^e + s^{-e}` (`even = true`) or `s^e - s^{-e}`, with `ls = log s`.
fn hyperbolic(ls: f64, e: f64, even: bool) -> f64 {
    if even {
        2.0 * (e * ls).cosh()
    } else {
        2.0 * (e * ls).sinh()
    }
}

/// `D^n L` for `L = log|(s+1)/(s-1)|`, `D = s d/ds`, `n = 0..=3`, `s > 1`.
fn log_ratio_derivs(s: f64) -> [f64; 4] {
    let s2 = s * s;
    let q = s2 - 1.0;
    [
        log_ratio(s),
        -2.0 * s / q,
        2.0 * s * (s2 + 1.0) / (q * q),
        -2.0 * s * (s2 * s2 + 6.0 * s2 + 1.0) / (q * q * q),
    ]
}

/// `K̃ = c_log·C_e·L + c_m·S_e·M + c_const·C_f` with `C_e, S_e = s^e ± s^{-e}`
/// and `M = DL`; derivatives follow by the Leibniz rule.
struct Shape {
    log_coeff: f64,
    log_exp: f64,
    m_coeff: f64,
    const_coeff: f64,
    const_exp: f64,
}

fn shape(family: Family, beta: f64) -> Shape {
    let (b, c) = (0.5 * (beta + 1.0), 0.5 * (beta - 1.0));
    match family {
        Family::One => Shape {
            log_coeff: 0.5 * beta,
            log_exp: b,
            m_coeff: 1.0,
            const_coeff: 2.0 - beta,
            const_exp: c,
        },
        Family::Two => Shape {
            log_coeff: 0.5 * beta,
            log_exp: c,
            m_coeff: 0.5 * beta,
            const_coeff: 0.0,
            const_exp: 0.0,
        },
    }
}

/// `D^n (s^e + s^{-e})` (`even`) or `D^n (s^e - s^{-e})`.
fn hyperbolic_deriv(ls: f64, e: f64, even: bool, n: u32) -> f64 {
    let flips = n % 2 == 1;
    e.powi(n as i32) * hyperbolic(ls, e, even != flips)
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn direct_deriv(family: Family, s: f64, beta: f64, n: u32) -> f64 {
    let sh = shape(family, beta);
    let ls = s.ln();
    let dl = log_ratio_derivs(s);
    let mut terms = Vec::with_capacity(2 * n as usize + 3);
    for k in 0..=n {
        let c = binom(n, k);
        terms.push(sh.log_coeff * c * hyperbolic_deriv(ls, sh.log_exp, true, n - k) * dl[k as usize]);
    }
    // S_e · DL with S_e = s^e - s^{-e}; at n = 0 use the expm1 quotient near 1.
    if n == 0 {
        terms.push(-sh.m_coeff * 4.0 * s * (sh.log_exp * ls).sinh() / (2.0 * ls).exp_m1());
    } else {
        let m = m_derivs(s);
        for k in 0..=n {
            let c = binom(n, k);
            terms.push(sh.m_coeff * c * hyperbolic_deriv(ls, sh.log_exp, false, n - k) * m[k as usize]);
        }
    }
    if sh.const_coeff != 0.0 {
        terms.push(sh.const_coeff * hyperbolic_deriv(ls, sh.const_exp, true, n));
    }
    compensated_sum(&terms)
}

/// `D^n M` for `M = DL`, `n = 0..=3`.
fn m_derivs(s: f64) -> [f64; 4] {
    let d = log_ratio_derivs(s);
    let s2 = s * s;
    let q = s2 - 1.0;
    let m3 = 2.0 * s * (s2 * s2 * s2 + 23.0 * s2 * s2 + 23.0 * s2 + 1.0) / (q * q * q * q);
    [d[1], d[2], d[3], m3]
}

/// Laurent terms `(coefficient, exponent)` of `K̃` at large `s`, truncated once
/// new terms fall below `1e-18` of the largest one.
fn series_terms(family: Family, s: f64, beta: f64) -> Vec<(f64, f64)> {
    let c = 0.5 * (beta - 1.0);
    let (lead, scale) = match family {
        Family::One => (0.5 * (beta + 1.0), 1.0),
        Family::Two => (c, beta),
    };
    let mut terms = Vec::with_capacity(48);
    if family == Family::One && beta != 2.0 {
        terms.push((2.0 - beta, -c));
    }
    let mut largest = terms
        .first()
        .map_or(0.0, |&(a, p): &(f64, f64)| (a * s.powf(p)).abs());
    for k in 1..=200u32 {
        let odd = (2 * k - 1) as f64;
        let (up_c, down_c) = match family {
            Family::One => (beta / odd - 2.0, beta / odd + 2.0),
            Family::Two => (1.0 / odd - 1.0, 1.0 / odd + 1.0),
        };
        let shift = 1.0 - 2.0 * k as f64;
        let mut newest = 0.0f64;
        if k >= 2 {
            terms.push((scale * up_c, lead + shift));
            newest = newest.max((scale * up_c * s.powf(lead + shift)).abs());
        }
        terms.push((scale * down_c, -lead + shift));
        newest = newest.max((scale * down_c * s.powf(-lead + shift)).abs());
        largest = largest.max(newest);
        if k >= 2 && newest < 1e-18 * largest {
            break;
        }
    }
    terms
}

fn series_deriv(family: Family, s: f64, beta: f64, n: u32) -> f64 {
    let mut terms: Vec<f64> = series_terms(family, s, beta)
        .into_iter()
        .map(|(c, p)| c * p.powi(n as i32) * s.powf(p))
        .collect();
    terms.reverse();
    compensated_sum(&terms)
}

fn tilde_deriv(family: Family, s: f64, beta: f64, n: u32) -> Result<f64, KernelError> {
    check_s(s)?;
    check_beta(beta)?;
    if n > 3 {
        return Err(KernelError::Order(n));
    }
    // D^n K̃(1/s) = (-1)^n (D^n K̃)(1/s) by the reflection symmetry.
    let (t, sign) = if s < 1.0 {
        (1.0 / s, if n % 2 == 1 { -1.0 } else { 1.0 })
    } else {
        (s, 1.0)
    };
    let v = if t > SERIES_FROM {
        series_deriv(family, t, beta, n)
    } else {
        direct_deriv(family, t, beta, n)
    };
    Ok(sign * v)
}

pub fn tilde_k(family: Family, s: f64, beta: f64) -> Result<f64, KernelError> {
    tilde_deriv(family, s, beta, 0)
}

pub fn tilde_k1(s: f64, beta: f64) -> Result<f64, KernelError> {
    tilde_k(Family::One, s, beta)
}

pub fn tilde_k2(s: f64, beta: f64) -> Result<f64, KernelError> {
    tilde_k(Family::Two, s, beta)
}

/// The exponent-2 closed form `(s^{3/2}+s^{-3/2})L - 2s^{-1/2}(s²+s+1)/(s+1)`,
/// evaluated literally (no series), for cross-checks at moderate `s`.
pub fn tilde_k1_b2_closed(s: f64) -> Result<f64, KernelError> {
    check_s(s)?;
    let a = s.powf(1.5) + s.powf(-1.5);
    Ok(a * log_ratio(s) - 2.0 * s.powf(-0.5) * (s * s + s + 1.0) / (s + 1.0))
}

/// `W_{i,β}(z) = K̃_{i,β}(e^z)`.
pub fn w(family: Family, z: f64, beta: f64) -> Result<f64, KernelError> {
    tilde_k(family, z.exp(), beta)
}

/// `d^n/dz^n W_{i,β}(z)` for `n ≤ 3`.
pub fn w_deriv(family: Family, z: f64, beta: f64, n: u32) -> Result<f64, KernelError> {
    if z == 0.0 {
        return Err(KernelError::Singular);
    }
    tilde_deriv(family, z.exp(), beta, n)
}

pub fn dw(z: f64) -> Result<f64, KernelError> {
    w_deriv(Family::One, z, 2.0, 1)
}

pub fn d2w(z: f64) -> Result<f64, KernelError> {
    w_deriv(Family::One, z, 2.0, 2)
}

/// `W'''` at exponent 2 from the rational closed form
/// `(P42 - P41 + P5)/P6`; the Laurent series takes over for `|z| > log 10`.
pub fn d3w(z: f64) -> Result<f64, KernelError> {
    if z == 0.0 {
        return Err(KernelError::Singular);
    }
    let (s, sign) = if z < 0.0 {
        ((-z).exp(), -1.0)
    } else {
        (z.exp(), 1.0)
    };
    if s > SERIES_FROM {
        return Ok(sign * series_deriv(Family::One, s, 2.0, 3));
    }
    Ok(sign * d3_rational(s))
}

fn d3_rational(s: f64) -> f64 {
    let p = |c: &[(f64, i32)]| c.iter().map(|&(a, k)| a * s.powi(k)).collect::<Vec<_>>();
    let mut terms = p(&[(180.0, 3), (180.0, 7)]);
    terms.extend(
        p(&[
            (54.0, 1),
            (54.0, 2),
            (266.0, 4),
            (124.0, 5),
            (266.0, 6),
            (54.0, 8),
            (54.0, 9),
        ])
        .into_iter()
        .map(|v| -v),
    );
    let s2m1 = s * s - 1.0;
    terms.push(27.0 * s2m1.powi(4) * (1.0 + s + s * s) * log_ratio(s));
    let den = 8.0 * (s - 1.0).powi(3) * s.powf(1.5) * (1.0 + s).powi(4);
    compensated_sum(&terms) / den
}

/// Decay envelopes: `|K̃(s)| ≤ s^{-3/2}·first` and `|D³K̃(s)| ≤ s^{-3/2}·second`
/// for `s > 1`; both are nonincreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBounds {
    pub first: f64,
    pub second: f64,
}

pub fn tail_bounds(s: f64) -> Result<TailBounds, KernelError> {
    if s.is_nan() || s <= 1.0 {
        return Err(KernelError::BadRatio(s));
    }
    let r = 1.0 / s;
    let first = 2.0 + (2.0 / 3.0) / (1.0 - r * r) + log_ratio(s);
    let p8 = [54.0, 54.0, 216.0, 270.0, 288.0, 58.0, 16.0, 482.0, 18.0]
        .iter()
        .fold(0.0, |acc, &c| acc * r + c);
    let second = p8 / (8.0 * (1.0 - r).powi(3)) + 2.25 * (1.0 + r);
    Ok(TailBounds { first, second })
}

/// All kernel values at one ratio `s`; derivatives of `W_{1,β}` are in `z = log s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelPoint {
    pub s: f64,
    pub beta: f64,
    pub p1: f64,
    pub p2: f64,
    pub tilde_k1: f64,
    pub tilde_k2: f64,
    pub w1: f64,
    pub dw1: f64,
    pub d2w1: f64,
    pub d3w1: f64,
}

impl KernelPoint {
    pub fn at(s: f64, beta: f64) -> Result<Self, KernelError> {
        let z = s.ln();
        let tk1 = tilde_k1(s, beta)?;
        Ok(Self {
            s,
            beta,
            p1: p1(s, beta)?,
            p2: p2(s, beta)?,
            tilde_k1: tk1,
            tilde_k2: tilde_k2(s, beta)?,
            w1: tk1,
            dw1: w_deriv(Family::One, z, beta, 1)?,
            d2w1: w_deriv(Family::One, z, beta, 2)?,
            d3w1: if beta == 2.0 {
                d3w(z)?
            } else {
                w_deriv(Family::One, z, beta, 3)?
            },
        })
    }
}

const FOURIER_CUTOFF: f64 = 40.0;

/// Non-rigorous reference for `G(ξ) = ∫_0^∞ W(x) cos(xξ) dx`: geometric panels
/// into the logarithmic singularity at 0, oscillation-resolving panels on
/// `[1, 40]`, and the analytic tail of the slowest decaying Laurent term.
pub fn fourier_g(family: Family, beta: f64, xi: f64) -> Result<f64, KernelError> {
    check_beta(beta)?;
    let xi = xi.abs();
    let run = |refine: usize| -> f64 {
        let mut f = |x: f64| w(family, x, beta).unwrap_or(0.0) * (x * xi).cos();
        let mut total = 0.0;
        // Geometric panels [2^{-j-1}, 2^{-j}] down to 2^{-60}.
        let levels = 60;
        for j in (0..levels).rev() {
            let (a, b) = (0.5f64.powi(j + 1), 0.5f64.powi(j));
            total += gl_composite(&mut f, a, b, refine);
        }
        let width = (0.25f64).min(1.0 / xi.max(1e-300)) / refine as f64;
        let panels = ((FOURIER_CUTOFF - 1.0) / width).ceil() as usize;
        total += gl_composite(&mut f, 1.0, FOURIER_CUTOFF, panels);
        // ∫_0^{2^-60} is below 2^-60·|log 2^-60|·β and is dropped.
        total
    };
    let coarse = run(1);
    let fine = run(2);
    let delta = (fine - coarse).abs();
    if delta > 1e-9 * fine.abs().max(1.0) {
        return Err(KernelError::NonConvergence { xi, delta });
    }
    Ok(fine + slow_tail(family, beta, xi))
}

/// `∫_{40}^∞ (2-β) e^{-cx} cos(xξ) dx` for family one; faster terms are negligible.
fn slow_tail(family: Family, beta: f64, xi: f64) -> f64 {
    if family == Family::Two || beta == 2.0 {
        return 0.0;
    }
    let c = 0.5 * (beta - 1.0);
    let x = FOURIER_CUTOFF;
    (2.0 - beta) * (-c * x).exp() * (c * (x * xi).cos() - xi * (x * xi).sin()) / (c * c + xi * xi)
}

/// `G(0) = ∫_0^∞ W(x) dx` at exponent 2.
pub const G1_AT_ZERO: f64 = PI / 3.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_direct_agree_at_switch() {
        for beta in [1.5, 1.9, 2.0] {
            for fam in [Family::One, Family::Two] {
                for n in 0..=3 {
                    let a = direct_deriv(fam, SERIES_FROM, beta, n);
                    let b = series_deriv(fam, SERIES_FROM, beta, n);
                    assert!(
                        (a - b).abs() <= 1e-9 * b.abs().max(1e-6),
                        "{fam:?} {beta} {n}: {a} {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn singular_point_rejected() {
        assert_eq!(p1(1.0, 2.0), Err(KernelError::Singular));
        assert_eq!(tilde_k1(1.0, 2.0), Err(KernelError::Singular));
        assert_eq!(dw(0.0), Err(KernelError::Singular));
    }

    #[test]
    fn g_at_zero_is_pi_over_three() {
        let g = fourier_g(Family::One, 2.0, 0.0).unwrap();
        assert!((g - G1_AT_ZERO).abs() < 1e-8, "{g}");
    }
}
