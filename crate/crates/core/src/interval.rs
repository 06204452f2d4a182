//! Outward-rounded interval arithmetic and rigorous enclosures of the
//! log-variable kernel `W(x) = K̃(e^x)` at exponent 2.
//!
//! Every primitive widens its float result outward by one ulp; library
//! transcendentals (`exp`, `ln`, `sin`, `cos`) are widened by four ulps so the
//! contract does not depend on correctly rounded libm. No global rounding
//! state is touched, so all values are `Send + Sync` and safe under rayon.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

/// Ulps added on each side of a libm transcendental.
pub const TRANSCENDENTAL_ULPS: u32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval endpoints out of order or NaN: [{lo}, {hi}]")]
    Malformed { lo: f64, hi: f64 },
    #[error("{op} is undefined on [{lo}, {hi}]")]
    Domain { op: &'static str, lo: f64, hi: f64 },
}

fn domain(op: &'static str, x: Interval) -> IntervalError {
    IntervalError::Domain {
        op,
        lo: x.lo,
        hi: x.hi,
    }
}

#[inline]
fn down(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x.next_up()
    }
}

fn down_n(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = down(x);
    }
    x
}

fn up_n(mut x: f64, n: u32) -> f64 {
    for _ in 0..n {
        x = up(x);
    }
    x
}

/// `0 · ∞ = 0`, the interval-arithmetic convention for endpoint products.
#[inline]
fn prod(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// Closed interval `[lo, hi]` with `lo ≤ hi`; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::Malformed { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate interval holding exactly the float `x`.
    pub fn point(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN cannot be an interval endpoint");
        Self { lo: x, hi: x }
    }

    pub fn entire() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    /// Enclosure of the real number `num / den`.
    pub fn ratio(num: f64, den: f64) -> Self {
        Self::point(num) / Self::point(den)
    }

    pub fn pi() -> Self {
        Self {
            lo: down(std::f64::consts::PI),
            hi: up(std::f64::consts::PI),
        }
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn mid(self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            0.5 * self.lo + 0.5 * self.hi
        } else if self.lo.is_finite() {
            self.lo
        } else {
            self.hi
        }
    }

    /// Upper bound of `hi − lo`.
    pub fn width(self) -> f64 {
        up(self.hi - self.lo)
    }

    /// Upper bound of `max |x|` over the interval.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset(self, other: Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(self, other: Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Intersection that keeps `self` when the two are disjoint; only used
    /// with a second enclosure of the same quantity, which cannot be disjoint.
    fn tighten(self, other: Interval) -> Interval {
        self.intersect(other).unwrap_or(self)
    }

    pub fn abs(self) -> Interval {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval {
                lo: 0.0,
                hi: self.mag(),
            }
        }
    }

    pub fn min(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.min(other.hi),
        }
    }

    pub fn max(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.max(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn sqr(self) -> Interval {
        let a = self.abs();
        Interval {
            lo: down(prod(a.lo, a.lo)).max(0.0),
            hi: up(prod(a.hi, a.hi)),
        }
    }

    pub fn powi(self, n: u32) -> Interval {
        match n {
            0 => Interval::point(1.0),
            1 => self,
            _ if n.is_multiple_of(2) => self.powi(n / 2).sqr(),
            _ => self.powi(n - 1) * self,
        }
    }

    pub fn sqrt(self) -> Result<Interval, IntervalError> {
        if self.hi < 0.0 {
            return Err(domain("sqrt", self));
        }
        let lo = if self.lo <= 0.0 {
            0.0
        } else {
            down(self.lo.sqrt()).max(0.0)
        };
        Ok(Interval {
            lo,
            hi: up(self.hi.sqrt()),
        })
    }

    pub fn exp(self) -> Interval {
        Interval {
            lo: down_n(self.lo.exp(), TRANSCENDENTAL_ULPS).max(0.0),
            hi: up_n(self.hi.exp(), TRANSCENDENTAL_ULPS),
        }
    }

    pub fn ln(self) -> Result<Interval, IntervalError> {
        if self.lo < 0.0 || self.hi <= 0.0 {
            return Err(domain("ln", self));
        }
        let lo = if self.lo == 0.0 {
            f64::NEG_INFINITY
        } else {
            down_n(self.lo.ln(), TRANSCENDENTAL_ULPS)
        };
        Ok(Interval {
            lo,
            hi: up_n(self.hi.ln(), TRANSCENDENTAL_ULPS),
        })
    }

    /// Lipschitz enclosure around the midpoint; exact-width for points.
    fn lipschitz_trig(self, f: fn(f64) -> f64) -> Interval {
        let unit = Interval { lo: -1.0, hi: 1.0 };
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi - self.lo >= 2.0 * std::f64::consts::PI {
            return unit;
        }
        let c = self.mid();
        let r = up((self.hi - c).max(c - self.lo));
        let fc = f(c);
        Interval {
            lo: down(down_n(fc, TRANSCENDENTAL_ULPS) - r),
            hi: up(up_n(fc, TRANSCENDENTAL_ULPS) + r),
        }
        .tighten(unit)
    }

    pub fn sin(self) -> Interval {
        self.lipschitz_trig(f64::sin)
    }

    pub fn cos(self) -> Interval {
        self.lipschitz_trig(f64::cos)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: down(self.lo + rhs.lo),
            hi: up(self.hi + rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: down(self.lo - rhs.hi),
            hi: up(self.hi - rhs.lo),
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            prod(self.lo, rhs.lo),
            prod(self.lo, rhs.hi),
            prod(self.hi, rhs.lo),
            prod(self.hi, rhs.hi),
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }
}

impl Div for Interval {
    type Output = Interval;
    /// A divisor containing zero yields the entire line.
    fn div(self, rhs: Interval) -> Interval {
        if rhs.lo <= 0.0 && rhs.hi >= 0.0 {
            return Interval::entire();
        }
        let q = [
            self.lo / rhs.lo,
            self.lo / rhs.hi,
            self.hi / rhs.lo,
            self.hi / rhs.hi,
        ];
        if q.iter().any(|v| v.is_nan()) {
            return Interval::entire();
        }
        let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }
}

macro_rules! scalar_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Interval {
            type Output = Interval;
            fn $m(self, rhs: f64) -> Interval { self.$m(Interval::point(rhs)) }
        }
        impl $tr<Interval> for f64 {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval { Interval::point(self).$m(rhs) }
        }
    )*};
}
scalar_ops!(Add add, Sub sub, Mul mul, Div div);

/// Monotone elementary functions enclosed from their endpoint values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    Exp,
    /// `log((s+1)/(s-1))` on `s ≥ 1`, decreasing; `+∞` at `s = 1`.
    LogRatio,
    Pow3Half,
    PowNeg3Half,
    PowNegHalf,
}

impl Monotone {
    fn increasing(self) -> bool {
        matches!(self, Monotone::Exp | Monotone::Pow3Half)
    }

    fn at(self, x: f64) -> Result<Interval, IntervalError> {
        let p = Interval::point(x);
        match self {
            Monotone::Exp => Ok(p.exp()),
            Monotone::LogRatio => {
                if x < 1.0 {
                    Err(domain("log_ratio", p))
                } else if x == 1.0 {
                    Ok(Interval {
                        lo: f64::INFINITY,
                        hi: f64::INFINITY,
                    })
                } else {
                    ((p + 1.0) / (p - 1.0)).ln()
                }
            }
            Monotone::Pow3Half => {
                if x < 0.0 {
                    return Err(domain("pow_3/2", p));
                }
                Ok(p * p.sqrt()?)
            }
            Monotone::PowNeg3Half => {
                if x <= 0.0 {
                    return Err(domain("pow_-3/2", p));
                }
                Ok(1.0 / (p * p.sqrt()?))
            }
            Monotone::PowNegHalf => {
                if x <= 0.0 {
                    return Err(domain("pow_-1/2", p));
                }
                Ok(1.0 / p.sqrt()?)
            }
        }
    }
}

pub fn env_monotone(f: Monotone, x: Interval) -> Result<Interval, IntervalError> {
    let a = f.at(x.lo)?;
    let b = f.at(x.hi)?;
    if f.increasing() {
        Ok(Interval { lo: a.lo, hi: b.hi })
    } else {
        Ok(Interval { lo: b.lo, hi: a.hi })
    }
}

fn ensure_ge_one(op: &'static str, s: Interval) -> Result<(), IntervalError> {
    if s.lo < 1.0 {
        Err(domain(op, s))
    } else {
        Ok(())
    }
}

/// Upper bound of `K̃_tail(s) = 2 + (2/3)/(1 - s⁻²) + log|(s+1)/(s-1)|` at a
/// float `s > 1`; the function is nonincreasing, so this bounds it on `[s, ∞)`.
pub fn tail_first_upper(s: f64) -> Result<f64, IntervalError> {
    let p = Interval::point(s);
    if s <= 1.0 {
        return Err(domain("tail_first_upper", p));
    }
    Ok((2.0 + Interval::ratio(2.0, 3.0) / (1.0 - 1.0 / p.sqr()) + Monotone::LogRatio.at(s)?).hi)
}

/// Upper bound of `K̃_tail2(s) = P₈(s)/(8 s⁷ (1 - 1/s)³) + (9/4)(1 + 1/s)`, nonincreasing in `s`.
pub fn tail_second_upper(s: f64) -> Result<f64, IntervalError> {
    let p = Interval::point(s);
    if s <= 1.0 {
        return Err(domain("tail_second_upper", p));
    }
    let r = 1.0 / p;
    // P₈(s)/s⁷ as a polynomial in 1/s, highest power first.
    let coeffs = [54.0, 54.0, 216.0, 270.0, 288.0, 58.0, 16.0, 482.0, 18.0];
    let p8 = coeffs.iter().fold(Interval::point(0.0), |acc, &c| acc * r + c);
    let den = 8.0 * (1.0 - r).powi(3);
    Ok((p8 / den + Interval::ratio(9.0, 4.0) * (1.0 + r)).hi)
}

/// `s^{-3/2} K̃_tail(s)` at a float `s > 1`, upper end.
fn decay_bound(s: f64) -> Result<f64, IntervalError> {
    Ok((Monotone::PowNeg3Half.at(s)? * tail_first_upper(s)?).hi)
}

/// `s^{-3/2} K̃_tail2(s)` at a float `s > 1`, upper end.
fn decay_bound_d3(s: f64) -> Result<f64, IntervalError> {
    Ok((Monotone::PowNeg3Half.at(s)? * tail_second_upper(s)?).hi)
}

fn symmetric(bound: f64) -> Interval {
    Interval {
        lo: -bound,
        hi: bound,
    }
}

/// Enclosure of `K̃(s) = (s^{3/2}+s^{-3/2}) log|(s+1)/(s-1)| − 2 s^{-1/2}(s²+s+1)/(s+1)`
/// over `s ⊂ [1, ∞)`. The upper end is `+∞` when `s.lo = 1`.
pub fn enclose_tilde_k1(s: Interval) -> Result<Interval, IntervalError> {
    ensure_ge_one("enclose_tilde_k1", s)?;
    let (sl, su) = (Interval::point(s.lo), Interval::point(s.hi));
    let a_lo = Monotone::Pow3Half.at(s.lo)? + Monotone::PowNeg3Half.at(s.hi)?;
    let a_hi = Monotone::Pow3Half.at(s.hi)? + Monotone::PowNeg3Half.at(s.lo)?;
    let r_hi = 2.0 * Monotone::PowNegHalf.at(s.lo)? * (su.sqr() + su + 1.0) / (sl + 1.0);
    let r_lo = 2.0 * Monotone::PowNegHalf.at(s.hi)? * (sl.sqr() + sl + 1.0) / (su + 1.0);
    let lo = (a_lo * Monotone::LogRatio.at(s.hi)? - r_hi).lo;
    let hi = if s.lo == 1.0 {
        f64::INFINITY
    } else {
        (a_hi * Monotone::LogRatio.at(s.lo)? - r_lo).hi
    };
    let k = Interval { lo, hi };
    if s.lo > 1.0 {
        Ok(k.tighten(symmetric(decay_bound(s.lo)?)))
    } else {
        Ok(k)
    }
}

/// Enclosure of `K̃(s)·log s`, finite even when `s.lo = 1`.
pub fn enclose_tilde_k1_log(s: Interval) -> Result<Interval, IntervalError> {
    ensure_ge_one("enclose_tilde_k1_log", s)?;
    let k = enclose_tilde_k1(s)?;
    let ln_s = Interval {
        lo: Interval::point(s.lo).ln()?.lo.max(0.0),
        hi: Interval::point(s.hi).ln()?.hi,
    };
    let product = k * ln_s;

    let (sl, su) = (Interval::point(s.lo), Interval::point(s.hi));
    let a_hi = Monotone::Pow3Half.at(s.hi)? + Monotone::PowNeg3Half.at(s.lo)?;
    let r_lo = 2.0 * Monotone::PowNegHalf.at(s.hi)? * (sl.sqr() + sl + 1.0) / (su + 1.0);
    // (s-1)·log|(s+1)/(s-1)| is increasing and tends to 0 at s = 1.
    let lr_scaled = if s.hi == 1.0 {
        Interval::point(0.0)
    } else {
        Monotone::LogRatio.at(s.hi)? * (su - 1.0)
    };
    let ln_lo = Interval::point(ln_s.lo);
    let improved = (a_hi * lr_scaled - r_lo * ln_lo).hi;
    Ok(Interval {
        lo: product.lo,
        hi: product.hi.min(improved),
    })
}

fn poly_increasing(coeffs: &[(f64, i32)], x: f64) -> Interval {
    let p = Interval::point(x);
    coeffs
        .iter()
        .fold(Interval::point(0.0), |acc, &(c, k)| acc + c * p.powi(k as u32))
}

const P41: [(f64, i32); 7] = [
    (54.0, 1),
    (54.0, 2),
    (266.0, 4),
    (124.0, 5),
    (266.0, 6),
    (54.0, 8),
    (54.0, 9),
];
const P42: [(f64, i32); 2] = [(180.0, 3), (180.0, 7)];

fn p6_at(x: f64) -> Result<Interval, IntervalError> {
    let p = Interval::point(x);
    Ok(8.0 * (p - 1.0).powi(3) * Monotone::Pow3Half.at(x)? * (p + 1.0).powi(4))
}

fn p5_factor(x: f64) -> Interval {
    let p = Interval::point(x);
    27.0 * (p.sqr() - 1.0).powi(4) * (1.0 + p + p.sqr())
}

/// Enclosure of `D³K̃(s)` with `D = s d/ds`, i.e. `W'''(log s)`, over `s ⊂ (1, ∞)`.
pub fn enclose_d3(s: Interval) -> Result<Interval, IntervalError> {
    if s.lo <= 1.0 {
        return Err(domain("enclose_d3", s));
    }
    let p5_lo = p5_factor(s.lo) * Monotone::LogRatio.at(s.hi)?;
    let p5_hi = p5_factor(s.hi) * Monotone::LogRatio.at(s.lo)?;
    let num_lo = (poly_increasing(&P42, s.lo) - poly_increasing(&P41, s.hi) + p5_lo).lo;
    let num_hi = (poly_increasing(&P42, s.hi) - poly_increasing(&P41, s.lo) + p5_hi).hi;
    let den = Interval {
        lo: p6_at(s.lo)?.lo,
        hi: p6_at(s.hi)?.hi,
    };
    let rational = Interval {
        lo: num_lo,
        hi: num_hi,
    } / den;
    Ok(rational.tighten(symmetric(decay_bound_d3(s.lo)?)))
}

/// Enclosure of `cos(xξ)` over `x`, from the endpoint values and the
/// linear-interpolation error `(b−a)²ξ²/8`.
pub fn enclose_cos(xi: f64, x: Interval) -> Interval {
    if xi == 0.0 {
        return Interval::point(1.0);
    }
    let ca = (Interval::point(x.lo) * xi).cos();
    let cb = (Interval::point(x.hi) * xi).cos();
    let slack = ((Interval::point(x.hi) - Interval::point(x.lo)).sqr() * (xi * xi) / 8.0).hi;
    Interval {
        lo: down(ca.lo.min(cb.lo) - slack),
        hi: up(ca.hi.max(cb.hi) + slack),
    }
    .tighten(Interval { lo: -1.0, hi: 1.0 })
}

/// Maps `x ⊂ [0, ∞)` to an enclosure of `e^x` clamped to `[1, ∞)`.
fn exp_of_nonneg(x: Interval) -> Interval {
    let e = x.exp();
    Interval {
        lo: e.lo.max(1.0),
        hi: e.hi.max(1.0),
    }
}

pub fn enclose_w1(x: Interval) -> Result<Interval, IntervalError> {
    if x.lo < 0.0 {
        return Err(domain("enclose_w1", x));
    }
    enclose_tilde_k1(exp_of_nonneg(x))
}

/// Enclosure of `W(x)·x`.
pub fn enclose_w1_times_x(x: Interval) -> Result<Interval, IntervalError> {
    if x.lo < 0.0 {
        return Err(domain("enclose_w1_times_x", x));
    }
    enclose_tilde_k1_log(exp_of_nonneg(x))
}

pub fn enclose_abs_d3w1(x: Interval) -> Result<Interval, IntervalError> {
    if x.lo <= 0.0 {
        return Err(domain("enclose_abs_d3w1", x));
    }
    let s = x.exp();
    if s.lo <= 1.0 {
        return Err(domain("enclose_abs_d3w1", x));
    }
    Ok(enclose_d3(s)?.abs())
}

/// Pieces of `K̃ = A·L − R` and their `D = s d/ds` derivatives, as intervals.
struct Split {
    a: [Interval; 3],
    l: Interval,
    m: [Interval; 2],
    r: [Interval; 2],
}

fn split_at(x: f64) -> Result<Split, IntervalError> {
    if x <= 0.0 {
        return Err(domain("split_at", Interval::point(x)));
    }
    let s = Interval::point(x).exp();
    let s32 = env_monotone(Monotone::Pow3Half, s)?;
    let sm32 = env_monotone(Monotone::PowNeg3Half, s)?;
    let sh = s.sqrt()?;
    let smh = env_monotone(Monotone::PowNegHalf, s)?;
    let odd = s32 - sm32;
    let even = s32 + sm32;
    let a = [even, 1.5 * odd, 2.25 * even];
    let l = env_monotone(Monotone::LogRatio, s)?;
    let s2m1 = s.sqr() - 1.0;
    let m0 = -2.0 * s / s2m1;
    let m1 = 2.0 * s * (s.sqr() + 1.0) / s2m1.sqr();
    let sp1 = s + 1.0;
    let g = smh / sp1;
    let g1 = -0.5 * g - sh / sp1.sqr();
    let g2 = 0.25 * g + 2.0 * s * sh / sp1.powi(3);
    let r1 = sh + 2.0 * g1;
    let r2 = 0.5 * sh + 2.0 * g2;
    Ok(Split {
        a,
        l,
        m: [m0, m1],
        r: [r1, r2],
    })
}

/// Enclosure of `W'(x)` at a float `x > 0`.
pub fn enclose_dw1(x: f64) -> Result<Interval, IntervalError> {
    let p = split_at(x)?;
    Ok(p.a[1] * p.l + p.a[0] * p.m[0] - p.r[0])
}

/// Enclosure of `W''(x)` at a float `x > 0`.
pub fn enclose_d2w1(x: f64) -> Result<Interval, IntervalError> {
    let p = split_at(x)?;
    Ok(p.a[2] * p.l + 2.0 * p.a[1] * p.m[0] + p.a[0] * p.m[1] - p.r[1])
}
