//! Uniform periodic grids, FFT differentiation, the circle Hilbert transform
//! and the quadrature rules shared by the functionals and kernels.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid size {0} must be a power of two and at least 16")]
    GridSize(usize),
    #[error("field tagged odd is not antisymmetric (defect {defect:e})")]
    NotOdd { defect: f64 },
    #[error("operands live on different periods")]
    PeriodMismatch,
    #[error("grid sizes differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{0} requires an odd field")]
    RequiresOdd(&'static str),
    #[error("non-finite sample in field")]
    NonFinite,
    #[error("weighted quadrature did not converge (last change {delta:e}, value {value:e})")]
    NonConvergence { value: f64, delta: f64 },
    #[error("integrand is not negligible at the truncated end ({side}); the integral likely diverges")]
    Divergence { side: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Pi,
    TwoPi,
}

impl Period {
    pub fn length(self) -> f64 {
        match self {
            Period::Pi => PI,
            Period::TwoPi => 2.0 * PI,
        }
    }

    /// Physical wavenumber of the fundamental mode.
    pub fn kappa(self) -> f64 {
        2.0 * PI / self.length()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
    None,
}

const ODD_TOL: f64 = 1e-10;

/// Samples `values[j] = f(j·L/N)` of an `L`-periodic function.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    values: Vec<f64>,
    period: Period,
    parity: Parity,
}

fn odd_defect(v: &[f64]) -> f64 {
    let n = v.len();
    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut d = v[0].abs();
    for k in 1..n {
        d = d.max((v[k] + v[n - k]).abs());
    }
    d / scale
}

impl PeriodicField {
    pub fn new(values: Vec<f64>, period: Period, parity: Parity) -> Result<Self, SpectralError> {
        let n = values.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(SpectralError::GridSize(n));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        if parity == Parity::Odd {
            let defect = odd_defect(&values);
            if defect > ODD_TOL {
                return Err(SpectralError::NotOdd { defect });
            }
        }
        Ok(Self {
            values,
            period,
            parity,
        })
    }

    pub fn from_fn(
        n: usize,
        period: Period,
        parity: Parity,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, SpectralError> {
        let h = period.length() / n as f64;
        let mut field = Self::new((0..n).map(|j| f(j as f64 * h)).collect(), period, parity)?;
        if parity == Parity::Odd {
            field.enforce_odd();
        }
        Ok(field)
    }

    pub fn zeros(n: usize, period: Period, parity: Parity) -> Result<Self, SpectralError> {
        Self::new(vec![0.0; n], period, parity)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dx(&self) -> f64 {
        self.period.length() / self.len() as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.dx();
        (0..self.len()).map(move |j| j as f64 * h)
    }

    /// Same samples, reinterpreted on another period: `g(x) = f(x·L_f/L_g)`.
    pub fn retag_period(&self, period: Period) -> Self {
        Self {
            values: self.values.clone(),
            period,
            parity: self.parity,
        }
    }

    pub fn with_parity(&self, parity: Parity) -> Result<Self, SpectralError> {
        Self::new(self.values.clone(), self.period, parity)
    }

    /// Projects onto the odd part exactly: `v[0] = v[N/2] = 0`, `v[N-k] = -v[k]`.
    pub fn enforce_odd(&mut self) {
        let n = self.len();
        self.values[0] = 0.0;
        self.values[n / 2] = 0.0;
        for k in 1..n / 2 {
            let a = 0.5 * (self.values[k] - self.values[n - k]);
            self.values[k] = a;
            self.values[n - k] = -a;
        }
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.dx()
    }

    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.dx()).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn map(&self, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            period: self.period,
            parity,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(self.parity, |v| c * v)
    }

    fn compatible(&self, other: &Self) -> Result<(), SpectralError> {
        if self.period != other.period {
            return Err(SpectralError::PeriodMismatch);
        }
        if self.len() != other.len() {
            return Err(SpectralError::LengthMismatch(self.len(), other.len()));
        }
        Ok(())
    }

    pub fn zip_with(
        &self,
        other: &Self,
        parity: Parity,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, SpectralError> {
        self.compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            values,
            period: self.period,
            parity,
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, SpectralError> {
        self.compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Normalized DFT: `c_k = (1/N) Σ_j v_j e^{-2πi jk/N}`.
fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let (fwd, _) = plans(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= inv_n);
    buf
}

fn inverse(mut spec: Vec<Complex64>) -> Vec<f64> {
    let (_, inv) = plans(spec.len());
    inv.process(&mut spec);
    spec.into_iter().map(|c| c.re).collect()
}

/// Signed integer wavenumber of DFT bin `j`; the Nyquist bin maps to `None`.
fn wavenumber(j: usize, n: usize) -> Option<i64> {
    match j.cmp(&(n / 2)) {
        std::cmp::Ordering::Less => Some(j as i64),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(j as i64 - n as i64),
    }
}

fn apply_multiplier(f: &PeriodicField, parity: Parity, symbol: impl Fn(i64) -> Complex64) -> PeriodicField {
    let n = f.len();
    let mut spec = forward(&f.values);
    for (j, c) in spec.iter_mut().enumerate() {
        *c *= match wavenumber(j, n) {
            Some(k) => symbol(k),
            None => Complex64::new(0.0, 0.0),
        };
    }
    let mut out = PeriodicField {
        values: inverse(spec),
        period: f.period,
        parity,
    };
    if parity == Parity::Odd {
        out.enforce_odd();
    }
    out
}

fn flipped(p: Parity) -> Parity {
    match p {
        Parity::Odd => Parity::Even,
        Parity::Even => Parity::Odd,
        Parity::None => Parity::None,
    }
}

/// Circle Hilbert transform: `e^{ikθ} ↦ -i·sgn(k)·e^{ikθ}`, so `H(-sin θ) = cos θ`.
pub fn hilbert(f: &PeriodicField) -> PeriodicField {
    apply_multiplier(f, flipped(f.parity), |k| {
        Complex64::new(0.0, -(k.signum() as f64))
    })
}

pub fn derivative(f: &PeriodicField) -> PeriodicField {
    let kappa = f.period.kappa();
    apply_multiplier(f, flipped(f.parity), |k| Complex64::new(0.0, kappa * k as f64))
}

/// Second derivative, parity preserved.
pub fn second_derivative(f: &PeriodicField) -> PeriodicField {
    let kappa = f.period.kappa();
    apply_multiplier(f, f.parity, |k| Complex64::new(-(kappa * k as f64).powi(2), 0.0))
}

/// Odd velocity with `u_x = Hω` and `u(0) = 0`.
pub fn velocity(omega: &PeriodicField) -> Result<PeriodicField, SpectralError> {
    if omega.parity != Parity::Odd {
        return Err(SpectralError::RequiresOdd("velocity"));
    }
    let kappa = omega.period.kappa();
    Ok(apply_multiplier(omega, Parity::Odd, |k| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(-1.0 / (kappa * k.unsigned_abs() as f64), 0.0)
        }
    }))
}

/// Zeroes every mode with `|k| > N/3`.
pub fn dealias(f: &PeriodicField) -> PeriodicField {
    let cutoff = (f.len() / 3) as i64;
    apply_multiplier(f, f.parity, |k| {
        if k.abs() <= cutoff {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Trapezoid rule over one period; spectrally accurate on smooth periodic data.
pub fn quad_periodic(f: &PeriodicField) -> f64 {
    f.values.iter().sum::<f64>() * f.dx()
}

/// Real Fourier coefficients `f(x) = Σ_k a_k sin(kκx) + b_k cos(kκx)`, `k = 0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    period: Period,
    sine: Vec<f64>,
    cosine: Vec<f64>,
}

impl SpectralCoeffs {
    pub fn from_field(f: &PeriodicField) -> Self {
        let n = f.len();
        let spec = forward(&f.values);
        let half = n / 2;
        let mut sine = vec![0.0; half + 1];
        let mut cosine = vec![0.0; half + 1];
        cosine[0] = spec[0].re;
        for k in 1..half {
            cosine[k] = 2.0 * spec[k].re;
            sine[k] = -2.0 * spec[k].im;
        }
        cosine[half] = spec[half].re;
        Self {
            period: f.period,
            sine,
            cosine,
        }
    }

    pub fn from_parts(period: Period, sine: Vec<f64>, cosine: Vec<f64>) -> Self {
        assert_eq!(sine.len(), cosine.len(), "coefficient arrays must match");
        Self { period, sine, cosine }
    }

    pub fn sine(&self) -> &[f64] {
        &self.sine
    }

    pub fn cosine(&self) -> &[f64] {
        &self.cosine
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn to_field(&self, n: usize, parity: Parity) -> Result<PeriodicField, SpectralError> {
        PeriodicField::from_fn(n, self.period, parity, |x| self.eval(x))
    }

    /// Coefficient-space `∫|f|² dx` over one period (Parseval).
    pub fn energy(&self) -> f64 {
        let l = self.period.length();
        let last = self.sine.len() - 1;
        let mut e = self.cosine[0].powi(2) * l;
        for k in 1..=last {
            let w = if k == last { l } else { l / 2.0 };
            e += (self.sine[k].powi(2) + self.cosine[k].powi(2)) * w;
        }
        e
    }

    pub fn eval(&self, x: f64) -> f64 {
        let kx = self.period.kappa() * x;
        let z = Complex64::new(kx.cos(), kx.sin());
        let mut zk = Complex64::new(1.0, 0.0);
        let mut acc = self.cosine[0];
        for k in 1..self.sine.len() {
            zk *= z;
            acc += self.sine[k] * zk.im + self.cosine[k] * zk.re;
        }
        acc
    }
}

/// Values at one point of an odd field `ω = Σ a_k sin(kκx)` and its velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OddSample {
    pub omega: f64,
    pub omega_x: f64,
    pub omega_xx: f64,
    pub u: f64,
    pub u_x: f64,
    /// `u_xx = H ω_x`.
    pub u_xx: f64,
}

/// Sine series of an odd field, evaluated pointwise with relative accuracy
/// near the zeros at `0` and `L/2`.
#[derive(Debug, Clone)]
pub struct OddSeries {
    kappa: f64,
    sine: Vec<f64>,
}

impl OddSeries {
    pub fn new(omega: &PeriodicField) -> Result<Self, SpectralError> {
        if omega.parity != Parity::Odd {
            return Err(SpectralError::RequiresOdd("OddSeries"));
        }
        let c = SpectralCoeffs::from_field(omega);
        let mut sine = c.sine;
        // The Nyquist sine mode is not representable on the grid.
        if let Some(last) = sine.last_mut() {
            *last = 0.0;
        }
        Ok(Self {
            kappa: omega.period.kappa(),
            sine,
        })
    }

    pub fn at(&self, x: f64) -> OddSample {
        let kx = self.kappa * x;
        let z = Complex64::new(kx.cos(), kx.sin());
        let mut zk = Complex64::new(1.0, 0.0);
        let mut s = OddSample {
            omega: 0.0,
            omega_x: 0.0,
            omega_xx: 0.0,
            u: 0.0,
            u_x: 0.0,
            u_xx: 0.0,
        };
        for (k, &a) in self.sine.iter().enumerate().skip(1) {
            zk *= z;
            if a == 0.0 {
                continue;
            }
            let wk = self.kappa * k as f64;
            s.omega += a * zk.im;
            s.omega_x += a * wk * zk.re;
            s.omega_xx -= a * wk * wk * zk.im;
            s.u_x -= a * zk.re;
            s.u_xx += a * wk * zk.im;
            s.u -= a * zk.im / wk;
        }
        s
    }

    pub fn omega(&self, x: f64) -> f64 {
        self.at(x).omega
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule needs at least one node");
    let mut rule = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[i] = (-x, w);
        rule[n - 1 - i] = (x, w);
    }
    rule
}

pub fn gl32() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(32))
}

/// 32-point Gauss–Legendre on one panel.
pub fn gl_panel(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * gl32().iter().map(|&(x, w)| w * f(c + r * x)).sum::<f64>()
}

/// Composite 32-point rule on `n` equal panels of `[a, b]`.
pub fn gl_composite(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| gl_panel(f, a + i as f64 * h, a + (i + 1) as f64 * h))
        .sum()
}

/// Power-law behaviour of an integrand at the ends of `[a, b]`:
/// `g(y) ~ (y-a)^left` and `g(y) ~ (b-y)^right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularWeight {
    pub left: f64,
    pub right: f64,
}

impl SingularWeight {
    pub const REGULAR: SingularWeight = SingularWeight {
        left: 0.0,
        right: 0.0,
    };

    pub fn left(exponent: f64) -> Self {
        Self {
            left: exponent,
            right: 0.0,
        }
    }
}

impl Default for SingularWeight {
    fn default() -> Self {
        Self::REGULAR
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

const WEIGHTED_RTOL: f64 = 1e-10;
const MAX_TRUNCATION: f64 = 200.0;

fn truncation(exponent: f64) -> f64 {
    if exponent > -1.0 {
        (40.0 / (exponent + 1.0)).clamp(8.0, MAX_TRUNCATION)
    } else {
        MAX_TRUNCATION
    }
}

/// `∫_a^b g(y) dy` through `y = a + (b-a)(2/π)·arctan(e^t)`, which grades the
/// mesh geometrically toward both ends, followed by composite Gauss–Legendre
/// panels in `t` doubled until two refinements agree.
///
/// `g` receives the point `y` and its distance to the nearer endpoint, so
/// integrands can keep relative accuracy at the singular end. Beyond the
/// truncation the mapped integrand decays like `e^{(p+1)|t|}`, which is
/// integrated analytically; an exponent `p ≤ -1` is a divergence unless the
/// integrand vanishes there anyway.
pub fn quad_weighted(
    g: impl Fn(f64, f64) -> f64,
    a: f64,
    b: f64,
    weight: SingularWeight,
) -> Result<Quadrature, SpectralError> {
    let len = b - a;
    let scale = len * 2.0 / PI;
    let f = |t: f64| -> f64 {
        let (phi, dist) = if t < 0.0 {
            let p = t.exp().atan();
            (p, scale * p)
        } else {
            let q = (-t).exp().atan();
            (FRAC_PI_2 - q, scale * q)
        };
        let v = g(a + scale * phi, dist);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (2.0 * t.cosh())
        }
    };
    let (tl, tr) = (-truncation(weight.left), truncation(weight.right));
    let sides = [("left", tl, weight.left), ("right", tr, weight.right)];
    let mut tails = 0.0;
    let mut edges = [0.0; 2];
    for (i, &(side, t, _)) in sides.iter().enumerate() {
        let edge = f(t);
        if !edge.is_finite() {
            return Err(SpectralError::Divergence { side });
        }
        edges[i] = edge;
    }

    let mut h = |t: f64| f(t);
    let mut panels = 16usize;
    let mut prev = gl_composite(&mut h, tl, tr, panels);
    let value = loop {
        panels *= 2;
        let cur = gl_composite(&mut h, tl, tr, panels);
        if !cur.is_finite() {
            return Err(SpectralError::NonConvergence {
                value: cur,
                delta: f64::INFINITY,
            });
        }
        let delta = (cur - prev).abs();
        if delta <= WEIGHTED_RTOL * cur.abs().max(prev.abs()) || delta < 1e-15 * len {
            break Quadrature {
                value: cur,
                error: delta,
            };
        }
        if panels >= 8192 {
            return Err(SpectralError::NonConvergence { value: cur, delta });
        }
        prev = cur;
    };
    let mag = value.value.abs().max(1e-300);
    for (&(side, _, p), &edge) in sides.iter().zip(&edges) {
        if p > -1.0 {
            let tail = edge / (p + 1.0);
            if tail.abs() > 1e-3 * mag && tail.abs() > 1e-14 * len {
                return Err(SpectralError::Divergence { side });
            }
            tails += tail;
        } else if edge.abs() > 1e-12 * mag.max(1e-12) {
            return Err(SpectralError::Divergence { side });
        }
    }
    Ok(Quadrature {
        value: value.value + tails,
        error: value.error + 1e-3 * tails.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(n: usize, period: Period, parity: Parity, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::from_fn(n, period, parity, f).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert_eq!(
            PeriodicField::new(vec![0.0; 8], Period::Pi, Parity::None),
            Err(SpectralError::GridSize(8))
        );
        assert!(PeriodicField::new(vec![0.0; 48], Period::Pi, Parity::None).is_err());
        let even = vec![1.0; 32];
        assert!(matches!(
            PeriodicField::new(even, Period::Pi, Parity::Odd),
            Err(SpectralError::NotOdd { .. })
        ));
    }

    #[test]
    fn hilbert_of_negative_sine_is_cosine() {
        let w = field(64, Period::TwoPi, Parity::Odd, |x| -x.sin());
        let h = hilbert(&w);
        let c = field(64, Period::TwoPi, Parity::Even, f64::cos);
        assert!(h.max_abs_diff(&c).unwrap() < 1e-14);
    }

    #[test]
    fn hilbert_kills_constants() {
        let c = field(32, Period::Pi, Parity::Even, |_| 3.0);
        assert!(hilbert(&c).linf() < 1e-15);
    }

    #[test]
    fn velocity_of_sin2x_on_pi() {
        let w = field(64, Period::Pi, Parity::Odd, |x| -(2.0 * x).sin());
        let u = velocity(&w).unwrap();
        let exact = field(64, Period::Pi, Parity::Odd, |x| (2.0 * x).sin() / 2.0);
        assert!(u.max_abs_diff(&exact).unwrap() < 1e-15);
        let ux = derivative(&u);
        assert!(ux.max_abs_diff(&hilbert(&w)).unwrap() < 1e-13);
    }

    #[test]
    fn velocity_needs_odd_input() {
        let w = field(32, Period::Pi, Parity::None, |x| x.sin());
        assert_eq!(velocity(&w), Err(SpectralError::RequiresOdd("velocity")));
        let zero = PeriodicField::zeros(32, Period::Pi, Parity::Odd).unwrap();
        assert_eq!(velocity(&zero).unwrap().linf(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let s = field(32, Period::TwoPi, Parity::Odd, f64::sin);
        assert!(
            derivative(&s)
                .max_abs_diff(&field(32, Period::TwoPi, Parity::Even, f64::cos))
                .unwrap()
                < 1e-14
        );
        let w = field(32, Period::Pi, Parity::Odd, |x| -(2.0 * x).sin());
        let dw = field(32, Period::Pi, Parity::Even, |x| -2.0 * (2.0 * x).cos());
        assert!(derivative(&w).max_abs_diff(&dw).unwrap() < 1e-13);
        let c = field(32, Period::Pi, Parity::Even, |_| 1.5);
        assert!(derivative(&c).linf() < 1e-15);
    }

    #[test]
    fn periodic_quadrature_examples() {
        let s2 = field(64, Period::TwoPi, Parity::Even, |x| x.sin().powi(2));
        assert!((quad_periodic(&s2) - PI).abs() < 1e-14);
        let c = field(64, Period::Pi, Parity::Even, |x| 4.0 * (2.0 * x).cos().powi(2));
        assert!((quad_periodic(&c) - 2.0 * PI).abs() < 1e-13);
        let odd = field(64, Period::Pi, Parity::Odd, |x| (2.0 * x).sin() + (6.0 * x).sin());
        assert!(quad_periodic(&odd).abs() < 1e-15);
    }

    #[test]
    fn weighted_quadrature_examples() {
        let q = quad_weighted(|x, _| x.sin() / (x / 2.0).tan(), 0.0, PI, SingularWeight::REGULAR).unwrap();
        assert!((q.value - PI).abs() < 1e-12, "{q:?}");
        let q = quad_weighted(
            |y, _| (2.0 * y).sin() * (1.0 - (2.0 * y).cos()) / y.tan().powi(2),
            0.0,
            FRAC_PI_2,
            SingularWeight::left(1.0),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = quad_weighted(
            |y, _| (2.0 * y).sin() / y.tan(),
            0.0,
            FRAC_PI_2,
            SingularWeight::REGULAR,
        )
        .unwrap();
        assert!((q.value - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn weighted_quadrature_flags_divergence() {
        let r = quad_weighted(
            |y, _| (2.0 * y).sin() / y.tan().powi(2),
            0.0,
            FRAC_PI_2,
            SingularWeight::left(-1.0),
        );
        assert!(matches!(r, Err(SpectralError::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_63() {
        let q = gl_panel(&mut |x: f64| x.powi(62), -1.0, 1.0);
        assert!((q - 2.0 / 63.0).abs() < 1e-14);
        let w: f64 = gl32().iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_series_matches_samples() {
        let w = field(64, Period::Pi, Parity::Odd, |x| {
            -(2.0 * x).sin() * (1.0 - (2.0 * x).cos())
        });
        let s = OddSeries::new(&w).unwrap();
        let x = 0.3;
        let p = s.at(x);
        let exact = -(2.0 * x).sin() * (1.0 - (2.0 * x).cos());
        assert!((p.omega - exact).abs() < 1e-14);
        // ω = -sin2x + sin4x/2, so u_x = Hω = cos2x - cos4x/2.
        assert!((p.u_x - ((2.0 * x).cos() - (4.0 * x).cos() / 2.0)).abs() < 1e-14);
    }
}
