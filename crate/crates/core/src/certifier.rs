//! Rigorous positivity certificate for the log-variable kernel `W(x) = K̃(e^x)`
//! at exponent 2.
//!
//! Three conditions are checked in interval arithmetic:
//! * ver1: `G(ξ) = ∫_0^∞ W(x) cos(xξ) dx` stays positive on `[0, M]`, from
//!   lower bounds on a grid `ξ_i = i·h` and the Lipschitz bound `|G'| ≤ b₁ = ∫|W|x`;
//! * ver2: the convexity numerator polynomial is negative on `[1, e^{x₀}]`;
//! * ver3: `-W'(x₀) - (|W''(x₀)| + ∫_{x₀}^∞ |W'''|)/M > 0`, which controls `ξ > M`.
//!
//! Every stored number is a one-sided rigorous bound under the ulp-widening
//! model of [`crate::interval`]. Integrals are truncated at `B`; the dropped
//! tails are bounded analytically and subtracted.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::interval::{
    enclose_abs_d3w1, enclose_cos, enclose_d2w1, enclose_dw1, enclose_w1, enclose_w1_times_x,
    tail_first_upper, tail_second_upper, Interval, IntervalError,
};
use crate::kernels::{self, Family};
use crate::spectral::SpectralError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifierError {
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error("invalid parameter: {0}")]
    Param(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

type Result<T> = std::result::Result<T, CertifierError>;

/// Convexity numerator `-9 + 9s + 27s² - 18s³ - 59s⁴ + 9s⁵ + 9s⁶`, constant term first.
pub const CONVEXITY_NUMERATOR: [f64; 7] = [-9.0, 9.0, 27.0, -18.0, -59.0, 9.0, 9.0];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyParams {
    /// Right end of the frequency window.
    #[serde(rename = "M")]
    pub m: f64,
    /// Frequency grid spacing.
    pub h: f64,
    pub x0: f64,
    #[serde(rename = "B_trunc")]
    pub b_trunc: f64,
    /// Tail budget and refinement target.
    pub tol: f64,
    /// Negative control: certify `W - c` instead of `W`.
    pub perturb_shift: f64,
    pub convexity_numerator: Vec<f64>,
    /// Uniform cells each partition starts from before adaptive bisection.
    pub seed_cells: usize,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            m: 20.0,
            h: 0.05,
            x0: (5.0f64 / 3.0).ln(),
            b_trunc: 20.0,
            tol: 1e-3,
            perturb_shift: 0.0,
            convexity_numerator: CONVEXITY_NUMERATOR.to_vec(),
            seed_cells: 4096,
        }
    }
}

impl CertifyParams {
    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.m) || !positive(self.h) || !positive(self.x0) || !positive(self.tol) {
            return Err(CertifierError::Param("M, h, x0 and tol must be positive"));
        }
        if !(self.b_trunc.is_finite() && self.b_trunc > self.x0) {
            return Err(CertifierError::Param("B must exceed x0"));
        }
        if !self.perturb_shift.is_finite() {
            return Err(CertifierError::Param("perturbation shift must be finite"));
        }
        if self.seed_cells == 0 {
            return Err(CertifierError::Param("partition needs at least one seed cell"));
        }
        if self.convexity_numerator.is_empty() {
            return Err(CertifierError::Param("convexity numerator is empty"));
        }
        Ok(())
    }

    fn grid_len(&self) -> usize {
        (self.m / self.h).round() as usize + 1
    }

    /// Width of the special first cell `[0, δ]`; `δξ ≤ π/8` keeps `cos ≥ 0` there.
    fn first_cell(&self) -> f64 {
        1e-4f64.min(std::f64::consts::PI / (8.0 * self.m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub holds: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBudgets {
    /// Bound on `∫_B^∞ |W|`.
    pub g: f64,
    /// Bound on `∫_B^∞ |W| x`.
    pub b1: f64,
    /// Bound on `∫_B^∞ |W'''|`.
    pub d3: f64,
}

impl TailBudgets {
    fn max(&self) -> f64 {
        self.g.max(self.b1).max(self.d3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Verified,
    Falsified,
    Inconclusive,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Verified => 0,
            Verdict::Falsified => 1,
            Verdict::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GBound {
    pub xi: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheck {
    pub min_transform: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub params: CertifyParams,
    /// `(ξ_i, lower bound of G(ξ_i))`.
    pub g_lower: Vec<(f64, f64)>,
    /// `(ξ_i, upper bound of G(ξ_i))`.
    pub g_upper: Vec<(f64, f64)>,
    pub b1_upper: f64,
    pub ver1: Condition,
    pub ver2: Condition,
    pub ver3: Condition,
    pub tail_budgets: TailBudgets,
    pub cells_g: usize,
    pub cells_d3: usize,
    pub fft_cross_check: CrossCheck,
    pub verdict: Verdict,
    pub trust_base: &'static str,
}

pub const TRUST_BASE: &str = "IEEE-754 binary64 with one-ulp outward widening per arithmetic \
operation and four ulps per libm transcendental; no hardware rounding modes";

/// Rigorously rounded running sum.
#[derive(Clone, Copy)]
struct Sum(Interval);

impl Sum {
    fn zero() -> Self {
        Sum(Interval::point(0.0))
    }

    fn add(&mut self, lo: f64, hi: f64) {
        self.0 = self.0 + Interval::new(lo, hi).unwrap_or(Interval::entire());
    }
}

/// A cell of `[a, b]` with the kernel enclosure over it.
#[derive(Debug, Clone, Copy)]
struct Cell {
    x: Interval,
    value: Interval,
}

/// Seeds uniform cells on `[a, b]` and bisects each until
/// `width(enclosure)·|cell| ≤ target` or the depth cap.
fn adaptive_cells(
    a: f64,
    b: f64,
    seeds: usize,
    target: f64,
    enclose: impl Fn(Interval) -> std::result::Result<Interval, IntervalError>,
) -> Result<Vec<Cell>> {
    let step = (b - a) / seeds as f64;
    let mut edges: Vec<f64> = (0..seeds).map(|i| a + i as f64 * step).collect();
    edges.push(b);
    let mut out = Vec::with_capacity(4 * seeds);
    for w in edges.windows(2) {
        let mut stack = vec![(w[0], w[1], 0u32)];
        while let Some((lo, hi, depth)) = stack.pop() {
            let x = Interval::new(lo, hi)?;
            let value = enclose(x)?;
            let mid = 0.5 * (lo + hi);
            let refine = value.width() * (hi - lo) > target && depth < MAX_DEPTH && lo < mid && mid < hi;
            if refine {
                // Right half pushed first so cells come out left to right.
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            } else {
                out.push(Cell { x, value });
            }
        }
    }
    Ok(out)
}

/// `e^{-3B/2}` rounded up.
fn decay_weight(b: f64) -> Interval {
    (Interval::point(b) * -1.5).exp()
}

fn tail_budgets(b: f64) -> Result<TailBudgets> {
    let s = Interval::point(b).exp().lo();
    let first = Interval::point(tail_first_upper(s)?);
    let second = Interval::point(tail_second_upper(s)?);
    let e = decay_weight(b);
    let two_thirds = Interval::ratio(2.0, 3.0);
    Ok(TailBudgets {
        g: (first * two_thirds * e).hi(),
        b1: (first * (two_thirds * b + Interval::ratio(4.0, 9.0)) * e).hi(),
        d3: (second * two_thirds * e).hi(),
    })
}

/// Shared partition of `[δ, B]` with enclosures of `W` and `W·x`.
struct KernelPartition {
    delta: f64,
    cells: Vec<Cell>,
    /// Lower bound of `W` on the first cell `[0, δ]`.
    first_lower: f64,
    /// Upper bound of `∫_0^δ W`.
    first_upper_integral: f64,
}

fn kernel_partition(params: &CertifyParams) -> Result<KernelPartition> {
    let delta = params.first_cell();
    let target = params.tol / params.seed_cells as f64;
    let cells = adaptive_cells(delta, params.b_trunc, params.seed_cells, target, enclose_w1)?;
    let first_lower = enclose_w1(Interval::new(0.0, delta)?)?.lo();
    // W ≤ (e^{3x/2} + e^{-3x/2})·log((e^x+1)/(e^x-1)) ≤ A(e^δ)(log 2(1+δ) - log x) on (0, δ].
    let d = Interval::point(delta);
    let amp = (d * 1.5).exp() + (d * -1.5).exp();
    let log_part = d * (2.0 * (1.0 + d)).ln()? + d * (1.0 - d.ln()?);
    let first_upper_integral = (Interval::point(amp.hi()) * log_part).hi();
    Ok(KernelPartition {
        delta,
        cells,
        first_lower,
        first_upper_integral,
    })
}

/// Rigorous upper bound of `b₁ = ∫_0^∞ |W - c·1_{[0,B]}| x dx`.
fn rigorous_b1_on(part: &KernelPartition, params: &CertifyParams, tails: &TailBudgets) -> Result<f64> {
    let c = params.perturb_shift;
    let mut sum = Sum::zero();
    let mut add_cell = |x: Interval| -> Result<()> {
        let wx = enclose_w1_times_x(x)? - c * x;
        let len = Interval::point(x.hi()) - Interval::point(x.lo());
        let v = (len * wx.abs()).hi();
        sum.add(v, v);
        Ok(())
    };
    add_cell(Interval::new(0.0, part.delta)?)?;
    for cell in &part.cells {
        add_cell(cell.x)?;
    }
    Ok((sum.0 + tails.b1).hi())
}

pub fn rigorous_b1(params: &CertifyParams) -> Result<f64> {
    params.validate()?;
    let part = kernel_partition(params)?;
    rigorous_b1_on(&part, params, &tail_budgets(params.b_trunc)?)
}

fn g_bounds_at(part: &KernelPartition, params: &CertifyParams, tail_g: f64, xi: f64) -> Result<GBound> {
    let c = params.perturb_shift;
    let mut sum = Sum::zero();

    // [0, δ]: cos ≥ 0 there, so only the lower end of W is needed for the lower bound.
    let first = Interval::new(0.0, part.delta)?;
    let cos0 = enclose_cos(xi, first);
    let w_lo = Interval::point(part.first_lower) - c;
    let d = Interval::point(part.delta);
    let lo = (d * (Interval::point(cos0.lo()) * w_lo).min(Interval::point(cos0.hi()) * w_lo)).lo();
    let shift_integral = if xi == 0.0 { d } else { (d * xi).sin() / xi };
    let hi = (Interval::point(part.first_upper_integral) - c * shift_integral).hi();
    sum.add(lo, hi);

    for cell in &part.cells {
        let w = cell.value - c;
        let len = Interval::point(cell.x.hi()) - Interval::point(cell.x.lo());
        let cos = enclose_cos(xi, cell.x);
        let plain = len * (w * cos);
        // ∫W cos = m̂∫cos + ∫(W - m̂)cos with m̂ the float midpoint of W's enclosure.
        let m_hat = w.mid();
        let spread = (Interval::point(w.hi()) - m_hat)
            .hi()
            .max((m_hat - Interval::point(w.lo())).hi());
        let cos_integral = if xi == 0.0 {
            len
        } else {
            ((Interval::point(cell.x.hi()) * xi).sin() - (Interval::point(cell.x.lo()) * xi).sin()) / xi
        };
        let main = cos_integral * m_hat;
        let err = (len * cos.mag() * spread).hi();
        let osc_lo = (main - err).lo();
        let osc_hi = (main + err).hi();
        sum.add(plain.lo().max(osc_lo), plain.hi().min(osc_hi));
    }
    let total = sum.0 + Interval::new(-tail_g, tail_g)?;
    Ok(GBound {
        xi,
        lower: total.lo(),
        upper: total.hi(),
    })
}

/// Rigorous lower bound of `G(ξ)` (and the matching upper bound).
pub fn rigorous_g(params: &CertifyParams, xi: f64) -> Result<GBound> {
    params.validate()?;
    let part = kernel_partition(params)?;
    g_bounds_at(&part, params, tail_budgets(params.b_trunc)?.g, xi)
}

/// `min_i min(G_i, G_{i+1}) - (Δξ/2)·b₁` over the grid; `holds` needs every `G_i > 0` too.
pub fn verify_ver1(g: &[GBound], b1_upper: f64) -> Condition {
    let mut margin = f64::INFINITY;
    let mut all_positive = true;
    for pair in g.windows(2) {
        let gap = (Interval::point(pair[1].xi) - Interval::point(pair[0].xi)).hi();
        let slack = (Interval::point(gap) * 0.5 * b1_upper).hi();
        let low = pair[0].lower.min(pair[1].lower);
        margin = margin.min((Interval::point(low) - slack).lo());
    }
    for b in g {
        all_positive &= b.lower > 0.0;
    }
    if g.len() == 1 {
        margin = g[0].lower;
    }
    Condition {
        holds: all_positive && margin > 0.0,
        margin,
    }
}

/// Interval Horner evaluation, coefficients constant term first.
fn horner(coeffs: &[f64], s: Interval) -> Interval {
    coeffs
        .iter()
        .rev()
        .fold(Interval::point(0.0), |acc, &c| acc * s + c)
}

/// Outcome of the sign check of the convexity numerator on `[1, s_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ver2Outcome {
    pub condition: Condition,
    /// Some cell is certainly positive.
    pub refuted: bool,
}

/// Checks the numerator is negative on `[1, e^{x₀}]` by adaptive bisection;
/// the margin is `-max` of the certified upper bounds.
pub fn verify_ver2(coeffs: &[f64], x0: f64) -> Result<Ver2Outcome> {
    let s_hi = Interval::point(x0).exp().hi();
    let mut stack = vec![(1.0f64, s_hi, 0u32)];
    let mut worst = f64::NEG_INFINITY;
    let mut unresolved = false;
    let mut refuted = false;
    while let Some((a, b, depth)) = stack.pop() {
        let p = horner(coeffs, Interval::new(a, b)?);
        if p.hi() < 0.0 {
            worst = worst.max(p.hi());
        } else if p.lo() > 0.0 {
            refuted = true;
            worst = worst.max(p.hi());
        } else if depth < 50 && a < 0.5 * (a + b) && 0.5 * (a + b) < b {
            let m = 0.5 * (a + b);
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
        } else {
            unresolved = true;
            worst = worst.max(p.hi());
        }
    }
    let margin = -worst;
    Ok(Ver2Outcome {
        condition: Condition {
            holds: !refuted && !unresolved && margin > 0.0,
            margin,
        },
        refuted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ver3Outcome {
    pub condition: Condition,
    /// Certified upper bound of the ver3 expression.
    pub upper: f64,
    pub d3_integral_upper: f64,
    pub cells: usize,
}

/// `-W'(x₀) - (|W''(x₀)| + ∫_{x₀}^∞ |W'''|)/M`, bounded on both sides.
pub fn verify_ver3(params: &CertifyParams) -> Result<Ver3Outcome> {
    params.validate()?;
    let tails = tail_budgets(params.b_trunc)?;
    let target = params.tol / params.seed_cells as f64;
    let cells = adaptive_cells(
        params.x0,
        params.b_trunc,
        params.seed_cells,
        target,
        enclose_abs_d3w1,
    )?;
    let mut sum = Sum::zero();
    for cell in &cells {
        let len = Interval::point(cell.x.hi()) - Interval::point(cell.x.lo());
        let v = (len * cell.value).hi();
        sum.add(0.0, v);
    }
    let integral = sum.0 + Interval::new(0.0, tails.d3)?;
    let dw = enclose_dw1(params.x0)?;
    let d2w = enclose_d2w1(params.x0)?.abs();
    let inv_m = 1.0 / Interval::point(params.m);
    let value = -dw - inv_m * (d2w + integral);
    Ok(Ver3Outcome {
        condition: Condition {
            holds: value.lo() > 0.0,
            margin: value.lo(),
        },
        upper: value.hi(),
        d3_integral_upper: integral.hi(),
        cells: cells.len(),
    })
}

/// Non-rigorous consistency check: the midpoint-rule transform of `W` sampled
/// on `[-40, 40]` (`2^16` points) stays above `-1e-6` for `ξ ≤ min(M, 20)`.
pub fn fft_cross_check(m: f64) -> Result<CrossCheck> {
    use num_complex::Complex64;
    use rustfft::FftPlanner;
    const N: usize = 1 << 16;
    const HALF: f64 = 40.0;
    let dx = 2.0 * HALF / N as f64;
    let mut buf: Vec<Complex64> = (0..N)
        .map(|j| {
            let x = -HALF + (j as f64 + 0.5) * dx;
            Complex64::new(kernels::w(Family::One, x.abs(), 2.0).unwrap_or(0.0), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(N).process(&mut buf);
    let xi_max = m.min(20.0);
    let mut min_transform = f64::INFINITY;
    for (k, v) in buf.iter().enumerate() {
        let xi = std::f64::consts::TAU * k as f64 / (2.0 * HALF);
        if xi > xi_max {
            break;
        }
        // Phase of the first sample, -40 + dx/2; G = (1/2)∫_{-40}^{40} W cos.
        let phase = Complex64::from_polar(1.0, -xi * (-HALF + 0.5 * dx));
        let g = 0.5 * (v * phase).re * dx;
        min_transform = min_transform.min(g);
    }
    Ok(CrossCheck {
        min_transform,
        passed: min_transform >= -1e-6,
    })
}

/// Runs every check. The `ξ` loop is parallel; results are collected in grid order.
pub fn certify(params: &CertifyParams) -> Result<Certificate> {
    params.validate()?;
    let tails = tail_budgets(params.b_trunc)?;
    let part = kernel_partition(params)?;
    let b1_upper = rigorous_b1_on(&part, params, &tails)?;
    let g_bounds = (0..params.grid_len())
        .into_par_iter()
        .map(|i| g_bounds_at(&part, params, tails.g, i as f64 * params.h))
        .collect::<Result<Vec<_>>>()?;
    let ver1 = verify_ver1(&g_bounds, b1_upper);
    let ver2 = verify_ver2(&params.convexity_numerator, params.x0)?;
    let ver3 = verify_ver3(params)?;
    let fft = fft_cross_check(params.m)?;

    let falsified = g_bounds.iter().any(|g| g.upper < 0.0) || ver2.refuted || ver3.upper < 0.0;
    let all_hold = ver1.holds && ver2.condition.holds && ver3.condition.holds;
    let verdict = if falsified {
        Verdict::Falsified
    } else if all_hold && tails.max() <= params.tol {
        Verdict::Verified
    } else {
        Verdict::Inconclusive
    };
    Ok(Certificate {
        params: params.clone(),
        g_lower: g_bounds.iter().map(|g| (g.xi, g.lower)).collect(),
        g_upper: g_bounds.iter().map(|g| (g.xi, g.upper)).collect(),
        b1_upper,
        ver1,
        ver2: ver2.condition,
        ver3: ver3.condition,
        tail_budgets: tails,
        cells_g: part.cells.len() + 1,
        cells_d3: ver3.cells,
        fft_cross_check: fft,
        verdict,
        trust_base: TRUST_BASE,
    })
}
