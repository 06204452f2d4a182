//! `selftest`: seeded invariant suites over the whole library.
//!
//! Every suite draws from its own ChaCha stream derived from the run seed, so
//! a report is reproducible from `(seed, fault)` alone.

use std::f64::consts::PI;

use dglab_core::functionals::{
    apply_l1, cancellation_integral, commutator_residual, cotlar_residual, e0_field, functional_a,
    functional_b, functional_b_symmetrized, functional_q, h_norm, y_inner,
};
use dglab_core::interval::{
    enclose_abs_d3w1, enclose_cos, enclose_d2w1, enclose_d3, enclose_dw1, enclose_tilde_k1,
    enclose_tilde_k1_log, enclose_w1, enclose_w1_times_x, env_monotone, Interval, Monotone,
};
use dglab_core::kernels::{d2w, d3w, dw, fourier_g, log_ratio, p1, tilde_k1, w, Family, G1_AT_ZERO};
use dglab_core::models::{admissible_coeffs, build_initial, c_alpha, class_x_field, sine_polynomial, Preset};
use dglab_core::spectral::{derivative, Period};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const CONTAINMENT_SAMPLES: usize = 100_000;
const RANDOM_FIELDS: usize = 100;
const GRID: usize = 256;

/// Deliberate defects for checking that the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of the point values of `K̃_{1,2}`.
    KernelSign,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Description of the first failing case.
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            total: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(describe());
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.suites.iter().all(SuiteReport::ok)
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Point oracle for `K̃_{1,2}`, with the injectable defect.
fn point_tilde_k1(s: f64, fault: Option<Fault>) -> Result<f64, CliError> {
    let v = tilde_k1(s, 2.0)?;
    Ok(if fault == Some(Fault::KernelSign) { -v } else { v })
}

/// Kernel oracles use a different formula than their enclosures; allow
/// `1e-13` relative for the oracle's own rounding.
fn holds(enc: Interval, v: f64) -> bool {
    let slack = 1e-13 * v.abs() + 1e-300;
    enc.lo() <= v + slack && v - slack <= enc.hi()
}

/// A cell inside `[lo, hi]` skewed toward narrow widths, plus a point in it.
fn cell(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> (Interval, f64) {
    let a = r.gen_range(lo..hi);
    let width: f64 = r.gen_range(0.0..1.0);
    let b = (a + width * width * (hi - a)).min(hi);
    let p = (a + r.gen_range(0.0..=1.0) * (b - a)).clamp(a, b);
    (Interval::new(a, b).expect("ordered by construction"), p)
}

/// Log-uniform cell with relative width in `[1e-9, 1e-1]`, the regime the
/// certifier partitions into; kernel enclosures are loose on wide cells.
fn narrow_cell(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> (Interval, f64) {
    let a = r.gen_range(lo.ln()..hi.ln()).exp().max(lo);
    let rel = 10f64.powf(-r.gen_range(1.0..9.0));
    let b = (a * (1.0 + rel)).min(hi);
    let p = (a + r.gen_range(0.0..=1.0) * (b - a)).clamp(a, b);
    (Interval::new(a, b).expect("ordered by construction"), p)
}

const CONTAINMENT_OPS: usize = 21;

/// One containment trial of operation `op`; returns the verdict and a description.
fn containment_trial(
    op: usize,
    r: &mut ChaCha8Rng,
    fault: Option<Fault>,
) -> Result<(bool, String), CliError> {
    let d = |name: &str, x: Interval, p: f64| format!("{name} on {x} at {p:e}");
    Ok(match op {
        0..=3 => {
            let (x, px) = cell(r, -1e3, 1e3);
            let (y, py) = cell(r, -1e3, 1e3);
            let (name, enc, v) = match op {
                0 => ("add", x + y, px + py),
                1 => ("sub", x - y, px - py),
                2 => ("mul", x * y, px * py),
                _ if y.contains(0.0) => ("div", Interval::entire(), 0.0),
                _ => ("div", x / y, px / py),
            };
            (enc.contains(v), format!("{name} on {x}, {y} at ({px:e}, {py:e})"))
        }
        4 => {
            let (x, p) = cell(r, -1e3, 1e3);
            (
                x.abs().contains(p.abs()) && x.sqr().contains(p * p) && x.powi(3).contains(p.powi(3)),
                d("abs/sqr/cube", x, p),
            )
        }
        5 => {
            let (x, p) = cell(r, -40.0, 40.0);
            (x.exp().contains(p.exp()), d("exp", x, p))
        }
        6 => {
            let (x, p) = cell(r, 1e-12, 1e6);
            (
                x.ln()?.contains(p.ln()) && x.sqrt()?.contains(p.sqrt()),
                d("ln/sqrt", x, p),
            )
        }
        7 => {
            let (x, p) = cell(r, -50.0, 50.0);
            (
                x.sin().contains(p.sin()) && x.cos().contains(p.cos()),
                d("sin/cos", x, p),
            )
        }
        8..=11 => {
            let (s, p) = cell(r, 1.0 + 1e-9, 1e4);
            let (f, v) = match op {
                8 => (Monotone::LogRatio, log_ratio(p)),
                9 => (Monotone::Pow3Half, p.powf(1.5)),
                10 => (Monotone::PowNeg3Half, p.powf(-1.5)),
                _ => (Monotone::PowNegHalf, p.powf(-0.5)),
            };
            (holds(env_monotone(f, s)?, v), d(&format!("{f:?}"), s, p))
        }
        12..=14 => {
            let (s, p) = narrow_cell(r, 1.0 + 1e-9, 1e6);
            if p <= 1.0 {
                return Ok((true, String::new()));
            }
            let (name, enc, v) = match op {
                12 => ("tilde_k1", enclose_tilde_k1(s)?, point_tilde_k1(p, fault)?),
                13 => (
                    "tilde_k1_log",
                    enclose_tilde_k1_log(s)?,
                    point_tilde_k1(p, fault)? * p.ln(),
                ),
                _ => ("d3", enclose_d3(s)?, d3w(p.ln())?),
            };
            (holds(enc, v), d(name, s, p))
        }
        15..=17 => {
            let (x, p) = narrow_cell(r, 1e-9, 25.0);
            if p <= 0.0 {
                return Ok((true, String::new()));
            }
            let wx = w(Family::One, p, 2.0)?;
            let (name, enc, v) = match op {
                15 => ("w1", enclose_w1(x)?, wx),
                16 => ("w1_times_x", enclose_w1_times_x(x)?, wx * p),
                _ => ("abs_d3w1", enclose_abs_d3w1(x)?, d3w(p)?.abs()),
            };
            (holds(enc, v), d(name, x, p))
        }
        18 => {
            let xi = r.gen_range(0.0..40.0);
            let (x, p) = cell(r, 0.0, 25.0);
            (
                enclose_cos(xi, x).contains((p * xi).cos()),
                d(&format!("cos bound xi={xi}"), x, p),
            )
        }
        19 | 20 => {
            let p = r.gen_range(1e-6..25.0);
            let (name, enc, v) = if op == 19 {
                ("dw1", enclose_dw1(p)?, dw(p)?)
            } else {
                ("d2w1", enclose_d2w1(p)?, d2w(p)?)
            };
            (holds(enc, v), format!("{name} at {p:e}"))
        }
        _ => unreachable!("operation index below CONTAINMENT_OPS"),
    })
}

/// Random cells and points over every enclosure; a violation is a point value outside its enclosure.
pub fn containment_suite(seed: u64, samples: usize, fault: Option<Fault>) -> Result<SuiteReport, CliError> {
    let mut r = rng(seed, 1);
    let mut report = SuiteReport::new("interval containment");
    for i in 0..samples {
        let (ok, what) = containment_trial(i % CONTAINMENT_OPS, &mut r, fault)?;
        report.check(ok, || what);
    }
    Ok(report)
}

fn random_coeffs(r: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let len = r.gen_range(1..=max_len);
    (0..len).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Cotlar, commutator and the `sin 2x` cancellation on random odd trig polynomials.
pub fn identity_suite(seed: u64, fields: usize) -> Result<SuiteReport, CliError> {
    let mut r = rng(seed, 2);
    let mut report = SuiteReport::new("identities");
    for _ in 0..fields {
        let a = random_coeffs(&mut r, 9);
        let period = if r.gen_bool(0.5) {
            Period::Pi
        } else {
            Period::TwoPi
        };
        let f = sine_polynomial(GRID, period, &a)?;
        let (cot, com) = (cotlar_residual(&f), commutator_residual(&f));
        report.check(cot < 1e-10, || format!("Cotlar residual {cot:e} for {a:?}"));
        report.check(com < 1e-10, || format!("commutator residual {com:e} for {a:?}"));
        let omega = sine_polynomial(GRID, Period::Pi, &a)?;
        let c = cancellation_integral(&omega).abs();
        report.check(c < 1e-10, || format!("cancellation integral {c:e} for {a:?}"));
    }
    Ok(report)
}

/// Rayleigh quotient of the linearized operator on random admissible fields.
pub fn coercivity_suite(seed: u64, fields: usize) -> Result<SuiteReport, CliError> {
    let mut r = rng(seed, 3);
    let mut report = SuiteReport::new("coercivity");
    while report.total < fields {
        let len = r.gen_range(2..=9);
        let a: Vec<f64> = (0..len).map(|_| r.gen_range(-1.0..1.0)).collect();
        let f = sine_polynomial(GRID, Period::TwoPi, &admissible_coeffs(&a))?;
        let norm = y_inner(&f, &f)?;
        if norm <= 1e-8 {
            continue;
        }
        let q = y_inner(&apply_l1(&f)?, &f)? / norm;
        report.check(q <= -0.375 + 1e-6, || format!("quotient {q} for {a:?}"));
    }
    Ok(report)
}

/// Production term `B(2)` on random class-X fields, both evaluation paths.
pub fn production_suite(seed: u64, fields: usize) -> Result<SuiteReport, CliError> {
    let mut r = rng(seed, 4);
    let mut report = SuiteReport::new("class-X production");
    for _ in 0..fields {
        let raw = random_coeffs(&mut r, 3);
        let total: f64 = raw.iter().map(|v| v.abs()).sum();
        let c: Vec<f64> = raw.iter().map(|v| v * (0.9 / total).min(1.0)).collect();
        let omega = class_x_field(GRID, &c)?;
        let direct = functional_b(&omega, 2.0)?;
        let sym = functional_b_symmetrized(&omega, 2.0)?;
        report.check(direct >= -1e-6, || format!("B(2) = {direct} for {c:?}"));
        let rel = (direct - sym).abs() / direct.abs().max(1e-12);
        report.check(rel <= 1e-5, || {
            format!("direct {direct} vs symmetrized {sym} for {c:?}")
        });
    }
    Ok(report)
}

/// Sign, symmetry and transform facts of the interaction kernels.
pub fn kernel_suite(seed: u64, fault: Option<Fault>) -> Result<SuiteReport, CliError> {
    let mut r = rng(seed, 5);
    let mut report = SuiteReport::new("kernels");
    for _ in 0..200 {
        let s: f64 = r.gen_range(0.0f64..8.0).exp();
        if s == 1.0 {
            continue;
        }
        let (a, b) = (point_tilde_k1(s, fault)?, point_tilde_k1(1.0 / s, fault)?);
        report.check((a - b).abs() <= 1e-10 * a.abs().max(1.0), || {
            format!("K̃({s}) = {a} but K̃(1/s) = {b}")
        });
        let enc = enclose_tilde_k1(Interval::point(s.max(1.0 / s)))?;
        report.check(holds(enc, a), || format!("K̃({s}) = {a} outside {enc}"));
    }
    let k2 = point_tilde_k1(2.0, fault)?;
    report.check(k2 > 0.0, || format!("K̃(2) = {k2} is not positive"));
    // P_{1,2} is negative exactly on s < 0.358114 and s > 2.792405.
    for s in [0.25, 5.0, 100.0] {
        let v = p1(s, 2.0)?;
        report.check(v < 0.0, || format!("P_1,2({s}) = {v}"));
    }
    for s in [0.5, 2.0] {
        let v = p1(s, 2.0)?;
        report.check(v > 0.0, || format!("P_1,2({s}) = {v} expected positive"));
    }
    for beta in [1.9, 1.95, 2.0] {
        for xi in [0.0, 0.5, 2.0, 7.5] {
            let g = fourier_g(Family::Two, beta, xi)?;
            report.check(g >= -1e-8, || format!("G_2({beta}, {xi}) = {g}"));
        }
    }
    let g0 = fourier_g(Family::One, 2.0, 0.0)?;
    report.check((g0 - G1_AT_ZERO).abs() < 1e-6, || {
        format!("G_1(0) = {g0}, expected π/3")
    });
    Ok(report)
}

/// Closed-form values that anchor the normalizations.
pub fn spot_value_suite() -> Result<SuiteReport, CliError> {
    let mut report = SuiteReport::new("spot values");
    let c1 = c_alpha(1.0)?;
    report.check((c1 - 1.0).abs() < 1e-10, || format!("c_1 = {c1}"));
    let cubic = build_initial(Preset::CubicX, 512)?;
    let q = functional_q(&cubic, 2.0)?;
    report.check((q - 1.0).abs() < 1e-8, || format!("Q(2, cubic) = {q}"));
    let sin = build_initial(Preset::NegSin2x { amplitude: 1.0 }, 512)?;
    let a = functional_a(&sin, &derivative(&sin))?.value;
    report.check((a - 2.0 * PI).abs() < 1e-8, || format!("A(-sin 2x) = {a}"));
    let e0 = h_norm(&e0_field(512)?)?;
    report.check((e0 - 1.0).abs() < 1e-8, || format!("|e0|_H = {e0}"));
    Ok(report)
}

pub fn run_selftest(seed: u64, fault: Option<Fault>) -> Result<SelftestReport, CliError> {
    type Suite = Box<dyn Fn() -> Result<SuiteReport, CliError> + Send + Sync>;
    let suites: Vec<Suite> = vec![
        Box::new(move || containment_suite(seed, CONTAINMENT_SAMPLES, fault)),
        Box::new(move || identity_suite(seed, RANDOM_FIELDS)),
        Box::new(move || coercivity_suite(seed, RANDOM_FIELDS)),
        Box::new(move || production_suite(seed, RANDOM_FIELDS)),
        Box::new(move || kernel_suite(seed, fault)),
        Box::new(spot_value_suite),
    ];
    // Suites own their random streams, so running them concurrently leaves the report unchanged.
    let suites = suites
        .par_iter()
        .map(|run| run())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SelftestReport { seed, suites })
}

/// Prints one line per suite; exit code 1 when any case fails.
pub fn cmd_selftest(seed: u64, fault: Option<Fault>) -> Result<i32, CliError> {
    let report = run_selftest(seed, fault)?;
    for s in &report.suites {
        let status = if s.ok() { "ok" } else { "FAILED" };
        println!("{:<22} {:>6}/{:<6} {status}", s.name, s.passed, s.total);
        if let Some(f) = &s.first_failure {
            println!("    first failure: {f}");
        }
    }
    Ok(if report.ok() { 0 } else { 1 })
}
