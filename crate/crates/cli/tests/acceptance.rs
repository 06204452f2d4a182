//! End-to-end acceptance run: twelve criteria, one PASS/FAIL line each.
//!
//! Two criteria contain parts that the faithful implementation does not meet
//! (the CLM threshold time at N = 512 and two of the listed kernel sign
//! points). They print FAIL with the observed values; the process still exits
//! 0 as long as those parts show exactly the known, documented behaviour, and
//! exits 1 on any other regression.

use std::f64::consts::PI;
use std::time::Instant;

use dglab::config::RunConfig;
use dglab::selftest::{
    coercivity_suite, containment_suite, identity_suite, production_suite, spot_value_suite, SuiteReport,
    CONTAINMENT_SAMPLES, DEFAULT_SEED,
};
use dglab::simulate::{run_simulation, Simulation};
use dglab_core::certifier::{certify, CertifyParams, Verdict};
use dglab_core::functionals::{e0_field, functional_a, functional_q, h_norm};
use dglab_core::kernels::{fourier_g, p1, Family};
use dglab_core::models::{build_initial, c_alpha, Preset};
use dglab_core::spectral::derivative;

/// Outcome of one criterion.
struct Outcome {
    pass: bool,
    /// Failing, but in the documented way; does not fail the run.
    known: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            known: false,
            detail,
        }
    }
}

fn simulate(json: &str) -> Simulation {
    let config = RunConfig::from_json(json).expect("acceptance configs are valid");
    run_simulation(&config).expect("simulation runs")
}

fn suite_detail(s: &SuiteReport) -> String {
    match &s.first_failure {
        None => format!("{}: {}/{}", s.name, s.passed, s.total),
        Some(f) => format!("{}: {}/{} (first failure: {f})", s.name, s.passed, s.total),
    }
}

fn certificate_reproduction() -> Outcome {
    let start = Instant::now();
    let cert = certify(&CertifyParams::default()).expect("certifier runs");
    let secs = start.elapsed().as_secs_f64();
    let min_lower = cert.g_lower.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let pass = cert.g_lower.len() == 401
        && min_lower > 0.0
        && cert.verdict == Verdict::Verified
        && cert.ver1.holds
        && cert.ver2.holds
        && cert.ver3.holds
        && secs < 300.0;
    Outcome::new(
        pass,
        format!(
            "{} bounds, min lower {min_lower:.5}, verdict {:?}, margins {:.4}/{:.4}/{:.4}, certify {secs:.1} s",
            cert.g_lower.len(),
            cert.verdict,
            cert.ver1.margin,
            cert.ver2.margin,
            cert.ver3.margin
        ),
    )
}

fn negative_controls() -> Outcome {
    let shifted = certify(&CertifyParams {
        perturb_shift: 10.0,
        ..CertifyParams::default()
    })
    .expect("certifier runs");
    let truncated = certify(&CertifyParams {
        b_trunc: 2.0,
        ..CertifyParams::default()
    })
    .expect("certifier runs");
    Outcome::new(
        shifted.verdict == Verdict::Falsified && truncated.verdict == Verdict::Inconclusive,
        format!(
            "shift 10: {:?}, trunc 2: {:?}",
            shifted.verdict, truncated.verdict
        ),
    )
}

fn clm_oracle() -> Outcome {
    let start = Instant::now();
    let to_one = simulate(
        r#"{"model": {"kind": "gclm", "a": 0.0}, "n": 512, "t_end": 1.0, "sample_every": 1.0,
            "initial": {"name": "neg_sin2x", "amplitude": 1.0}, "residuals": false, "betas": []}"#,
    );
    let secs = start.elapsed().as_secs_f64();
    let err = to_one
        .summary
        .closed_form
        .iter()
        .find(|p| p.t == 1.0)
        .map_or(f64::INFINITY, |p| p.rel_linf_error);
    let blowup = simulate(
        r#"{"model": {"kind": "gclm", "a": 0.0}, "n": 512, "t_end": 3.0, "sample_every": 0.5,
            "initial": {"name": "neg_sin2x", "amplitude": 1.0}, "residuals": false, "betas": []}"#,
    );
    let t_stop = blowup.summary.t_final;
    let threshold = blowup.summary.stop_reason == "blowup_threshold";
    let oracle_ok = err < 1e-6 && secs < 5.0;
    let timing_ok = threshold && (t_stop - 2.0).abs() <= 0.01;
    let detail = format!(
        "rel error at t = 1: {err:.2e} in {secs:.2} s; threshold stop at t = {t_stop:.4} ({})",
        blowup.summary.stop_reason
    );
    // Known: the 2/3-dealiased N = 512 system crosses the threshold late, near t = 2.135.
    let known = oracle_ok && threshold && (2.10..2.17).contains(&t_stop);
    Outcome {
        pass: oracle_ok && timing_ok,
        known: !timing_ok && known,
        detail,
    }
}

fn steady_state() -> Outcome {
    let sim = simulate(
        r#"{"model": {"kind": "dg"}, "n": 256, "t_end": 1.0, "sample_every": 0.05,
            "initial": {"name": "neg_sin2x", "amplitude": 1.0}, "residuals": false, "betas": []}"#,
    );
    let drift = sim.summary.max_drift;
    Outcome::new(
        drift < 1e-8 && sim.summary.stop_reason == "t_end",
        format!(
            "max |w(t) - w0| = {drift:.2e} over {} samples",
            sim.summary.samples
        ),
    )
}

fn suite_outcome(s: SuiteReport) -> Outcome {
    Outcome::new(s.ok() && s.total > 0, suite_detail(&s))
}

fn q_monotone() -> Outcome {
    let sim = simulate(
        r#"{"model": {"kind": "dg"}, "n": 512, "t_end": 2.0, "sample_every": 0.1,
            "initial": {"name": "cubic_x"}, "betas": [2.0], "residuals": true}"#,
    );
    let q: Vec<f64> = sim.rows.iter().map(|r| r.q[0].unwrap_or(f64::NAN)).collect();
    let worst_rise = q
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_res = sim
        .rows
        .iter()
        .map(|r| r.res_q.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let covered = sim.rows.last().map_or(0.0, |r| r.t);
    Outcome::new(
        worst_rise <= 1e-6 && worst_res < 1e-4 && covered == 2.0,
        format!(
            "largest step change {worst_rise:.2e}, max |dQ/dt + B| = {worst_res:.2e}, {} samples",
            q.len()
        ),
    )
}

fn spot_values() -> Outcome {
    let c1 = c_alpha(1.0).unwrap();
    let q = functional_q(&build_initial(Preset::CubicX, 512).unwrap(), 2.0).unwrap();
    let sin = build_initial(Preset::NegSin2x { amplitude: 1.0 }, 512).unwrap();
    let a = functional_a(&sin, &derivative(&sin)).unwrap().value;
    let e0 = h_norm(&e0_field(512).unwrap()).unwrap();
    let suite = spot_value_suite().unwrap();
    Outcome::new(
        (c1 - 1.0).abs() < 1e-10
            && (q - 1.0).abs() < 1e-8
            && (a - 2.0 * PI).abs() < 1e-8
            && (e0 - 1.0).abs() < 1e-8
            && suite.ok(),
        format!(
            "c1 - 1 = {:.1e}, Q - 1 = {:.1e}, A - 2pi = {:.1e}, |e0| - 1 = {:.1e}",
            c1 - 1.0,
            q - 1.0,
            a - 2.0 * PI,
            e0 - 1.0
        ),
    )
}

fn kernel_signs() -> Outcome {
    let points = [0.25, 0.5, 2.0, 5.0, 100.0];
    let values: Vec<f64> = points.iter().map(|&s| p1(s, 2.0).unwrap()).collect();
    let negative: Vec<bool> = values.iter().map(|v| *v < 0.0).collect();
    let mut g_min = f64::INFINITY;
    for beta in [1.9, 1.925, 1.95, 1.975, 2.0] {
        for xi in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            g_min = g_min.min(fourier_g(Family::Two, beta, xi).unwrap());
        }
    }
    let listed: Vec<String> = points
        .iter()
        .zip(&values)
        .map(|(s, v)| format!("P({s}) = {v:.6}"))
        .collect();
    let detail = format!("{}; min G2 = {g_min:.3e}", listed.join(", "));
    let pass = negative.iter().all(|n| *n) && g_min >= -1e-8;
    // Known: P_{1,2} is positive on (0.358114, 2.792405), which contains 0.5 and 2.
    let known = negative == [true, false, false, true, true] && g_min >= -1e-8;
    Outcome {
        pass,
        known: !pass && known,
        detail,
    }
}

fn rescaled_blowup() -> Outcome {
    let alpha = 0.95;
    let sim = simulate(
        r#"{"model": {"kind": "dg_rescaled", "alpha": 0.95}, "n": 2048, "t_end": 20.0, "sample_every": 0.25,
            "initial": {"name": "blowup_candidate", "alpha": 0.95}, "residuals": false, "betas": []}"#,
    );
    let rows = &sim.rescaling;
    let c_max = rows.iter().map(|r| r.c_omega).fold(f64::NEG_INFINITY, f64::max);
    let (u_min, u_max) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.ux0), hi.max(r.ux0))
        });
    let integral = rows.last().map_or(0.0, |r| r.u_integral);
    let t_phys = rows.last().map_or(0.0, |r| r.t_phys);
    let reached = rows.last().map_or(0.0, |r| r.tau);
    Outcome::new(
        c_max <= 0.5 * (alpha - 1.0) && u_min >= 0.5 && u_max <= 1.5 && integral > 5.0 && reached == 20.0,
        format!(
            "max c = {c_max:.5} (bound {:.3}), u_x(0) in [{u_min:.4}, {u_max:.4}], integral {integral:.3} over t_phys {t_phys:.3}",
            0.5 * (alpha - 1.0)
        ),
    )
}

fn main() {
    let seed = DEFAULT_SEED;
    type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        ("certificate reproduction", Box::new(certificate_reproduction)),
        ("negative controls", Box::new(negative_controls)),
        ("CLM oracle", Box::new(clm_oracle)),
        ("steady state", Box::new(steady_state)),
        (
            "identity suite",
            Box::new(move || suite_outcome(identity_suite(seed, 100).unwrap())),
        ),
        (
            "coercivity",
            Box::new(move || suite_outcome(coercivity_suite(seed, 100).unwrap())),
        ),
        (
            "positivity of B(2)",
            Box::new(move || suite_outcome(production_suite(seed, 100).unwrap())),
        ),
        ("monotonicity of Q(2)", Box::new(q_monotone)),
        ("analytic spot values", Box::new(spot_values)),
        ("kernel sign facts", Box::new(kernel_signs)),
        ("rescaled blowup evidence", Box::new(rescaled_blowup)),
        (
            "interval soundness",
            Box::new(move || suite_outcome(containment_suite(seed, CONTAINMENT_SAMPLES, None).unwrap())),
        ),
    ];
    let mut unexpected = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.known { " [known, see notes]" } else { "" };
        println!(
            "criterion {:>2} {name:<26} {status}{note} ({}; {:.1} s)",
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass && !o.known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed unexpectedly");
        std::process::exit(1);
    }
}
