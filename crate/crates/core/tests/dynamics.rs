use dglab_core::functionals::{functional_b, functional_q, identity_residuals, ux_at_zero, FlowParams};
use dglab_core::models::{
    build_initial, clm_exact, run, step, ModelError, ModelSpec, Preset, RunControl, RunState, StopReason,
};
use dglab_core::spectral::{derivative, Period, PeriodicField};

fn neg_sin(n: usize) -> PeriodicField {
    build_initial(Preset::NegSin2x { amplitude: 1.0 }, n).unwrap()
}

fn rel_linf(a: &PeriodicField, b: &PeriodicField) -> f64 {
    a.max_abs_diff(b).unwrap() / b.linf()
}

fn integrate_to(state: RunState, spec: &ModelSpec, t_end: f64, cfl: f64) -> RunState {
    let control = RunControl {
        t_end,
        cfl,
        sample_every: t_end,
        ..RunControl::default()
    };
    run(state, spec, &control, |_, _| Ok::<(), ModelError>(()))
        .unwrap()
        .final_state
}

#[test]
fn clm_run_matches_closed_form() {
    let w0 = neg_sin(512);
    let spec = ModelSpec::gclm(0.0, Period::Pi);
    let end = integrate_to(RunState::new(w0.clone()), &spec, 1.0, 0.5);
    let (exact, _) = clm_exact(&w0, 1.0).unwrap();
    assert_eq!(end.t, 1.0);
    assert!(
        rel_linf(&end.omega, &exact) < 1e-6,
        "{}",
        rel_linf(&end.omega, &exact)
    );
}

#[test]
fn rk4_error_drops_sixteenfold() {
    let w0 = neg_sin(128);
    let spec = ModelSpec::gclm(0.0, Period::Pi);
    let (exact, _) = clm_exact(&w0, 1.0).unwrap();
    let err = |steps: usize| {
        let dt = 1.0 / steps as f64;
        let mut s = RunState::new(w0.clone());
        for _ in 0..steps {
            s = step(&s, &spec, dt).unwrap();
        }
        rel_linf(&s.omega, &exact)
    };
    let ratio = err(10) / err(20);
    assert!((12.0..=20.0).contains(&ratio), "{ratio}");
}

/// The truncated system lags the true blowup time by roughly `70/N`; at
/// `N = 2048` the threshold is crossed within 0.03 of `T = 2`.
#[test]
fn clm_reaches_threshold_after_two() {
    let spec = ModelSpec::gclm(0.0, Period::Pi);
    let control = RunControl {
        t_end: 3.0,
        sample_every: 0.5,
        ..RunControl::default()
    };
    let report = run(RunState::new(neg_sin(2048)), &spec, &control, |_, _| {
        Ok::<(), ModelError>(())
    })
    .unwrap();
    assert_eq!(report.stop_reason, StopReason::BlowupThreshold);
    let t = report.final_state.t;
    assert!(t > 2.0 && t < 2.03, "{t}");
}

#[test]
fn steady_state_holds() {
    let w0 = neg_sin(256);
    let spec = ModelSpec::dg(Period::Pi);
    let control = RunControl {
        t_end: 1.0,
        sample_every: 0.1,
        ..RunControl::default()
    };
    let mut worst = 0.0f64;
    run(RunState::new(w0.clone()), &spec, &control, |s, _| {
        worst = worst.max(s.omega.max_abs_diff(&w0).unwrap());
        Ok::<(), ModelError>(())
    })
    .unwrap();
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn dt_zero_is_identity() {
    let s = RunState::new(neg_sin(64));
    assert_eq!(step(&s, &ModelSpec::dg(Period::Pi), 0.0).unwrap(), s);
}

#[test]
fn dg_preserves_slope_at_origin_and_sign() {
    let w0 = build_initial(Preset::CubicX, 256).unwrap();
    let spec = ModelSpec::dg(Period::Pi);
    let slope0 = derivative(&w0).values()[0];
    let control = RunControl {
        t_end: 1.0,
        sample_every: 0.25,
        ..RunControl::default()
    };
    run(RunState::new(w0), &spec, &control, |s, _| {
        assert!((derivative(&s.omega).values()[0] - slope0).abs() < 1e-6);
        let scale = s.omega.linf();
        let half = s.omega.len() / 2;
        assert!(s.omega.values()[..=half].iter().all(|&v| v <= 1e-8 * scale));
        Ok::<(), ModelError>(())
    })
    .unwrap();
}

#[test]
fn q2_decreases_along_dg() {
    let w0 = build_initial(Preset::CubicX, 512).unwrap();
    let spec = ModelSpec::dg(Period::Pi);
    let control = RunControl {
        t_end: 2.0,
        sample_every: 0.25,
        ..RunControl::default()
    };
    let mut last = f64::INFINITY;
    let mut worst_res = 0.0f64;
    run(RunState::new(w0), &spec, &control, |s, dt| {
        let q = functional_q(&s.omega, 2.0).unwrap();
        assert!(q <= last + 1e-6, "Q increased: {last} -> {q}");
        last = q;
        let prev = step(s, &spec, -dt)?.omega;
        let next = step(s, &spec, dt)?.omega;
        let r = identity_residuals(
            &prev,
            &s.omega,
            &next,
            dt,
            FlowParams {
                advection: 1.0,
                c_omega: 0.0,
            },
            2.0,
        )
        .unwrap();
        worst_res = worst_res.max(r.res_q.unwrap());
        assert!(functional_b(&s.omega, 2.0).unwrap() >= -1e-6);
        assert!(r.res_imp < 1e-3 && r.res_ux0 < 1e-4, "{r:?}");
        Ok::<(), ModelError>(())
    })
    .unwrap();
    assert!(worst_res < 1e-4, "{worst_res}");
}

#[test]
fn rescaled_candidate_stays_normalized() {
    let alpha = 0.95;
    let w0 = build_initial(Preset::BlowupCandidate { alpha }, 1024).unwrap();
    let spec = ModelSpec::dg_rescaled(alpha, Period::TwoPi);
    let control = RunControl {
        t_end: 20.0,
        sample_every: 0.5,
        ..RunControl::default()
    };
    let mut ux_range = (f64::INFINITY, f64::NEG_INFINITY);
    let report = run(RunState::new(w0), &spec, &control, |s, _| {
        let ux0 = ux_at_zero(&s.omega.retag_period(Period::Pi)).unwrap();
        ux_range = (ux_range.0.min(ux0), ux_range.1.max(ux0));
        assert!(
            spec.scaling_rate(ux0) <= 0.5 * (alpha - 1.0) + 1e-12,
            "{} {ux0}",
            s.t
        );
        Ok::<(), ModelError>(())
    })
    .unwrap();
    assert_eq!(report.stop_reason, StopReason::TEnd);
    assert!(ux_range.0 >= 0.5 && ux_range.1 <= 1.5, "{ux_range:?}");
    assert!(report.final_state.u_integral > 5.0);
    assert!(report.final_state.t_phys < 20.0);
}
