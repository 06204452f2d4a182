use dglab_core::functionals::functional_b1;
use dglab_core::kernels::{
    self, d2w, d3w, dw, fourier_g, k1, k2, p1, tail_bounds, tilde_k, tilde_k1, tilde_k1_b2_closed, tilde_k2,
    w, w_deriv, Family,
};
use dglab_core::models::class_x_field;
use dglab_core::spectral::{gauss_legendre, OddSeries};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::One), Just(Family::Two)]
}

fn beta() -> impl Strategy<Value = f64> {
    1.05f64..=2.0
}

/// Log-ratio away from the singular point `s = 1`.
fn log_ratio_sample() -> impl Strategy<Value = f64> {
    prop_oneof![-12.0f64..-0.01, 0.01f64..12.0]
}

proptest! {
    #[test]
    fn tilde_kernels_are_reciprocal_symmetric(fam in family(), b in beta(), z in log_ratio_sample()) {
        let s = z.exp();
        let (a, r) = (tilde_k(fam, s, b).unwrap(), tilde_k(fam, 1.0 / s, b).unwrap());
        prop_assert!((a - r).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {r}");
    }

    #[test]
    fn tilde_kernels_rescale_modified_kernels(b in beta(), z in -3.0f64..3.0) {
        prop_assume!(z.abs() > 0.01);
        let s = z.exp();
        let (hb, hc) = (0.5 * (b + 1.0), 0.5 * (b - 1.0));
        let one = s.powf(-hb) * k1(s, b).unwrap();
        let two = s.powf(-hc) * k2(s, b).unwrap();
        prop_assert!((one - tilde_k1(s, b).unwrap()).abs() <= 1e-10 * one.abs().max(1.0));
        prop_assert!((two - tilde_k2(s, b).unwrap()).abs() <= 1e-10 * two.abs().max(1.0));
    }

    #[test]
    fn derivatives_match_central_differences(z in 0.05f64..6.0) {
        let h = 1e-3;
        let f = |x: f64| w(Family::One, x, 2.0).unwrap();
        let fd1 = (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h);
        let g = |x: f64| d2w(x).unwrap();
        let fd3 = (g(z - 2.0 * h) - 8.0 * g(z - h) + 8.0 * g(z + h) - g(z + 2.0 * h)) / (12.0 * h);
        let d1 = dw(z).unwrap();
        let d3 = d3w(z).unwrap();
        let scale1 = d1.abs().max(1e-3);
        let scale3 = d3.abs().max(1e-3);
        prop_assert!((d1 - fd1).abs() < 1e-6 * scale1 / z.min(1.0).powi(4), "dW({z}): {d1} vs {fd1}");
        prop_assert!((d3 - fd3).abs() < 1e-5 * scale3 / z.min(1.0).powi(4), "d3W({z}): {d3} vs {fd3}");
    }

    #[test]
    fn second_derivative_matches_difference_of_first(z in 0.05f64..6.0) {
        let h = 1e-3;
        let f = |x: f64| dw(x).unwrap();
        let fd = (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h);
        let d2 = d2w(z).unwrap();
        prop_assert!((d2 - fd).abs() < 1e-6 * d2.abs().max(1e-3) / z.min(1.0).powi(4), "{d2} vs {fd}");
    }

    #[test]
    fn w_is_even(fam in family(), b in beta(), z in log_ratio_sample()) {
        let (a, r) = (w(fam, z, b).unwrap(), w(fam, -z, b).unwrap());
        prop_assert!((a - r).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn tail_envelopes_dominate(z in 0.7f64..30.0) {
        let s = z.exp();
        let t = tail_bounds(s).unwrap();
        let decay = s.powf(1.5);
        prop_assert!(decay * tilde_k1(s, 2.0).unwrap().abs() <= t.first);
        prop_assert!(decay * d3w(z).unwrap().abs() <= t.second);
        let further = tail_bounds(s * 1.5).unwrap();
        prop_assert!(further.first <= t.first && further.second <= t.second);
    }
}

#[test]
fn general_formula_reduces_at_two() {
    for s in [0.1, 0.5, 0.9, 1.1, 2.0, 7.0, 9.5] {
        let (a, b) = (tilde_k1(s, 2.0).unwrap(), tilde_k1_b2_closed(s).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{s}: {a} vs {b}");
    }
}

/// High-precision values: `P_{1,2}` is negative only for `s < 0.35811` or `s > 2.79240`.
#[test]
fn first_production_kernel_sign_pattern() {
    let reference = [
        (0.25, -0.006192725862665712),
        (0.5, 0.06927215808495674),
        (2.0, 0.5541772646796539),
        (5.0, -0.5780630450379545),
        (100.0, -1.293_490_683_571_279),
    ];
    for (s, want) in reference {
        let got = p1(s, 2.0).unwrap();
        assert!(
            (got - want).abs() < 1e-10 * want.abs().max(1.0),
            "P1({s}) = {got}, want {want}"
        );
    }
    for (below, above) in [(0.3581, 0.3582), (2.7925, 2.7923)] {
        assert!(p1(below, 2.0).unwrap() < 0.0 && p1(above, 2.0).unwrap() > 0.0);
    }
    assert!(p1(100.0, 2.0).unwrap().abs() / 1e4 < 0.05);
}

#[test]
fn third_derivative_at_reference_points() {
    for z in [0.3, 1.0, 3.0] {
        let h = 1e-3;
        let f = |x: f64| w_deriv(Family::One, x, 2.0, 2).unwrap();
        let fd = (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h);
        let d3 = d3w(z).unwrap();
        assert!((d3 - fd).abs() < 1e-6 * d3.abs(), "{z}: {d3} vs {fd}");
    }
}

#[test]
fn convex_on_inner_window() {
    let x0 = (5.0f64 / 3.0).ln();
    for i in 1..=1000 {
        let z = x0 * i as f64 / 1000.0;
        assert!(d2w(z).unwrap() > 0.0, "W'' <= 0 at {z}");
    }
}

#[test]
fn second_family_is_convex() {
    for b in [1.2, 1.6, 2.0] {
        for i in 1..=50 {
            let z = 0.1 * i as f64;
            assert!(w_deriv(Family::Two, z, b, 2).unwrap() >= 0.0, "W2''({z}; {b})");
        }
    }
}

#[test]
fn second_family_transform_is_nonnegative() {
    for b in [1.5, 2.0] {
        for xi in [0.0, 1.0, 5.0, 20.0] {
            assert!(fourier_g(Family::Two, b, xi).unwrap() >= -1e-8, "G2({xi}; {b})");
        }
    }
}

#[test]
fn transform_is_even_and_starts_at_pi_over_three() {
    let g = fourier_g(Family::One, 2.0, 1.7).unwrap();
    assert_eq!(g, fourier_g(Family::One, 2.0, -1.7).unwrap());
    assert!((fourier_g(Family::One, 2.0, 0.0).unwrap() - kernels::G1_AT_ZERO).abs() < 1e-8);
}

/// `∬ F(r)F(t) W(t - r) = (1/2π)∫|F̂|² Ŵ = (2/π)∫_0^∞ |F̂(ξ)|² G(ξ) dξ`.
#[test]
fn plancherel_matches_log_variable_form() {
    let beta = 2.0;
    let omega = class_x_field(256, &[0.25]).unwrap();
    let direct = functional_b1(&omega, beta).unwrap();

    let series = OddSeries::new(&omega).unwrap();
    let c = 0.5 * (beta - 1.0);
    let (lo, hi, h) = (-30.0, 20.0, 1.0 / 64.0);
    let samples: Vec<(f64, f64)> = (0..=((hi - lo) / h) as usize)
        .map(|i| {
            let r = lo + i as f64 * h;
            let x = if r < 0.0 {
                r.exp().atan()
            } else {
                std::f64::consts::FRAC_PI_2 - (-r).exp().atan()
            };
            (r, (-c * r).exp() * series.omega(x) / (1.0 + (2.0 * r).exp()))
        })
        .collect();
    let power = |xi: f64| {
        let (re, im) = samples.iter().fold((0.0, 0.0), |(re, im), &(r, f)| {
            (re + f * (r * xi).cos(), im - f * (r * xi).sin())
        });
        (re * re + im * im) * h * h
    };
    let nodes = gauss_legendre(24);
    let mut spectral = 0.0;
    for panel in 0..30 {
        let (a, b) = (panel as f64 * 0.5, (panel + 1) as f64 * 0.5);
        for &(t, wt) in &nodes {
            let xi = 0.5 * (a + b) + 0.5 * (b - a) * t;
            spectral += 0.5 * (b - a) * wt * power(xi) * fourier_g(Family::One, beta, xi).unwrap();
        }
    }
    spectral *= 2.0 / std::f64::consts::PI;
    assert!(
        (direct - spectral).abs() < 1e-3 * direct.abs(),
        "{direct} vs {spectral}"
    );
}
