use dglab_core::functionals::{commutator_residual, cotlar_residual};
use dglab_core::models::sine_polynomial;
use dglab_core::spectral::{derivative, hilbert, quad_periodic, velocity, Parity, Period, PeriodicField};
use proptest::prelude::*;

const N: usize = 256;

fn period() -> impl Strategy<Value = Period> {
    prop_oneof![Just(Period::Pi), Just(Period::TwoPi)]
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..10)
}

/// `Σ a_k cos(kκx) + b_k sin(kκx)` with a mean term, no parity.
fn general_field(period: Period, cos: &[f64], sin: &[f64], mean: f64) -> PeriodicField {
    let kappa = period.kappa();
    PeriodicField::from_fn(N, period, Parity::None, |x| {
        let c: f64 = cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * kappa * x).cos())
            .sum();
        let s: f64 = sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * ((k + 1) as f64 * kappa * x).sin())
            .sum();
        mean + c + s
    })
    .unwrap()
}

proptest! {
    #[test]
    fn parseval_matches_coefficients(p in period(), a in coeffs()) {
        let f = sine_polynomial(N, p, &a).unwrap();
        let grid = quad_periodic(&f.map(Parity::Even, |v| v * v));
        let spectral = 0.5 * p.length() * a.iter().map(|v| v * v).sum::<f64>();
        prop_assert!((grid - spectral).abs() <= 1e-12 * spectral.max(1.0), "{grid} vs {spectral}");
    }

    #[test]
    fn hilbert_swaps_parity_and_kills_mean(p in period(), a in coeffs(), mean in -3.0f64..3.0) {
        let odd = sine_polynomial(N, p, &a).unwrap();
        let h = hilbert(&odd);
        let v = h.values();
        for j in 1..N {
            prop_assert!((v[j] - v[N - j]).abs() < 1e-12);
        }
        let shifted = odd.map(Parity::None, |x| x + mean);
        let hs = hilbert(&shifted);
        prop_assert!(quad_periodic(&hs).abs() < 1e-12);
        prop_assert!(hs.max_abs_diff(&h).unwrap() < 1e-12);
    }

    #[test]
    fn velocity_differentiates_to_hilbert(p in period(), a in coeffs()) {
        let omega = sine_polynomial(N, p, &a).unwrap();
        let ux = derivative(&velocity(&omega).unwrap());
        prop_assert!(ux.max_abs_diff(&hilbert(&omega)).unwrap() < 1e-10);
    }

    #[test]
    fn commutator_difference_is_constant(p in period(), a in coeffs()) {
        let f = sine_polynomial(N, p, &a).unwrap();
        prop_assert!(commutator_residual(&f) < 1e-10);
        let g = general_field(p, &a, &a[..a.len() / 2], 0.7);
        prop_assert!(commutator_residual(&g) < 1e-10);
    }

    #[test]
    fn cotlar_identity(p in period(), c in coeffs(), s in coeffs()) {
        let f = general_field(p, &c, &s, 0.0);
        prop_assert!(cotlar_residual(&f) < 1e-10, "{}", cotlar_residual(&f));
    }
}
