//! Checks for the circular-density machinery: normalization, expected
//! loss, tail tightness, the privacy check, and circularization.

use std::f64::consts::PI;

use geopriv::radial::{RadialPrivacyProbe, TailMode};
use geopriv::{DistinguishabilityFn, LossFn, PlanarLaplace, PolarField, Radial};

fn laplace_radial(eps: f64) -> Radial {
    PlanarLaplace::new(eps).unwrap().radial()
}

#[test]
fn laplace_normalization_is_exact() {
    for eps in [0.2, 1.0, 3.0] {
        let residual = laplace_radial(eps).check_normalization().unwrap();
        assert!(residual < 1e-9, "eps {eps}: residual {residual:.3e}");
    }
}

#[test]
fn zero_table_has_unit_residual() {
    let r = Radial::tabulated(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], TailMode::Zero).unwrap();
    let residual = r.check_normalization().unwrap();
    assert!((residual - 1.0).abs() < 1e-12);
}

#[test]
fn uniform_disk_normalizes() {
    let residual = Radial::uniform_disk(2.0).check_normalization().unwrap();
    assert!(residual < 1e-9, "residual {residual:.3e}");
}

#[test]
fn laplace_expected_linear_loss_is_two_over_eps() {
    for eps in [0.5, 1.0, 3.0] {
        let loss = laplace_radial(eps).expected_loss(&LossFn::Linear).unwrap();
        let expected = 2.0 / eps;
        assert!(
            (loss - expected).abs() <= 1e-8 * expected,
            "eps {eps}: {loss} vs {expected}"
        );
    }
}

#[test]
fn uniform_disk_expected_linear_loss() {
    // \int_0^a (r / (pi a^2)) 2 pi r dr = 2a/3.
    for a in [0.5, 2.0] {
        let loss = Radial::uniform_disk(a).expected_loss(&LossFn::Linear).unwrap();
        assert!((loss - 2.0 * a / 3.0).abs() < 1e-9, "a {a}: {loss}");
    }
}

#[test]
fn step_loss_equals_tail_mass() {
    let r = laplace_radial(1.0);
    let th = 1.7_f64;
    let loss = r.expected_loss(&LossFn::step(th).unwrap()).unwrap();
    let analytic = (1.0 + th) * (-th).exp();
    assert!((loss - analytic).abs() < 1e-8, "{loss} vs {analytic}");
}

#[test]
fn expected_loss_requires_normalization() {
    let r = Radial::tabulated(vec![(0.0, 0.0), (1.0, 0.0)], TailMode::Zero).unwrap();
    assert!(r.expected_loss(&LossFn::Linear).is_err());
}

#[test]
fn divergent_tail_is_an_error() {
    // Constant density never decays; against linear loss the integral
    // diverges and must be reported, not silently truncated.
    let r = Radial::analytic(|_| 0.01, 10.0);
    assert!(r.expected_loss(&LossFn::Linear).is_err());
}

#[test]
fn laplace_tail_identity() {
    // P(>r) = (1 + eps r) e^{-eps r}, quadrature vs closed form.
    for eps in [0.5, 1.0, 2.0] {
        let radial = laplace_radial(eps);
        for i in 0..=20 {
            let r = i as f64 * (20.0 / eps) / 20.0;
            let p = radial.tail_mass(r).unwrap();
            let analytic = (1.0 + eps * r) * (-eps * r).exp();
            assert!(
                (p - analytic).abs() < 1e-8,
                "eps {eps}, r {r}: {p} vs {analytic}"
            );
        }
    }
}

#[test]
fn rho_tightness_examples() {
    let radial = laplace_radial(1.0);
    let probes: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();

    // The exact tail is its own envelope (equality everywhere).
    let exact = radial
        .check_rho_tightness(|r| ((1.0 + r) * (-r).exp()).min(1.0), &probes)
        .unwrap();
    assert!(exact.holds);

    // A faster-decaying envelope fails: at r = 1, 2/e > e^{-2}.
    let tight = radial
        .check_rho_tightness(|r| (-2.0 * r).exp(), &[1.0])
        .unwrap();
    assert!(!tight.holds);
    let v = tight.first_violation.unwrap();
    assert!((v.tail_probability - 2.0 / std::f64::consts::E).abs() < 1e-8);
    assert!((v.envelope - (-2.0_f64).exp()).abs() < 1e-15);

    // The constant-one envelope accepts anything.
    let trivial = radial.check_rho_tightness(|_| 1.0, &probes).unwrap();
    assert!(trivial.holds);

    // Envelope values outside [0, 1] are a domain error.
    assert!(radial.check_rho_tightness(|_| 1.5, &probes).is_err());
}

#[test]
fn radial_privacy_laplace_is_tight() {
    for eps in [0.4, 1.0, 2.5] {
        let radial = laplace_radial(eps);
        let ell = DistinguishabilityFn::linear(eps).unwrap();
        let probe = RadialPrivacyProbe::log_spaced(10.0 / eps);
        let out = radial.check_privacy(&ell, &probe).unwrap();
        assert!(out.holds, "eps {eps}");
        assert!(
            out.worst_margin.abs() <= 1e-9,
            "eps {eps}: margin {}",
            out.worst_margin
        );
    }
}

#[test]
fn radial_privacy_scaling() {
    // Laplace(eps) satisfies Linear(eps') exactly when eps <= eps':
    // the log-ratio is exactly eps |r - r'|.
    let cases = [(1.0, 2.0, true), (2.0, 1.0, false), (1.0, 1.0, true), (0.5, 0.4, false)];
    for (eps, eps_prime, expect) in cases {
        let radial = laplace_radial(eps);
        let ell = DistinguishabilityFn::linear(eps_prime).unwrap();
        let probe = RadialPrivacyProbe::log_spaced(10.0 / eps);
        let out = radial.check_privacy(&ell, &probe).unwrap();
        assert_eq!(out.holds, expect, "eps {eps} vs bound {eps_prime}");
    }
}

#[test]
fn uniform_disk_fails_with_infinite_ratio() {
    let radial = Radial::uniform_disk(1.0);
    let ell = DistinguishabilityFn::linear(1.0).unwrap();
    let out = radial
        .check_privacy(&ell, &RadialPrivacyProbe::default_for(&radial))
        .unwrap();
    assert!(!out.holds);
    assert!(out.infinite_ratio, "expected an infinite-ratio report");
    assert_eq!(out.worst_margin, f64::NEG_INFINITY);
}

#[test]
fn circularize_circular_field_is_pointwise_identity() {
    let eps = 1.0;
    let mech = PlanarLaplace::new(eps).unwrap();
    let field = PolarField::from_fn(256, 64, 30.0 / eps, |r, _| mech.density(r)).unwrap();
    let radial = field.circularize().unwrap();
    for i in 0..256 {
        let r = field.radius(i);
        assert!(
            (radial.density(r) - mech.density(r)).abs() <= 1e-9,
            "r = {r}"
        );
    }
}

#[test]
fn circularize_averages_out_angular_modulation() {
    // f(r, theta) = Laplace(r) (1 + 0.5 cos theta): the cosine sums to
    // zero over a full uniform angle grid, so the angular average is the
    // Laplace radial again.
    let eps = 1.0;
    let mech = PlanarLaplace::new(eps).unwrap();
    let field = PolarField::from_fn_default(30.0 / eps, |r, theta| {
        mech.density(r) * (1.0 + 0.5 * theta.cos())
    })
    .unwrap();
    assert!((field.total_mass() - 1.0).abs() < 1e-3);
    let radial = field.circularize().unwrap();
    for i in (0..512).step_by(37) {
        let r = field.radius(i);
        assert!(
            (radial.density(r) - mech.density(r)).abs() <= 1e-12 * (1.0 + mech.density(r)),
            "r = {r}"
        );
    }
    // Expected loss carried over within the field grid's own accuracy.
    // The raw angular average preserves the grid's ~1e-4 mass bias, so
    // tighten it before the quadrature-gated evaluation.
    let loss_field = field.expected_loss(&LossFn::Linear);
    let loss_radial = radial.normalized().unwrap().expected_loss(&LossFn::Linear).unwrap();
    assert!(
        (loss_field - loss_radial).abs() < 2e-3,
        "{loss_field} vs {loss_radial}"
    );
}

#[test]
fn circularize_preserves_mass_under_shared_rule() {
    // Same trapezoid-in-r rule on both sides: ring masses agree exactly.
    let field = PolarField::from_fn(128, 32, 6.0, |r, theta| {
        (1.0 + 0.3 * (2.0 * theta).sin()) * (-r).exp() / (2.0 * PI) * 0.8
    })
    .unwrap();
    let radial = field.circularize().unwrap();
    let samples: Vec<(f64, f64)> = (0..128)
        .map(|i| (field.radius(i), radial.density(field.radius(i))))
        .collect();
    let dr = 6.0 / 127.0;
    let mut mass = 0.0;
    for (i, &(r, d)) in samples.iter().enumerate() {
        let w = if i == 0 || i == 127 { 0.5 } else { 1.0 };
        mass += w * dr * 2.0 * PI * r * d;
    }
    assert!(
        (mass - field.total_mass()).abs() < 1e-12,
        "radial {mass} vs field {}",
        field.total_mass()
    );
}

#[test]
fn circularize_rejects_negative_values() {
    let field = PolarField::from_fn(16, 8, 1.0, |_, theta| theta.cos()).unwrap();
    assert!(field.circularize().is_err());
}

#[test]
fn zero_field_circularizes_to_zero_flagged() {
    let field = PolarField::from_fn(16, 8, 1.0, |_, _| 0.0).unwrap();
    let radial = field.circularize().unwrap();
    let residual = radial.check_normalization().unwrap();
    assert!((residual - 1.0).abs() < 1e-12, "flagged as non-normalized");
}

#[test]
fn circularize_is_idempotent() {
    let eps = 1.0;
    let mech = PlanarLaplace::new(eps).unwrap();
    let field = PolarField::from_fn(128, 32, 12.0, |r, theta| {
        mech.density(r) * (1.0 + 0.4 * theta.sin())
    })
    .unwrap();
    let once = field.circularize().unwrap();
    // Rebuild a field from the circular radial and circularize again.
    let again = PolarField::from_fn(128, 32, 12.0, |r, _| once.density(r))
        .unwrap()
        .circularize()
        .unwrap();
    for i in 0..128 {
        let r = 12.0 * i as f64 / 127.0;
        assert!(
            (once.density(r) - again.density(r)).abs() <= 1e-9,
            "r = {r}"
        );
    }
}

#[test]
fn expected_loss_battery_bounded_below_by_loss_at_zero() {
    let candidates = [laplace_radial(0.7), laplace_radial(2.0), Radial::uniform_disk(1.3)];
    let battery = [
        LossFn::Linear,
        LossFn::step(0.5).unwrap(),
        LossFn::tabulated(vec![(0.0, 0.2), (1.0, 0.5), (4.0, 0.9)]).unwrap(),
    ];
    for radial in &candidates {
        for loss in &battery {
            let v = radial.expected_loss(loss).unwrap();
            assert!(v >= loss.eval(0.0) - 1e-9, "loss {v} below floor");
        }
    }
}

#[test]
fn polar_field_csv_round_trip() {
    let field = PolarField::from_fn(12, 6, 3.0, |r, theta| {
        (1.0 + r) * (2.0 + theta.sin()) * 1e-3
    })
    .unwrap();
    let mut buf = Vec::new();
    field.to_csv(&mut buf).unwrap();
    let back = PolarField::from_csv(std::io::BufReader::new(&buf[..])).unwrap();
    assert_eq!(back.shape(), (12, 6));
    for i in 0..12 {
        for j in 0..6 {
            assert!((back.value(i, j) - field.value(i, j)).abs() < 1e-12);
        }
    }
}

#[test]
fn tabulated_radial_csv_round_trip() {
    let r = Radial::tabulated(vec![(0.0, 0.5), (1.0, 0.25), (2.0, 0.1)], TailMode::Zero).unwrap();
    let mut buf = Vec::new();
    r.to_csv(&mut buf).unwrap();
    let back = Radial::from_csv(std::io::BufReader::new(&buf[..]), TailMode::Zero).unwrap();
    assert!((back.density(0.5) - r.density(0.5)).abs() < 1e-15);
}

#[test]
fn obfuscation_magnitudes_are_location_independent() {
    use geopriv::stats::ks_statistic_two_sample;
    use geopriv::{Point, RngState};
    let mech = PlanarLaplace::new(1.0).unwrap();
    let n = 100_000;
    let sample_at = |p: Point, seed: u64| -> Vec<f64> {
        let mut rng = RngState::new(seed);
        (0..n).map(|_| mech.obfuscate(p, &mut rng).dist(p)).collect()
    };
    let a = sample_at(Point { x: 0.0, y: 0.0 }, 101);
    let b = sample_at(Point { x: 17.0, y: -4.0 }, 202);
    let d = ks_statistic_two_sample(&a, &b);
    assert!(d < 0.01, "two-sample KS statistic {d}");
}
