//! Property tests for the spec's structural invariants.

use proptest::prelude::*;

use geopriv::radial::RadialPrivacyProbe;
use geopriv::remap::apply_remap;
use geopriv::mechanism::Matrix;
use geopriv::{
    DiscreteMechanism, DistinguishabilityFn, GeoGrid, PlanarLaplace, Point, Prior, Region,
    RngState,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_round_trips(eps in 0.05f64..5.0, p in 1e-9f64..0.999_999) {
        let mech = PlanarLaplace::new(eps).unwrap();
        let r = mech.inverse_cdf(p).unwrap();
        let back = mech.cdf(r).unwrap();
        prop_assert!((back - p).abs() <= 1e-10, "p {p} -> r {r} -> {back}");
    }

    #[test]
    fn obfuscation_commutes_with_translation(
        seed in any::<u64>(),
        px in -50.0f64..50.0, py in -50.0f64..50.0,
        qx in -50.0f64..50.0, qy in -50.0f64..50.0,
    ) {
        let mech = PlanarLaplace::new(1.0).unwrap();
        let a = mech.obfuscate(Point { x: px, y: py }, &mut RngState::new(seed));
        let b = mech.obfuscate(Point { x: qx, y: qy }, &mut RngState::new(seed));
        prop_assert!(((b.x - a.x) - (qx - px)).abs() < 1e-9);
        prop_assert!(((b.y - a.y) - (qy - py)).abs() < 1e-9);
    }

    #[test]
    fn laplace_meets_linear_budget_iff_not_steeper(
        eps in 0.2f64..3.0,
        ratio in 0.4f64..2.0,
    ) {
        let bound = eps * ratio;
        let radial = PlanarLaplace::new(eps).unwrap().radial();
        let ell = DistinguishabilityFn::linear(bound).unwrap();
        let probe = RadialPrivacyProbe::log_spaced(10.0 / eps);
        let out = radial.check_privacy(&ell, &probe).unwrap();
        prop_assert_eq!(out.holds, eps <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn priors_normalize_and_ignore_order(counts in prop::collection::vec(0u32..40, 4..32)) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let prior = Prior::from_counts(&as_f).unwrap();
        prop_assert!((prior.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);

        let mut reversed = as_f.clone();
        reversed.reverse();
        let rev_prior = Prior::from_counts(&reversed).unwrap();
        for (i, w) in prior.weights().iter().enumerate() {
            let j = as_f.len() - 1 - i;
            prop_assert!((rev_prior.weight(j) - w).abs() <= 1e-15);
        }
    }

    #[test]
    fn nearest_cell_identifies_centers(cols in 1usize..12, rows in 1usize..12) {
        let grid = GeoGrid::new(Region::los_angeles(), cols, rows).unwrap();
        for k in 0..grid.len() {
            prop_assert_eq!(grid.nearest_cell(grid.center(k)), k);
        }
    }

    #[test]
    fn remaps_keep_rows_stochastic(
        seed in any::<u64>(),
        n in 2usize..8,
    ) {
        let mut rng = RngState::new(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let raw: Vec<f64> = (0..n).map(|_| rng.next_f64() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            rows.push(raw.into_iter().map(|v| v / total).collect::<Vec<f64>>());
        }
        let mech = DiscreteMechanism::new(Matrix::from_rows(rows).unwrap()).unwrap();
        let table: Vec<usize> = (0..n).map(|_| (rng.next_u64() % n as u64) as usize).collect();
        // new() revalidates: non-negative entries, unit row sums.
        let mapped = apply_remap(&mech, &table).unwrap();
        prop_assert_eq!(mapped.num_outputs(), n);
    }
}
