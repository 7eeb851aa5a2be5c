//! Sweep drivers: row discipline, reported-loss behavior at desk scale,
//! and the summary calculations.

use geopriv::experiment::{
    run_remap_comparison, run_sweep_comparison, summarize, write_plot_csv, write_sweep_csv,
    EpsilonRange, ExperimentConfig, PriorSource, SweepRow, SyntheticPrior,
};
use geopriv::grid::GridSpec;
use geopriv::Execution;

fn la_spec(cols: usize, rows: usize) -> GridSpec {
    GridSpec {
        lat_min: 33.9301,
        lat_max: 34.1996,
        lon_min: -118.5354,
        lon_max: -118.1010,
        cols,
        rows,
    }
}

fn demo_config() -> ExperimentConfig {
    ExperimentConfig {
        grid: la_spec(4, 3),
        epsilon: EpsilonRange { start: 0.2, stop: 3.0, step: 0.4 },
        prior: PriorSource::Synthetic { style: SyntheticPrior::TwoCluster },
        loss: "linear".into(),
        seed: 7,
        mc_samples: 20_000,
    }
}

#[test]
fn sweep_rows_are_ordered_and_consistent() {
    let out = run_sweep_comparison(&demo_config(), Execution::Sequential).unwrap();
    assert!(!out.any_flagged);
    let eps: Vec<f64> = out.rows.iter().map(|r| r.epsilon).collect();
    let mut sorted = eps.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(eps, sorted);
    for r in &out.rows {
        assert!((r.laplace_loss_km - 2.0 / r.epsilon).abs() < 1e-12);
        // The Monte Carlo confirmation column stays within a few
        // standard errors of the closed form (sigma = sqrt(2)/eps).
        let se = (2.0_f64).sqrt() / r.epsilon / (20_000.0_f64).sqrt();
        assert!(
            (r.laplace_mc_km - r.laplace_loss_km).abs() < 5.0 * se,
            "eps {}: mc {} vs {}",
            r.epsilon,
            r.laplace_mc_km,
            r.laplace_loss_km
        );
        assert!(r.lp_loss_km.is_some());
    }
    // The LP objective is non-increasing in epsilon.
    for pair in out.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        assert!(b.lp_objective_km.unwrap() <= a.lp_objective_km.unwrap() + 1e-7);
    }
}

#[test]
fn laplace_column_is_bit_equal_across_users() {
    let config = ExperimentConfig {
        prior: PriorSource::Checkins {
            path: concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/gowalla_sample.tsv").into(),
            users: vec![1001, 1002, 1003],
        },
        epsilon: EpsilonRange { start: 0.5, stop: 1.5, step: 0.5 },
        ..demo_config()
    };
    let out = run_sweep_comparison(&config, Execution::Sequential).unwrap();
    assert_eq!(out.rows.len(), 9);
    for chunk in out.rows.chunks(3) {
        let bits = chunk[0].laplace_loss_km.to_bits();
        let mc_bits = chunk[0].laplace_mc_km.to_bits();
        for r in chunk {
            assert_eq!(r.laplace_loss_km.to_bits(), bits);
            assert_eq!(r.laplace_mc_km.to_bits(), mc_bits);
        }
    }
}

#[test]
fn parallel_and_sequential_sweeps_are_identical() {
    let config = demo_config();
    let a = run_sweep_comparison(&config, Execution::Sequential).unwrap();
    let b = run_sweep_comparison(&config, Execution::Parallel).unwrap();
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    write_sweep_csv(&a.rows, &mut csv_a).unwrap();
    write_sweep_csv(&b.rows, &mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn remap_comparison_orders_and_point_mass_collapses() {
    let mut config = demo_config();
    config.grid = la_spec(8, 6);
    config.epsilon = EpsilonRange { start: 0.5, stop: 2.5, step: 1.0 };
    let out = run_remap_comparison(&config, Execution::Sequential).unwrap();
    assert!(!out.any_flagged);
    for r in &out.rows {
        let (b, n) = (r.bayes_loss_km.unwrap(), r.nearest_loss_km.unwrap());
        assert!(b <= n + 1e-9, "eps {}: bayes {b} vs nearest {n}", r.epsilon);
    }

    // A point-mass prior pins the posterior: every output remaps to the
    // user's cell and the loss collapses to zero.
    config.prior = PriorSource::Synthetic { style: SyntheticPrior::PointMass { cell: 17 } };
    let out = run_remap_comparison(&config, Execution::Sequential).unwrap();
    for r in &out.rows {
        assert!(r.bayes_loss_km.unwrap().abs() < 1e-12);
        // The un-remapped loss stays positive (full-support noise),
        // however small at strong concentration.
        assert!(r.nearest_loss_km.unwrap() > 0.0);
    }
}

#[test]
fn summary_reports_crossover_and_saturation() {
    let config = ExperimentConfig {
        epsilon: EpsilonRange { start: 0.2, stop: 3.0, step: 0.2 },
        ..demo_config()
    };
    let out = run_sweep_comparison(&config, Execution::Sequential).unwrap();
    let summary = summarize(&out.rows).unwrap();
    let user = summary.users.get("two_cluster").unwrap();
    assert_eq!(user.usable_points, 15);
    assert_eq!(user.flagged_points, 0);
    let s = user.saturation_km.unwrap();
    // 10 km cells saturate near their own mean center distance.
    let mdc = config.grid.to_grid().unwrap().mean_distance_to_center();
    assert!((s - mdc).abs() / mdc < 0.1, "saturation {s} vs floor {mdc}");
    // With saturation s, the additive curve 2/eps dips under it near
    // eps = 2/s.
    let crossover = user.crossover_epsilon.unwrap();
    assert!(
        (crossover - 2.0 / s).abs() <= 0.21,
        "crossover {crossover} vs 2/s {}",
        2.0 / s
    );
}

#[test]
fn summary_edge_cases() {
    let row = |eps: f64, lp: Option<f64>, flagged: bool| SweepRow {
        epsilon: eps,
        user: "u".into(),
        laplace_loss_km: 2.0 / eps,
        laplace_mc_km: 2.0 / eps,
        lp_objective_km: lp,
        lp_loss_km: lp,
        flagged: if flagged { Some("x".into()) } else { None },
    };
    // Single row: no crossover (laplace above lp there).
    let summary = summarize(&[row(0.2, Some(3.0), false)]).unwrap();
    assert!(summary.users["u"].crossover_epsilon.is_none());
    // All flagged: zero usable points.
    let summary = summarize(&[row(0.2, None, true), row(0.4, None, true)]).unwrap();
    assert_eq!(summary.users["u"].usable_points, 0);
    assert_eq!(summary.users["u"].flagged_points, 2);
    assert!(summarize(&[]).is_err());
}

#[test]
fn plot_csv_is_wide_format() {
    let config = ExperimentConfig {
        epsilon: EpsilonRange { start: 1.0, stop: 2.0, step: 1.0 },
        ..demo_config()
    };
    let out = run_sweep_comparison(&config, Execution::Sequential).unwrap();
    let mut buf = Vec::new();
    write_plot_csv(&out.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epsilon,laplace_two_cluster,lp_two_cluster"
    );
    assert_eq!(lines.count(), 2);
}
