//! Reduced-size runs of every experiment driver and the CSV writer.

use covert_auction::experiments::*;
use covert_auction::pso::PsoConfig;
use covert_auction::scenario::{generate_scenario, GeneratorConfig, SystemParams};
use covert_auction::uncertainty::BoxSearchConfig;

fn tiny_search() -> BoxSearchConfig {
    BoxSearchConfig {
        dep_samples: 256,
        metric_samples: 500,
        grid_points: 2,
        pso: PsoConfig {
            particles: 5,
            iterations: 5,
            ..PsoConfig::default()
        },
        workers: 2,
        ..experiment_box_search()
    }
}

fn small_market(seed: u64) -> covert_auction::scenario::MarketScenario {
    let gen = GeneratorConfig {
        nodes: 3,
        channels: 2,
        ..GeneratorConfig::default()
    };
    generate_scenario(&gen, seed).unwrap()
}

fn header<T: serde::Serialize>(rows: &[T]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).unwrap();
    String::from_utf8(buf).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn jamming_sweep_is_reproducible_and_monotone() {
    let cfg = JammingSweepConfig::from_dbw(&[-30.0, -20.0, -10.0], 5_000, 3);
    let link = reference_link(&SystemParams::default());
    let rows = sweep_jamming(&link, &cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].power_w, 0.0);
    assert_eq!(rows[0].cc_reduction, 0.0);
    assert!(rows.windows(2).all(|w| w[1].cc_bps < w[0].cc_bps && w[1].mi_bits < w[0].mi_bits));
    assert!(rows.windows(2).all(|w| w[1].dep >= w[0].dep));
    assert_eq!(rows, sweep_jamming(&link, &cfg).unwrap());
    let h = header(&rows);
    assert!(h.starts_with("schema,seed,power_w,power_dbw,dep"), "{h}");
}

#[test]
fn uncertainty_sweep_shapes() {
    let s = small_market(4);
    let cfg = UncertaintySweepConfig {
        half_widths_m: vec![0.0, 2.0, 6.0],
        search: tiny_search(),
        seeds: vec![4],
    };
    let rows = sweep_uncertainty(&s, &cfg).unwrap();
    assert_eq!(rows.len(), 3);
    assert!((rows[0].robust_welfare - rows[0].deterministic_welfare).abs() < 1e-6);
    assert_eq!(rows[0].max_radius, 0.0);
    for w in rows.windows(2) {
        assert!(w[1].robust_welfare <= w[0].robust_welfare + 1e-9);
        assert_eq!(w[1].deterministic_welfare, w[0].deterministic_welfare);
        assert!(w[1].max_radius >= w[0].max_radius);
    }
    assert!(header(&rows).contains("robust_welfare,deterministic_welfare"));
}

#[test]
fn ir_experiment_keeps_robust_utilities_non_negative() {
    let s = small_market(5);
    let cfg = IrConfig {
        half_width_m: 4.0,
        trials: 8,
        displacement: Displacement::Inside,
        search: tiny_search(),
        seed: 5,
    };
    let report = experiment_ir_violation(&s, &cfg).unwrap();
    assert_eq!(report.rows.len(), 8 * 3);
    assert!(report.rmca_min_true >= -1e-6);
    assert!(report.rows.iter().all(|r| r.warden_shift_m <= 4.0 * 3f64.sqrt() + 1e-9));
}

#[test]
fn bid_sweep_covers_both_mechanisms() {
    let cfg = BidSweepConfig::default();
    let rows = sweep_bids(&cfg).unwrap();
    assert_eq!(rows.len(), cfg.increments.len() * 2 * 15);
    let base_mean: f64 = cfg.base_bids.row(4).iter().sum::<f64>() / 3.0;
    let first = rows.iter().find(|r| r.node == 4).unwrap();
    assert!((first.mean_bid - base_mean).abs() < 1e-12);
    // With a point set both mechanisms allocate alike.
    for r in rows.iter().filter(|r| r.mechanism == "rmca") {
        let d = rows
            .iter()
            .find(|q| q.mechanism == "deterministic" && q.increment == r.increment && q.node == r.node && q.channel == r.channel)
            .unwrap();
        assert!((r.probability - d.probability).abs() < 1e-6);
    }
}

#[test]
fn timing_rows_cover_the_grid() {
    let mut cfg = TimingConfig::new(tiny_search());
    cfg.node_counts = vec![2, 3];
    cfg.channel_counts = vec![2];
    cfg.repetitions = 2;
    let rows = bench_timing(&cfg).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.total_s >= r.solve_median_s && r.solve_median_s >= r.solve_min_s));
    assert!(rows.iter().filter(|r| r.mechanism == "deterministic").all(|r| r.set_s == 0.0));
}

#[test]
fn csv_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bids.csv");
    let rows = sweep_bids(&BidSweepConfig::default()).unwrap();
    write_csv_file(&path, &rows).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["schema", "seed", "mechanism", "increment", "mean_bid", "node", "channel", "probability", "payment", "welfare"]
    );
    assert_eq!(reader.records().count(), rows.len());
}

#[test]
fn synthetic_markets_are_well_formed() {
    let mut rng = covert_auction::rng::stream(2);
    for _ in 0..50 {
        let m = random_interval_market(4, 3, 0.3, &mut rng).unwrap();
        assert!(m.costs.iter().all(|&c| c >= 0.0));
        assert!(m.budgets.iter().all(|b| (1.5..5.0).contains(b)));
        assert!(m.set.lower().as_slice().iter().all(|&x| x >= 0.0));
    }
    assert!(random_interval_market(0, 3, 0.1, &mut rng).is_err());
    assert!(random_interval_market(2, 3, 1.5, &mut rng).is_err());
}
