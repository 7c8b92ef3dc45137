mod common;

use proptest::prelude::*;
use segmarket_core::panel::*;

fn small_spec(areas: u32, per: u32) -> DgpSpec {
    let mut s = DgpSpec::entry_calibrated();
    s.geography.business_areas = areas;
    s.geography.neighborhoods_per_area = per;
    s
}

#[test]
fn demeaning_matches_dummy_variable_least_squares() {
    for seed in 0..10 {
        let p = common::small_panel(seed);
        assert!(p.problem.y.len() <= 200);
        let fast = fe_regress(&p.problem).unwrap();
        let oracle = common::dummy_variable_ls(
            &p.problem.y,
            &p.problem.regressors,
            &[p.unit_ids.clone(), p.cell_ids.clone()],
        );
        for (k, (name, _)) in p.problem.regressors.iter().enumerate() {
            let b = fast.term(name).unwrap().estimate;
            assert!((b - oracle[k]).abs() <= 1e-8, "seed {seed} {name}: {b} vs {}", oracle[k]);
        }
    }
}

#[test]
fn lagged_outcome_is_centered_at_zero_without_dynamics() {
    let mut s = small_spec(10, 10);
    s.last_year = s.first_year + 29;
    s.log_number.serial_corr = 0.0;
    s.log_number.density_effects = vec![0.05; s.num_years()];
    let (mean, se) = lag_monte_carlo(&s, 30);
    assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn lagged_outcome_is_recovered_on_a_long_panel() {
    let mut s = small_spec(10, 10);
    s.last_year = s.first_year + 29;
    s.log_number.serial_corr = 0.0;
    s.log_number.lag = 0.3;
    let (mean, se) = lag_monte_carlo(&s, 30);
    assert!((mean - 0.3).abs() <= 3.0 * se, "mean {mean} se {se}");
}

/// Unit effects bias the lag coefficient down by roughly (1 + rho) / (T - 1);
/// the bias is reported, not corrected, and shrinks with the panel length.
#[test]
fn short_panel_lag_bias_is_downward_and_shrinks_with_length() {
    let mut short = small_spec(10, 10);
    short.log_number.serial_corr = 0.0;
    short.log_number.lag = 0.3;
    let mut long = short.clone();
    long.last_year = long.first_year + 29;
    let (m7, _) = lag_monte_carlo(&short, 30);
    let (m30, _) = lag_monte_carlo(&long, 30);
    let (b7, b30) = (m7 - 0.3, m30 - 0.3);
    assert!(b7 < 0.0 && b30 < 0.0, "{b7} {b30}");
    assert!(b7.abs() > 2.0 * b30.abs(), "{b7} {b30}");
    // same order as the large-N approximation
    let nickell = -(1.3) / 6.0;
    assert!(b7 > 2.0 * nickell && b7 < 0.25 * nickell, "{b7} vs {nickell}");
}

fn lag_monte_carlo(spec: &DgpSpec, reps: u64) -> (f64, f64) {
    let (mut m, mut se) = (0.0, 0.0);
    for r in 0..reps {
        let g = generate_panel(spec, 1000 + r).unwrap();
        let d = dynamic_density_regression(&g.panel, Outcome::LogNumber).unwrap();
        let e = d.result.term("lag").unwrap();
        m += e.estimate;
        se += e.std_error;
    }
    (m / reps as f64, se / reps as f64)
}

#[test]
fn zero_effect_estimates_are_centered() {
    let spec = small_spec(40, 15);
    let spec = DgpSpec {
        log_number: OutcomeSpec {
            entry_effects: EventEffects::default(),
            ..spec.log_number.clone()
        },
        ..spec
    };
    let (mut mean, mut se, reps) = (0.0, 0.0, 40);
    for r in 0..reps {
        let g = generate_panel(&spec, r).unwrap();
        let d = did_entry_estimate(&g.panel, Outcome::LogNumber).unwrap();
        let e = d.static_twfe.term(static_term(EventFamily::Entry)).unwrap();
        mean += e.estimate / reps as f64;
        se += e.std_error / reps as f64;
    }
    // the mean of 40 draws has about se / sqrt(40) spread
    assert!(mean.abs() <= 3.0 * se / (reps as f64).sqrt(), "{mean} {se}");
}

#[test]
fn generated_panels_are_deterministic_and_round_trip() {
    let spec = small_spec(12, 10);
    let a = generate_panel(&spec, 5).unwrap().panel;
    let b = generate_panel(&spec, 5).unwrap().panel;
    let (mut wa, mut wb) = (Vec::new(), Vec::new());
    a.write_csv(&mut wa).unwrap();
    b.write_csv(&mut wb).unwrap();
    assert_eq!(wa, wb);
    assert_eq!(PanelDataset::read_csv(wa.as_slice()).unwrap(), a);
    let fa = did_entry_estimate(&a, Outcome::PriceConcession).unwrap();
    let fb = did_entry_estimate(&b, Outcome::PriceConcession).unwrap();
    assert_eq!(fa, fb);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn event_bins_partition_treated_rows(seed in 0u64..1_000) {
        let g = generate_panel(&small_spec(6, 6), seed).unwrap();
        for r in g.panel.rows() {
            for family in [EventFamily::Entry, EventFamily::Consolidation] {
                let d = family.dummies(r);
                prop_assert!(d.iter().map(|&v| u32::from(v)).sum::<u32>() <= 1);
                if family.event_year(r).is_none() {
                    prop_assert_eq!(*d, [0u8; 5]);
                }
                if family.event_year(r) == Some(r.year + 1) {
                    prop_assert_eq!(*d, [0u8; 5]);
                }
            }
        }
    }

    #[test]
    fn grid_counts_match_brute_force(
        stores in prop::collection::vec((-2000.0f64..2000.0, -2000.0f64..2000.0, any::<bool>(), 2010i32..2023), 0..300),
        queries in prop::collection::vec((-2100.0f64..2100.0, -2100.0f64..2100.0), 1..20),
        radius in 1.0f64..900.0,
    ) {
        let s: Vec<Store> = stores
            .iter()
            .map(|&(x, y, f, open_year)| Store { x, y, brand: if f { Brand::Focal } else { Brand::Other }, open_year, listed: !f })
            .collect();
        let map = StoreMap::new(s.clone(), vec![]).unwrap();
        for &(qx, qy) in &queries {
            let brute = s.iter().filter(|t| (t.x - qx).powi(2) + (t.y - qy).powi(2) <= radius * radius).count();
            prop_assert_eq!(map.radius_count(qx, qy, radius, StoreFilter::default()).unwrap(), brute);
            let focal = s
                .iter()
                .filter(|t| t.brand == Brand::Focal && t.open_year <= 2016)
                .filter(|t| (t.x - qx).powi(2) + (t.y - qy).powi(2) <= radius * radius)
                .count();
            let f = StoreFilter::brand(Brand::Focal).open_by(2016);
            prop_assert_eq!(map.radius_count(qx, qy, radius, f).unwrap(), focal);
        }
    }

    #[test]
    fn clustered_covariance_is_symmetric_psd(seed in 0u64..500) {
        let p = common::small_panel(seed);
        let r = fe_regress(&p.problem).unwrap();
        let v = &r.covariance;
        let k = v.len();
        let scale = (0..k).map(|i| v[i][i].abs()).fold(1e-300, f64::max);
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(v[i][j], v[j][i]);
            }
        }
        // 2x2 leading minors and diagonal are non-negative
        for i in 0..k {
            prop_assert!(v[i][i] >= -1e-10 * scale);
            prop_assert!((r.std_errors[i] - v[i][i].max(0.0).sqrt()).abs() <= 1e-15);
        }
        if k == 2 {
            prop_assert!(v[0][0] * v[1][1] - v[0][1] * v[1][0] >= -1e-10 * scale * scale);
        }
    }
}
