//! Acceptance criteria. Every test writes one `PASS`/`FAIL` line to stderr
//! (bypassing output capture) before asserting.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{
    dummy_variable_ls, monotonicity_violations, random_market, random_profile, small_panel, welfare_identity_gap,
    MarketShape, PERTURBATIONS, SMALL, TINY,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segmarket_core::io::{
    write_coexistence_csv, write_coverage_csv, write_equilibrium_csv, write_experiment_csv, write_placebo_csv,
    write_regression_csv, write_welfare_csv,
};
use segmarket_core::market::StrategyProfile;
use segmarket_core::panel::{
    coverage_study, did_estimate, fe_regress, generate_panel, placebo_test, Brand, DgpSpec, EventFamily, Outcome, Store,
    StoreFilter, StoreMap, STORE_RADIUS,
};
use segmarket_core::solver::{concession_foc_residual, epsilon_nash_verify, solve, SolverSettings};
use segmarket_core::statics::{
    consolidation_fixed_phase, merged_config, run_library, run_null_library, scenarios, ClaimVerdict, LibraryRun,
};
use segmarket_core::{evaluate, MarketConfig};

fn report(name: &str, pass: bool, detail: String) {
    let line = format!("{} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

#[test]
fn monotonicity_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut violations = Vec::new();
    let triples = 1000;
    for _ in 0..triples {
        let config = random_market(&mut rng, SMALL);
        let profile = random_profile(&mut rng, &config);
        let kind = PERTURBATIONS[rng.random_range(0..PERTURBATIONS.len())];
        violations.extend(monotonicity_violations(&mut rng, &config, &profile, kind));
    }
    let elapsed = start.elapsed();
    let pass = violations.is_empty() && within(elapsed, 10);
    report(
        "monotonicity",
        pass,
        format!("{triples} triples, {} violations, {:.2?}", violations.len(), elapsed),
    );
    assert!(pass, "{violations:?}");
}

#[test]
fn welfare_accounting_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let config = random_market(&mut rng, SMALL);
        let profile = random_profile(&mut rng, &config);
        let out = evaluate(&config, &profile).unwrap();
        worst = worst.max(welfare_identity_gap(&config, &profile, &out));
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && within(elapsed, 5);
    report("welfare identity", pass, format!("500 profiles, worst relative gap {worst:.2e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn oracle_equivalence() {
    let start = Instant::now();
    let settings = SolverSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut checked, mut skipped, mut failures) = (0, 0, Vec::new());
    while checked < 20 {
        let config = random_market(&mut rng, TINY);
        let eq = solve(&config, &settings, checked).unwrap();
        if !eq.converged {
            skipped += 1;
            continue;
        }
        let v = epsilon_nash_verify(&config, &eq.profile, 1e-4, 0.01, settings.oracle_budget).unwrap();
        if !v.holds {
            failures.push(format!("instance {checked}: firm {} gains {:.3e}", v.worst_firm, v.worst_gain));
        }
        checked += 1;
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && within(elapsed, 120);
    report(
        "oracle equivalence",
        pass,
        format!("20 converged tiny instances ({skipped} unconverged skipped), {} failures, {elapsed:.2?}", failures.len()),
    );
    assert!(pass, "{failures:?}");
}

#[test]
fn first_order_conditions() {
    let settings = SolverSettings::default();
    let shape = MarketShape {
        max_firms: 3,
        max_segments: 3,
        max_branches: 3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut library = scenarios::library().into_iter().map(|(_, c)| c);
    let (mut solved, mut attempts, mut cells, mut worst, mut bad) = (0, 0, 0, 0.0f64, Vec::new());
    // the shipped scenarios first, then random markets until ten have converged
    while solved < 10 + scenarios::SCENARIO_IDS.len() && attempts < 200 {
        let config: MarketConfig = library.next().unwrap_or_else(|| random_market(&mut rng, shape));
        attempts += 1;
        let eq = solve(&config, &settings, 0).unwrap();
        if !eq.converged || eq.outcome.saturated {
            continue;
        }
        solved += 1;
        for i in 0..config.num_intermediaries() {
            for m in 0..config.num_segments() {
                let r = concession_foc_residual(&config, &eq.profile, i, m).unwrap();
                if r.corner {
                    continue;
                }
                cells += 1;
                worst = worst.max(r.relative);
                if !(r.relative <= 1e-5) {
                    bad.push(format!("instance {attempts} cell ({i},{m}): {:.3e}", r.relative));
                }
            }
        }
    }
    let pass = bad.is_empty() && solved >= 10;
    report(
        "FOC",
        pass,
        format!("{solved} converged instances, {cells} interior cells, worst {worst:.2e}"),
    );
    assert!(pass, "{bad:?}");
}

fn claim_lines(run: &LibraryRun) -> impl Iterator<Item = &segmarket_core::statics::ClaimCheck> {
    run.experiments
        .iter()
        .flat_map(|r| r.all_claims())
        .chain(run.coexistence.iter().flat_map(|c| c.rows.iter().flat_map(|r| r.claims.iter())))
}

#[test]
fn comparative_statics_suite() {
    let start = Instant::now();
    let settings = SolverSettings::default();
    let run = run_library(&settings).unwrap();
    let [holds, fails, na, info] = run.tally();
    let mut problems: Vec<String> = Vec::new();
    for c in claim_lines(&run) {
        let satisfied = c.conditions.iter().all(|k| k.value);
        match c.verdict {
            ClaimVerdict::Fails => problems.push(format!("{} fails", c.id)),
            ClaimVerdict::Holds if !satisfied => problems.push(format!("{} asserted with a false condition", c.id)),
            _ => {}
        }
    }

    // strategies-fixed consolidation on random markets with several platforms
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut instances, mut clean) = (0, 0);
    const UNCONDITIONAL: [&str; 5] = [
        "fixed_response_up",
        "fixed_attractiveness_up",
        "fixed_coverage_up",
        "fixed_local_searchers_up",
        "fixed_global_searchers_up",
    ];
    while instances < 200 {
        let config = random_market(&mut rng, SMALL);
        if config.platforms.len() < 2 {
            continue;
        }
        let i = rng.random_range(0..config.num_intermediaries());
        let others: Vec<usize> = (0..config.num_intermediaries())
            .filter(|&k| config.platforms.platform_of(k) != config.platforms.platform_of(i))
            .collect();
        let k = others[rng.random_range(0..others.len())];
        let members = vec![i.min(k), i.max(k)];
        let merged = merged_config(&config, &members).unwrap();
        let profile: StrategyProfile = random_profile(&mut rng, &config);
        let phase = consolidation_fixed_phase(&config, &merged, &profile, &members).unwrap();
        instances += 1;
        let ok = phase
            .claims
            .iter()
            .filter(|c| UNCONDITIONAL.contains(&c.id.as_str()))
            .all(|c| c.verdict == ClaimVerdict::Holds);
        if ok {
            clean += 1;
        } else {
            problems.push(format!("fixed-strategy consolidation instance {instances}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = problems.is_empty() && clean == instances && within(elapsed, 300);
    report(
        "comparative statics",
        pass,
        format!(
            "library {holds} hold / {fails} fail / {na} n/a / {info} info; fixed-strategy consolidation {clean}/{instances}; {elapsed:.2?}"
        ),
    );
    assert!(pass, "{problems:?}");
}

#[test]
fn null_shock_idempotence() {
    let run = run_null_library(&SolverSettings::default()).unwrap();
    let mismatched: Vec<String> = run
        .experiments
        .iter()
        .filter(|r| {
            r.pre.profile != r.post.profile
                || serde_json::to_string(&r.pre).unwrap() != serde_json::to_string(&r.post).unwrap()
        })
        .map(|r| format!("{} {}", r.scenario, r.shock))
        .collect();
    let pass = mismatched.is_empty() && !run.experiments.is_empty();
    report(
        "null-shock idempotence",
        pass,
        format!("{} zero-shock experiments, {} differ", run.experiments.len(), mismatched.len()),
    );
    assert!(pass, "{mismatched:?}");
}

#[test]
fn spatial_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..20 {
        let stores: Vec<Store> = (0..rng.random_range(0..600))
            .map(|_| Store {
                x: rng.random_range(-3000.0..3000.0),
                y: rng.random_range(-3000.0..3000.0),
                brand: if rng.random_bool(0.3) { Brand::Focal } else { Brand::Other },
                open_year: rng.random_range(2010..2023),
                listed: rng.random_bool(0.5),
            })
            .collect();
        let map = StoreMap::new(stores.clone(), vec![]).unwrap();
        for _ in 0..100 {
            let (qx, qy) = (rng.random_range(-3200.0..3200.0), rng.random_range(-3200.0..3200.0));
            let f = StoreFilter::brand(Brand::Focal).open_by(2018);
            let brute = stores
                .iter()
                .filter(|s| s.brand == Brand::Focal && s.open_year <= 2018)
                .filter(|s| (s.x - qx).powi(2) + (s.y - qy).powi(2) <= STORE_RADIUS * STORE_RADIUS)
                .count();
            if map.radius_count(qx, qy, STORE_RADIUS, f).unwrap() != brute {
                mismatches += 1;
            }
        }
    }
    // two stores exactly on the circle (246^2 + 328^2 = 410^2) and one just outside
    let edge = |x: f64, y: f64| Store {
        x,
        y,
        brand: Brand::Focal,
        open_year: 2016,
        listed: false,
    };
    let boundary = StoreMap::new(vec![edge(410.0, 0.0), edge(-246.0, 328.0), edge(410.0 + 1e-9, 0.0)], vec![]).unwrap();
    let on_circle = boundary.radius_count(0.0, 0.0, 410.0, StoreFilter::default()).unwrap();
    let pass = mismatches == 0 && on_circle == 2;
    report(
        "spatial oracle",
        pass,
        format!("20 maps x 100 queries, {mismatches} mismatches; {on_circle}/2 boundary stores counted"),
    );
    assert!(pass);
}

/// The injected truths each confidence interval is scored against.
const LISTED_TRUTHS: [(EventFamily, Outcome, &str); 14] = [
    (EventFamily::Entry, Outcome::LogNumber, "entry"),
    (EventFamily::Entry, Outcome::LogNumber, "post1"),
    (EventFamily::Entry, Outcome::LogNumber, "post2"),
    (EventFamily::Entry, Outcome::LogNumber, "post3"),
    (EventFamily::Entry, Outcome::PriceConcession, "entry"),
    (EventFamily::Entry, Outcome::PriceConcession, "post1"),
    (EventFamily::Entry, Outcome::PriceConcession, "post2"),
    (EventFamily::Entry, Outcome::PriceConcession, "post3"),
    (EventFamily::Consolidation, Outcome::LogNumber, "post1_treatment"),
    (EventFamily::Consolidation, Outcome::LogNumber, "post2_treatment"),
    (EventFamily::Consolidation, Outcome::LogNumber, "post3_treatment"),
    (EventFamily::Consolidation, Outcome::PriceConcession, "post1_treatment"),
    (EventFamily::Consolidation, Outcome::PriceConcession, "post2_treatment"),
    (EventFamily::Consolidation, Outcome::PriceConcession, "post3_treatment"),
];

#[test]
fn calibrated_did_recovery() {
    let start = Instant::now();
    let entry = DgpSpec::entry_calibrated();
    assert_eq!(entry.geography.business_areas * entry.geography.neighborhoods_per_area, 2000);
    assert_eq!(entry.num_years(), 7);
    let mut rows = coverage_study(&entry, EventFamily::Entry, 200, 2024, 0.95).unwrap();
    rows.extend(coverage_study(&DgpSpec::consolidation_calibrated(), EventFamily::Consolidation, 200, 2024, 0.95).unwrap());
    let elapsed = start.elapsed();
    let mut outside = Vec::new();
    let mut lo: f64 = 1.0;
    let mut hi: f64 = 0.0;
    for (family, outcome, term) in LISTED_TRUTHS {
        let row = rows
            .iter()
            .find(|r| r.family == family && r.outcome == outcome && r.term == term)
            .unwrap_or_else(|| panic!("no coverage row for {family:?} {outcome:?} {term}"));
        let rate = row.rate();
        lo = lo.min(rate);
        hi = hi.max(rate);
        if !(0.93..=0.97).contains(&rate) {
            outside.push(format!("{}/{}/{term} {rate:.3}", family.as_str(), outcome.as_str()));
        }
    }
    let pass = outside.is_empty() && within(elapsed, 300);
    report(
        "calibrated DID recovery",
        pass,
        format!(
            "14 truths, 200 reps, seed 2024: coverage {lo:.3}..{hi:.3}, outside [0.93, 0.97]: {outside:?}; {elapsed:.2?}"
        ),
    );
    assert!(pass, "{outside:?}");
}

#[test]
fn placebo_size() {
    let panel = generate_panel(&DgpSpec::default(), 2024).unwrap().panel;
    let mut lines = Vec::new();
    let mut pass = true;
    for family in [EventFamily::Entry, EventFamily::Consolidation] {
        let r = placebo_test(&panel, family, 500, 2024).unwrap();
        for o in &r.outcomes {
            let ok = (0.07..=0.13).contains(&o.reject_10) && (0.03..=0.08).contains(&o.reject_05);
            pass &= ok;
            lines.push(format!(
                "{}/{} {:.3}/{:.3}",
                family.as_str(),
                o.outcome.as_str(),
                o.reject_10,
                o.reject_05
            ));
        }
    }
    report("placebo size", pass, format!("500 reps, rejection at 10%/5%: {}", lines.join(", ")));
    assert!(pass);
}

#[test]
fn fixed_effects_equivalence() {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let p = small_panel(seed);
        let fast = fe_regress(&p.problem).unwrap();
        let oracle = dummy_variable_ls(&p.problem.y, &p.problem.regressors, &[p.unit_ids.clone(), p.cell_ids.clone()]);
        for (k, (name, _)) in p.problem.regressors.iter().enumerate() {
            worst = worst.max((fast.term(name).unwrap().estimate - oracle[k]).abs());
        }
    }
    let pass = worst <= 1e-8;
    report("FE equivalence", pass, format!("10 panels, largest difference {worst:.2e}"));
    assert!(pass);
}

fn csv<F: FnOnce(&mut Vec<u8>) -> segmarket_core::Result<()>>(name: &str, f: F) -> (String, Vec<u8>) {
    let mut buf = Vec::new();
    f(&mut buf).unwrap();
    (name.to_string(), buf)
}

/// Every CSV the tool chain produces, from one seed.
fn suite_outputs(seed: u64) -> Vec<(String, Vec<u8>)> {
    let settings = SolverSettings::default();
    let mut out = Vec::new();
    for (id, config) in scenarios::library() {
        let eq = solve(&config, &settings, seed).unwrap();
        out.push(csv(&format!("{id}/equilibrium.csv"), |w| write_equilibrium_csv(w, &eq)));
        out.push(csv(&format!("{id}/welfare.csv"), |w| write_welfare_csv(w, &config, &eq)));
    }
    let run = run_library(&settings).unwrap();
    out.push(csv("experiments.csv", |w| write_experiment_csv(w, &run.experiments)));
    out.push(csv("coexistence.csv", |w| write_coexistence_csv(w, &run.coexistence)));

    let mut spec = DgpSpec::entry_calibrated();
    spec.geography.business_areas = 20;
    let panel = generate_panel(&spec, seed).unwrap().panel;
    out.push(csv("panel.csv", |w| panel.write_csv(w)));
    for family in [EventFamily::Entry, EventFamily::Consolidation] {
        for outcome in Outcome::ALL {
            let fit = did_estimate(&panel, family, outcome).unwrap();
            out.push(csv(&format!("event_{}_{}.csv", family.as_str(), outcome.as_str()), |w| {
                write_regression_csv(w, &fit.event_study)
            }));
        }
    }
    let placebo = placebo_test(&panel, EventFamily::Entry, 40, seed).unwrap();
    out.push(csv("placebo.csv", |w| write_placebo_csv(w, &[placebo])));
    let coverage = coverage_study(&spec, EventFamily::Entry, 10, seed, 0.95).unwrap();
    out.push(csv("coverage.csv", |w| write_coverage_csv(w, &coverage)));
    out
}

#[test]
fn determinism() {
    let a = suite_outputs(2024);
    let b = suite_outputs(2024);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let pass = a.len() == b.len() && differing.is_empty();
    report(
        "determinism",
        pass,
        format!("{} CSV files from two runs, {} differ", a.len(), differing.len()),
    );
    assert!(pass, "{differing:?}");
}
