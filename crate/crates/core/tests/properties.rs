mod common;

use common::{monotonicity_violations, random_market, random_profile, welfare_identity_gap, PERTURBATIONS, SMALL, TINY};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segmarket_core::economics::{per_transaction_price, profit, welfare_decompose};
use segmarket_core::market::{concession_response, hhi, platform_coverage, ConcessionForm, Segment, TransactionTech};
use segmarket_core::matching::{allocate_searchers, transaction_probability};
use segmarket_core::outcome::firm_profit;
use segmarket_core::solver::{best_response, epsilon_nash_verify, solve, SolverSettings};
use segmarket_core::evaluate;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn presence_attractiveness_and_share_never_fall(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, SMALL);
        let profile = random_profile(&mut r, &config);
        for kind in PERTURBATIONS {
            let v = monotonicity_violations(&mut r, &config, &profile, kind);
            prop_assert!(v.is_empty(), "{v:?}");
        }
    }

    #[test]
    fn shares_exhaust_listings_when_anyone_is_attractive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, SMALL);
        let profile = random_profile(&mut r, &config);
        let out = evaluate(&config, &profile).unwrap();
        for (m, seg) in config.segments.iter().enumerate() {
            let total: f64 = out.shares.iter().map(|row| row[m]).sum();
            let active = (0..config.num_intermediaries())
                .any(|i| profile.branches[i][m] > 0 && out.attractiveness[i][m] > 0.0);
            if active {
                prop_assert!(close(total, seg.listings, 1e-12), "{total} vs {}", seg.listings);
            } else {
                prop_assert_eq!(total, 0.0);
            }
        }
    }

    #[test]
    fn concession_response_is_concave(
        c1 in 0.0f64..100.0,
        step in 1e-3f64..50.0,
        size in 1usize..6,
        offset in 0.1f64..3.0,
        exponent in 0.05f64..0.95,
        gain in 0.01f64..1.0,
    ) {
        let form = ConcessionForm { offset, exponent, platform_gain: gain };
        let psi = |c: f64| concession_response(c, size, &form).unwrap();
        let (a, b, c) = (psi(c1), psi(c1 + step), psi(c1 + 2.0 * step));
        prop_assert!(b >= 0.5 * (a + c) - 1e-12 * b, "{a} {b} {c}");
        prop_assert!(b > a);
        prop_assert!(concession_response(c1, size + 1, &form).unwrap() > a);
    }

    #[test]
    fn hhi_lies_between_equal_split_and_monopoly(raw in prop::collection::vec(1e-3f64..10.0, 1..20)) {
        let total: f64 = raw.iter().sum();
        let pct: Vec<f64> = raw.iter().map(|s| 100.0 * s / total).collect();
        let sum: f64 = pct.iter().sum();
        // renormalize away the last rounding step so the input sums to 100
        let mut pct = pct;
        pct[0] += 100.0 - sum;
        let (h, _) = hhi(&pct).unwrap();
        let n = pct.len() as f64;
        prop_assert!(h >= 10000.0 / n - 1e-6 && h <= 10000.0 + 1e-6, "{h}");
    }

    #[test]
    fn searchers_are_conserved_and_split_within_platforms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, SMALL);
        let profile = random_profile(&mut r, &config);
        let out = evaluate(&config, &profile).unwrap();
        let alloc = allocate_searchers(&out.coverage, &config.segments);
        for (m, seg) in config.segments.iter().enumerate() {
            let local: f64 = alloc.local.iter().map(|row| row[m]).sum();
            let global: f64 = alloc.global.iter().map(|row| row[m]).sum();
            prop_assert!(local == 0.0 || close(local, seg.local_searchers, 1e-12));
            prop_assert!(global == 0.0 || close(global, seg.global_searchers, 1e-12));
            let covered = out.coverage.iter().any(|row| row[m] > 0.0);
            prop_assert_eq!(local > 0.0, covered && seg.local_searchers > 0.0);
        }
        // members' volumes add up to the platform's matches
        let tech_of = |m: usize| config.transaction_tech(m);
        for p in 0..config.platforms.len() {
            for m in 0..config.num_segments() {
                if out.coverage[p][m] <= 0.0 {
                    continue;
                }
                let x = alloc.local[p][m] + alloc.global[p][m];
                let matched = x * transaction_probability(x, tech_of(m)).unwrap().value;
                let members: f64 = config.platforms.members(p).iter().map(|&i| out.transactions[i][m]).sum();
                prop_assert!(close(members, matched, 1e-12), "{members} vs {matched}");
                let split: f64 = config.platforms.members(p).iter().map(|&i| out.shares[i][m]).sum::<f64>() / out.coverage[p][m];
                prop_assert!(close(split, 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn matches_are_convex_below_the_cap(
        scale in 1e-4f64..0.05,
        exponent in 1.0f64..2.0,
        top in 1e-3f64..=1.0,
        low in 0.0f64..1.0,
    ) {
        let tech = TransactionTech { scale, exponent, cap: 1.0 };
        let saturation = (tech.cap / scale).powf(1.0 / exponent);
        let (x3, x1) = (top * saturation * (1.0 - 1e-9), low * top * saturation);
        let ell = |x: f64| {
            let t = transaction_probability(x, &tech).unwrap();
            (x * t.value, t.saturated)
        };
        let (l1, _) = ell(x1);
        let (l2, _) = ell(0.5 * (x1 + x3));
        let (l3, sat) = ell(x3);
        prop_assert!(!sat);
        prop_assert!(l2 <= 0.5 * (l1 + l3) + 1e-12 * l3.max(1.0), "{l1} {l2} {l3}");
    }

    #[test]
    fn more_coverage_attracts_more_searchers(seed in any::<u64>(), extra in 1e-6f64..50.0) {
        let mut r = rng(seed);
        let config = random_market(&mut r, SMALL);
        let profile = random_profile(&mut r, &config);
        let out = evaluate(&config, &profile).unwrap();
        let p = r.random_range(0..config.platforms.len());
        let m = r.random_range(0..config.num_segments());
        let mut raised = out.coverage.clone();
        raised[p][m] += extra;
        let (a, b) = (allocate_searchers(&out.coverage, &config.segments), allocate_searchers(&raised, &config.segments));
        for s in 0..config.num_segments() {
            prop_assert!(b.local[p][s] >= a.local[p][s] * (1.0 - 1e-12));
            prop_assert!(b.global[p][s] >= a.global[p][s] * (1.0 - 1e-12));
        }
    }

    #[test]
    fn welfare_identity_holds_on_random_profiles(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, SMALL);
        let profile = random_profile(&mut r, &config);
        let out = evaluate(&config, &profile).unwrap();
        let gap = welfare_identity_gap(&config, &profile, &out);
        prop_assert!(gap <= 1e-10, "{gap}");
        prop_assert!(out.welfare.identity_gap() <= 1e-10);
        // platform coverage agrees with a direct partition sum
        let cov = platform_coverage(&out.shares, &config.platforms).unwrap();
        prop_assert_eq!(cov, out.coverage);
    }

    #[test]
    fn seller_surplus_falls_with_concession_and_commission(
        mu in 10.0f64..500.0,
        c_frac in 0.0f64..0.9,
        dc in 1e-6f64..1.0,
        beta in 0.001f64..0.5,
        db in 1e-6f64..0.1,
    ) {
        let seg = Segment::new(mu, 100.0, 10.0, 0.0);
        let c = c_frac * mu;
        let ss = |c: f64, beta: f64| welfare_decompose(std::slice::from_ref(&seg), beta, &[vec![1.0]], &[vec![c]], 0.0).seller_total;
        prop_assert!(ss(c + dc * mu * 0.05, beta) < ss(c, beta));
        prop_assert!(ss(c, beta + db) < ss(c, beta));
    }

    #[test]
    fn profit_falls_with_own_concession_at_fixed_volume(
        mu in 10.0f64..500.0,
        c_frac in 0.0f64..0.9,
        dc in 1e-6f64..1.0,
        q in 1e-3f64..100.0,
        beta in 0.001f64..0.5,
        cost in 0.0f64..50.0,
    ) {
        let c = c_frac * mu;
        let p0 = per_transaction_price(beta, mu, c).unwrap();
        let p1 = per_transaction_price(beta, mu, (c + dc).min(mu)).unwrap();
        prop_assert!(profit(&[p1], &[q], cost) < profit(&[p0], &[q], cost));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn best_response_is_never_worse_than_the_incumbent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, TINY);
        let profile = random_profile(&mut r, &config);
        let settings = SolverSettings::default();
        for i in 0..config.num_intermediaries() {
            let incumbent = firm_profit(&config, &profile, i);
            let br = best_response(&config, &profile, i, &settings).unwrap();
            prop_assert!(br.profit >= incumbent - 1e-12 * incumbent.abs().max(1.0), "{} < {incumbent}", br.profit);
            let mut moved = profile.clone();
            moved.branches[i] = br.branches.clone();
            moved.concessions[i] = br.concessions.clone();
            prop_assert!(close(firm_profit(&config, &moved, i), br.profit, 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solving_is_deterministic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, TINY);
        let settings = SolverSettings::default();
        let a = solve(&config, &settings, seed).unwrap();
        let b = solve(&config, &settings, seed).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn converged_equilibria_pass_the_grid_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let config = random_market(&mut r, TINY);
        let settings = SolverSettings::default();
        let eq = solve(&config, &settings, seed).unwrap();
        prop_assume!(eq.converged);
        let v = epsilon_nash_verify(&config, &eq.profile, 1e-4, 0.01, settings.oracle_budget).unwrap();
        prop_assert!(v.holds, "firm {} gains {}", v.worst_firm, v.worst_gain);
    }
}
