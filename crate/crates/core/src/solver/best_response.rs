use rayon::prelude::*;
use serde::Serialize;

use super::golden::maximize_bounded;
use super::SolverSettings;
use crate::error::{Error, Result};
use crate::market::{MarketConfig, StrategyProfile};
use crate::outcome::ProfitKernel;

/// One intermediary's optimal reply to the rest of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub branches: Vec<u32>,
    pub concessions: Vec<f64>,
    pub profit: f64,
    /// The incumbent strategy was kept because the search fell short of it.
    pub kept_incumbent: bool,
}

/// All branch vectors `0..=cap` in order of total branches, then lexicographic.
pub(crate) fn branch_vectors(caps: &[u32], budget: u64, what: &'static str) -> Result<Vec<Vec<u32>>> {
    let required: u128 = caps.iter().map(|&c| u128::from(c) + 1).product();
    if required > u128::from(budget) {
        return Err(Error::Budget {
            what,
            required,
            budget: u128::from(budget),
        });
    }
    let mut out = Vec::with_capacity(required as usize);
    let mut current = vec![0u32; caps.len()];
    loop {
        out.push(current.clone());
        // odometer increment, last position fastest
        let mut pos = caps.len();
        loop {
            if pos == 0 {
                out.sort_by(|a, b| {
                    let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
                    sa.cmp(&sb).then_with(|| a.cmp(b))
                });
                return Ok(out);
            }
            pos -= 1;
            if current[pos] < caps[pos] {
                current[pos] += 1;
                break;
            }
            current[pos] = 0;
        }
    }
}

pub(crate) fn improves(candidate: f64, best: f64) -> bool {
    candidate > best + 1e-12 * best.abs().max(1.0)
}

/// Optimises the concessions of `firm` for a fixed branch vector, starting from
/// the concessions already in `work`. Returns the profit reached.
pub(crate) fn optimize_concessions(
    config: &MarketConfig,
    work: &mut StrategyProfile,
    firm: usize,
    settings: &SolverSettings,
) -> f64 {
    let caps = config.intermediaries[firm].concession_cap.clone();
    let active: Vec<usize> = (0..caps.len())
        .filter(|&m| work.branches[firm][m] > 0 && caps[m] > 0.0)
        .collect();
    for m in 0..caps.len() {
        if work.branches[firm][m] == 0 {
            work.concessions[firm][m] = 0.0;
        }
    }
    let kernel = ProfitKernel::new(config, work, firm);
    let mut c = work.concessions[firm].clone();
    let mut current = kernel.profit(&c);
    if active.is_empty() {
        return current;
    }
    for _ in 0..settings.coordinate_rounds {
        let mut moved = 0.0f64;
        for &m in &active {
            let before = c[m];
            let (x, fx) = {
                let mut trial = c.clone();
                maximize_bounded(
                    |v| {
                        trial[m] = v;
                        kernel.profit(&trial)
                    },
                    0.0,
                    caps[m],
                    settings.line_search_tolerance,
                    settings.line_search_scan,
                )
            };
            // Values within rounding of each other cannot rank two nearby
            // points; the polished line-search argmax is trusted there.
            let slack = 8.0 * f64::EPSILON * current.abs().max(1.0);
            if fx > current || (fx >= current - slack && x != before) {
                c[m] = x;
                current = fx;
                moved = moved.max((x - before).abs() / caps[m]);
            }
        }
        if active.len() == 1 || moved < settings.strategy_tolerance {
            break;
        }
    }
    work.concessions[firm] = c;
    current
}

/// Best response of `firm` holding every other row of `profile` fixed.
///
/// Every branch vector up to the caps is enumerated (under the enumeration
/// budget) and its concessions optimised by coordinate ascent. Among equally
/// profitable candidates the one with fewer total branches wins, then the
/// lexicographically smaller branch vector; line searches resolve flat
/// stretches toward lower concessions. The incumbent strategy is returned
/// unchanged only when the search result is less profitable.
pub fn best_response(
    config: &MarketConfig,
    profile: &StrategyProfile,
    firm: usize,
    settings: &SolverSettings,
) -> Result<BestResponse> {
    if firm >= config.num_intermediaries() {
        return Err(Error::domain(format!("no intermediary {firm}")));
    }
    profile.check_feasible(config)?;
    let caps = &config.intermediaries[firm].branch_cap;
    let candidates = branch_vectors(caps, settings.enumeration_budget, "best-response branch vectors")?;

    let solved: Vec<(Vec<f64>, f64)> = candidates
        .par_iter()
        .map(|n| {
            let mut work = profile.clone();
            work.branches[firm] = n.clone();
            let pi = optimize_concessions(config, &mut work, firm, settings);
            (work.concessions.swap_remove(firm), pi)
        })
        .collect();

    let mut best = 0;
    for k in 1..solved.len() {
        if improves(solved[k].1, solved[best].1) {
            best = k;
        }
    }
    let incumbent = ProfitKernel::new(config, profile, firm).profit(&profile.concessions[firm]);
    let (concessions, pi) = solved.into_iter().nth(best).expect("at least the zero vector");
    // A plain comparison: a relative threshold here would pin concessions to
    // the incumbent anywhere the profit curve is flatter than the threshold.
    if pi >= incumbent {
        Ok(BestResponse {
            branches: candidates[best].clone(),
            concessions,
            profit: pi,
            kept_incumbent: false,
        })
    } else {
        Ok(BestResponse {
            branches: profile.branches[firm].clone(),
            concessions: profile.concessions[firm].clone(),
            profit: incumbent,
            kept_incumbent: true,
        })
    }
}
