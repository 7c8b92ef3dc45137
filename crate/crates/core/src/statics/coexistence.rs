use rayon::prelude::*;
use serde::Serialize;

use super::report::{require, ClaimCheck, Condition};
use crate::error::{Error, Result};
use crate::market::{MarketConfig, StrategyProfile};
use crate::solver::{check_dominance, iterated_best_response, EquilibriumResult, FirmRole, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoexistenceRow {
    /// Leader efficiency over everyone else's.
    pub efficiency_ratio: f64,
    /// Fraction by which the leader's costs are cut.
    pub cost_gap: f64,
    pub total_branches: Vec<u32>,
    pub profits: Vec<f64>,
    pub dominance_holds: bool,
    pub equilibrium: EquilibriumResult,
    pub claims: Vec<ClaimCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoexistenceReport {
    pub scenario: String,
    pub leader: usize,
    /// Everyone at the leader's efficiency and original costs.
    pub baseline: EquilibriumResult,
    pub rows: Vec<CoexistenceRow>,
}

/// Solves a grid of efficiency ratios and leader cost cuts.
///
/// The most efficient intermediary (lowest index on ties) is the leader. The
/// baseline gives every intermediary the leader's efficiency. Each grid point
/// scales the leader's efficiency by `ratio` and its entry, branch and convex
/// costs by `1 - gap`, then records:
///
/// * `leader_larger`: under the dominance condition relative to the
///   baseline, the leader has weakly more branches and weakly more profit than
///   every other intermediary;
/// * `no_monopolization`: with convex global costs for the leader and more
///   than one segment to leave to others, some other intermediary keeps a
///   branch somewhere.
///
/// At the grid point identical to the baseline nobody leads, so the first
/// claim is not applicable there.
pub fn coexistence_scan(
    scenario: &str,
    config: &MarketConfig,
    ratios: &[f64],
    gaps: &[f64],
    settings: &SolverSettings,
) -> Result<CoexistenceReport> {
    config.validate()?;
    let n = config.num_intermediaries();
    if n < 2 {
        return Err(Error::domain("coexistence needs at least two intermediaries"));
    }
    if ratios.iter().any(|&r| !(r >= 1.0 && r.is_finite())) {
        return Err(Error::domain("efficiency ratios must be >= 1"));
    }
    if gaps.iter().any(|&g| !(0.0..1.0).contains(&g)) {
        return Err(Error::domain("cost gaps must lie in [0, 1)"));
    }
    let mut leader = 0;
    for i in 1..n {
        if config.intermediaries[i].efficiency > config.intermediaries[leader].efficiency {
            leader = i;
        }
    }
    let base_alpha = config.intermediaries[leader].efficiency;
    let mut baseline_config = config.clone();
    for firm in &mut baseline_config.intermediaries {
        firm.efficiency = base_alpha;
    }
    let initial = StrategyProfile::initial(config);
    let baseline = iterated_best_response(&baseline_config, &initial, settings)?;

    let grid: Vec<(f64, f64)> = ratios.iter().flat_map(|&r| gaps.iter().map(move |&g| (r, g))).collect();
    let rows = grid
        .par_iter()
        .map(|&(ratio, gap)| {
            let mut point = baseline_config.clone();
            let lead = &mut point.intermediaries[leader];
            lead.efficiency = base_alpha * ratio;
            lead.entry_cost.iter_mut().for_each(|c| *c *= 1.0 - gap);
            lead.branch_cost *= 1.0 - gap;
            lead.global_convexity *= 1.0 - gap;
            let convex = lead.global_convexity > 0.0;
            let eq = iterated_best_response(&point, &initial, settings)?;
            let roles: Vec<FirmRole> = (0..n)
                .map(|i| if i == leader { FirmRole::Expanding } else { FirmRole::Rival })
                .collect();
            let dominance = check_dominance(&point, &baseline.profile, &eq.profile, &roles)?;
            let totals: Vec<u32> = eq.profile.branches.iter().map(|r| r.iter().sum()).collect();
            let profits = eq.outcome.profits.clone();
            // identical intermediaries have no leader to speak of
            let heterogeneous = !(ratio == 1.0 && gap == 0.0);
            let converged = baseline.converged && eq.converged;
            let mut larger = ClaimCheck::directional(
                "leader_larger",
                "the leader has weakly more branches and profit than any other intermediary",
                vec![
                    Condition::new("heterogeneous", heterogeneous),
                    Condition::new("dominance", dominance.overall),
                ],
                (0..n).filter(|&k| k != leader).flat_map(|k| {
                    [
                        f64::from(totals[leader]) - f64::from(totals[k]),
                        (profits[leader] - profits[k]) / profits[k].abs().max(1.0),
                    ]
                }),
            );
            let others_active = (0..n).any(|k| k != leader && totals[k] > 0);
            let mut coexist = ClaimCheck::directional(
                "no_monopolization",
                "some other intermediary keeps a branch",
                vec![
                    Condition::new("convex_costs", convex),
                    Condition::new("several_segments", point.num_segments() >= 2),
                ],
                [if others_active { 0.0 } else { -1.0 }],
            );
            require(std::slice::from_mut(&mut larger), "converged", converged);
            require(std::slice::from_mut(&mut coexist), "converged", eq.converged);
            Ok(CoexistenceRow {
                efficiency_ratio: ratio,
                cost_gap: gap,
                total_branches: totals,
                profits,
                dominance_holds: dominance.overall,
                equilibrium: eq,
                claims: vec![larger, coexist],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoexistenceReport {
        scenario: scenario.to_string(),
        leader,
        baseline,
        rows,
    })
}
