use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::best_response::{best_response, branch_vectors};
use super::SolverSettings;
use crate::error::{Error, Result};
use crate::market::{MarketConfig, StrategyProfile};
use crate::outcome::{evaluate_unchecked, MarketOutcome, ProfitKernel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    pub outcome: MarketOutcome,
    /// Strategies settled and no unilateral deviation gains more than `gain_threshold`.
    pub converged: bool,
    pub sweeps_used: usize,
    pub cycle_detected: bool,
    /// Largest relative unilateral gain, `(pi_br - pi) / max(1, |pi|)`, over intermediaries.
    pub max_unilateral_gain: f64,
    pub gain_threshold: f64,
    /// Additional starts reached a different profile.
    pub multiplicity: bool,
}

/// Largest relative profit gain any intermediary can obtain by a unilateral
/// best response.
pub fn max_unilateral_gain(config: &MarketConfig, profile: &StrategyProfile, settings: &SolverSettings) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..config.num_intermediaries() {
        let pi = ProfitKernel::new(config, profile, i).profit(&profile.concessions[i]);
        let br = best_response(config, profile, i, settings)?;
        worst = worst.max((br.profit - pi) / pi.abs().max(1.0));
    }
    Ok(worst)
}

fn strategy_distance(config: &MarketConfig, a: &StrategyProfile, b: &StrategyProfile) -> f64 {
    let mut d = 0.0f64;
    for (i, firm) in config.intermediaries.iter().enumerate() {
        for m in 0..config.num_segments() {
            let dn = f64::from(a.branches[i][m].abs_diff(b.branches[i][m])) / f64::from(firm.branch_cap[m].max(1));
            let cap = firm.concession_cap[m];
            let dc = if cap > 0.0 {
                (a.concessions[i][m] - b.concessions[i][m]).abs() / cap
            } else {
                0.0
            };
            d = d.max(dn).max(dc);
        }
    }
    d
}

/// Index of the oldest remembered profile that the current one returns to.
///
/// Line-search rounding keeps a cycle from repeating bit for bit, so a
/// profile two or more sweeps back counts as revisited when it is within
/// `sqrt(tol)` and a thousand times closer than the last sweep moved. A
/// converging sequence never qualifies: its lag-two distance is comparable to
/// its step.
fn revisit(
    config: &MarketConfig,
    history: &VecDeque<StrategyProfile>,
    current: &StrategyProfile,
    step: f64,
    tol: f64,
) -> Option<usize> {
    let limit = tol.sqrt().min(1e-3 * step);
    let older = history.len().saturating_sub(1);
    (0..older).find(|&k| {
        history[k].branches == current.branches && strategy_distance(config, &history[k], current) <= limit
    })
}

/// Gauss-Seidel best-response iteration from `initial`.
///
/// Intermediaries move in index order within a sweep. Iteration stops when the
/// strategy sup-norm between sweeps drops below the tolerance, when the sweep
/// cap is reached, or when a recently seen profile recurs. After a cycle the
/// profile on the cycle with the smallest unilateral gain is returned.
pub fn iterated_best_response(
    config: &MarketConfig,
    initial: &StrategyProfile,
    settings: &SolverSettings,
) -> Result<EquilibriumResult> {
    settings.validate()?;
    initial.check_feasible(config)?;
    let mut profile = initial.clone();
    let mut history: VecDeque<StrategyProfile> = VecDeque::with_capacity(settings.cycle_memory + 1);
    let mut settled = false;
    let mut cycle = false;
    let mut sweeps = 0;
    while sweeps < settings.max_sweeps {
        sweeps += 1;
        let before = profile.clone();
        for i in 0..config.num_intermediaries() {
            let br = best_response(config, &profile, i, settings)?;
            profile.branches[i] = br.branches;
            profile.concessions[i] = br.concessions;
        }
        let step = strategy_distance(config, &before, &profile);
        if step < settings.strategy_tolerance {
            settled = true;
            break;
        }
        if let Some(start) = revisit(config, &history, &profile, step, settings.strategy_tolerance) {
            cycle = true;
            history.drain(..start);
            break;
        }
        history.push_back(profile.clone());
        if history.len() > settings.cycle_memory {
            history.pop_front();
        }
    }

    let mut gain = max_unilateral_gain(config, &profile, settings)?;
    if cycle {
        for candidate in &history {
            let g = max_unilateral_gain(config, candidate, settings)?;
            if g < gain {
                gain = g;
                profile = candidate.clone();
            }
        }
    }
    Ok(EquilibriumResult {
        outcome: evaluate_unchecked(config, &profile),
        converged: settled && gain <= settings.report_epsilon,
        profile,
        sweeps_used: sweeps,
        cycle_detected: cycle,
        max_unilateral_gain: gain,
        gain_threshold: settings.report_epsilon,
        multiplicity: false,
    })
}

/// Solves from the default initial profile, then from `settings.multistart`
/// starts with concessions drawn uniformly under their caps. The first solve is
/// returned; `multiplicity` is set when any other start settles elsewhere.
pub fn solve(config: &MarketConfig, settings: &SolverSettings, seed: u64) -> Result<EquilibriumResult> {
    config.validate()?;
    let initial = StrategyProfile::initial(config);
    let mut primary = iterated_best_response(config, &initial, settings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..settings.multistart {
        let mut start = initial.clone();
        for (i, firm) in config.intermediaries.iter().enumerate() {
            for (m, &cap) in firm.concession_cap.iter().enumerate() {
                start.concessions[i][m] = if cap > 0.0 { rng.random_range(0.0..=cap) } else { 0.0 };
            }
        }
        let other = iterated_best_response(config, &start, settings)?;
        if other.converged && strategy_distance(config, &other.profile, &primary.profile) > 1e3 * settings.strategy_tolerance
        {
            primary.multiplicity = true;
        }
    }
    Ok(primary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashVerdict {
    pub holds: bool,
    /// Largest absolute profit improvement found over all intermediaries.
    pub worst_gain: f64,
    pub worst_firm: usize,
    pub deviations_checked: u64,
}

/// Brute-force check of the Nash property on a concession grid.
///
/// For every intermediary all branch vectors and all concession vectors on the
/// grid `{0, step, 2 step, ..., cap}` (with `step = grid_fraction * cap`) are
/// tried; inactive segments carry a zero concession. The verdict holds when no
/// deviation improves profit by more than `epsilon * max(1, |pi_i|)`.
pub fn epsilon_nash_verify(
    config: &MarketConfig,
    profile: &StrategyProfile,
    epsilon: f64,
    grid_fraction: f64,
    budget: u64,
) -> Result<NashVerdict> {
    profile.check_feasible(config)?;
    if !(grid_fraction > 0.0 && grid_fraction <= 1.0) {
        return Err(Error::domain("grid fraction must lie in (0, 1]"));
    }
    let steps = (1.0 / grid_fraction).round().max(1.0) as u64;
    let mut verdict = NashVerdict {
        holds: true,
        worst_gain: f64::NEG_INFINITY,
        worst_firm: 0,
        deviations_checked: 0,
    };
    for (i, firm) in config.intermediaries.iter().enumerate() {
        let vectors = branch_vectors(&firm.branch_cap, budget, "oracle branch vectors")?;
        let mut required: u128 = 0;
        for n in &vectors {
            let active = n.iter().filter(|&&k| k > 0).count() as u32;
            required += u128::from(steps + 1).pow(active);
        }
        if required > u128::from(budget) {
            return Err(Error::Budget {
                what: "oracle deviations",
                required,
                budget: u128::from(budget),
            });
        }
        let base = ProfitKernel::new(config, profile, i).profit(&profile.concessions[i]);
        let best = vectors
            .par_iter()
            .map(|n| {
                let mut work = profile.clone();
                work.branches[i] = n.clone();
                let kernel = ProfitKernel::new(config, &work, i);
                let active: Vec<usize> = (0..n.len()).filter(|&m| n[m] > 0).collect();
                work.concessions[i] = vec![0.0; n.len()];
                let mut idx = vec![0u64; active.len()];
                let mut best = f64::NEG_INFINITY;
                loop {
                    for (slot, &m) in active.iter().enumerate() {
                        let cap = firm.concession_cap[m];
                        work.concessions[i][m] = if idx[slot] == steps {
                            cap
                        } else {
                            cap * idx[slot] as f64 / steps as f64
                        };
                    }
                    best = best.max(kernel.profit(&work.concessions[i]));
                    let mut pos = active.len();
                    loop {
                        if pos == 0 {
                            return best;
                        }
                        pos -= 1;
                        if idx[pos] < steps {
                            idx[pos] += 1;
                            break;
                        }
                        idx[pos] = 0;
                    }
                }
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
        let gain = best - base;
        if gain > verdict.worst_gain {
            verdict.worst_gain = gain;
            verdict.worst_firm = i;
        }
        if gain > epsilon * base.abs().max(1.0) {
            verdict.holds = false;
        }
        verdict.deviations_checked += required as u64;
    }
    Ok(verdict)
}
