//! Full evaluation of a strategy profile.

use serde::Serialize;

use crate::economics::{firm_cost, welfare_decompose, WelfareReport};
use crate::error::Result;
use crate::market::{capture_shares, platform_size_term, psi_unchecked, MarketConfig, StrategyProfile};
use crate::matching::{allocate_searchers, transactions};

/// Everything the model determines for one strategy profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketOutcome {
    pub presence: Vec<Vec<f64>>,
    pub response: Vec<Vec<f64>>,
    pub attractiveness: Vec<Vec<f64>>,
    pub shares: Vec<Vec<f64>>,
    /// `Sigma_m(P)`, platforms by segments.
    pub coverage: Vec<Vec<f64>>,
    /// Local searchers reaching each intermediary's platform.
    pub local_allocation: Vec<Vec<f64>>,
    pub global_allocation: Vec<Vec<f64>>,
    pub transactions: Vec<Vec<f64>>,
    pub total_transactions: Vec<f64>,
    pub prices: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub profits: Vec<f64>,
    pub welfare: WelfareReport,
    /// The transaction technology hit its cap somewhere.
    pub saturated: bool,
}

/// Presence `f`, response `psi` and attractiveness `R` with explicit platform
/// sizes (one per intermediary).
pub fn attractiveness_matrices(
    config: &MarketConfig,
    profile: &StrategyProfile,
    platform_sizes: &[usize],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let form = &config.forms;
    let m_count = config.num_segments();
    let mut presence = Vec::with_capacity(profile.num_firms());
    let mut response = Vec::with_capacity(profile.num_firms());
    let mut attract = Vec::with_capacity(profile.num_firms());
    for (i, firm) in config.intermediaries.iter().enumerate() {
        let n = &profile.branches[i];
        let mut f_row = Vec::with_capacity(m_count);
        let mut psi_row = Vec::with_capacity(m_count);
        let mut r_row = Vec::with_capacity(m_count);
        for (m, seg) in config.segments.iter().enumerate() {
            let spill: f64 = seg
                .neighbors
                .iter()
                .map(|nb| nb.weight * form.presence.h(n[nb.segment]))
                .sum();
            let f = form.presence.h(n[m]) + config.spillover * spill;
            let psi = psi_unchecked(profile.concessions[i][m], platform_sizes[i], &form.concession);
            f_row.push(f);
            psi_row.push(psi);
            r_row.push(firm.efficiency * f * psi);
        }
        presence.push(f_row);
        response.push(psi_row);
        attract.push(r_row);
    }
    (presence, response, attract)
}

/// Listings shares `sigma` (N x M) from attractiveness.
pub fn share_matrix(config: &MarketConfig, profile: &StrategyProfile, attract: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n_count = profile.num_firms();
    let mut shares = vec![vec![0.0; config.num_segments()]; n_count];
    let mut r_col = vec![0.0; n_count];
    let mut n_col = vec![0u32; n_count];
    for (m, seg) in config.segments.iter().enumerate() {
        for i in 0..n_count {
            r_col[i] = attract[i][m];
            n_col[i] = profile.branches[i][m];
        }
        for (i, s) in capture_shares(&r_col, &n_col, seg.listings).into_iter().enumerate() {
            shares[i][m] = s;
        }
    }
    shares
}

fn platform_sizes(config: &MarketConfig) -> Vec<usize> {
    (0..config.num_intermediaries())
        .map(|i| config.platforms.size_of(i))
        .collect()
}

fn coverage_of(config: &MarketConfig, shares: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let platforms = &config.platforms;
    (0..platforms.len())
        .map(|p| {
            (0..config.num_segments())
                .map(|m| platforms.members(p).iter().map(|&i| shares[i][m]).sum())
                .collect()
        })
        .collect()
}

/// Evaluates a profile after checking feasibility.
pub fn evaluate(config: &MarketConfig, profile: &StrategyProfile) -> Result<MarketOutcome> {
    profile.check_feasible(config)?;
    Ok(evaluate_unchecked(config, profile))
}

pub(crate) fn evaluate_unchecked(config: &MarketConfig, profile: &StrategyProfile) -> MarketOutcome {
    let sizes = platform_sizes(config);
    let (presence, response, attract) = attractiveness_matrices(config, profile, &sizes);
    let shares = share_matrix(config, profile, &attract);
    let coverage = coverage_of(config, &shares);
    let alloc = allocate_searchers(&coverage, &config.segments);

    let n_count = config.num_intermediaries();
    let m_count = config.num_segments();
    let mut local_allocation = vec![vec![0.0; m_count]; n_count];
    let mut global_allocation = vec![vec![0.0; m_count]; n_count];
    let mut volumes = vec![vec![0.0; m_count]; n_count];
    let mut prices = vec![vec![0.0; m_count]; n_count];
    let mut saturated = false;
    for i in 0..n_count {
        let p = config.platforms.platform_of(i);
        for m in 0..m_count {
            local_allocation[i][m] = alloc.local[p][m];
            global_allocation[i][m] = alloc.global[p][m];
            let (q, sat) = transactions(
                alloc.local[p][m],
                alloc.global[p][m],
                shares[i][m],
                coverage[p][m],
                config.transaction_tech(m),
            );
            volumes[i][m] = q;
            saturated |= sat;
            prices[i][m] = config.commission * (config.segments[m].base_price - profile.concessions[i][m]);
        }
    }
    let costs: Vec<f64> = config
        .intermediaries
        .iter()
        .zip(&profile.branches)
        .map(|(firm, n)| firm_cost(n, firm))
        .collect();
    let profits = (0..n_count)
        .map(|i| {
            prices[i]
                .iter()
                .zip(&volumes[i])
                .map(|(p, q)| p * q)
                .sum::<f64>()
                - costs[i]
        })
        .collect();
    let total_cost = costs.iter().sum();
    let welfare = welfare_decompose(
        &config.segments,
        config.commission,
        &volumes,
        &profile.concessions,
        total_cost,
    );
    MarketOutcome {
        total_transactions: volumes.iter().map(|r| r.iter().sum()).collect(),
        presence,
        response,
        attractiveness: attract,
        shares,
        coverage,
        local_allocation,
        global_allocation,
        transactions: volumes,
        prices,
        costs,
        profits,
        welfare,
        saturated,
    }
}

/// Transaction volumes of one intermediary in every segment.
pub(crate) fn firm_volumes(config: &MarketConfig, profile: &StrategyProfile, firm: usize) -> Vec<f64> {
    let sizes = platform_sizes(config);
    let (_, _, attract) = attractiveness_matrices(config, profile, &sizes);
    let shares = share_matrix(config, profile, &attract);
    let platforms = &config.platforms;
    let own = platforms.platform_of(firm);
    let m_count = config.num_segments();

    // Coverage of the firm's platform and of the whole market in every segment.
    let mut own_cov = vec![0.0; m_count];
    let mut all_cov = vec![0.0; m_count];
    for (i, row) in shares.iter().enumerate() {
        let mine = platforms.platform_of(i) == own;
        for m in 0..m_count {
            all_cov[m] += row[m];
            if mine {
                own_cov[m] += row[m];
            }
        }
    }
    (0..m_count)
        .map(|m| {
            if shares[firm][m] <= 0.0 || own_cov[m] <= 0.0 {
                return 0.0;
            }
            let seg = &config.segments[m];
            let local = if all_cov[m] > 0.0 {
                seg.local_searchers * own_cov[m] / all_cov[m]
            } else {
                0.0
            };
            let own_reach = own_cov[m] + seg.neighbors.iter().map(|nb| own_cov[nb.segment]).sum::<f64>();
            let all_reach = all_cov[m] + seg.neighbors.iter().map(|nb| all_cov[nb.segment]).sum::<f64>();
            let global = if all_reach > 0.0 {
                seg.global_searchers * own_reach / all_reach
            } else {
                0.0
            };
            transactions(local, global, shares[firm][m], own_cov[m], config.transaction_tech(m)).0
        })
        .collect()
}

/// Profit of one intermediary; cheaper than a full [`evaluate`].
pub fn firm_profit(config: &MarketConfig, profile: &StrategyProfile, firm: usize) -> f64 {
    let volumes = firm_volumes(config, profile, firm);
    let revenue: f64 = volumes
        .iter()
        .enumerate()
        .map(|(m, q)| config.commission * (config.segments[m].base_price - profile.concessions[firm][m]) * q)
        .sum();
    revenue - firm_cost(&profile.branches[firm], &config.intermediaries[firm])
}

/// Profit of one intermediary as a function of its own concessions only, with
/// its branches and every rival strategy frozen.
///
/// Rival attractiveness is summed once per segment, split into the part on
/// the intermediary's own platform and the rest, so an evaluation costs
/// `O(M)` instead of a full market evaluation.
pub(crate) struct ProfitKernel<'a> {
    config: &'a MarketConfig,
    /// `alpha * f * (1 + kappa ln |P|)` per segment, zero where inactive.
    scale: Vec<f64>,
    same_platform: Vec<f64>,
    other_platforms: Vec<f64>,
    cost: f64,
}

impl<'a> ProfitKernel<'a> {
    pub(crate) fn new(config: &'a MarketConfig, profile: &StrategyProfile, firm: usize) -> Self {
        let form = &config.forms;
        let platforms = &config.platforms;
        let own = platforms.platform_of(firm);
        let m_count = config.num_segments();
        let presence = |k: usize, m: usize| {
            let n = &profile.branches[k];
            let seg = &config.segments[m];
            let spill: f64 = seg.neighbors.iter().map(|nb| nb.weight * form.presence.h(n[nb.segment])).sum();
            form.presence.h(n[m]) + config.spillover * spill
        };
        let mut same_platform = vec![0.0; m_count];
        let mut other_platforms = vec![0.0; m_count];
        for k in 0..config.num_intermediaries() {
            if k == firm {
                continue;
            }
            let target = if platforms.platform_of(k) == own {
                &mut same_platform
            } else {
                &mut other_platforms
            };
            let size = platforms.size_of(k);
            let alpha = config.intermediaries[k].efficiency;
            for (m, slot) in target.iter_mut().enumerate() {
                if profile.branches[k][m] > 0 {
                    *slot += alpha * presence(k, m) * psi_unchecked(profile.concessions[k][m], size, &form.concession);
                }
            }
        }
        let size_term = platform_size_term(platforms.size_of(firm), &form.concession);
        let alpha = config.intermediaries[firm].efficiency;
        let scale = (0..m_count)
            .map(|m| {
                if profile.branches[firm][m] > 0 {
                    alpha * presence(firm, m) * size_term
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            config,
            scale,
            same_platform,
            other_platforms,
            cost: firm_cost(&profile.branches[firm], &config.intermediaries[firm]),
        }
    }

    pub(crate) fn profit(&self, concessions: &[f64]) -> f64 {
        let config = self.config;
        let form = &config.forms.concession;
        let m_count = self.scale.len();
        let mut own_r = vec![0.0; m_count];
        let mut own_cov = vec![0.0; m_count];
        let mut all_cov = vec![0.0; m_count];
        for m in 0..m_count {
            if self.scale[m] > 0.0 {
                own_r[m] = self.scale[m] * (form.offset + concessions[m]).powf(form.exponent);
            }
            let total = own_r[m] + self.same_platform[m] + self.other_platforms[m];
            if total > 0.0 {
                let listings = config.segments[m].listings;
                own_cov[m] = listings * (own_r[m] + self.same_platform[m]) / total;
                all_cov[m] = listings;
            }
        }
        let mut revenue = 0.0;
        for (m, seg) in config.segments.iter().enumerate() {
            if own_r[m] <= 0.0 || own_cov[m] <= 0.0 {
                continue;
            }
            let total = own_r[m] + self.same_platform[m] + self.other_platforms[m];
            let share = seg.listings * own_r[m] / total;
            let local = seg.local_searchers * own_cov[m] / all_cov[m];
            let own_reach = own_cov[m] + seg.neighbors.iter().map(|nb| own_cov[nb.segment]).sum::<f64>();
            let all_reach = all_cov[m] + seg.neighbors.iter().map(|nb| all_cov[nb.segment]).sum::<f64>();
            let global = seg.global_searchers * own_reach / all_reach;
            let q = transactions(local, global, share, own_cov[m], config.transaction_tech(m)).0;
            revenue += config.commission * (seg.base_price - concessions[m]) * q;
        }
        revenue - self.cost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statics::scenarios;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_matches_full_profit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (_, config) in scenarios::library() {
            for _ in 0..50 {
                let mut profile = StrategyProfile::initial(&config);
                for (i, firm) in config.intermediaries.iter().enumerate() {
                    for m in 0..config.num_segments() {
                        profile.branches[i][m] = rng.random_range(0..=firm.branch_cap[m]);
                        profile.concessions[i][m] = rng.random_range(0.0..=firm.concession_cap[m]);
                    }
                }
                for i in 0..config.num_intermediaries() {
                    let kernel = ProfitKernel::new(&config, &profile, i);
                    let fast = kernel.profit(&profile.concessions[i]);
                    let full = firm_profit(&config, &profile, i);
                    assert!((fast - full).abs() <= 1e-10 * full.abs().max(1.0), "{fast} vs {full}");
                }
            }
        }
    }
}
