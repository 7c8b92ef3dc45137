//! Checks shared by the property tests and the acceptance run.

use rand::Rng;
use segmarket_core::market::{MarketConfig, StrategyProfile};
use segmarket_core::outcome::{attractiveness_matrices, share_matrix, MarketOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perturbation {
    /// One more branch for intermediary `i` in one segment; presence rises in
    /// that segment and in every segment that lists it as a neighbour.
    Branch,
    /// A higher concession in one segment.
    Concession,
    /// One more member on the intermediary's platform.
    PlatformSize,
}

pub const PERTURBATIONS: [Perturbation; 3] = [Perturbation::Branch, Perturbation::Concession, Perturbation::PlatformSize];

struct Snapshot {
    presence: Vec<Vec<f64>>,
    attract: Vec<Vec<f64>>,
    shares: Vec<Vec<f64>>,
}

fn snapshot(config: &MarketConfig, profile: &StrategyProfile, sizes: &[usize]) -> Snapshot {
    let (presence, _, attract) = attractiveness_matrices(config, profile, sizes);
    let shares = share_matrix(config, profile, &attract);
    Snapshot {
        presence,
        attract,
        shares,
    }
}

fn not_below(pre: f64, post: f64) -> bool {
    post >= pre - 1e-12 * pre.abs().max(1.0)
}

/// Applies `kind` to a random intermediary and segment of `profile` and
/// returns a description of every cell of that intermediary where presence,
/// attractiveness or listings share fell.
pub fn monotonicity_violations<R: Rng>(
    rng: &mut R,
    config: &MarketConfig,
    profile: &StrategyProfile,
    kind: Perturbation,
) -> Vec<String> {
    let i = rng.random_range(0..config.num_intermediaries());
    let m = rng.random_range(0..config.num_segments());
    let sizes: Vec<usize> = (0..config.num_intermediaries()).map(|k| config.platforms.size_of(k)).collect();
    let mut low = profile.clone();
    let mut high = profile.clone();
    let mut high_sizes = sizes.clone();
    let cap_n = config.intermediaries[i].branch_cap[m];
    let cap_c = config.intermediaries[i].concession_cap[m];
    match kind {
        Perturbation::Branch => {
            let n = rng.random_range(0..cap_n);
            low.branches[i][m] = n;
            high.branches[i][m] = n + 1;
        }
        Perturbation::Concession => {
            let a = rng.random_range(0.0..=cap_c);
            let b = rng.random_range(0.0..=cap_c);
            low.concessions[i][m] = a.min(b);
            high.concessions[i][m] = a.max(b);
        }
        Perturbation::PlatformSize => high_sizes[i] += 1,
    }
    let before = snapshot(config, &low, &sizes);
    let after = snapshot(config, &high, &high_sizes);
    let mut out = Vec::new();
    for s in 0..config.num_segments() {
        let checks = [
            ("f", before.presence[i][s], after.presence[i][s]),
            ("R", before.attract[i][s], after.attract[i][s]),
            ("sigma", before.shares[i][s], after.shares[i][s]),
        ];
        for (what, pre, post) in checks {
            if !not_below(pre, post) {
                out.push(format!("{kind:?} at ({i},{m}): {what}[{i}][{s}] fell {pre} -> {post}"));
            }
        }
    }
    out
}

/// Welfare components recomputed from volumes and concessions, returning the
/// relative gap between the component sum and the direct surplus.
pub fn welfare_identity_gap(config: &MarketConfig, profile: &StrategyProfile, outcome: &MarketOutcome) -> f64 {
    let beta = config.commission;
    let (mut buyer, mut seller, mut fee, mut direct) = (0.0, 0.0, 0.0, 0.0);
    for (i, row) in outcome.transactions.iter().enumerate() {
        for (m, &q) in row.iter().enumerate() {
            let seg = &config.segments[m];
            let net = seg.base_price - profile.concessions[i][m];
            buyer += q * (seg.gross_benefit - net);
            seller += q * ((1.0 - beta) * net - seg.reserve_utility);
            fee += q * beta * net;
            direct += q * (seg.gross_benefit - seg.reserve_utility);
        }
    }
    let cost: f64 = outcome.costs.iter().sum();
    let reported = outcome.welfare.total_welfare;
    let components = buyer + seller + fee - cost;
    let gap = (components - reported)
        .abs()
        .max((direct - cost - reported).abs())
        .max((outcome.welfare.buyer_total + outcome.welfare.seller_total + outcome.welfare.fee_total - cost - reported).abs());
    gap / (1.0 + reported.abs())
}
