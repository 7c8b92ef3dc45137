//! Random markets and profiles for property and acceptance tests.

use rand::Rng;
use segmarket_core::market::{
    IntermediaryProfile, MarketConfig, Neighbor, PlatformLabel, Platforms, Segment, StrategyProfile,
};

/// Size limits for [`random_market`].
#[derive(Debug, Clone, Copy)]
pub struct MarketShape {
    pub max_firms: usize,
    pub max_segments: usize,
    pub max_branches: u32,
}

pub const TINY: MarketShape = MarketShape {
    max_firms: 3,
    max_segments: 2,
    max_branches: 2,
};

pub const SMALL: MarketShape = MarketShape {
    max_firms: 5,
    max_segments: 4,
    max_branches: 4,
};

fn label<R: Rng>(rng: &mut R) -> PlatformLabel {
    match rng.random_range(0..3) {
        0 => PlatformLabel::Large,
        1 => PlatformLabel::Small,
        _ => PlatformLabel::Independent,
    }
}

/// A valid market with random sizes, forms, adjacency and platform labels.
pub fn random_market<R: Rng>(rng: &mut R, shape: MarketShape) -> MarketConfig {
    let m_count = rng.random_range(1..=shape.max_segments);
    let n_count = rng.random_range(1..=shape.max_firms);
    let mut segments: Vec<Segment> = (0..m_count)
        .map(|_| {
            Segment::new(
                rng.random_range(50.0..150.0),
                rng.random_range(20.0..150.0),
                rng.random_range(0.0..100.0),
                rng.random_range(0.0..40.0),
            )
        })
        .collect();
    for m in 0..m_count {
        for k in (0..m_count).filter(|&k| k != m) {
            if rng.random_bool(0.5) {
                segments[m].neighbors.push(Neighbor {
                    segment: k,
                    weight: rng.random_range(0.0..1.0),
                });
            }
        }
    }
    let intermediaries: Vec<IntermediaryProfile> = (0..n_count)
        .map(|_| IntermediaryProfile {
            efficiency: rng.random_range(0.5..2.0),
            entry_cost: (0..m_count).map(|_| rng.random_range(0.0..5.0)).collect(),
            branch_cost: rng.random_range(0.0..5.0),
            global_convexity: rng.random_range(0.0..1.0),
            platform: label(rng),
            branch_cap: (0..m_count).map(|_| rng.random_range(1..=shape.max_branches)).collect(),
            concession_cap: segments
                .iter()
                .map(|s| rng.random_range(0.2..0.8) * s.base_price)
                .collect(),
        })
        .collect();
    let labels: Vec<PlatformLabel> = intermediaries.iter().map(|f| f.platform).collect();
    let mut config = MarketConfig {
        segments,
        intermediaries,
        spillover: rng.random_range(0.0..0.5),
        commission: rng.random_range(0.01..0.1),
        forms: Default::default(),
        platforms: Platforms::from_labels(&labels),
    };
    let forms = &mut config.forms;
    forms.presence.exponent = rng.random_range(0.3..=1.0);
    forms.concession.offset = rng.random_range(0.5..2.0);
    forms.concession.exponent = rng.random_range(0.2..0.9);
    forms.concession.platform_gain = rng.random_range(0.05..0.5);
    forms.transaction.scale = rng.random_range(0.002..0.02);
    forms.transaction.exponent = rng.random_range(1.0..1.3);
    config.validate().expect("generated market is valid");
    config
}

/// A feasible profile: branch counts up to the cap (zero allowed) and
/// concessions anywhere under their caps.
pub fn random_profile<R: Rng>(rng: &mut R, config: &MarketConfig) -> StrategyProfile {
    let branches = config
        .intermediaries
        .iter()
        .map(|f| f.branch_cap.iter().map(|&cap| rng.random_range(0..=cap)).collect())
        .collect();
    let concessions = config
        .intermediaries
        .iter()
        .map(|f| f.concession_cap.iter().map(|&cap| rng.random_range(0.0..=cap)).collect())
        .collect();
    StrategyProfile {
        branches,
        concessions,
    }
}
