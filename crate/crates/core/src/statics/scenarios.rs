//! The built-in scenario library.
//!
//! Every scenario has a stable id. The same configurations ship as JSON under
//! `scenarios/` and can be regenerated with `segmarket scenarios`.

use crate::error::{Error, Result};
use crate::market::{
    FormParams, IntermediaryProfile, MarketConfig, Neighbor, PlatformLabel, Platforms, Segment,
};

pub const COMMISSION: f64 = 0.027;

// Cost structure shared by the multi-segment scenarios.
const SHARED_BRANCH_COST: f64 = 1.5;
const SHARED_ENTRY_COST: f64 = 0.5;
const SHARED_CONVEXITY: f64 = 0.4;
const SHARED_PRESENCE_EXPONENT: f64 = 0.5;

pub const SCENARIO_IDS: [&str; 4] = ["monopoly", "symmetric_duopoly", "segment_chain", "two_platform"];

fn firm(efficiency: f64, segments: usize, branch_cost: f64, platform: PlatformLabel) -> IntermediaryProfile {
    IntermediaryProfile {
        efficiency,
        entry_cost: vec![0.0; segments],
        branch_cost,
        global_convexity: 0.0,
        platform,
        branch_cap: vec![3; segments],
        concession_cap: vec![60.0; segments],
    }
}

fn assemble(segments: Vec<Segment>, intermediaries: Vec<IntermediaryProfile>, spillover: f64) -> MarketConfig {
    let labels: Vec<_> = intermediaries.iter().map(|p| p.platform).collect();
    MarketConfig {
        segments,
        intermediaries,
        spillover,
        commission: COMMISSION,
        forms: FormParams::default(),
        platforms: Platforms::from_labels(&labels),
    }
}

/// One segment, one intermediary, zero costs. Demand does not react to the
/// concession, so the optimum concedes nothing.
pub fn monopoly() -> MarketConfig {
    assemble(
        vec![Segment::new(100.0, 100.0, 50.0, 0.0)],
        vec![firm(1.0, 1, 0.0, PlatformLabel::Independent)],
        0.0,
    )
}

/// Two identical independents competing in one segment, with convex branch
/// costs that keep branch counts below the cap.
pub fn symmetric_duopoly() -> MarketConfig {
    let mut firms = vec![
        firm(1.0, 1, 2.0, PlatformLabel::Independent),
        firm(1.0, 1, 2.0, PlatformLabel::Independent),
    ];
    for f in &mut firms {
        f.branch_cap = vec![6];
        f.global_convexity = 2.0;
    }
    assemble(vec![Segment::new(100.0, 100.0, 100.0, 0.0)], firms, 0.0)
}

/// Three segments on a line with spillovers and global searchers, three
/// independents of decreasing efficiency. Concave presence and convex global
/// costs keep every intermediary active with interior branch counts.
pub fn segment_chain() -> MarketConfig {
    let mut segments = vec![
        Segment::new(100.0, 100.0, 60.0, 20.0),
        Segment::new(120.0, 120.0, 80.0, 30.0),
        Segment::new(90.0, 80.0, 50.0, 15.0),
    ];
    segments[0].neighbors = vec![Neighbor { segment: 1, weight: 1.0 }];
    segments[1].neighbors = vec![Neighbor { segment: 0, weight: 0.5 }, Neighbor { segment: 2, weight: 0.5 }];
    segments[2].neighbors = vec![Neighbor { segment: 1, weight: 1.0 }];
    let mut firms = vec![
        firm(1.4, 3, SHARED_BRANCH_COST, PlatformLabel::Independent),
        firm(1.0, 3, SHARED_BRANCH_COST, PlatformLabel::Independent),
        firm(0.8, 3, SHARED_BRANCH_COST, PlatformLabel::Independent),
    ];
    for f in &mut firms {
        f.branch_cap = vec![4, 8, 4];
        f.entry_cost = vec![SHARED_ENTRY_COST; 3];
        f.global_convexity = SHARED_CONVEXITY;
    }
    let mut config = assemble(segments, firms, 0.3);
    config.forms.presence.exponent = SHARED_PRESENCE_EXPONENT;
    config
}

/// Two segments, a large platform of two firms and a small platform of two,
/// with the same cost structure as the chain.
pub fn two_platform() -> MarketConfig {
    let mut segments = vec![Segment::new(100.0, 100.0, 80.0, 20.0), Segment::new(80.0, 60.0, 40.0, 10.0)];
    segments[0].neighbors = vec![Neighbor { segment: 1, weight: 1.0 }];
    segments[1].neighbors = vec![Neighbor { segment: 0, weight: 1.0 }];
    let mut firms = vec![
        firm(1.5, 2, SHARED_BRANCH_COST, PlatformLabel::Large),
        firm(1.1, 2, SHARED_BRANCH_COST, PlatformLabel::Large),
        firm(1.0, 2, SHARED_BRANCH_COST, PlatformLabel::Small),
        firm(0.8, 2, SHARED_BRANCH_COST, PlatformLabel::Small),
    ];
    for f in &mut firms {
        f.branch_cap = vec![6, 4];
        f.concession_cap = vec![60.0, 50.0];
        f.entry_cost = vec![SHARED_ENTRY_COST; 2];
        f.global_convexity = SHARED_CONVEXITY;
    }
    let mut config = assemble(segments, firms, 0.2);
    config.forms.presence.exponent = SHARED_PRESENCE_EXPONENT;
    config
}

pub fn by_id(id: &str) -> Result<MarketConfig> {
    match id {
        "monopoly" => Ok(monopoly()),
        "symmetric_duopoly" => Ok(symmetric_duopoly()),
        "segment_chain" => Ok(segment_chain()),
        "two_platform" => Ok(two_platform()),
        other => Err(Error::config(
            "scenario",
            format!("unknown scenario `{other}`; expected one of {}", SCENARIO_IDS.join(", ")),
        )),
    }
}

/// Every shipped scenario, in id order.
pub fn library() -> Vec<(&'static str, MarketConfig)> {
    SCENARIO_IDS.iter().map(|&id| (id, by_id(id).expect("known id"))).collect()
}
