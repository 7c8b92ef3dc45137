use serde::Serialize;

use crate::economics::WelfareReport;
use crate::solver::{ConditionVerdict, DominanceReport, EquilibriumResult, ModularityClass};

/// Relative slack allowed when checking the direction of a change.
pub const DIRECTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimVerdict {
    Holds,
    Fails,
    NotApplicable,
    /// Computed and reported, but carries no prediction.
    Informational,
}

impl ClaimVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClaimVerdict::Holds => "holds",
            ClaimVerdict::Fails => "fails",
            ClaimVerdict::NotApplicable => "not_applicable",
            ClaimVerdict::Informational => "informational",
        }
    }
}

/// A named assumption value a claim depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub name: String,
    pub value: bool,
}

impl Condition {
    pub fn new(name: &str, value: bool) -> Self {
        Self {
            name: name.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimCheck {
    pub id: String,
    pub statement: String,
    pub conditions: Vec<Condition>,
    pub verdict: ClaimVerdict,
    /// Smallest relative slack over the checked cells; negative beyond the
    /// tolerance means the direction was violated. `+inf` when nothing applied.
    pub margin: f64,
}

impl ClaimCheck {
    /// Evaluates a directional claim from signed, already scaled margins.
    pub fn directional(
        id: &str,
        statement: &str,
        conditions: Vec<Condition>,
        margins: impl IntoIterator<Item = f64>,
    ) -> Self {
        let margin = margins.into_iter().fold(f64::INFINITY, f64::min);
        let verdict = if conditions.iter().any(|c| !c.value) {
            ClaimVerdict::NotApplicable
        } else if margin >= -DIRECTION_TOLERANCE {
            ClaimVerdict::Holds
        } else {
            ClaimVerdict::Fails
        };
        Self {
            id: id.to_string(),
            statement: statement.to_string(),
            conditions,
            verdict,
            margin,
        }
    }

    pub fn informational(id: &str, statement: &str, conditions: Vec<Condition>, value: f64) -> Self {
        Self {
            id: id.to_string(),
            statement: statement.to_string(),
            conditions,
            verdict: ClaimVerdict::Informational,
            margin: value,
        }
    }

    pub fn not_applicable(id: &str, statement: &str, conditions: Vec<Condition>) -> Self {
        Self {
            id: id.to_string(),
            statement: statement.to_string(),
            conditions,
            verdict: ClaimVerdict::NotApplicable,
            margin: f64::INFINITY,
        }
    }
}

/// Adds a `name` condition to every claim that makes a prediction; when it is
/// false the claim becomes not applicable.
pub(crate) fn require(claims: &mut [ClaimCheck], name: &str, value: bool) {
    for claim in claims {
        if claim.verdict == ClaimVerdict::Informational {
            continue;
        }
        claim.conditions.push(Condition::new(name, value));
        if !value {
            claim.verdict = ClaimVerdict::NotApplicable;
        }
    }
}

/// `(post - pre) / max(1, |pre|)`: positive when the value went up.
pub fn rise(pre: f64, post: f64) -> f64 {
    (post - pre) / pre.abs().max(1.0)
}

/// `(pre - post) / max(1, |pre|)`: positive when the value went down.
pub fn fall(pre: f64, post: f64) -> f64 {
    (pre - post) / pre.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionVerdicts {
    /// Modularity of each intermediary's profit at the pre-shock equilibrium;
    /// `None` for intermediaries without branches.
    pub modularity: Vec<Option<ModularityClass>>,
    /// Common class of the active intermediaries when they agree,
    /// indeterminate otherwise.
    pub market_modularity: ModularityClass,
    pub dominance: Option<DominanceReport>,
    pub dominance_holds: bool,
    /// Per segment; `None` when the most efficient intermediary is not unique.
    pub large_firm_dominance: Option<Vec<bool>>,
    pub saturated: bool,
}

impl AssumptionVerdicts {
    pub fn submodular(&self) -> bool {
        self.market_modularity == ModularityClass::Submodular
    }

    pub fn supermodular(&self) -> bool {
        self.market_modularity == ModularityClass::Supermodular
    }

    pub fn large_firm_dominance_holds(&self) -> Option<bool> {
        self.large_firm_dominance.as_ref().map(|v| v.iter().all(|&b| b))
    }

    pub fn dominance_verdict(&self) -> ConditionVerdict {
        match &self.dominance {
            None => ConditionVerdict::NotApplicable,
            Some(_) => ConditionVerdict::from_bool(self.dominance_holds),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareDeltas {
    pub buyer: f64,
    pub seller: f64,
    pub fee: f64,
    pub total: f64,
}

impl WelfareDeltas {
    pub fn between(pre: &WelfareReport, post: &WelfareReport) -> Self {
        Self {
            buyer: post.buyer_total - pre.buyer_total,
            seller: post.seller_total - pre.seller_total,
            fee: post.fee_total - pre.fee_total,
            total: post.total_welfare - pre.total_welfare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    EfficiencyShock,
    GroupEfficiencyShock,
    ConsolidationEvent,
    SearcherShock,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::EfficiencyShock => "efficiency_shock",
            ExperimentKind::GroupEfficiencyShock => "group_efficiency_shock",
            ExperimentKind::ConsolidationEvent => "consolidation_event",
            ExperimentKind::SearcherShock => "searcher_shock",
        }
    }
}

/// Which welfare statement, if any, an experiment is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WelfareStatement {
    /// Single-firm efficiency increase of the most efficient intermediary.
    SingleEfficiency,
    /// Joint increase including the most efficient intermediary.
    GroupEfficiency,
    /// Consolidation including the most efficient intermediary.
    Consolidation,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub kind: ExperimentKind,
    /// Human-readable description of the shock.
    pub shock: String,
    pub null_shock: bool,
    pub pre: EquilibriumResult,
    pub post: EquilibriumResult,
    pub assumptions: AssumptionVerdicts,
    pub claims: Vec<ClaimCheck>,
    pub welfare_statement: WelfareStatement,
    /// Whether the shock involves the unique most efficient intermediary.
    pub involves_leader: bool,
    pub welfare: WelfareDeltas,
    pub welfare_claims: Vec<ClaimCheck>,
}

impl ExperimentReport {
    pub fn all_claims(&self) -> impl Iterator<Item = &ClaimCheck> {
        self.claims.iter().chain(&self.welfare_claims)
    }

    pub fn failures(&self) -> Vec<&ClaimCheck> {
        self.all_claims().filter(|c| c.verdict == ClaimVerdict::Fails).collect()
    }
}

/// Welfare verdicts for a solved pre/post pair.
///
/// Only experiments that involve the most efficient intermediary make a
/// welfare prediction, and only under submodularity and the dominance
/// condition. With large-firm dominance seller surplus and total welfare must
/// not fall and buyer surplus is reported; without it buyer surplus must not
/// fall and the rest is reported (the joint-efficiency statement says nothing
/// in that case). A saturated transaction technology downgrades every verdict
/// to informational.
pub fn welfare_shock_report(report: &ExperimentReport) -> Vec<ClaimCheck> {
    welfare_claims(
        report.welfare_statement,
        report.null_shock,
        report.involves_leader,
        &report.assumptions,
        &report.pre.outcome.welfare,
        &report.post.outcome.welfare,
    )
}

pub(crate) fn welfare_claims(
    statement: WelfareStatement,
    null_shock: bool,
    involves_leader: bool,
    assumptions: &AssumptionVerdicts,
    pre: &WelfareReport,
    post: &WelfareReport,
) -> Vec<ClaimCheck> {
    if statement == WelfareStatement::None {
        return Vec::new();
    }
    let d = WelfareDeltas::between(pre, post);
    let lfd = assumptions.large_firm_dominance_holds();
    let mut base = vec![
        Condition::new("involves_most_efficient", involves_leader),
        Condition::new("submodular", assumptions.submodular()),
        Condition::new("dominance", assumptions.dominance_holds),
    ];
    if null_shock {
        base = vec![Condition::new("null_shock", true)];
    }
    let scaled = |delta: f64, level: f64| delta / level.abs().max(1.0);
    let seller = scaled(d.seller, pre.seller_total);
    let total = scaled(d.total, pre.total_welfare);
    let buyer = scaled(d.buyer, pre.buyer_total);

    let with_lfd = |v: bool| {
        let mut c = base.clone();
        if !null_shock {
            c.push(Condition::new("large_firm_dominance", v));
        }
        c
    };
    let lfd_value = lfd.unwrap_or(false);
    let mut out = Vec::new();
    if null_shock {
        out.push(ClaimCheck::directional("welfare_seller_up", "seller surplus does not fall", with_lfd(true), [seller]));
        out.push(ClaimCheck::directional("welfare_total_up", "total welfare does not fall", with_lfd(true), [total]));
        out.push(ClaimCheck::directional("welfare_buyer_up", "buyer surplus does not fall", with_lfd(true), [buyer]));
    } else if lfd_value {
        out.push(ClaimCheck::directional("welfare_seller_up", "seller surplus does not fall", with_lfd(true), [seller]));
        out.push(ClaimCheck::directional("welfare_total_up", "total welfare does not fall", with_lfd(true), [total]));
        out.push(ClaimCheck::informational("welfare_buyer", "buyer surplus change (indeterminate)", with_lfd(true), d.buyer));
    } else if statement == WelfareStatement::GroupEfficiency {
        let mut c = base.clone();
        c.push(Condition::new("large_firm_dominance", false));
        out.push(ClaimCheck::not_applicable("welfare_seller_up", "seller surplus does not fall", c.clone()));
        out.push(ClaimCheck::not_applicable("welfare_total_up", "total welfare does not fall", c));
    } else {
        // the statement needs dominance to fail, which is a verdict in itself
        let mut c = base.clone();
        c.push(Condition::new("no_large_firm_dominance", lfd == Some(false)));
        out.push(ClaimCheck::directional("welfare_buyer_up", "buyer surplus does not fall", c.clone(), [buyer]));
        out.push(ClaimCheck::informational("welfare_seller", "seller surplus change (ambiguous)", c.clone(), d.seller));
        out.push(ClaimCheck::informational("welfare_total", "total welfare change (indeterminate)", c, d.total));
    }
    if assumptions.saturated {
        for claim in &mut out {
            if claim.verdict != ClaimVerdict::NotApplicable {
                claim.verdict = ClaimVerdict::Informational;
                claim.conditions.push(Condition::new("unsaturated", false));
            }
        }
    }
    out
}
