use serde::Serialize;

use super::report::{
    fall, require, rise, welfare_claims, AssumptionVerdicts, ClaimCheck, Condition, ExperimentKind, ExperimentReport,
    WelfareDeltas, WelfareStatement,
};
use crate::error::{Error, Result};
use crate::market::{MarketConfig, StrategyProfile};
use crate::outcome::{evaluate_unchecked, MarketOutcome};
use crate::solver::{
    check_dominance, check_large_firm_dominance, firm_modularity, iterated_best_response, EquilibriumResult,
    FirmRole, ModularityClass, SolverSettings,
};

/// Grid points per segment when sampling concession pairs for modularity.
pub const MODULARITY_POINTS: usize = 7;

/// The unique most efficient intermediary, if there is one.
pub fn unique_leader(config: &MarketConfig) -> Option<usize> {
    let top = config
        .intermediaries
        .iter()
        .map(|p| p.efficiency)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut it = (0..config.num_intermediaries()).filter(|&i| config.intermediaries[i].efficiency == top);
    let first = it.next()?;
    if it.next().is_some() {
        None
    } else {
        Some(first)
    }
}

fn solve_from(config: &MarketConfig, initial: &StrategyProfile, settings: &SolverSettings) -> Result<EquilibriumResult> {
    config.validate()?;
    iterated_best_response(config, initial, settings)
}

fn solve_pair(
    pre_config: &MarketConfig,
    post_config: &MarketConfig,
    settings: &SolverSettings,
) -> Result<(EquilibriumResult, EquilibriumResult)> {
    // both solves start from the same profile and sweep in the same order
    let initial = StrategyProfile::initial(pre_config);
    let pre = solve_from(pre_config, &initial, settings)?;
    let post = solve_from(post_config, &initial, settings)?;
    Ok((pre, post))
}

fn assess(
    pre_config: &MarketConfig,
    post_config: &MarketConfig,
    pre: &EquilibriumResult,
    post: &EquilibriumResult,
    roles: &[FirmRole],
) -> Result<AssumptionVerdicts> {
    let modularity = (0..pre_config.num_intermediaries())
        .map(|i| firm_modularity(pre_config, &pre.profile, i, MODULARITY_POINTS))
        .collect::<Result<Vec<_>>>()?;
    // inactive intermediaries choose no concession and carry no class
    let market_modularity = ModularityClass::combine(modularity.iter().flatten().copied());
    let dominance = check_dominance(post_config, &pre.profile, &post.profile, roles)?;
    let large_firm_dominance =
        check_large_firm_dominance(post_config, &pre.profile, &post.profile, &pre.outcome.transactions).ok();
    Ok(AssumptionVerdicts {
        modularity,
        market_modularity,
        dominance_holds: dominance.overall,
        dominance: Some(dominance),
        large_firm_dominance,
        saturated: pre.outcome.saturated || post.outcome.saturated,
    })
}

/// Conditions of a claim, or the single vacuous condition of a null shock.
fn conditions(null: bool, list: Vec<Condition>) -> Vec<Condition> {
    if null {
        vec![Condition::new("null_shock", true)]
    } else {
        list
    }
}

fn cells<'a>(
    firms: &'a [usize],
    segments: usize,
    keep: impl Fn(usize, usize) -> bool + 'a,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    firms
        .iter()
        .flat_map(move |&i| (0..segments).map(move |m| (i, m)))
        .filter(move |&(i, m)| keep(i, m))
}

/// Concessions are only chosen where there are branches, so concession
/// claims compare cells active on both sides.
fn active_both(pre: &EquilibriumResult, post: &EquilibriumResult, i: usize, m: usize) -> bool {
    pre.profile.branches[i][m] > 0 && post.profile.branches[i][m] > 0
}

fn active_either(pre: &EquilibriumResult, post: &EquilibriumResult, i: usize, m: usize) -> bool {
    pre.profile.branches[i][m] > 0 || post.profile.branches[i][m] > 0
}

fn check_shock(delta: f64, what: &str) -> Result<bool> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("{what} shock must be >= 0, got {delta}")));
    }
    Ok(delta == 0.0)
}

fn roles_for(n: usize, expanding: &[usize]) -> Vec<FirmRole> {
    (0..n)
        .map(|i| {
            if expanding.contains(&i) {
                FirmRole::Expanding
            } else {
                FirmRole::Rival
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    scenario: &str,
    kind: ExperimentKind,
    shock: String,
    null_shock: bool,
    pre: EquilibriumResult,
    post: EquilibriumResult,
    assumptions: AssumptionVerdicts,
    mut claims: Vec<ClaimCheck>,
    unconditional: Vec<ClaimCheck>,
    welfare_statement: WelfareStatement,
    involves_leader: bool,
) -> ExperimentReport {
    let welfare = WelfareDeltas::between(&pre.outcome.welfare, &post.outcome.welfare);
    let mut welfare_claims = welfare_claims(
        welfare_statement,
        null_shock,
        involves_leader,
        &assumptions,
        &pre.outcome.welfare,
        &post.outcome.welfare,
    );
    // a comparison of equilibria needs both equilibria; a null shock compares
    // a profile with itself whatever the solver reached
    if !null_shock {
        let converged = pre.converged && post.converged;
        require(&mut claims, "converged", converged);
        require(&mut welfare_claims, "converged", converged);
    }
    let claims = unconditional.into_iter().chain(claims).collect();
    ExperimentReport {
        scenario: scenario.to_string(),
        kind,
        shock,
        null_shock,
        pre,
        post,
        assumptions,
        claims,
        welfare_statement,
        involves_leader,
        welfare,
        welfare_claims,
    }
}

fn shocked_efficiency(config: &MarketConfig, shocks: &[(usize, f64)]) -> Result<MarketConfig> {
    let mut post = config.clone();
    for &(i, delta) in shocks {
        if i >= config.num_intermediaries() {
            return Err(Error::domain(format!("no intermediary {i}")));
        }
        post.intermediaries[i].efficiency += delta;
    }
    Ok(post)
}

/// Raises the efficiency of intermediary `firm` by `delta` and re-solves.
///
/// Claims: the firm's branches do not fall in any segment and its profit does
/// not fall; under the dominance condition its attractiveness and listings
/// share do not fall where it is active; its concessions fall (rivals' rise)
/// under submodularity and rise under supermodularity.
pub fn efficiency_shock(
    scenario: &str,
    config: &MarketConfig,
    firm: usize,
    delta: f64,
    settings: &SolverSettings,
) -> Result<ExperimentReport> {
    let null = check_shock(delta, "efficiency")?;
    let post_config = shocked_efficiency(config, &[(firm, delta)])?;
    let (pre, post) = solve_pair(config, &post_config, settings)?;
    let n = config.num_intermediaries();
    let m_count = config.num_segments();
    let a = assess(config, &post_config, &pre, &post, &roles_for(n, &[firm]))?;
    let rivals: Vec<usize> = (0..n).filter(|&k| k != firm).collect();
    let own = [firm];
    let (p0, p1) = (&pre, &post);
    let (o0, o1) = (&pre.outcome, &post.outcome);

    let mut claims = vec![ClaimCheck::directional(
        "branches_weakly_up",
        "the shocked intermediary does not close branches in any segment",
        conditions(null, vec![]),
        (0..m_count).map(|m| f64::from(p1.profile.branches[firm][m]) - f64::from(p0.profile.branches[firm][m])),
    )];
    let dominance = vec![Condition::new("dominance", a.dominance_holds)];
    claims.push(ClaimCheck::directional(
        "attractiveness_up",
        "attractiveness of the shocked intermediary rises where it is active",
        conditions(null, dominance.clone()),
        cells(&own, m_count, |i, m| p1.profile.branches[i][m] > 0)
            .map(|(i, m)| rise(o0.attractiveness[i][m], o1.attractiveness[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "share_up",
        "listings share of the shocked intermediary rises where it is active",
        conditions(null, dominance),
        cells(&own, m_count, |i, m| p1.profile.branches[i][m] > 0).map(|(i, m)| rise(o0.shares[i][m], o1.shares[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "own_concession_down",
        "the shocked intermediary lowers its concessions",
        conditions(null, vec![Condition::new("submodular", a.submodular())]),
        cells(&own, m_count, |i, m| active_both(p0, p1, i, m))
            .map(|(i, m)| fall(p0.profile.concessions[i][m], p1.profile.concessions[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "own_concession_up",
        "the shocked intermediary raises its concessions",
        conditions(null, vec![Condition::new("supermodular", a.supermodular())]),
        cells(&own, m_count, |i, m| active_both(p0, p1, i, m))
            .map(|(i, m)| rise(p0.profile.concessions[i][m], p1.profile.concessions[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "rival_concession_up",
        "rivals raise their concessions",
        conditions(
            null,
            vec![
                Condition::new("has_rivals", !rivals.is_empty()),
                Condition::new("submodular", a.submodular()),
            ],
        ),
        cells(&rivals, m_count, |i, m| active_both(p0, p1, i, m))
            .map(|(i, m)| rise(p0.profile.concessions[i][m], p1.profile.concessions[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "profit_up",
        "profit of the shocked intermediary does not fall",
        conditions(null, vec![]),
        [rise(o0.profits[firm], o1.profits[firm])],
    ));

    let leader = unique_leader(&post_config);
    Ok(finish(
        scenario,
        ExperimentKind::EfficiencyShock,
        format!("efficiency[{firm}] += {delta}"),
        null,
        pre,
        post,
        a,
        claims,
        Vec::new(),
        WelfareStatement::SingleEfficiency,
        leader == Some(firm),
    ))
}

/// Raises the efficiency of every member of `shocks` simultaneously.
///
/// With one member this is exactly [`efficiency_shock`]. Otherwise, under
/// submodularity and the dominance condition: members do not close branches,
/// their volumes do not fall and their concessions do not rise, by no more
/// than when each is shocked alone; non-members do not open branches and
/// their volumes do not rise.
pub fn group_efficiency_shock(
    scenario: &str,
    config: &MarketConfig,
    shocks: &[(usize, f64)],
    settings: &SolverSettings,
) -> Result<ExperimentReport> {
    if shocks.is_empty() {
        return Err(Error::domain("the shocked group must not be empty"));
    }
    let mut members: Vec<usize> = shocks.iter().map(|&(i, _)| i).collect();
    members.sort_unstable();
    members.dedup();
    if members.len() != shocks.len() {
        return Err(Error::domain("an intermediary appears twice in the shocked group"));
    }
    let mut null = true;
    for &(_, d) in shocks {
        null &= check_shock(d, "efficiency")?;
    }
    if shocks.len() == 1 {
        return efficiency_shock(scenario, config, shocks[0].0, shocks[0].1, settings);
    }
    let post_config = shocked_efficiency(config, shocks)?;
    let (pre, post) = solve_pair(config, &post_config, settings)?;
    let n = config.num_intermediaries();
    let m_count = config.num_segments();
    let a = assess(config, &post_config, &pre, &post, &roles_for(n, &members))?;
    let others: Vec<usize> = (0..n).filter(|k| !members.contains(k)).collect();
    let (p0, p1) = (&pre, &post);
    let (o0, o1) = (&pre.outcome, &post.outcome);
    let base = vec![
        Condition::new("submodular", a.submodular()),
        Condition::new("dominance", a.dominance_holds),
    ];
    let with_others = {
        let mut c = base.clone();
        c.push(Condition::new("has_non_members", !others.is_empty()));
        c
    };

    let mut claims = vec![
        ClaimCheck::directional(
            "members_branches_up",
            "members do not close branches",
            conditions(null, base.clone()),
            cells(&members, m_count, |_, _| true)
                .map(|(i, m)| f64::from(p1.profile.branches[i][m]) - f64::from(p0.profile.branches[i][m])),
        ),
        ClaimCheck::directional(
            "members_volume_up",
            "members' transaction volumes do not fall",
            conditions(null, base.clone()),
            cells(&members, m_count, |i, m| active_either(p0, p1, i, m))
                .map(|(i, m)| rise(o0.transactions[i][m], o1.transactions[i][m])),
        ),
        ClaimCheck::directional(
            "members_concession_down",
            "members lower their concessions",
            conditions(null, base.clone()),
            cells(&members, m_count, |i, m| active_both(p0, p1, i, m))
                .map(|(i, m)| fall(p0.profile.concessions[i][m], p1.profile.concessions[i][m])),
        ),
    ];

    let mut solo_converged = true;
    let moderated = if !null && a.submodular() && a.dominance_holds {
        let mut margins = Vec::new();
        for &(i, d) in shocks {
            let single_config = shocked_efficiency(config, &[(i, d)])?;
            let single = solve_from(&single_config, &StrategyProfile::initial(config), settings)?;
            solo_converged &= single.converged;
            for m in 0..m_count {
                if !active_both(p0, p1, i, m) || single.profile.branches[i][m] == 0 {
                    continue;
                }
                let joint = (p1.profile.concessions[i][m] - p0.profile.concessions[i][m]).abs();
                let alone = (single.profile.concessions[i][m] - p0.profile.concessions[i][m]).abs();
                margins.push((alone - joint) / p0.profile.concessions[i][m].abs().max(1.0));
            }
        }
        margins
    } else {
        Vec::new()
    };
    let mut solo = vec![ClaimCheck::directional(
        "members_concession_moderated",
        "members' concession cuts are no deeper than under a solo shock",
        conditions(null, base.clone()),
        moderated,
    )];
    if !null {
        require(&mut solo, "counterfactual_converged", solo_converged);
    }
    claims.append(&mut solo);
    claims.push(ClaimCheck::directional(
        "others_branches_down",
        "non-members do not open branches",
        conditions(null, with_others.clone()),
        cells(&others, m_count, |_, _| true)
            .map(|(i, m)| f64::from(p0.profile.branches[i][m]) - f64::from(p1.profile.branches[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "others_volume_down",
        "non-members' transaction volumes do not rise",
        conditions(null, with_others),
        cells(&others, m_count, |i, m| active_either(p0, p1, i, m))
            .map(|(i, m)| fall(o0.transactions[i][m], o1.transactions[i][m])),
    ));

    let leader = unique_leader(&post_config);
    let shock = shocks
        .iter()
        .map(|(i, d)| format!("efficiency[{i}] += {d}"))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(finish(
        scenario,
        ExperimentKind::GroupEfficiencyShock,
        shock,
        null,
        pre,
        post,
        a,
        claims,
        Vec::new(),
        WelfareStatement::GroupEfficiency,
        leader.is_some_and(|l| members.contains(&l)),
    ))
}

/// Changes between two evaluations of the same profile under the old and the
/// merged platform structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedStrategyPhase {
    pub members: Vec<usize>,
    pub before: MarketOutcome,
    pub after: MarketOutcome,
    pub claims: Vec<ClaimCheck>,
}

/// Evaluates `profile` before and after merging the platforms of `members`,
/// strategies unchanged.
///
/// Members' concession response and attractiveness, the coverage of their
/// platform and the local and global searchers it receives cannot fall.
/// Non-members' responses are unchanged bit for bit. Members' listings shares
/// and volumes are reported but carry no prediction: a member that already
/// sat on a large platform gains less than the others and can lose share.
pub fn consolidation_fixed_phase(
    config: &MarketConfig,
    merged: &MarketConfig,
    profile: &StrategyProfile,
    members: &[usize],
) -> Result<FixedStrategyPhase> {
    profile.check_feasible(config)?;
    let before = evaluate_unchecked(config, profile);
    let after = evaluate_unchecked(merged, profile);
    let m_count = config.num_segments();
    let n = config.num_intermediaries();
    let cov = |c: &MarketConfig, o: &MarketOutcome, i: usize, m: usize| o.coverage[c.platforms.platform_of(i)][m];
    let claims = vec![
        ClaimCheck::directional(
            "fixed_response_up",
            "members' concession response does not fall",
            vec![],
            cells(members, m_count, |_, _| true).map(|(i, m)| rise(before.response[i][m], after.response[i][m])),
        ),
        ClaimCheck::directional(
            "fixed_attractiveness_up",
            "members' attractiveness does not fall",
            vec![],
            cells(members, m_count, |_, _| true)
                .map(|(i, m)| rise(before.attractiveness[i][m], after.attractiveness[i][m])),
        ),
        ClaimCheck::directional(
            "fixed_coverage_up",
            "coverage of each member's platform does not fall",
            vec![],
            cells(members, m_count, |_, _| true)
                .map(|(i, m)| rise(cov(config, &before, i, m), cov(merged, &after, i, m))),
        ),
        ClaimCheck::directional(
            "fixed_local_searchers_up",
            "local searchers reaching members' platform do not fall",
            vec![],
            cells(members, m_count, |_, _| true)
                .map(|(i, m)| rise(before.local_allocation[i][m], after.local_allocation[i][m])),
        ),
        ClaimCheck::directional(
            "fixed_global_searchers_up",
            "global searchers reaching members' platform do not fall",
            vec![],
            cells(members, m_count, |_, _| true)
                .map(|(i, m)| rise(before.global_allocation[i][m], after.global_allocation[i][m])),
        ),
        ClaimCheck::directional(
            "fixed_outsider_response_unchanged",
            "non-members' concession response is unchanged",
            vec![],
            (0..n)
                .filter(|i| !members.contains(i))
                .flat_map(|i| (0..m_count).map(move |m| (i, m)))
                .map(|(i, m)| {
                    if before.response[i][m].to_bits() == after.response[i][m].to_bits() {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                }),
        ),
        ClaimCheck::informational(
            "fixed_share",
            "smallest relative change in members' listings share",
            vec![],
            cells(members, m_count, |i, m| profile.branches[i][m] > 0)
                .map(|(i, m)| rise(before.shares[i][m], after.shares[i][m]))
                .fold(f64::INFINITY, f64::min),
        ),
        ClaimCheck::informational(
            "fixed_volume",
            "smallest relative change in members' volumes",
            vec![],
            cells(members, m_count, |i, m| profile.branches[i][m] > 0)
                .map(|(i, m)| rise(before.transactions[i][m], after.transactions[i][m]))
                .fold(f64::INFINITY, f64::min),
        ),
    ];
    Ok(FixedStrategyPhase {
        members: members.to_vec(),
        before,
        after,
        claims,
    })
}

/// The configuration after merging the platforms of `members`; member labels
/// follow the merged platform.
pub fn merged_config(config: &MarketConfig, members: &[usize]) -> Result<MarketConfig> {
    if members.iter().any(|&i| i >= config.num_intermediaries()) {
        return Err(Error::domain("consolidation member out of range"));
    }
    let platforms = config.platforms.merge(members)?;
    let mut merged = config.clone();
    for &i in members {
        merged.intermediaries[i].platform = platforms.label(platforms.platform_of(i));
    }
    merged.platforms = platforms;
    Ok(merged)
}

/// Consolidates the platforms of `members` onto one platform.
///
/// The strategies-fixed phase is reported as extra claims (prefixed
/// `fixed_`). In equilibrium, under submodularity and the dominance
/// condition, members' attractiveness, volumes and profits do not fall; the
/// direction of their concessions follows the modularity class.
pub fn consolidation_event(
    scenario: &str,
    config: &MarketConfig,
    members: &[usize],
    settings: &SolverSettings,
) -> Result<ExperimentReport> {
    let merged = merged_config(config, members)?;
    let (pre, post) = solve_pair(config, &merged, settings)?;
    // every firm on a merged platform is a member from here on
    let p = merged.platforms.platform_of(members[0]);
    let members: Vec<usize> = merged.platforms.members(p).to_vec();
    let n = config.num_intermediaries();
    let m_count = config.num_segments();
    let a = assess(config, &merged, &pre, &post, &roles_for(n, &members))?;
    let fixed = consolidation_fixed_phase(config, &merged, &pre.profile, &members)?;
    let (p0, p1) = (&pre, &post);
    let (o0, o1) = (&pre.outcome, &post.outcome);
    let base = vec![
        Condition::new("submodular", a.submodular()),
        Condition::new("dominance", a.dominance_holds),
    ];

    let mut claims = vec![ClaimCheck::directional(
        "members_attractiveness_up",
        "members' attractiveness does not fall where they are active",
        base.clone(),
        cells(&members, m_count, |i, m| p1.profile.branches[i][m] > 0)
            .map(|(i, m)| rise(o0.attractiveness[i][m], o1.attractiveness[i][m])),
    )];
    claims.push(ClaimCheck::directional(
        "members_volume_up",
        "members' transaction volumes do not fall",
        base.clone(),
        cells(&members, m_count, |i, m| active_either(p0, p1, i, m))
            .map(|(i, m)| rise(o0.transactions[i][m], o1.transactions[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "members_profit_up",
        "members' profits do not fall",
        base.clone(),
        members.iter().map(|&i| rise(o0.profits[i], o1.profits[i])),
    ));
    claims.push(ClaimCheck::directional(
        "members_concession_down",
        "members lower their concessions",
        vec![Condition::new("submodular", a.submodular())],
        cells(&members, m_count, |i, m| active_both(p0, p1, i, m))
            .map(|(i, m)| fall(p0.profile.concessions[i][m], p1.profile.concessions[i][m])),
    ));
    claims.push(ClaimCheck::directional(
        "members_concession_up",
        "members raise their concessions",
        vec![Condition::new("supermodular", a.supermodular())],
        cells(&members, m_count, |i, m| active_both(p0, p1, i, m))
            .map(|(i, m)| rise(p0.profile.concessions[i][m], p1.profile.concessions[i][m])),
    ));

    let leader = unique_leader(config);
    Ok(finish(
        scenario,
        ExperimentKind::ConsolidationEvent,
        format!("merge platforms of {members:?}"),
        false,
        pre,
        post,
        a,
        claims,
        fixed.claims,
        WelfareStatement::Consolidation,
        leader.is_some_and(|l| members.contains(&l)),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearcherKind {
    Local,
    Global,
}

impl SearcherKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearcherKind::Local => "local",
            SearcherKind::Global => "global",
        }
    }

    fn other(&self) -> Self {
        match self {
            SearcherKind::Local => SearcherKind::Global,
            SearcherKind::Global => SearcherKind::Local,
        }
    }
}

fn shocked_searchers(config: &MarketConfig, segment: usize, kind: SearcherKind, delta: f64) -> Result<MarketConfig> {
    if segment >= config.num_segments() {
        return Err(Error::domain(format!("no segment {segment}")));
    }
    let mut post = config.clone();
    match kind {
        SearcherKind::Local => post.segments[segment].local_searchers += delta,
        SearcherKind::Global => post.segments[segment].global_searchers += delta,
    }
    Ok(post)
}

/// Adds `delta` searchers of `kind` to `segment`.
///
/// Claims: nobody closes branches in the segment; the most efficient
/// intermediary adds at least as many branches there as anyone else, and at
/// least as many after a global shock as after an equal local one (the other
/// kind is solved as a counterfactual).
pub fn searcher_shock(
    scenario: &str,
    config: &MarketConfig,
    segment: usize,
    kind: SearcherKind,
    delta: f64,
    settings: &SolverSettings,
) -> Result<ExperimentReport> {
    let null = check_shock(delta, "searcher")?;
    let post_config = shocked_searchers(config, segment, kind, delta)?;
    let other_config = shocked_searchers(config, segment, kind.other(), delta)?;
    let (pre, post) = solve_pair(config, &post_config, settings)?;
    let other = solve_from(&other_config, &StrategyProfile::initial(config), settings)?;
    let n = config.num_intermediaries();
    let leader = unique_leader(config);
    let expanding: Vec<usize> = leader.into_iter().collect();
    let a = assess(config, &post_config, &pre, &post, &roles_for(n, &expanding))?;

    let step = |eq: &EquilibriumResult, i: usize| {
        f64::from(eq.profile.branches[i][segment]) - f64::from(pre.profile.branches[i][segment])
    };
    let mut claims = vec![ClaimCheck::directional(
        "branches_weakly_up",
        "no intermediary closes branches in the shocked segment",
        conditions(null, vec![]),
        (0..n).map(|i| step(&post, i)),
    )];
    // branch caps are a computational bound; a leader sitting on one cannot
    // show its increment
    let room = leader.is_some_and(|l| pre.profile.branches[l][segment] < config.intermediaries[l].branch_cap[segment]);
    let has_leader = vec![
        Condition::new("unique_most_efficient", leader.is_some()),
        Condition::new("leader_below_cap", room),
    ];
    claims.push(ClaimCheck::directional(
        "leader_increment_largest",
        "the most efficient intermediary adds at least as many branches as any other",
        conditions(null, has_leader.clone()),
        leader
            .map(|l| (0..n).filter(|&k| k != l).map(|k| step(&post, l) - step(&post, k)).collect())
            .unwrap_or_else(Vec::new),
    ));
    let (global, local) = match kind {
        SearcherKind::Global => (&post, &other),
        SearcherKind::Local => (&other, &post),
    };
    let mut versus = vec![ClaimCheck::directional(
        "global_beats_local",
        "the most efficient intermediary adds at least as many branches after a global shock as after a local one",
        conditions(null, has_leader),
        leader.map(|l| step(global, l) - step(local, l)),
    )];
    if !null {
        require(&mut versus, "counterfactual_converged", other.converged);
    }
    claims.append(&mut versus);

    Ok(finish(
        scenario,
        ExperimentKind::SearcherShock,
        format!("{}_searchers[{segment}] += {delta}", kind.as_str()),
        null,
        pre,
        post,
        a,
        claims,
        Vec::new(),
        WelfareStatement::None,
        false,
    ))
}
