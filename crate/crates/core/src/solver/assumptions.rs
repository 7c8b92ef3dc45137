//! Checkers for the assumptions the comparative statics are conditional on.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{MarketConfig, StrategyProfile};
use crate::outcome::{attractiveness_matrices, firm_profit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModularityClass {
    Supermodular,
    Submodular,
    Indeterminate,
}

impl ModularityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModularityClass::Supermodular => "supermodular",
            ModularityClass::Submodular => "submodular",
            ModularityClass::Indeterminate => "indeterminate",
        }
    }

    pub(crate) fn combine(classes: impl IntoIterator<Item = ModularityClass>) -> ModularityClass {
        let mut out = None;
        for c in classes {
            match out {
                None => out = Some(c),
                Some(prev) if prev != c => return ModularityClass::Indeterminate,
                _ => {}
            }
        }
        out.unwrap_or(ModularityClass::Indeterminate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionVerdict {
    Holds,
    Fails,
    NotApplicable,
}

impl ConditionVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionVerdict::Holds => "holds",
            ConditionVerdict::Fails => "fails",
            ConditionVerdict::NotApplicable => "not_applicable",
        }
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            ConditionVerdict::Holds
        } else {
            ConditionVerdict::Fails
        }
    }
}

/// Concession pairs `(c1, c2)` with `c1 < c2` on an evenly spaced grid of
/// `points` values over `[0, cap]`.
pub fn concession_pairs(cap: f64, points: usize) -> Vec<(f64, f64)> {
    let k = points.max(2) - 1;
    let grid: Vec<f64> = (0..=k).map(|j| cap * j as f64 / k as f64).collect();
    let mut out = Vec::new();
    for a in 0..grid.len() {
        for b in a + 1..grid.len() {
            if grid[a] < grid[b] {
                out.push((grid[a], grid[b]));
            }
        }
    }
    out
}

/// Sign of the cross difference
/// `[pi(n+1, c2) - pi(n, c2)] - [pi(n+1, c1) - pi(n, c1)]` over the sampled
/// pairs, everything else in `profile` held fixed.
///
/// Pairs are put in increasing order first, so the result does not depend on
/// how each pair is written. Differences within `1e-10` of the profit scale
/// count as zero; a uniform sign among the rest decides the class.
pub fn check_modularity(
    config: &MarketConfig,
    profile: &StrategyProfile,
    firm: usize,
    segment: usize,
    pairs: &[(f64, f64)],
) -> Result<ModularityClass> {
    profile.check_feasible(config)?;
    let n = profile.branches[firm][segment];
    let cap = config.intermediaries[firm].branch_cap[segment];
    if n + 1 > cap {
        return Err(Error::domain(format!("n + 1 = {} exceeds the branch cap {cap}", n + 1)));
    }
    let c_cap = config.intermediaries[firm].concession_cap[segment];
    let mut work = profile.clone();
    let mut pi = |branches: u32, c: f64| {
        work.branches[firm][segment] = branches;
        work.concessions[firm][segment] = c;
        firm_profit(config, &work, firm)
    };
    let (mut pos, mut neg) = (false, false);
    for &(a, b) in pairs {
        let (c1, c2) = if a <= b { (a, b) } else { (b, a) };
        if c1 == c2 || c1 < 0.0 || c2 > c_cap {
            continue;
        }
        let values = [pi(n + 1, c2), pi(n, c2), pi(n + 1, c1), pi(n, c1)];
        let d = (values[0] - values[1]) - (values[2] - values[3]);
        let scale = values.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        if d > 1e-10 * scale {
            pos = true;
        } else if d < -1e-10 * scale {
            neg = true;
        }
    }
    Ok(match (pos, neg) {
        (true, false) => ModularityClass::Supermodular,
        (false, true) => ModularityClass::Submodular,
        _ => ModularityClass::Indeterminate,
    })
}

/// Half-width of the concession window sampled around the current
/// concession, as a fraction of the concession cap.
pub const MODULARITY_WINDOW: f64 = 0.1;

/// Pairs on `points` evenly spaced values of
/// `[center - w, center + w]` clipped to `[0, cap]`, `w = MODULARITY_WINDOW * cap`.
pub fn local_concession_pairs(center: f64, cap: f64, points: usize) -> Vec<(f64, f64)> {
    let w = MODULARITY_WINDOW * cap;
    let lo = (center - w).max(0.0);
    let hi = (center + w).min(cap);
    concession_pairs(hi - lo, points)
        .into_iter()
        .map(|(a, b)| (lo + a, (lo + b).min(hi)))
        .collect()
}

/// Modularity of one intermediary over the segments where it has branches:
/// the common class when they agree, indeterminate otherwise, `None` when the
/// intermediary is inactive everywhere.
///
/// Each segment is probed on a window around its current concession, since
/// the cross difference is a local property of the optimum and typically
/// changes sign across the whole concession range. A segment already at its
/// branch cap is probed one branch lower.
pub fn firm_modularity(
    config: &MarketConfig,
    profile: &StrategyProfile,
    firm: usize,
    points: usize,
) -> Result<Option<ModularityClass>> {
    let mut classes = Vec::new();
    for m in 0..config.num_segments() {
        let n = profile.branches[firm][m];
        if n == 0 {
            continue;
        }
        let cap = config.intermediaries[firm].branch_cap[m];
        let mut probe = profile.clone();
        probe.branches[firm][m] = n.min(cap - 1);
        let pairs = local_concession_pairs(
            profile.concessions[firm][m],
            config.intermediaries[firm].concession_cap[m],
            points,
        );
        classes.push(check_modularity(config, &probe, firm, m, &pairs)?);
    }
    if classes.is_empty() {
        return Ok(None);
    }
    Ok(Some(ModularityClass::combine(classes)))
}

/// Direction an intermediary is expected to move in a dominance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FirmRole {
    /// Adds branches and cuts concessions.
    Expanding,
    /// Sheds branches and raises concessions.
    Rival,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    /// `psi * df + f * dpsi`, intermediaries by segments.
    pub expression: Vec<Vec<f64>>,
    /// Per cell; `None` where the intermediary is inactive before and after.
    pub cells: Vec<Vec<Option<ConditionVerdict>>>,
    /// Fails if any cell fails, holds if some cell holds, otherwise not
    /// applicable.
    pub per_firm: Vec<ConditionVerdict>,
    /// No intermediary fails and at least one holds.
    pub overall: bool,
}

/// Evaluates `psi * df + f * dpsi` between two profiles, with `f` and `psi`
/// at `pre` and platform sizes taken from `config`.
///
/// An expanding intermediary needs `dn >= 0`, `dc <= 0` and a positive
/// expression; a rival needs `dn <= 0`, `dc >= 0` and a negative one. Cells
/// moving against those premises are not applicable and do not count either
/// way.
pub fn check_dominance(
    config: &MarketConfig,
    pre: &StrategyProfile,
    post: &StrategyProfile,
    roles: &[FirmRole],
) -> Result<DominanceReport> {
    pre.check_feasible(config)?;
    post.check_feasible(config)?;
    if roles.len() != config.num_intermediaries() {
        return Err(Error::domain("one role per intermediary required"));
    }
    let sizes: Vec<usize> = (0..config.num_intermediaries())
        .map(|i| config.platforms.size_of(i))
        .collect();
    let (f0, psi0, _) = attractiveness_matrices(config, pre, &sizes);
    let (f1, psi1, _) = attractiveness_matrices(config, post, &sizes);

    let m_count = config.num_segments();
    let mut expression = vec![vec![0.0; m_count]; roles.len()];
    let mut cells = vec![vec![None; m_count]; roles.len()];
    let mut per_firm = Vec::with_capacity(roles.len());
    for (i, role) in roles.iter().enumerate() {
        let mut any_fail = false;
        let mut any_hold = false;
        for m in 0..m_count {
            let value = psi0[i][m] * (f1[i][m] - f0[i][m]) + f0[i][m] * (psi1[i][m] - psi0[i][m]);
            expression[i][m] = value;
            if pre.branches[i][m] == 0 && post.branches[i][m] == 0 {
                continue;
            }
            let dn = i64::from(post.branches[i][m]) - i64::from(pre.branches[i][m]);
            let dc = post.concessions[i][m] - pre.concessions[i][m];
            let verdict = match role {
                FirmRole::Ignored => ConditionVerdict::NotApplicable,
                FirmRole::Expanding if dn < 0 || dc > 0.0 => ConditionVerdict::NotApplicable,
                FirmRole::Rival if dn > 0 || dc < 0.0 => ConditionVerdict::NotApplicable,
                FirmRole::Expanding => ConditionVerdict::from_bool(value > 0.0),
                FirmRole::Rival => ConditionVerdict::from_bool(value < 0.0),
            };
            any_hold |= verdict == ConditionVerdict::Holds;
            any_fail |= verdict == ConditionVerdict::Fails;
            cells[i][m] = Some(verdict);
        }
        per_firm.push(if any_fail {
            ConditionVerdict::Fails
        } else if any_hold {
            ConditionVerdict::Holds
        } else {
            ConditionVerdict::NotApplicable
        });
    }
    let overall = per_firm.iter().all(|v| *v != ConditionVerdict::Fails)
        && per_firm.iter().any(|v| *v == ConditionVerdict::Holds);
    Ok(DominanceReport {
        expression,
        cells,
        per_firm,
        overall,
    })
}

/// `Q_im |dc_im| > sum_{k != i} Q_km dc_km` in every segment, where `i` is the
/// unique most efficient intermediary and `Q` the baseline volumes.
pub fn check_large_firm_dominance(
    config: &MarketConfig,
    pre: &StrategyProfile,
    post: &StrategyProfile,
    baseline_volumes: &[Vec<f64>],
) -> Result<Vec<bool>> {
    let n_count = config.num_intermediaries();
    if pre.num_firms() != n_count || post.num_firms() != n_count || baseline_volumes.len() != n_count {
        return Err(Error::domain("profiles and volumes must cover every intermediary"));
    }
    let top = config
        .intermediaries
        .iter()
        .map(|p| p.efficiency)
        .fold(f64::NEG_INFINITY, f64::max);
    let leaders: Vec<usize> = (0..n_count)
        .filter(|&i| config.intermediaries[i].efficiency == top)
        .collect();
    if leaders.len() != 1 {
        return Err(Error::Ambiguous(format!(
            "efficiency maximum {top} shared by intermediaries {leaders:?}"
        )));
    }
    let lead = leaders[0];
    Ok((0..config.num_segments())
        .map(|m| {
            let own = baseline_volumes[lead][m] * (post.concessions[lead][m] - pre.concessions[lead][m]).abs();
            let others: f64 = (0..n_count)
                .filter(|&k| k != lead)
                .map(|k| baseline_volumes[k][m] * (post.concessions[k][m] - pre.concessions[k][m]))
                .sum();
            own > others
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::evaluate;
    use crate::test_support::duopoly;

    #[test]
    fn pairs_are_ordered_and_distinct() {
        let p = concession_pairs(10.0, 3);
        assert_eq!(p, vec![(0.0, 5.0), (0.0, 10.0), (5.0, 10.0)]);
    }

    #[test]
    fn local_pairs_stay_in_the_window() {
        let p = local_concession_pairs(2.0, 60.0, 3);
        assert_eq!(p, vec![(0.0, 4.0), (0.0, 8.0), (4.0, 8.0)]);
        for (a, b) in local_concession_pairs(59.0, 60.0, 5) {
            assert!(a >= 53.0 && b <= 60.0 && a < b);
        }
    }

    #[test]
    fn inactive_firm_has_no_class() {
        let config = duopoly();
        let mut profile = StrategyProfile::initial(&config);
        profile.branches[1][0] = 0;
        profile.concessions[1][0] = 0.0;
        assert_eq!(firm_modularity(&config, &profile, 1, 5).unwrap(), None);
        assert!(firm_modularity(&config, &profile, 0, 5).unwrap().is_some());
    }

    #[test]
    fn constant_profit_in_concession_is_indeterminate() {
        // a monopoly's volume does not react to c, and with zero costs the
        // cross difference vanishes identically
        let config = crate::test_support::monopoly(0.0);
        let profile = StrategyProfile::initial(&config);
        let pairs = concession_pairs(50.0, 5);
        assert_eq!(
            check_modularity(&config, &profile, 0, 0, &pairs).unwrap(),
            ModularityClass::Indeterminate
        );
    }

    #[test]
    fn swapping_pair_roles_changes_nothing() {
        let config = duopoly();
        let profile = StrategyProfile::initial(&config);
        let pairs = concession_pairs(60.0, 6);
        let swapped: Vec<_> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        assert_eq!(
            check_modularity(&config, &profile, 0, 0, &pairs).unwrap(),
            check_modularity(&config, &profile, 0, 0, &swapped).unwrap()
        );
    }

    #[test]
    fn modularity_needs_room_for_a_branch() {
        let config = duopoly();
        let mut profile = StrategyProfile::initial(&config);
        profile.branches[0][0] = config.intermediaries[0].branch_cap[0];
        assert!(check_modularity(&config, &profile, 0, 0, &[(0.0, 1.0)]).is_err());
    }

    #[test]
    fn dominance_boundary_cases() {
        let config = duopoly();
        let pre = StrategyProfile::initial(&config);
        let same = check_dominance(&config, &pre, &pre, &[FirmRole::Expanding, FirmRole::Rival]).unwrap();
        assert_eq!(same.per_firm, vec![ConditionVerdict::Fails, ConditionVerdict::Fails]);
        assert!(!same.overall);

        let mut post = pre.clone();
        post.branches[0][0] += 1;
        let grow = check_dominance(&config, &pre, &post, &[FirmRole::Expanding, FirmRole::Ignored]).unwrap();
        assert_eq!(grow.per_firm[0], ConditionVerdict::Holds);
        assert!(grow.expression[0][0] > 0.0);
        assert!(grow.overall);

        let mut wrong = pre.clone();
        wrong.concessions[0][0] += 1.0;
        let r = check_dominance(&config, &pre, &wrong, &[FirmRole::Expanding, FirmRole::Ignored]).unwrap();
        assert_eq!(r.per_firm[0], ConditionVerdict::NotApplicable);
        assert!(!r.overall);

        // a rival moving against the premise is ignored, not counted as a failure
        let mut mixed = post.clone();
        mixed.concessions[1][0] -= 1.0;
        let r = check_dominance(&config, &pre, &mixed, &[FirmRole::Expanding, FirmRole::Rival]).unwrap();
        assert_eq!(r.per_firm[1], ConditionVerdict::NotApplicable);
        assert!(r.overall);
    }

    #[test]
    fn large_firm_dominance_cases() {
        let mut config = duopoly();
        config.intermediaries[0].efficiency = 2.0;
        let pre = StrategyProfile::initial(&config);
        let q = evaluate(&config, &pre).unwrap().transactions;
        assert_eq!(check_large_firm_dominance(&config, &pre, &pre, &q).unwrap(), vec![false]);

        let mut post = pre.clone();
        post.concessions[0][0] -= 5.0;
        post.concessions[1][0] -= 1.0;
        assert_eq!(check_large_firm_dominance(&config, &pre, &post, &q).unwrap(), vec![true]);

        let tied = duopoly();
        assert!(matches!(
            check_large_firm_dominance(&tied, &pre, &post, &q),
            Err(Error::Ambiguous(_))
        ));
    }
}
