//! Static primitives of the segmented brokerage market.
//!
//! A market is a set of geographic segments, each with its own listings pool,
//! base price and searcher masses, and a set of intermediaries that place
//! branches and offer price concessions in every segment. Everything here is a
//! pure function of its inputs: effective offline presence, the concession
//! response, attractiveness, proportional listings capture, platform coverage
//! and concentration statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local branch effect `h(n) = n^exponent`, with `h(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresenceForm {
    pub exponent: f64,
}

impl Default for PresenceForm {
    fn default() -> Self {
        Self { exponent: 1.0 }
    }
}

impl PresenceForm {
    pub fn h(&self, n: u32) -> f64 {
        if n == 0 {
            0.0
        } else if self.exponent == 1.0 {
            f64::from(n)
        } else {
            f64::from(n).powf(self.exponent)
        }
    }

    /// Whether `h(n+1) - h(n)` is non-decreasing on `0..=upto`.
    ///
    /// Only recorded as a diagnostic; concave `h` (exponent < 1) fails it.
    pub fn has_increasing_differences(&self, upto: u32) -> bool {
        (0..upto).all(|n| {
            let d0 = self.h(n + 1) - self.h(n);
            let d1 = self.h(n + 2) - self.h(n + 1);
            d1 >= d0 - 1e-12
        })
    }
}

/// Concession response `psi(c, p) = (offset + c)^exponent * (1 + platform_gain * ln p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcessionForm {
    pub offset: f64,
    pub exponent: f64,
    pub platform_gain: f64,
}

impl Default for ConcessionForm {
    fn default() -> Self {
        Self {
            offset: 1.0,
            exponent: 0.5,
            platform_gain: 0.25,
        }
    }
}

/// Transaction technology `tau(x) = min(cap, scale * x^exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransactionTech {
    pub scale: f64,
    pub exponent: f64,
    pub cap: f64,
}

impl Default for TransactionTech {
    fn default() -> Self {
        Self {
            scale: 0.01,
            exponent: 1.0,
            cap: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormParams {
    #[serde(default)]
    pub presence: PresenceForm,
    #[serde(default)]
    pub concession: ConcessionForm,
    #[serde(default)]
    pub transaction: TransactionTech,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Neighbor {
    pub segment: usize,
    pub weight: f64,
}

/// One geographic sub-market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub base_price: f64,
    pub listings: f64,
    pub gross_benefit: f64,
    pub reserve_utility: f64,
    pub local_searchers: f64,
    pub global_searchers: f64,
    pub neighbors: Vec<Neighbor>,
    /// Overrides the market-wide transaction technology in this segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transaction: Option<TransactionTech>,
}

impl Segment {
    /// A segment with welfare primitives at their scenario defaults
    /// (`v = 1.2 mu`, `r = 0.2 mu`) and no neighbours.
    pub fn new(base_price: f64, listings: f64, local_searchers: f64, global_searchers: f64) -> Self {
        Self {
            base_price,
            listings,
            gross_benefit: 1.2 * base_price,
            reserve_utility: 0.2 * base_price,
            local_searchers,
            global_searchers,
            neighbors: Vec::new(),
            transaction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlatformLabel {
    #[serde(rename = "P_L")]
    Large,
    #[serde(rename = "P_S")]
    Small,
    #[serde(rename = "independent")]
    Independent,
}

impl PlatformLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlatformLabel::Large => "P_L",
            PlatformLabel::Small => "P_S",
            PlatformLabel::Independent => "independent",
        }
    }
}

/// Efficiency, costs, caps and platform label of one intermediary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntermediaryProfile {
    pub efficiency: f64,
    /// Fixed cost of being active in each segment.
    pub entry_cost: Vec<f64>,
    /// Cost per branch.
    pub branch_cost: f64,
    /// Coefficient of the convex global term `h2 * (sum_m n_m)^2`.
    pub global_convexity: f64,
    pub platform: PlatformLabel,
    pub branch_cap: Vec<u32>,
    pub concession_cap: Vec<f64>,
}

/// Partition of intermediaries into platforms.
///
/// Independent intermediaries are singleton platforms. Platforms are ordered
/// by their smallest member so the partition has a canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Platforms {
    members: Vec<Vec<usize>>,
    labels: Vec<PlatformLabel>,
    of_firm: Vec<usize>,
}

impl Platforms {
    /// All `P_L` members share one platform, all `P_S` members another.
    pub fn from_labels(labels: &[PlatformLabel]) -> Self {
        let mut groups: Vec<(PlatformLabel, Vec<usize>)> = Vec::new();
        for (i, &label) in labels.iter().enumerate() {
            let slot = match label {
                PlatformLabel::Independent => None,
                _ => groups.iter().position(|(l, _)| *l == label),
            };
            match slot {
                Some(k) => groups[k].1.push(i),
                None => groups.push((label, vec![i])),
            }
        }
        let num_firms = labels.len();
        let (labels, members): (Vec<_>, Vec<_>) = groups.into_iter().unzip();
        Self::assemble(members, labels, num_firms).expect("label grouping is always a partition")
    }

    /// Builds a partition from explicit groups; every firm must appear exactly once.
    pub fn from_groups(num_firms: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let labels = groups
            .iter()
            .map(|g| {
                if g.len() == 1 {
                    PlatformLabel::Independent
                } else {
                    PlatformLabel::Small
                }
            })
            .collect();
        Self::assemble(groups, labels, num_firms)
    }

    fn assemble(members: Vec<Vec<usize>>, labels: Vec<PlatformLabel>, num_firms: usize) -> Result<Self> {
        let mut of_firm = vec![usize::MAX; num_firms];
        let mut order: Vec<(usize, Vec<usize>, PlatformLabel)> = Vec::with_capacity(members.len());
        for (g, label) in members.into_iter().zip(labels) {
            if g.is_empty() {
                return Err(Error::config("platforms", "platform with no members"));
            }
            let mut g = g;
            g.sort_unstable();
            order.push((g[0], g, label));
        }
        order.sort_by_key(|(first, _, _)| *first);
        let mut members = Vec::with_capacity(order.len());
        let mut labels = Vec::with_capacity(order.len());
        for (p, (_, g, label)) in order.into_iter().enumerate() {
            for &i in &g {
                if i >= num_firms {
                    return Err(Error::config("platforms", format!("firm {i} out of range")));
                }
                if of_firm[i] != usize::MAX {
                    return Err(Error::config(
                        "platforms",
                        format!("firm {i} belongs to more than one platform"),
                    ));
                }
                of_firm[i] = p;
            }
            members.push(g);
            labels.push(label);
        }
        if let Some(i) = of_firm.iter().position(|&p| p == usize::MAX) {
            return Err(Error::config("platforms", format!("firm {i} belongs to no platform")));
        }
        Ok(Self {
            members,
            labels,
            of_firm,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self, platform: usize) -> &[usize] {
        &self.members[platform]
    }

    pub fn label(&self, platform: usize) -> PlatformLabel {
        self.labels[platform]
    }

    pub fn platform_of(&self, firm: usize) -> usize {
        self.of_firm[firm]
    }

    /// `|P(i)|`; 1 for an independent intermediary.
    pub fn size_of(&self, firm: usize) -> usize {
        self.members[self.of_firm[firm]].len()
    }

    pub fn num_firms(&self) -> usize {
        self.of_firm.len()
    }

    /// Merges the platforms of all listed firms into one.
    ///
    /// The merged platform is labelled `P_L` when any absorbed platform was,
    /// and `P_S` otherwise.
    pub fn merge(&self, firms: &[usize]) -> Result<Self> {
        let mut absorbed: Vec<usize> = Vec::new();
        for &i in firms {
            if i >= self.num_firms() {
                return Err(Error::domain(format!("firm {i} out of range")));
            }
            let p = self.of_firm[i];
            if !absorbed.contains(&p) {
                absorbed.push(p);
            }
        }
        if absorbed.len() < 2 {
            return Err(Error::NoOp(
                "consolidation set lies inside a single platform".into(),
            ));
        }
        let label = if absorbed.iter().any(|&p| self.labels[p] == PlatformLabel::Large) {
            PlatformLabel::Large
        } else {
            PlatformLabel::Small
        };
        let mut merged: Vec<usize> = absorbed
            .iter()
            .flat_map(|&p| self.members[p].iter().copied())
            .collect();
        merged.sort_unstable();
        let mut groups = vec![merged];
        let mut labels = vec![label];
        for p in 0..self.len() {
            if !absorbed.contains(&p) {
                groups.push(self.members[p].clone());
                labels.push(self.labels[p]);
            }
        }
        Self::assemble(groups, labels, self.num_firms())
    }
}

/// Full description of a market instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    pub segments: Vec<Segment>,
    pub intermediaries: Vec<IntermediaryProfile>,
    /// Cross-segment spillover strength `gamma`.
    pub spillover: f64,
    /// Commission rate `beta`.
    pub commission: f64,
    pub forms: FormParams,
    pub platforms: Platforms,
}

impl MarketConfig {
    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn num_intermediaries(&self) -> usize {
        self.intermediaries.len()
    }

    pub fn transaction_tech(&self, m: usize) -> &TransactionTech {
        self.segments[m]
            .transaction
            .as_ref()
            .unwrap_or(&self.forms.transaction)
    }

    /// Rebuilds the platform partition from the intermediaries' labels.
    pub fn relabel_platforms(&mut self) {
        let labels: Vec<_> = self.intermediaries.iter().map(|p| p.platform).collect();
        self.platforms = Platforms::from_labels(&labels);
    }

    /// Checks every structural invariant. Welfare-only conditions (`v > r`)
    /// are reported by [`MarketConfig::warnings`] instead.
    pub fn validate(&self) -> Result<()> {
        let m_count = self.num_segments();
        let n_count = self.num_intermediaries();
        if m_count == 0 {
            return Err(Error::config("segments", "at least one segment required"));
        }
        if n_count == 0 {
            return Err(Error::config("intermediaries", "at least one intermediary required"));
        }
        if !(self.commission > 0.0 && self.commission < 1.0) {
            return Err(Error::config("commission", "commission in (0,1)"));
        }
        if !(self.spillover >= 0.0 && self.spillover.is_finite()) {
            return Err(Error::config("spillover", "spillover >= 0"));
        }
        let forms = &self.forms;
        if !(forms.presence.exponent > 0.0 && forms.presence.exponent <= 1.0) {
            return Err(Error::config("forms.presence.exponent", "exponent in (0,1]"));
        }
        validate_concession_form(&forms.concession)?;
        validate_tech("forms.transaction", &forms.transaction)?;
        for (m, seg) in self.segments.iter().enumerate() {
            let key = |field: &str| format!("segments[{m}].{field}");
            if !(seg.base_price > 0.0 && seg.base_price.is_finite()) {
                return Err(Error::config(key("base_price"), "base_price > 0"));
            }
            if !(seg.listings > 0.0 && seg.listings.is_finite()) {
                return Err(Error::config(key("listings"), "listings > 0"));
            }
            if !(seg.local_searchers >= 0.0 && seg.local_searchers.is_finite()) {
                return Err(Error::config(key("local_searchers"), "local_searchers >= 0"));
            }
            if !(seg.global_searchers >= 0.0 && seg.global_searchers.is_finite()) {
                return Err(Error::config(key("global_searchers"), "global_searchers >= 0"));
            }
            if !seg.gross_benefit.is_finite() || !seg.reserve_utility.is_finite() {
                return Err(Error::config(key("gross_benefit"), "welfare primitives must be finite"));
            }
            let mut seen = Vec::with_capacity(seg.neighbors.len());
            for nb in &seg.neighbors {
                if nb.segment == m {
                    return Err(Error::config(key("neighbors"), "segment cannot neighbour itself (m in N(m))"));
                }
                if nb.segment >= m_count {
                    return Err(Error::config(
                        key("neighbors"),
                        format!("neighbour index {} out of range", nb.segment),
                    ));
                }
                if !(nb.weight >= 0.0 && nb.weight.is_finite()) {
                    return Err(Error::config(key("neighbors"), "adjacency weight >= 0"));
                }
                if seen.contains(&nb.segment) {
                    return Err(Error::config(key("neighbors"), "duplicate neighbour"));
                }
                seen.push(nb.segment);
            }
            if let Some(t) = &seg.transaction {
                validate_tech(&key("transaction"), t)?;
            }
        }
        for (i, firm) in self.intermediaries.iter().enumerate() {
            let key = |field: &str| format!("intermediaries[{i}].{field}");
            if !(firm.efficiency > 0.0 && firm.efficiency.is_finite()) {
                return Err(Error::config(key("efficiency"), "efficiency > 0"));
            }
            if !(firm.branch_cost >= 0.0) || !(firm.global_convexity >= 0.0) {
                return Err(Error::config(key("branch_cost"), "cost parameters >= 0"));
            }
            for (field, len) in [
                ("entry_cost", firm.entry_cost.len()),
                ("branch_cap", firm.branch_cap.len()),
                ("concession_cap", firm.concession_cap.len()),
            ] {
                if len != m_count {
                    return Err(Error::config(key(field), format!("expected {m_count} entries, got {len}")));
                }
            }
            if firm.entry_cost.iter().any(|&fc| !(fc >= 0.0 && fc.is_finite())) {
                return Err(Error::config(key("entry_cost"), "entry_cost >= 0"));
            }
            if firm.branch_cap.iter().any(|&cap| cap == 0) {
                return Err(Error::config(key("branch_cap"), "branch_cap >= 1"));
            }
            for (m, &cap) in firm.concession_cap.iter().enumerate() {
                if !(cap >= 0.0 && cap < self.segments[m].base_price) {
                    return Err(Error::config(
                        key("concession_cap"),
                        "concession_cap in [0, base_price)",
                    ));
                }
            }
        }
        if self.platforms.num_firms() != n_count {
            return Err(Error::config("platforms", "partition does not cover every intermediary"));
        }
        Ok(())
    }

    /// Non-fatal diagnostics.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (m, seg) in self.segments.iter().enumerate() {
            if seg.gross_benefit <= seg.reserve_utility {
                out.push(format!(
                    "segment {m}: gross_benefit {} <= reserve_utility {}; welfare claims assume v > r",
                    seg.gross_benefit, seg.reserve_utility
                ));
            }
        }
        let top = self
            .intermediaries
            .iter()
            .flat_map(|f| f.branch_cap.iter().copied())
            .max()
            .unwrap_or(0);
        if !self.forms.presence.has_increasing_differences(top) {
            out.push(format!(
                "presence exponent {}: h lacks increasing differences in branches up to {top}",
                self.forms.presence.exponent
            ));
        }
        out
    }
}

fn validate_concession_form(form: &ConcessionForm) -> Result<()> {
    if !(form.offset > 0.0) {
        return Err(Error::config("forms.concession.offset", "offset > 0"));
    }
    if !(form.exponent > 0.0 && form.exponent < 1.0) {
        return Err(Error::config("forms.concession.exponent", "exponent in (0,1)"));
    }
    if !(form.platform_gain > 0.0) {
        return Err(Error::config("forms.concession.platform_gain", "platform_gain > 0"));
    }
    Ok(())
}

fn validate_tech(key: &str, t: &TransactionTech) -> Result<()> {
    if !(t.scale > 0.0) {
        return Err(Error::config(format!("{key}.scale"), "scale > 0"));
    }
    if !(t.exponent >= 1.0) {
        return Err(Error::config(format!("{key}.exponent"), "exponent >= 1 (increasing returns)"));
    }
    if !(t.cap > 0.0 && t.cap <= 1.0) {
        return Err(Error::config(format!("{key}.cap"), "cap in (0,1]"));
    }
    Ok(())
}

/// Per-intermediary, per-segment branches and concessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub branches: Vec<Vec<u32>>,
    pub concessions: Vec<Vec<f64>>,
}

impl StrategyProfile {
    pub fn uniform(num_firms: usize, num_segments: usize, branches: u32, concession: f64) -> Self {
        Self {
            branches: vec![vec![branches; num_segments]; num_firms],
            concessions: vec![vec![concession; num_segments]; num_firms],
        }
    }

    /// The default starting point: one branch everywhere, half the concession cap.
    pub fn initial(config: &MarketConfig) -> Self {
        let branches = config
            .intermediaries
            .iter()
            .map(|p| p.branch_cap.iter().map(|&cap| cap.min(1)).collect())
            .collect();
        let concessions = config
            .intermediaries
            .iter()
            .map(|p| p.concession_cap.iter().map(|&cap| 0.5 * cap).collect())
            .collect();
        Self {
            branches,
            concessions,
        }
    }

    pub fn num_firms(&self) -> usize {
        self.branches.len()
    }

    pub fn check_feasible(&self, config: &MarketConfig) -> Result<()> {
        let (n, m) = (config.num_intermediaries(), config.num_segments());
        if self.branches.len() != n
            || self.concessions.len() != n
            || self.branches.iter().any(|r| r.len() != m)
            || self.concessions.iter().any(|r| r.len() != m)
        {
            return Err(Error::domain(format!("profile shape must be {n}x{m}")));
        }
        for (i, firm) in config.intermediaries.iter().enumerate() {
            for s in 0..m {
                if self.branches[i][s] > firm.branch_cap[s] {
                    return Err(Error::domain(format!(
                        "n[{i}][{s}] = {} exceeds cap {}",
                        self.branches[i][s], firm.branch_cap[s]
                    )));
                }
                let c = self.concessions[i][s];
                if !(c >= 0.0 && c <= firm.concession_cap[s]) {
                    return Err(Error::domain(format!(
                        "c[{i}][{s}] = {c} outside [0, {}]",
                        firm.concession_cap[s]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `f = h(n) + gamma * sum_k w_k h(n_k)` over the neighbouring branch counts.
pub fn effective_presence(
    branches: u32,
    neighbor_branches: &[(u32, f64)],
    spillover: f64,
    form: &PresenceForm,
) -> Result<f64> {
    if !(spillover >= 0.0) {
        return Err(Error::domain("spillover must be >= 0"));
    }
    let mut spill = 0.0;
    for &(n, w) in neighbor_branches {
        if !(w >= 0.0) {
            return Err(Error::domain(format!("adjacency weight {w} < 0")));
        }
        spill += w * form.h(n);
    }
    Ok(form.h(branches) + spillover * spill)
}

/// `psi(c, |P|)`: strictly positive, increasing and concave in `c`,
/// increasing in platform size.
pub fn concession_response(concession: f64, platform_size: usize, form: &ConcessionForm) -> Result<f64> {
    if platform_size == 0 {
        return Err(Error::domain("platform size must be >= 1"));
    }
    if !(concession >= 0.0) {
        return Err(Error::domain(format!("concession {concession} < 0")));
    }
    Ok(psi_unchecked(concession, platform_size, form))
}

#[inline]
pub(crate) fn psi_unchecked(concession: f64, platform_size: usize, form: &ConcessionForm) -> f64 {
    (form.offset + concession).powf(form.exponent) * platform_size_term(platform_size, form)
}

#[inline]
pub(crate) fn platform_size_term(platform_size: usize, form: &ConcessionForm) -> f64 {
    if platform_size == 1 {
        1.0
    } else {
        1.0 + form.platform_gain * (platform_size as f64).ln()
    }
}

/// `R = alpha * f * psi`.
pub fn attractiveness(efficiency: f64, presence: f64, response: f64) -> Result<f64> {
    if !(efficiency > 0.0) || !(presence >= 0.0) || !(response > 0.0) {
        return Err(Error::domain(format!(
            "attractiveness needs alpha > 0, f >= 0, psi > 0 (got {efficiency}, {presence}, {response})"
        )));
    }
    Ok(efficiency * presence * response)
}

/// Proportional listings capture in one segment.
///
/// Intermediaries without branches are removed from both numerator and
/// denominator. If no active intermediary has positive attractiveness every
/// share is zero.
pub fn capture_shares(attractiveness: &[f64], branches: &[u32], listings: f64) -> Vec<f64> {
    debug_assert_eq!(attractiveness.len(), branches.len());
    let total: f64 = attractiveness
        .iter()
        .zip(branches)
        .filter(|(_, &n)| n > 0)
        .map(|(&r, _)| r)
        .sum();
    attractiveness
        .iter()
        .zip(branches)
        .map(|(&r, &n)| {
            if n == 0 || total <= 0.0 {
                0.0
            } else {
                r / total * listings
            }
        })
        .collect()
}

/// `Sigma_m(P)` for every platform (rows) and segment (columns), from an
/// `N x M` share matrix.
pub fn platform_coverage(shares: &[Vec<f64>], platforms: &Platforms) -> Result<Vec<Vec<f64>>> {
    if platforms.num_firms() != shares.len() {
        return Err(Error::config(
            "platforms",
            "membership is not a partition of the intermediaries",
        ));
    }
    let segments = shares.first().map_or(0, Vec::len);
    Ok((0..platforms.len())
        .map(|p| {
            (0..segments)
                .map(|m| platforms.members(p).iter().map(|&i| shares[i][m]).sum())
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HhiBand {
    Low,
    Moderate,
    High,
}

impl HhiBand {
    /// Upper edges are inclusive: `<= 1000` low, `(1000, 2500]` moderate.
    pub fn classify(hhi: f64) -> Self {
        if hhi <= 1000.0 {
            HhiBand::Low
        } else if hhi <= 2500.0 {
            HhiBand::Moderate
        } else {
            HhiBand::High
        }
    }
}

/// Herfindahl-Hirschman index of percentage shares.
pub fn hhi(shares_pct: &[f64]) -> Result<(f64, HhiBand)> {
    if shares_pct.iter().any(|&s| !(s >= 0.0)) {
        return Err(Error::domain("shares must be >= 0"));
    }
    let total: f64 = shares_pct.iter().sum();
    if (total - 100.0).abs() > 1e-9 {
        return Err(Error::domain(format!("shares sum to {total}, expected 100")));
    }
    let value: f64 = shares_pct.iter().map(|s| s * s).sum();
    Ok((value, HhiBand::classify(value)))
}
