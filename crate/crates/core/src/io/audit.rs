use serde::Serialize;

use crate::error::Result;
use crate::market::MarketConfig;
use crate::solver::{concession_foc_residual, EquilibriumResult};

/// Welfare identity tolerance, relative to `1 + |W|`.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Concession first-order condition tolerance, relative to `max(1, Q)`.
pub const FOC_TOLERANCE: f64 = 1e-5;
const SHARE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub identity_gap: f64,
    /// Largest relative FOC residual over interior cells; `None` when the
    /// equilibrium did not converge or has no interior cell.
    pub max_foc: Option<f64>,
    pub foc_cells: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks accounting and feasibility invariants of a solved market, plus
/// the concession first-order conditions when the solve converged.
pub fn audit_equilibrium(config: &MarketConfig, eq: &EquilibriumResult) -> Result<AuditReport> {
    let mut violations = Vec::new();
    eq.profile.check_feasible(config)?;
    let o = &eq.outcome;
    let identity_gap = o.welfare.identity_gap();
    if !(identity_gap <= IDENTITY_TOLERANCE) {
        violations.push(format!("welfare identity gap {identity_gap:e} > {IDENTITY_TOLERANCE:e}"));
    }
    // shares and coverage are listing counts, bounded by the segment's pool
    for m in 0..config.num_segments() {
        let pool = config.segments[m].listings * (1.0 + SHARE_SLACK);
        let mut total = 0.0;
        for (i, row) in o.shares.iter().enumerate() {
            let s = row[m];
            if !(0.0..=pool).contains(&s) {
                violations.push(format!("share of firm {i} in segment {m} is {s}"));
            }
            total += s;
        }
        if total > pool {
            violations.push(format!("shares in segment {m} sum to {total}"));
        }
        for (p, row) in o.coverage.iter().enumerate() {
            if !(0.0..=pool).contains(&row[m]) {
                violations.push(format!("coverage of platform {p} in segment {m} is {}", row[m]));
            }
        }
    }
    for (i, row) in o.transactions.iter().enumerate() {
        if row.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            violations.push(format!("transactions of firm {i} are negative or not finite"));
        }
    }
    let (mut max_foc, mut foc_cells) = (None::<f64>, 0);
    if eq.converged && !o.saturated {
        for i in 0..config.num_intermediaries() {
            for m in 0..config.num_segments() {
                let r = concession_foc_residual(config, &eq.profile, i, m)?;
                if r.corner {
                    continue;
                }
                foc_cells += 1;
                max_foc = Some(max_foc.map_or(r.relative, |v| v.max(r.relative)));
                if !(r.relative <= FOC_TOLERANCE) {
                    violations.push(format!("concession FOC of firm {i} in segment {m}: {:e}", r.relative));
                }
            }
        }
    }
    Ok(AuditReport {
        identity_gap,
        max_foc,
        foc_cells,
        violations,
    })
}
