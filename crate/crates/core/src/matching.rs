//! Searcher allocation and the transaction technology.
//!
//! Local searchers in segment `m` pick a platform in proportion to its coverage
//! in `m`; global searchers in proportion to its coverage summed over `m` and
//! the neighbours of `m`. Allocations are real-valued.

use crate::error::{Error, Result};
use crate::market::{Segment, TransactionTech};

/// Searchers allocated to each platform (rows) in each segment (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub local: Vec<Vec<f64>>,
    pub global: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn total(&self, platform: usize, segment: usize) -> f64 {
        self.local[platform][segment] + self.global[platform][segment]
    }
}

/// Splits `lambda^L` and `lambda^G` of every segment across platforms.
///
/// A segment whose denominator is zero allocates nothing of that searcher type.
pub fn allocate_searchers(coverage: &[Vec<f64>], segments: &[Segment]) -> Allocation {
    let platforms = coverage.len();
    let mut local = vec![vec![0.0; segments.len()]; platforms];
    let mut global = vec![vec![0.0; segments.len()]; platforms];
    let mut reach = vec![0.0; platforms];
    for (m, seg) in segments.iter().enumerate() {
        let local_total: f64 = coverage.iter().map(|row| row[m]).sum();
        if local_total > 0.0 {
            for p in 0..platforms {
                local[p][m] = seg.local_searchers * coverage[p][m] / local_total;
            }
        }
        for (p, r) in reach.iter_mut().enumerate() {
            *r = coverage[p][m] + seg.neighbors.iter().map(|nb| coverage[p][nb.segment]).sum::<f64>();
        }
        let global_total: f64 = reach.iter().sum();
        if global_total > 0.0 {
            for p in 0..platforms {
                global[p][m] = seg.global_searchers * reach[p] / global_total;
            }
        }
    }
    Allocation { local, global }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchProbability {
    pub value: f64,
    /// The cap binds; `x * tau(x)` is no longer convex beyond this point.
    pub saturated: bool,
}

pub fn transaction_probability(searchers: f64, tech: &TransactionTech) -> Result<MatchProbability> {
    if !(searchers >= 0.0) {
        return Err(Error::domain(format!("searcher mass {searchers} < 0")));
    }
    Ok(tau_unchecked(searchers, tech))
}

#[inline]
pub(crate) fn tau_unchecked(searchers: f64, tech: &TransactionTech) -> MatchProbability {
    let raw = if tech.exponent == 1.0 {
        tech.scale * searchers
    } else {
        tech.scale * searchers.powf(tech.exponent)
    };
    if raw > tech.cap {
        MatchProbability {
            value: tech.cap,
            saturated: true,
        }
    } else {
        MatchProbability {
            value: raw,
            saturated: false,
        }
    }
}

/// `Q_im = x tau(x) sigma_im / Sigma_m(P(i))` with `x = nu^L + nu^G`.
///
/// Returns the volume and whether the technology saturated.
pub fn transactions(
    local: f64,
    global: f64,
    share: f64,
    platform_coverage: f64,
    tech: &TransactionTech,
) -> (f64, bool) {
    if platform_coverage <= 0.0 || share <= 0.0 {
        return (0.0, false);
    }
    let x = local + global;
    let tau = tau_unchecked(x, tech);
    (x * tau.value * share / platform_coverage, tau.saturated)
}

/// Row sums `Q_i = sum_m Q_im`.
pub fn total_transactions(volumes: &[Vec<f64>]) -> Vec<f64> {
    volumes.iter().map(|row| row.iter().sum()).collect()
}
