//! Best responses, Nash equilibria and the assumption checkers.
//!
//! Branch vectors are enumerated exhaustively under a budget. For each branch
//! vector the concessions are optimised by coordinate ascent, one bounded
//! line search per active segment, repeated until the whole vector settles.

mod assumptions;
mod best_response;
mod foc;
pub mod golden;
mod nash;

use serde::{Deserialize, Serialize};

pub use assumptions::{
    check_dominance, check_large_firm_dominance, check_modularity, concession_pairs, firm_modularity,
    ConditionVerdict, DominanceReport, FirmRole, ModularityClass,
};
pub use best_response::{best_response, BestResponse};
pub use foc::{concession_foc_residual, FocResidual};
pub use nash::{
    epsilon_nash_verify, iterated_best_response, max_unilateral_gain, solve, EquilibriumResult, NashVerdict,
};

/// Tuning knobs for the equilibrium search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Sup-norm on `(n / n_cap, c / c_cap)` between sweeps.
    pub strategy_tolerance: f64,
    pub max_sweeps: usize,
    /// Bracket width at which a concession line search stops.
    pub line_search_tolerance: f64,
    /// Coarse scan cells before each golden-section refinement.
    pub line_search_scan: usize,
    /// Upper bound on coordinate-ascent rounds per branch vector.
    pub coordinate_rounds: usize,
    /// Oracle concession grid step as a fraction of the cap.
    pub oracle_grid_fraction: f64,
    /// Number of recent profiles remembered for cycle detection.
    pub cycle_memory: usize,
    /// Branch vectors a single best response may enumerate.
    pub enumeration_budget: u64,
    /// Deviations per intermediary the epsilon-Nash oracle may enumerate.
    pub oracle_budget: u64,
    /// Extra starts with perturbed concessions used to flag multiplicity.
    pub multistart: usize,
    /// Relative unilateral gain below which a converged profile is reported as Nash.
    pub report_epsilon: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            strategy_tolerance: 1e-8,
            max_sweeps: 500,
            line_search_tolerance: 1e-9,
            line_search_scan: 16,
            coordinate_rounds: 200,
            oracle_grid_fraction: 1e-3,
            cycle_memory: 50,
            enumeration_budget: 20_000,
            oracle_budget: 5_000_000,
            multistart: 3,
            report_epsilon: 1e-6,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        for (key, v) in [
            ("solver.strategy_tolerance", self.strategy_tolerance),
            ("solver.line_search_tolerance", self.line_search_tolerance),
            ("solver.oracle_grid_fraction", self.oracle_grid_fraction),
            ("solver.report_epsilon", self.report_epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "tolerance > 0"));
            }
        }
        if self.oracle_grid_fraction > 1.0 {
            return Err(Error::config("solver.oracle_grid_fraction", "fraction <= 1"));
        }
        for (key, v) in [
            ("solver.max_sweeps", self.max_sweeps as u64),
            ("solver.line_search_scan", self.line_search_scan as u64),
            ("solver.coordinate_rounds", self.coordinate_rounds as u64),
            ("solver.cycle_memory", self.cycle_memory as u64),
            ("solver.enumeration_budget", self.enumeration_budget),
            ("solver.oracle_budget", self.oracle_budget),
        ] {
            if v < 1 {
                return Err(Error::config(key, "cap >= 1"));
            }
        }
        Ok(())
    }
}
