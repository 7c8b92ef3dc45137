//! Comparative-statics experiments on solved equilibria.
//!
//! Each experiment solves the market before and after a shock from the same
//! starting profile, evaluates the assumption checkers on the pair and then
//! checks the predicted directions. A prediction is only tested when the
//! assumptions it rests on were verified; otherwise it is reported as not
//! applicable.

mod coexistence;
mod experiments;
mod library;
mod report;
pub mod scenarios;

pub use coexistence::{coexistence_scan, CoexistenceReport, CoexistenceRow};
pub use experiments::{
    consolidation_event, consolidation_fixed_phase, efficiency_shock, group_efficiency_shock, merged_config,
    searcher_shock, unique_leader, FixedStrategyPhase, SearcherKind, MODULARITY_POINTS,
};
pub use library::{
    plan, run_library, run_null_library, run_planned, run_scenario, LibraryRun, PlannedExperiment, COEXISTENCE_GAPS,
    COEXISTENCE_RATIOS,
};
pub use report::{
    fall, rise, welfare_shock_report, AssumptionVerdicts, ClaimCheck, ClaimVerdict, Condition, ExperimentKind,
    ExperimentReport, WelfareDeltas, WelfareStatement, DIRECTION_TOLERANCE,
};
