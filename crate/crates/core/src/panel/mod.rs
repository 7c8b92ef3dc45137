//! Synthetic store geography, panel generation and fixed-effects estimation.

mod dataset;
mod dgp;
mod did;
mod events;
mod qr;
mod regression;
mod spatial;

pub use dataset::{EventFamily, Outcome, PanelDataset, PanelRow};
pub use dgp::{
    generate_geography, generate_panel, DgpSpec, GeneratedPanel, GeoSpec, OutcomeSpec, CONSOLIDATION_CONCESSION,
    CONSOLIDATION_LOG_NUMBER, ENTRY_CONCESSION, ENTRY_LOG_NUMBER,
};
pub use did::{
    coverage_study, density_regression, did_consolidation_estimate, did_entry_estimate, did_estimate,
    dynamic_density_regression, fe_regress_panel, placebo_test, static_did, static_term, CoverageRow, DidEstimate,
    DynamicEstimate, PlaceboOutcome, PlaceboReport,
};
pub use events::{build_event_dummies, EventBin, EventEffects};
pub use qr::PivotedQr;
pub use regression::{
    demean, fe_regress, FeProblem, Groups, RegressionResult, TermEstimate, DEMEAN_TOLERANCE, PIVOT_TOLERANCE,
};
pub use spatial::{
    consolidation_flag, Brand, ConsolidationFlag, Neighborhood, Store, StoreFilter, StoreMap, CONSOLIDATION_RATIO,
    CONSOLIDATION_START_YEAR, STORE_RADIUS,
};
