//! Segmented brokerage markets: model primitives, equilibrium search,
//! comparative statics and panel estimation.

pub mod economics;
pub mod error;
pub mod io;
pub mod market;
pub mod matching;
pub mod outcome;
pub mod panel;
pub mod seeding;
pub mod solver;
pub mod statics;

pub use error::{Error, Result};
pub use market::{MarketConfig, StrategyProfile};
pub use outcome::{evaluate, MarketOutcome};
