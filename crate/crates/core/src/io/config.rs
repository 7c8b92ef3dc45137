//! JSON config files for markets and panel DGPs.
//!
//! Every key is checked: unknown keys are rejected, missing optional keys take
//! their defaults, and the filled-in document can be written back out.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    FormParams, IntermediaryProfile, MarketConfig, Neighbor, PlatformLabel, Platforms, Segment, TransactionTech,
};
use crate::panel::DgpSpec;
use crate::solver::SolverSettings;
use crate::statics::scenarios::COMMISSION;

/// Default branch cap per segment.
pub const DEFAULT_BRANCH_CAP: u32 = 3;
/// Default concession cap as a fraction of the segment's base price.
pub const DEFAULT_CONCESSION_SHARE: f64 = 0.6;

fn default_commission() -> f64 {
    COMMISSION
}

fn default_efficiency() -> f64 {
    1.0
}

fn default_platform() -> PlatformLabel {
    PlatformLabel::Independent
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub base_price: f64,
    pub listings: f64,
    pub local_searchers: f64,
    #[serde(default)]
    pub global_searchers: f64,
    /// Defaults to `1.2 * base_price`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gross_benefit: Option<f64>,
    /// Defaults to `0.2 * base_price`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve_utility: Option<f64>,
    #[serde(default)]
    pub neighbors: Vec<Neighbor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transaction: Option<TransactionTech>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntermediaryFile {
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    /// Per segment; zero everywhere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_cost: Option<Vec<f64>>,
    #[serde(default)]
    pub branch_cost: f64,
    #[serde(default)]
    pub global_convexity: f64,
    #[serde(default = "default_platform")]
    pub platform: PlatformLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_cap: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concession_cap: Option<Vec<f64>>,
}

/// A market config file. Platforms are formed from the intermediaries'
/// labels: all `P_L` firms share one platform, all `P_S` firms another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketFile {
    pub segments: Vec<SegmentFile>,
    pub intermediaries: Vec<IntermediaryFile>,
    #[serde(default)]
    pub spillover: f64,
    #[serde(default = "default_commission")]
    pub commission: f64,
    #[serde(default)]
    pub forms: FormParams,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl MarketFile {
    /// Fills defaults and validates.
    pub fn into_config(self) -> Result<(MarketConfig, SolverSettings)> {
        let m_count = self.segments.len();
        let segments: Vec<Segment> = self
            .segments
            .into_iter()
            .map(|s| Segment {
                base_price: s.base_price,
                listings: s.listings,
                gross_benefit: s.gross_benefit.unwrap_or(1.2 * s.base_price),
                reserve_utility: s.reserve_utility.unwrap_or(0.2 * s.base_price),
                local_searchers: s.local_searchers,
                global_searchers: s.global_searchers,
                neighbors: s.neighbors,
                transaction: s.transaction,
            })
            .collect();
        let intermediaries: Vec<IntermediaryProfile> = self
            .intermediaries
            .into_iter()
            .map(|f| IntermediaryProfile {
                efficiency: f.efficiency,
                entry_cost: f.entry_cost.unwrap_or_else(|| vec![0.0; m_count]),
                branch_cost: f.branch_cost,
                global_convexity: f.global_convexity,
                platform: f.platform,
                branch_cap: f.branch_cap.unwrap_or_else(|| vec![DEFAULT_BRANCH_CAP; m_count]),
                concession_cap: f.concession_cap.unwrap_or_else(|| {
                    segments.iter().map(|s| DEFAULT_CONCESSION_SHARE * s.base_price).collect()
                }),
            })
            .collect();
        let labels: Vec<_> = intermediaries.iter().map(|p| p.platform).collect();
        let config = MarketConfig {
            segments,
            intermediaries,
            spillover: self.spillover,
            commission: self.commission,
            forms: self.forms,
            platforms: Platforms::from_labels(&labels),
        };
        config.validate()?;
        self.solver.validate()?;
        Ok((config, self.solver))
    }

    /// The fully explicit file for a config; loading it gives the config back.
    pub fn from_config(config: &MarketConfig, solver: &SolverSettings) -> Self {
        Self {
            segments: config
                .segments
                .iter()
                .map(|s| SegmentFile {
                    base_price: s.base_price,
                    listings: s.listings,
                    local_searchers: s.local_searchers,
                    global_searchers: s.global_searchers,
                    gross_benefit: Some(s.gross_benefit),
                    reserve_utility: Some(s.reserve_utility),
                    neighbors: s.neighbors.clone(),
                    transaction: s.transaction,
                })
                .collect(),
            intermediaries: config
                .intermediaries
                .iter()
                .map(|p| IntermediaryFile {
                    efficiency: p.efficiency,
                    entry_cost: Some(p.entry_cost.clone()),
                    branch_cost: p.branch_cost,
                    global_convexity: p.global_convexity,
                    platform: p.platform,
                    branch_cap: Some(p.branch_cap.clone()),
                    concession_cap: Some(p.concession_cap.clone()),
                })
                .collect(),
            spillover: config.spillover,
            commission: config.commission,
            forms: config.forms,
            solver: solver.clone(),
        }
    }
}

/// A validated market with its solver settings and the defaults-filled echo.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMarket {
    pub config: MarketConfig,
    pub solver: SolverSettings,
    pub echo: serde_json::Value,
}

/// Parses JSON, reporting the path of the offending key on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let key = if key == "." { "(root)".to_string() } else { key };
        Error::Config {
            key,
            constraint: e.into_inner().to_string(),
        }
    })
}

pub fn parse_market(text: &str) -> Result<LoadedMarket> {
    let file: MarketFile = parse_json(text)?;
    let (config, solver) = file.into_config()?;
    let echo = serde_json::to_value(MarketFile::from_config(&config, &solver))?;
    Ok(LoadedMarket { config, solver, echo })
}

pub fn load_market(path: &Path) -> Result<LoadedMarket> {
    parse_market(&std::fs::read_to_string(path)?)
}

/// A panel DGP spec; absent keys take the [`DgpSpec::default`] values.
pub fn parse_dgp(text: &str) -> Result<DgpSpec> {
    let spec: DgpSpec = parse_json(text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_dgp(path: &Path) -> Result<DgpSpec> {
    parse_dgp(&std::fs::read_to_string(path)?)
}
