use rayon::prelude::*;
use serde::Serialize;

use super::coexistence::{coexistence_scan, CoexistenceReport};
use super::experiments::{
    consolidation_event, efficiency_shock, group_efficiency_shock, searcher_shock, unique_leader, SearcherKind,
};
use super::report::{ClaimVerdict, ExperimentKind, ExperimentReport};
use super::scenarios;
use crate::error::Result;
use crate::market::MarketConfig;
use crate::solver::SolverSettings;

pub const COEXISTENCE_RATIOS: [f64; 3] = [1.0, 1.5, 2.0];
pub const COEXISTENCE_GAPS: [f64; 2] = [0.0, 0.3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LibraryRun {
    pub experiments: Vec<ExperimentReport>,
    pub coexistence: Vec<CoexistenceReport>,
}

impl LibraryRun {
    /// `(holds, fails, not applicable, informational)` over every claim.
    pub fn tally(&self) -> [usize; 4] {
        let mut t = [0; 4];
        let verdicts = self
            .experiments
            .iter()
            .flat_map(|r| r.all_claims().map(|c| c.verdict))
            .chain(
                self.coexistence
                    .iter()
                    .flat_map(|r| r.rows.iter().flat_map(|row| row.claims.iter().map(|c| c.verdict))),
            );
        for v in verdicts {
            let k = match v {
                ClaimVerdict::Holds => 0,
                ClaimVerdict::Fails => 1,
                ClaimVerdict::NotApplicable => 2,
                ClaimVerdict::Informational => 3,
            };
            t[k] += 1;
        }
        t
    }
}

/// One experiment of a scenario's plan with its shock sizes.
#[derive(Debug, Clone, PartialEq)]
pub enum PlannedExperiment {
    Efficiency(usize, f64),
    Group(Vec<(usize, f64)>),
    Consolidation(Vec<usize>),
    Searcher(usize, SearcherKind, f64),
}

impl PlannedExperiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            PlannedExperiment::Efficiency(..) => ExperimentKind::EfficiencyShock,
            PlannedExperiment::Group(_) => ExperimentKind::GroupEfficiencyShock,
            PlannedExperiment::Consolidation(_) => ExperimentKind::ConsolidationEvent,
            PlannedExperiment::Searcher(..) => ExperimentKind::SearcherShock,
        }
    }
}

/// The experiments run on one scenario, sized from its own parameters.
/// With `null` every shock is zero and consolidation is skipped.
pub fn plan(config: &MarketConfig, null: bool) -> Vec<PlannedExperiment> {
    let n = config.num_intermediaries();
    let scale = if null { 0.0 } else { 1.0 };
    let leader = unique_leader(config).unwrap_or(0);
    let alpha = |i: usize| config.intermediaries[i].efficiency;
    let mut tasks = vec![PlannedExperiment::Efficiency(leader, scale * 0.5 * alpha(leader))];
    if n >= 2 {
        // the same absolute increase for every member
        let group = (0..n.min(2)).map(|i| (i, scale * 0.3 * alpha(leader))).collect();
        tasks.push(PlannedExperiment::Group(group));
    }
    if config.platforms.len() >= 2 && !null {
        let own = config.platforms.platform_of(leader);
        if let Some(partner) = (0..n).find(|&k| config.platforms.platform_of(k) != own) {
            tasks.push(PlannedExperiment::Consolidation(vec![leader, partner]));
        }
    }
    let segment = config.num_segments() / 2;
    let seg = &config.segments[segment];
    let delta = scale * 0.25 * (seg.local_searchers + seg.global_searchers).max(40.0);
    tasks.push(PlannedExperiment::Searcher(segment, SearcherKind::Global, delta));
    tasks.push(PlannedExperiment::Searcher(segment, SearcherKind::Local, delta));
    tasks
}

/// Runs one planned experiment.
pub fn run_planned(scenario: &str, config: &MarketConfig, task: &PlannedExperiment, settings: &SolverSettings) -> Result<ExperimentReport> {
    match task {
        PlannedExperiment::Efficiency(i, d) => efficiency_shock(scenario, config, *i, *d, settings),
        PlannedExperiment::Group(shocks) => group_efficiency_shock(scenario, config, shocks, settings),
        PlannedExperiment::Consolidation(members) => consolidation_event(scenario, config, members, settings),
        PlannedExperiment::Searcher(m, kind, d) => searcher_shock(scenario, config, *m, *kind, *d, settings),
    }
}

fn run_all(library: &[(&str, MarketConfig)], settings: &SolverSettings, null: bool) -> Result<LibraryRun> {
    let jobs: Vec<(&str, &MarketConfig, PlannedExperiment)> = library
        .iter()
        .flat_map(|(id, config)| plan(config, null).into_iter().map(move |t| (*id, config, t)))
        .collect();
    let experiments = jobs
        .par_iter()
        .map(|(id, config, task)| run_planned(id, config, task, settings))
        .collect::<Result<Vec<_>>>()?;
    let coexistence = if null {
        Vec::new()
    } else {
        library
            .par_iter()
            .filter(|(_, c)| c.num_intermediaries() >= 2)
            .map(|(id, c)| coexistence_scan(id, c, &COEXISTENCE_RATIOS, &COEXISTENCE_GAPS, settings))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(LibraryRun {
        experiments,
        coexistence,
    })
}

/// The full experiment plan and coexistence scan on one scenario.
pub fn run_scenario(id: &str, config: &MarketConfig, settings: &SolverSettings) -> Result<LibraryRun> {
    run_all(&[(id, config.clone())], settings, false)
}

/// Every experiment on every shipped scenario, plus the coexistence scans.
pub fn run_library(settings: &SolverSettings) -> Result<LibraryRun> {
    run_all(&scenarios::library(), settings, false)
}

/// The same experiments with every shock set to zero.
pub fn run_null_library(settings: &SolverSettings) -> Result<LibraryRun> {
    run_all(&scenarios::library(), settings, true)
}
