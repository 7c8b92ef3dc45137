//! Difference-in-differences, density and placebo estimators on a panel.
//!
//! Every regression absorbs unit and business-area-by-year fixed effects and
//! clusters by business area.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::dataset::{EventFamily, Outcome, PanelDataset, PanelRow};
use super::dgp::{generate_panel, DgpSpec};
use super::events::EventBin;
use super::regression::{fe_regress, FeProblem, Groups, RegressionResult};
use crate::error::{Error, Result};
use crate::seeding::{sub_seed, task_rng};

/// Regresses `outcome` on the named regressors over the selected rows, plus
/// the panel controls when `controls` is set.
pub fn fe_regress_panel(
    panel: &PanelDataset,
    outcome: Outcome,
    rows: &[usize],
    regressors: Vec<(String, Vec<f64>)>,
    controls: bool,
) -> Result<RegressionResult> {
    let data = panel.rows();
    let pick = |f: &dyn Fn(&PanelRow) -> f64| -> Vec<f64> { rows.iter().map(|&i| f(&data[i])).collect() };
    let mut regs = regressors;
    if controls {
        for (k, name) in panel.control_names().into_iter().enumerate() {
            regs.push((name, pick(&|r| r.controls[k])));
        }
    }
    let units: Vec<u32> = rows.iter().map(|&i| data[i].unit).collect();
    let cells: Vec<(u32, i32)> = rows.iter().map(|&i| (data[i].business_area, data[i].year)).collect();
    let areas: Vec<u32> = rows.iter().map(|&i| data[i].business_area).collect();
    fe_regress(&FeProblem {
        y: pick(&|r| outcome.value(r)),
        regressors: regs,
        fixed_effects: vec![Groups::from_keys(&units), Groups::from_keys(&cells)],
        clusters: Groups::from_keys(&areas),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DidEstimate {
    pub family: EventFamily,
    pub outcome: Outcome,
    /// Coefficients on the event bins, the year before the event omitted.
    pub event_study: RegressionResult,
    /// Coefficient on treated-after-event, the unit and period main effects
    /// being absorbed by the fixed effects.
    pub static_twfe: RegressionResult,
}

/// Name of the static treated-after-event regressor.
pub fn static_term(family: EventFamily) -> &'static str {
    match family {
        EventFamily::Entry => "entry_x_post",
        EventFamily::Consolidation => "treatment_x_post",
    }
}

fn all_rows(panel: &PanelDataset) -> Vec<usize> {
    (0..panel.len()).collect()
}

fn event_columns(panel: &PanelDataset, family: EventFamily, rows: &[usize]) -> Vec<(String, Vec<f64>)> {
    EventBin::ALL
        .iter()
        .map(|&bin| {
            let col = rows
                .iter()
                .map(|&i| f64::from(family.dummies(&panel.rows()[i])[bin.index()]))
                .collect();
            (family.term(bin).to_string(), col)
        })
        .collect()
}

fn post_column(panel: &PanelDataset, family: EventFamily, rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .map(|&i| {
            let r = &panel.rows()[i];
            f64::from(u8::from(family.event_year(r).is_some_and(|e| r.year >= e)))
        })
        .collect()
}

/// Static treated-after-event regression only.
pub fn static_did(panel: &PanelDataset, family: EventFamily, outcome: Outcome) -> Result<RegressionResult> {
    let rows = all_rows(panel);
    let post = post_column(panel, family, &rows);
    fe_regress_panel(panel, outcome, &rows, vec![(static_term(family).to_string(), post)], true)
}

/// Event-study and static regressions for one event family.
pub fn did_estimate(panel: &PanelDataset, family: EventFamily, outcome: Outcome) -> Result<DidEstimate> {
    let rows = all_rows(panel);
    let event_study = fe_regress_panel(panel, outcome, &rows, event_columns(panel, family, &rows), true)?;
    let static_twfe = static_did(panel, family, outcome)?;
    Ok(DidEstimate {
        family,
        outcome,
        event_study,
        static_twfe,
    })
}

pub fn did_entry_estimate(panel: &PanelDataset, outcome: Outcome) -> Result<DidEstimate> {
    did_estimate(panel, EventFamily::Entry, outcome)
}

pub fn did_consolidation_estimate(panel: &PanelDataset, outcome: Outcome) -> Result<DidEstimate> {
    did_estimate(panel, EventFamily::Consolidation, outcome)
}

/// Regression of the outcome on the focal store share.
pub fn density_regression(panel: &PanelDataset, outcome: Outcome) -> Result<(RegressionResult, usize)> {
    let rows: Vec<usize> = (0..panel.len()).filter(|&i| panel.rows()[i].density.is_some()).collect();
    let dropped = panel.len() - rows.len();
    let d = rows.iter().map(|&i| panel.rows()[i].density.unwrap_or(0.0)).collect();
    let r = fe_regress_panel(panel, outcome, &rows, vec![("density".to_string(), d)], true)?;
    Ok((r, dropped))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicEstimate {
    pub outcome: Outcome,
    pub result: RegressionResult,
    /// Rows without the previous year's outcome (first year or a gap).
    pub dropped_no_lag: usize,
    /// Rows without any store nearby.
    pub dropped_no_density: usize,
}

/// Lagged-outcome regression with density-by-year interactions.
///
/// Rows need the previous calendar year of the same unit, so each unit's
/// first year drops out and with it the first panel year's interaction.
pub fn dynamic_density_regression(panel: &PanelDataset, outcome: Outcome) -> Result<DynamicEstimate> {
    let data = panel.rows();
    let years = panel.years();
    let mut rows = Vec::new();
    let (mut no_lag, mut no_density) = (0, 0);
    for (i, r) in data.iter().enumerate() {
        if outcome.lag(r).is_none() {
            no_lag += 1;
        } else if r.density.is_none() {
            no_density += 1;
        } else {
            rows.push(i);
        }
    }
    if rows.is_empty() {
        return Err(Error::Estimation("no rows with a lagged outcome and a density".into()));
    }
    let mut regs = vec![(
        "lag".to_string(),
        rows.iter().map(|&i| outcome.lag(&data[i]).unwrap_or(0.0)).collect(),
    )];
    for &year in years.iter().skip(1) {
        let col = rows
            .iter()
            .map(|&i| if data[i].year == year { data[i].density.unwrap_or(0.0) } else { 0.0 })
            .collect();
        regs.push((format!("density_x_{year}"), col));
    }
    let result = fe_regress_panel(panel, outcome, &rows, regs, true)?;
    Ok(DynamicEstimate {
        outcome,
        result,
        dropped_no_lag: no_lag,
        dropped_no_density: no_density,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceboOutcome {
    pub outcome: Outcome,
    /// t statistic of the static coefficient in each replication.
    pub t_stats: Vec<f64>,
    /// Share with |t| > 1.645.
    pub reject_10: f64,
    /// Share with |t| > 1.96.
    pub reject_05: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceboReport {
    pub family: EventFamily,
    pub reps: usize,
    pub outcomes: Vec<PlaceboOutcome>,
}

/// Re-estimates the static DID with the units' event years shuffled across
/// units (and so across business areas) `n_reps` times.
pub fn placebo_test(panel: &PanelDataset, family: EventFamily, n_reps: usize, seed: u64) -> Result<PlaceboReport> {
    if n_reps == 0 {
        return Ok(PlaceboReport {
            family,
            reps: 0,
            outcomes: Vec::new(),
        });
    }
    let mut units: Vec<(u32, Option<i32>)> = panel.rows().iter().map(|r| (r.unit, family.event_year(r))).collect();
    units.dedup();
    let ids: Vec<u32> = units.iter().map(|u| u.0).collect();
    let labels: Vec<Option<i32>> = units.iter().map(|u| u.1).collect();
    let per_rep: Vec<Vec<f64>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = task_rng(seed, &format!("placebo/{}/{rep}", family.as_str()));
            let mut shuffled = labels.clone();
            shuffled.shuffle(&mut rng);
            let draw = panel.with_event_years(family, |u| {
                let k = ids.binary_search(&u).expect("unit from this panel");
                shuffled[k]
            });
            Outcome::ALL
                .iter()
                .map(|&o| {
                    let r = static_did(&draw, family, o)?;
                    Ok(r.term(static_term(family)).map_or(f64::NAN, |e| e.t_stat))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let outcomes = Outcome::ALL
        .iter()
        .enumerate()
        .map(|(k, &outcome)| {
            let t: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            let share = |c: f64| t.iter().filter(|x| x.abs() > c).count() as f64 / t.len() as f64;
            PlaceboOutcome {
                outcome,
                reject_10: share(1.645),
                reject_05: share(1.96),
                t_stats: t,
            }
        })
        .collect();
    Ok(PlaceboReport {
        family,
        reps: n_reps,
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub family: EventFamily,
    pub outcome: Outcome,
    pub term: String,
    pub truth: f64,
    pub reps: usize,
    pub covered: usize,
    pub mean_estimate: f64,
    pub mean_std_error: f64,
}

impl CoverageRow {
    pub fn rate(&self) -> f64 {
        self.covered as f64 / self.reps as f64
    }
}

/// Monte Carlo coverage of the event-study confidence intervals for every
/// bin the spec sets for `family`. Replication `r` uses the sub-seed of
/// `coverage/<family>/<r>`.
pub fn coverage_study(
    spec: &DgpSpec,
    family: EventFamily,
    reps: usize,
    seed: u64,
    level: f64,
) -> Result<Vec<CoverageRow>> {
    spec.validate()?;
    let truths: Vec<(Outcome, EventBin, f64)> = Outcome::ALL
        .iter()
        .flat_map(|&o| {
            let e = match family {
                EventFamily::Entry => spec.outcome(o).entry_effects,
                EventFamily::Consolidation => spec.outcome(o).consolidation_effects,
            };
            EventBin::ALL.iter().filter_map(move |&b| e.get(b).map(|v| (o, b, v)))
        })
        .collect();
    let draws: Vec<Vec<(f64, f64, bool)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let s = sub_seed(seed, &format!("coverage/{}/{rep}", family.as_str()));
            let g = generate_panel(spec, s)?;
            let mut fits = Vec::new();
            for &o in &Outcome::ALL {
                fits.push((o, did_estimate(&g.panel, family, o)?.event_study));
            }
            truths
                .iter()
                .map(|&(o, bin, truth)| {
                    let fit = &fits.iter().find(|f| f.0 == o).expect("fitted").1;
                    let term = family.term(bin);
                    let e = fit
                        .term(term)
                        .ok_or_else(|| Error::Estimation(format!("`{term}` dropped in replication {rep}")))?;
                    let (lo, hi) = fit.confidence_interval(term, level).expect("present");
                    Ok((e.estimate, e.std_error, lo <= truth && truth <= hi))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(truths
        .iter()
        .enumerate()
        .map(|(k, &(outcome, bin, truth))| {
            let col: Vec<&(f64, f64, bool)> = draws.iter().map(|d| &d[k]).collect();
            let m = col.len().max(1) as f64;
            CoverageRow {
                family,
                outcome,
                term: family.term(bin).to_string(),
                truth,
                reps,
                covered: col.iter().filter(|c| c.2).count(),
                mean_estimate: col.iter().map(|c| c.0).sum::<f64>() / m,
                mean_std_error: col.iter().map(|c| c.1).sum::<f64>() / m,
            }
        })
        .collect())
}
