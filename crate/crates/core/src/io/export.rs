//! Result CSVs with fixed column orders.
//!
//! Floats carry 12 significant digits in `%g` style. Every writer emits its
//! header even when there are no rows.

use std::io::Write;

use crate::error::{Error, Result};
use crate::market::MarketConfig;
use crate::panel::{CoverageRow, PlaceboReport, RegressionResult};
use crate::solver::EquilibriumResult;
use crate::statics::{CoexistenceReport, ExperimentReport};

pub const EQUILIBRIUM_COLUMNS: [&str; 8] = ["firm", "segment", "n", "c", "R", "sigma", "Q", "pi"];
pub const WELFARE_COLUMNS: [&str; 6] = ["segment", "buyer_surplus", "seller_surplus", "fee_revenue", "cost", "welfare"];
pub const EXPERIMENT_COLUMNS: [&str; 10] = [
    "scenario",
    "experiment",
    "shock",
    "pre_converged",
    "post_converged",
    "claim",
    "verdict",
    "margin",
    "conditions",
    "statement",
];
pub const COEXISTENCE_COLUMNS: [&str; 9] = [
    "scenario",
    "efficiency_ratio",
    "cost_gap",
    "converged",
    "dominance_holds",
    "claim",
    "verdict",
    "margin",
    "conditions",
];
pub const REGRESSION_COLUMNS: [&str; 5] = ["term", "estimate", "se", "t", "p"];
pub const PLACEBO_COLUMNS: [&str; 5] = ["family", "outcome", "reps", "reject_10", "reject_05"];
pub const COVERAGE_COLUMNS: [&str; 9] = [
    "family",
    "outcome",
    "term",
    "truth",
    "reps",
    "covered",
    "rate",
    "mean_estimate",
    "mean_se",
];

/// `%.12g`: 12 significant digits, trailing zeros trimmed, exponent form
/// outside `[1e-4, 1e12)`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    Ok(w)
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// One row per intermediary and segment. `pi` is the intermediary's total
/// profit, repeated on each of its rows.
pub fn write_equilibrium_csv<W: Write>(out: W, result: &EquilibriumResult) -> Result<()> {
    let mut w = writer(out, &EQUILIBRIUM_COLUMNS)?;
    let (p, o) = (&result.profile, &result.outcome);
    for i in 0..p.num_firms() {
        for m in 0..p.branches[i].len() {
            w.write_record([
                i.to_string(),
                m.to_string(),
                p.branches[i][m].to_string(),
                fmt_float(p.concessions[i][m]),
                fmt_float(o.attractiveness[i][m]),
                fmt_float(o.shares[i][m]),
                fmt_float(o.transactions[i][m]),
                fmt_float(o.profits[i]),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(w)
}

/// Per-segment surplus rows, then a `total` row carrying cost and welfare.
pub fn write_welfare_csv<W: Write>(out: W, config: &MarketConfig, result: &EquilibriumResult) -> Result<()> {
    let mut w = writer(out, &WELFARE_COLUMNS)?;
    let r = &result.outcome.welfare;
    for m in 0..config.num_segments() {
        w.write_record([
            m.to_string(),
            fmt_float(r.buyer_surplus[m]),
            fmt_float(r.seller_surplus[m]),
            fmt_float(r.fee_revenue[m]),
            String::new(),
            String::new(),
        ])
        .map_err(csv_error)?;
    }
    w.write_record([
        "total".to_string(),
        fmt_float(r.buyer_total),
        fmt_float(r.seller_total),
        fmt_float(r.fee_total),
        fmt_float(r.total_cost),
        fmt_float(r.total_welfare),
    ])
    .map_err(csv_error)?;
    finish(w)
}

fn conditions(c: &[crate::statics::Condition]) -> String {
    c.iter()
        .map(|c| format!("{}={}", c.name, c.value))
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per claim, welfare claims after the direction claims.
pub fn write_experiment_csv<W: Write>(out: W, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = writer(out, &EXPERIMENT_COLUMNS)?;
    for r in reports {
        for c in r.all_claims() {
            w.write_record([
                r.scenario.clone(),
                r.kind.as_str().to_string(),
                r.shock.clone(),
                r.pre.converged.to_string(),
                r.post.converged.to_string(),
                c.id.clone(),
                c.verdict.as_str().to_string(),
                fmt_float(c.margin),
                conditions(&c.conditions),
                c.statement.clone(),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(w)
}

pub fn write_coexistence_csv<W: Write>(out: W, reports: &[CoexistenceReport]) -> Result<()> {
    let mut w = writer(out, &COEXISTENCE_COLUMNS)?;
    for r in reports {
        for row in &r.rows {
            for c in &row.claims {
                w.write_record([
                    r.scenario.clone(),
                    fmt_float(row.efficiency_ratio),
                    fmt_float(row.cost_gap),
                    row.equilibrium.converged.to_string(),
                    row.dominance_holds.to_string(),
                    c.id.clone(),
                    c.verdict.as_str().to_string(),
                    fmt_float(c.margin),
                    conditions(&c.conditions),
                ])
                .map_err(csv_error)?;
            }
        }
    }
    finish(w)
}

pub fn write_regression_csv<W: Write>(out: W, result: &RegressionResult) -> Result<()> {
    let mut w = writer(out, &REGRESSION_COLUMNS)?;
    for t in result.estimates() {
        w.write_record([
            t.term,
            fmt_float(t.estimate),
            fmt_float(t.std_error),
            fmt_float(t.t_stat),
            fmt_float(t.p_value),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

pub fn write_placebo_csv<W: Write>(out: W, reports: &[PlaceboReport]) -> Result<()> {
    let mut w = writer(out, &PLACEBO_COLUMNS)?;
    for r in reports {
        for o in &r.outcomes {
            w.write_record([
                r.family.as_str().to_string(),
                o.outcome.as_str().to_string(),
                r.reps.to_string(),
                fmt_float(o.reject_10),
                fmt_float(o.reject_05),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(w)
}

pub fn write_coverage_csv<W: Write>(out: W, rows: &[CoverageRow]) -> Result<()> {
    let mut w = writer(out, &COVERAGE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.family.as_str().to_string(),
            r.outcome.as_str().to_string(),
            r.term.clone(),
            fmt_float(r.truth),
            r.reps.to_string(),
            r.covered.to_string(),
            fmt_float(r.rate()),
            fmt_float(r.mean_estimate),
            fmt_float(r.mean_std_error),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}
