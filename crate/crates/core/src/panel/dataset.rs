use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::events::{build_event_dummies, EventBin};
use crate::error::{Error, Result};

/// Outcomes carried by every panel row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    LogNumber,
    PriceConcession,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::LogNumber, Outcome::PriceConcession];

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::LogNumber => "log_number",
            Outcome::PriceConcession => "price_concession",
        }
    }

    pub fn value(&self, row: &PanelRow) -> f64 {
        match self {
            Outcome::LogNumber => row.log_number,
            Outcome::PriceConcession => row.price_concession,
        }
    }

    pub fn lag(&self, row: &PanelRow) -> Option<f64> {
        match self {
            Outcome::LogNumber => row.lag_log_number,
            Outcome::PriceConcession => row.lag_price_concession,
        }
    }
}

/// Which event family a set of dummies belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventFamily {
    /// First focal store within the store radius.
    Entry,
    /// First year the platform consolidation flag is on.
    Consolidation,
}

impl EventFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventFamily::Entry => "entry",
            EventFamily::Consolidation => "consolidation",
        }
    }

    /// Regressor names for the five event bins.
    pub fn term_names(&self) -> [&'static str; 5] {
        match self {
            EventFamily::Entry => ["pre2", "entry", "post1", "post2", "post3"],
            EventFamily::Consolidation => [
                "pre2_treatment",
                "treatment",
                "post1_treatment",
                "post2_treatment",
                "post3_treatment",
            ],
        }
    }

    pub fn term(&self, bin: EventBin) -> &'static str {
        self.term_names()[bin.index()]
    }

    pub fn event_year(&self, row: &PanelRow) -> Option<i32> {
        match self {
            EventFamily::Entry => row.entry_year,
            EventFamily::Consolidation => row.consolidation_year,
        }
    }

    pub fn dummies<'a>(&self, row: &'a PanelRow) -> &'a [u8; 5] {
        match self {
            EventFamily::Entry => &row.entry_dummies,
            EventFamily::Consolidation => &row.consolidation_dummies,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub unit: u32,
    pub business_area: u32,
    pub year: i32,
    pub log_number: f64,
    pub price_concession: f64,
    /// Focal share of nearby stores; `None` when there are none.
    pub density: Option<f64>,
    pub entry_year: Option<i32>,
    pub entry_dummies: [u8; 5],
    pub consolidation_year: Option<i32>,
    pub consolidation_flag: u8,
    pub consolidation_dummies: [u8; 5],
    pub controls: Vec<f64>,
    pub lag_log_number: Option<f64>,
    pub lag_price_concession: Option<f64>,
}

/// A unit-by-year panel, sorted by unit then year.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    rows: Vec<PanelRow>,
    controls: usize,
}

impl PanelDataset {
    /// Sorts, validates and fills the event dummies and lags from the event
    /// years and outcomes.
    pub fn new(mut rows: Vec<PanelRow>) -> Result<Self> {
        rows.sort_by_key(|r| (r.unit, r.year));
        let controls = rows.first().map_or(0, |r| r.controls.len());
        let mut seen = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            if !seen.insert((r.unit, r.year)) {
                return Err(Error::config(
                    format!("rows[{i}]"),
                    format!("duplicate (unit {}, year {})", r.unit, r.year),
                ));
            }
            if r.controls.len() != controls {
                return Err(Error::config(format!("rows[{i}].controls"), "every row needs the same controls"));
            }
            if i > 0 && rows[i - 1].unit == r.unit {
                let p = &rows[i - 1];
                if p.business_area != r.business_area {
                    return Err(Error::config(format!("rows[{i}].business_area"), "a unit stays in one business area"));
                }
                if p.entry_year != r.entry_year || p.consolidation_year != r.consolidation_year {
                    return Err(Error::config(format!("rows[{i}]"), "event years are fixed per unit"));
                }
            }
            let finite = r.log_number.is_finite()
                && r.price_concession.is_finite()
                && r.controls.iter().all(|x| x.is_finite())
                && r.density.is_none_or(|d| (0.0..=1.0).contains(&d));
            if !finite {
                return Err(Error::config(format!("rows[{i}]"), "outcomes and controls finite, density in [0,1]"));
            }
            if r.consolidation_flag > 1 {
                return Err(Error::config(format!("rows[{i}].consolidation_flag"), "must be 0 or 1"));
            }
        }
        let mut panel = Self { rows, controls };
        panel.rebuild_dummies();
        panel.fill_lags();
        Ok(panel)
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_controls(&self) -> usize {
        self.controls
    }

    pub fn control_names(&self) -> Vec<String> {
        (1..=self.controls).map(|k| format!("x{k}")).collect()
    }

    pub fn years(&self) -> Vec<i32> {
        let mut y: Vec<i32> = self.rows.iter().map(|r| r.year).collect();
        y.sort_unstable();
        y.dedup();
        y
    }

    pub fn num_units(&self) -> usize {
        let mut last = None;
        self.rows
            .iter()
            .filter(|r| {
                let new = last != Some(r.unit);
                last = Some(r.unit);
                new
            })
            .count()
    }

    /// Replaces one family's event years (e.g. for a placebo draw) and
    /// recomputes its dummies.
    pub fn with_event_years(&self, family: EventFamily, year_of_unit: impl Fn(u32) -> Option<i32>) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            let e = year_of_unit(r.unit);
            match family {
                EventFamily::Entry => r.entry_year = e,
                EventFamily::Consolidation => r.consolidation_year = e,
            }
        }
        out.rebuild_dummies();
        out
    }

    fn rebuild_dummies(&mut self) {
        let years: Vec<i32> = self.rows.iter().map(|r| r.year).collect();
        let entry: Vec<_> = self.rows.iter().map(|r| r.entry_year).collect();
        let cons: Vec<_> = self.rows.iter().map(|r| r.consolidation_year).collect();
        let e = build_event_dummies(&entry, &years);
        let c = build_event_dummies(&cons, &years);
        for (r, (e, c)) in self.rows.iter_mut().zip(e.into_iter().zip(c)) {
            r.entry_dummies = e;
            r.consolidation_dummies = c;
        }
    }

    /// Lags come from the same unit's previous calendar year; a gap leaves
    /// the lag missing.
    fn fill_lags(&mut self) {
        for i in 0..self.rows.len() {
            let prev = (i > 0)
                .then(|| &self.rows[i - 1])
                .filter(|p| p.unit == self.rows[i].unit && p.year + 1 == self.rows[i].year)
                .map(|p| (p.log_number, p.price_concession));
            self.rows[i].lag_log_number = prev.map(|p| p.0);
            self.rows[i].lag_price_concession = prev.map(|p| p.1);
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "unit",
            "business_area",
            "year",
            "log_number",
            "price_concession",
            "density",
            "entry_year",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(EventFamily::Entry.term_names().iter().map(|s| s.to_string()));
        h.push("consolidation_year".into());
        h.push("consolidation_flag".into());
        h.extend(EventFamily::Consolidation.term_names().iter().map(|s| s.to_string()));
        h.push("lag_log_number".into());
        h.push("lag_price_concession".into());
        h.extend(self.control_names());
        h
    }

    /// Writes the panel as CSV. Floats use the shortest representation that
    /// reads back to the same value, so export then import is the identity.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header()).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec: Vec<String> = vec![
                r.unit.to_string(),
                r.business_area.to_string(),
                r.year.to_string(),
                r.log_number.to_string(),
                r.price_concession.to_string(),
                opt(r.density),
                opt(r.entry_year),
            ];
            rec.extend(r.entry_dummies.iter().map(u8::to_string));
            rec.push(opt(r.consolidation_year));
            rec.push(r.consolidation_flag.to_string());
            rec.extend(r.consolidation_dummies.iter().map(u8::to_string));
            rec.push(opt(r.lag_log_number));
            rec.push(opt(r.lag_price_concession));
            rec.extend(r.controls.iter().map(f64::to_string));
            w.write_record(rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a panel written by [`PanelDataset::write_csv`]. Dummies and lags
    /// are recomputed and must agree with the file.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        const FIXED: usize = 21;
        if header.len() < FIXED {
            return Err(Error::Parse(format!("panel header has {} columns, need at least {FIXED}", header.len())));
        }
        let controls = header.len() - FIXED;
        let template = Self {
            rows: vec![],
            controls,
        };
        if header != template.header() {
            return Err(Error::Parse(format!("unexpected panel header; expected {:?}", template.header())));
        }
        let mut rows = Vec::new();
        let mut declared = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let at = |k: usize| rec.get(k).unwrap_or("");
            let ctx = |k: usize| format!("row {} column `{}`", line + 2, header[k]);
            let f = |k: usize| at(k).parse::<f64>().map_err(|_| Error::Parse(ctx(k)));
            let of = |k: usize| if at(k) == "NA" { Ok(None) } else { f(k).map(Some) };
            let oi = |k: usize| {
                if at(k) == "NA" {
                    Ok(None)
                } else {
                    at(k).parse::<i32>().map(Some).map_err(|_| Error::Parse(ctx(k)))
                }
            };
            let u = |k: usize| at(k).parse::<u32>().map_err(|_| Error::Parse(ctx(k)));
            let d = |k: usize| at(k).parse::<u8>().map_err(|_| Error::Parse(ctx(k)));
            let dummies = |start: usize| -> Result<[u8; 5]> {
                Ok([d(start)?, d(start + 1)?, d(start + 2)?, d(start + 3)?, d(start + 4)?])
            };
            let row = PanelRow {
                unit: u(0)?,
                business_area: u(1)?,
                year: at(2).parse().map_err(|_| Error::Parse(ctx(2)))?,
                log_number: f(3)?,
                price_concession: f(4)?,
                density: of(5)?,
                entry_year: oi(6)?,
                entry_dummies: dummies(7)?,
                consolidation_year: oi(12)?,
                consolidation_flag: d(13)?,
                consolidation_dummies: dummies(14)?,
                lag_log_number: of(19)?,
                lag_price_concession: of(20)?,
                controls: (FIXED..header.len()).map(f).collect::<Result<_>>()?,
            };
            declared.push(row.clone());
            rows.push(row);
        }
        let panel = Self::new(rows)?;
        declared.sort_by_key(|r| (r.unit, r.year));
        for (got, want) in panel.rows.iter().zip(&declared) {
            if got != want {
                return Err(Error::Parse(format!(
                    "unit {} year {}: dummies or lags disagree with the event years and outcomes",
                    want.unit, want.year
                )));
            }
        }
        Ok(panel)
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
