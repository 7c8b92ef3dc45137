//! Synthetic geography and panel generation with known treatment effects.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::dataset::{PanelDataset, PanelRow};
use super::events::{EventBin, EventEffects};
use super::spatial::{Brand, Neighborhood, Store, StoreFilter, StoreMap, STORE_RADIUS};
use crate::error::{Error, Result};
use crate::seeding::task_rng;

/// Entry effects on log transaction numbers.
pub const ENTRY_LOG_NUMBER: EventEffects = effects(0.096, 0.052, 0.013, 0.014);
/// Entry effects on price concessions.
pub const ENTRY_CONCESSION: EventEffects = effects(-0.011, -0.009, -0.008, -0.006);
/// Consolidation effects on log transaction numbers.
pub const CONSOLIDATION_LOG_NUMBER: EventEffects = effects(0.0, 0.058, 0.059, 0.027);
/// Consolidation effects on price concessions.
pub const CONSOLIDATION_CONCESSION: EventEffects = effects(-0.009, -0.009, -0.010, -0.010);

const fn effects(event: f64, post1: f64, post2: f64, post3: f64) -> EventEffects {
    EventEffects {
        pre2: None,
        event: Some(event),
        post1: Some(post1),
        post2: Some(post2),
        post3: Some(post3),
    }
}

/// Business areas are square blocks on a grid; neighbourhoods and rival
/// stores are scattered uniformly inside their block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeoSpec {
    pub business_areas: u32,
    pub neighborhoods_per_area: u32,
    /// Side of a business-area block, meters.
    pub area_side: f64,
    /// Mean number of rival stores per block.
    pub rival_stores_per_area: f64,
    /// Chance a rival store is listed on the platform.
    pub listed_share: f64,
    /// Chance the focal brand never enters a block.
    pub never_entered_share: f64,
    /// Chance the focal brand was already in a block before the panel.
    pub early_entry_share: f64,
    /// Mean number of focal stores opened, beyond the first, in the entry year.
    pub initial_focal_stores: f64,
    /// Yearly chance of another focal store after entry.
    pub focal_growth: f64,
}

impl Default for GeoSpec {
    fn default() -> Self {
        Self {
            business_areas: 100,
            neighborhoods_per_area: 20,
            area_side: 1200.0,
            rival_stores_per_area: 8.0,
            listed_share: 0.6,
            never_entered_share: 0.25,
            early_entry_share: 0.1,
            initial_focal_stores: 1.0,
            focal_growth: 0.3,
        }
    }
}

/// One outcome's data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutcomeSpec {
    pub entry_effects: EventEffects,
    pub consolidation_effects: EventEffects,
    /// One per control.
    pub control_coefs: Vec<f64>,
    pub mean: f64,
    pub unit_sd: f64,
    /// Business-area-by-year shocks.
    pub cell_sd: f64,
    pub error_sd: f64,
    /// Error variance share of a business-area-by-year component with a
    /// unit-specific loading, so errors correlate within business areas.
    pub cluster_corr: f64,
    /// AR(1) coefficient of the idiosyncratic error within a unit.
    pub serial_corr: f64,
    /// Coefficient on the previous year's outcome.
    pub lag: f64,
    /// Effect of the focal store share in each panel year; empty for none.
    pub density_effects: Vec<f64>,
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        Self {
            entry_effects: EventEffects::default(),
            consolidation_effects: EventEffects::default(),
            control_coefs: vec![0.1, -0.05],
            mean: 0.0,
            unit_sd: 0.5,
            cell_sd: 0.1,
            error_sd: 0.15,
            cluster_corr: 0.3,
            serial_corr: 0.3,
            lag: 0.0,
            density_effects: Vec::new(),
        }
    }
}

impl OutcomeSpec {
    fn validate(&self, key: &str, controls: usize, years: usize) -> Result<()> {
        self.entry_effects.validate(&format!("{key}.entry_effects"))?;
        self.consolidation_effects.validate(&format!("{key}.consolidation_effects"))?;
        if self.control_coefs.len() != controls {
            return Err(Error::config(
                format!("{key}.control_coefs"),
                format!("needs one coefficient per control ({controls})"),
            ));
        }
        for (name, v) in [
            ("unit_sd", self.unit_sd),
            ("cell_sd", self.cell_sd),
            ("error_sd", self.error_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{key}.{name}"), "must be finite and >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.cluster_corr) {
            return Err(Error::config(format!("{key}.cluster_corr"), "must lie in [0, 1]"));
        }
        if !(self.serial_corr.abs() < 1.0) {
            return Err(Error::config(format!("{key}.serial_corr"), "must lie in (-1, 1)"));
        }
        if !(self.lag.abs() < 1.0) {
            return Err(Error::config(format!("{key}.lag"), "must lie in (-1, 1)"));
        }
        if !self.density_effects.is_empty() && self.density_effects.len() != years {
            return Err(Error::config(
                format!("{key}.density_effects"),
                format!("empty or one per panel year ({years})"),
            ));
        }
        if !(self.mean.is_finite()
            && self.control_coefs.iter().all(|c| c.is_finite())
            && self.density_effects.iter().all(|c| c.is_finite()))
        {
            return Err(Error::config(key, "coefficients must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgpSpec {
    pub first_year: i32,
    pub last_year: i32,
    pub geography: GeoSpec,
    pub controls: usize,
    pub log_number: OutcomeSpec,
    pub price_concession: OutcomeSpec,
}

impl Default for DgpSpec {
    fn default() -> Self {
        let concession = OutcomeSpec {
            control_coefs: vec![0.005, -0.002],
            unit_sd: 0.02,
            cell_sd: 0.005,
            error_sd: 0.01,
            ..OutcomeSpec::default()
        };
        Self {
            first_year: 2016,
            last_year: 2022,
            geography: GeoSpec::default(),
            controls: 2,
            log_number: OutcomeSpec::default(),
            price_concession: concession,
        }
    }
}

impl DgpSpec {
    /// Entry effects injected, no consolidation effects.
    pub fn entry_calibrated() -> Self {
        let mut s = Self::default();
        s.log_number.entry_effects = ENTRY_LOG_NUMBER;
        s.price_concession.entry_effects = ENTRY_CONCESSION;
        s
    }

    /// Consolidation effects injected, no entry effects.
    pub fn consolidation_calibrated() -> Self {
        let mut s = Self::default();
        s.log_number.consolidation_effects = CONSOLIDATION_LOG_NUMBER;
        s.price_concession.consolidation_effects = CONSOLIDATION_CONCESSION;
        s
    }

    pub fn num_years(&self) -> usize {
        (self.last_year - self.first_year + 1).max(0) as usize
    }

    pub fn outcome(&self, outcome: super::Outcome) -> &OutcomeSpec {
        match outcome {
            super::Outcome::LogNumber => &self.log_number,
            super::Outcome::PriceConcession => &self.price_concession,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.last_year <= self.first_year {
            return Err(Error::config("last_year", "must be after first_year"));
        }
        let g = &self.geography;
        if g.business_areas < 2 || g.neighborhoods_per_area == 0 {
            return Err(Error::config(
                "geography",
                "needs at least two business areas and one neighborhood per area",
            ));
        }
        if !(g.area_side > 0.0 && g.area_side.is_finite()) {
            return Err(Error::config("geography.area_side", "must be positive"));
        }
        for (name, v) in [
            ("listed_share", g.listed_share),
            ("never_entered_share", g.never_entered_share),
            ("early_entry_share", g.early_entry_share),
            ("focal_growth", g.focal_growth),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("geography.{name}"), "must lie in [0, 1]"));
            }
        }
        if g.never_entered_share + g.early_entry_share > 1.0 {
            return Err(Error::config("geography.early_entry_share", "shares of never and early entry exceed 1"));
        }
        for (name, v) in [
            ("rival_stores_per_area", g.rival_stores_per_area),
            ("initial_focal_stores", g.initial_focal_stores),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("geography.{name}"), "must be finite and >= 0"));
            }
        }
        self.log_number.validate("log_number", self.controls, self.num_years())?;
        self.price_concession.validate("price_concession", self.controls, self.num_years())?;
        Ok(())
    }
}

/// A generated panel with its map and the fixed effects that produced it.
#[derive(Debug, Clone)]
pub struct GeneratedPanel {
    pub panel: PanelDataset,
    pub map: StoreMap,
    /// Per kept row, the unit plus business-area-by-year effects of each
    /// outcome, in panel row order.
    pub fixed_effect_sums: Vec<[f64; 2]>,
    /// Neighbourhoods dropped for having a focal store before the panel.
    pub dropped_units: usize,
}

/// Draws the store map for a spec.
pub fn generate_geography(spec: &DgpSpec, seed: u64) -> Result<StoreMap> {
    spec.validate()?;
    let g = &spec.geography;
    let mut rng = task_rng(seed, "geography");
    let cols = (f64::from(g.business_areas)).sqrt().ceil() as u32;
    let mut stores = Vec::new();
    let mut hoods = Vec::new();
    let rivals = poisson(g.rival_stores_per_area)?;
    let extra_focal = poisson(g.initial_focal_stores)?;
    for b in 0..g.business_areas {
        let ox = f64::from(b % cols) * g.area_side;
        let oy = f64::from(b / cols) * g.area_side;
        let point = |rng: &mut ChaCha8Rng| (ox + rng.random::<f64>() * g.area_side, oy + rng.random::<f64>() * g.area_side);
        for k in 0..g.neighborhoods_per_area {
            let (x, y) = point(&mut rng);
            hoods.push(Neighborhood {
                id: b * g.neighborhoods_per_area + k,
                x,
                y,
                business_area: b,
            });
        }
        let n_rivals = draw_count(&rivals, &mut rng);
        for _ in 0..n_rivals {
            let (x, y) = point(&mut rng);
            stores.push(Store {
                x,
                y,
                brand: Brand::Other,
                open_year: rng.random_range(spec.first_year - 10..=spec.last_year),
                listed: rng.random_bool(g.listed_share),
            });
        }
        let u: f64 = rng.random();
        let entry = if u < g.never_entered_share {
            None
        } else if u < g.never_entered_share + g.early_entry_share {
            Some(rng.random_range(spec.first_year - 5..spec.first_year))
        } else {
            Some(rng.random_range(spec.first_year..=spec.last_year))
        };
        if let Some(e) = entry {
            let n0 = 1 + draw_count(&extra_focal, &mut rng);
            let mut opens: Vec<i32> = vec![e; n0];
            for year in e + 1..=spec.last_year {
                if rng.random_bool(g.focal_growth) {
                    opens.push(year);
                }
            }
            for open_year in opens {
                let (x, y) = point(&mut rng);
                stores.push(Store {
                    x,
                    y,
                    brand: Brand::Focal,
                    open_year,
                    listed: true,
                });
            }
        }
    }
    StoreMap::new(stores, hoods)
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean).map(Some).map_err(|e| Error::domain(e.to_string()))
}

fn draw_count(d: &Option<Poisson<f64>>, rng: &mut ChaCha8Rng) -> usize {
    d.as_ref().map_or(0, |d| d.sample(rng) as usize)
}

/// Generates the panel: geography, event years, density and both outcomes.
///
/// Each outcome is
/// `lag * y[t-1] + effects . dummies + coefs . controls + density_effect[t] * density
///  + mu_i + eta_{area,t} + e`,
/// with `e` mixing an AR(1) unit error and an area-by-year shock with a unit
/// loading. Neighbourhoods with a focal store nearby before the first panel
/// year are dropped.
pub fn generate_panel(spec: &DgpSpec, seed: u64) -> Result<GeneratedPanel> {
    let map = generate_geography(spec, seed)?;
    let years: Vec<i32> = (spec.first_year..=spec.last_year).collect();
    let t_len = years.len();
    let focal = StoreFilter::brand(Brand::Focal);

    struct Unit {
        hood: Neighborhood,
        entry: Option<i32>,
        consolidation: Option<i32>,
        density: Vec<Option<f64>>,
        flags: Vec<u8>,
    }
    let mut units = Vec::new();
    let mut dropped = 0;
    for h in map.neighborhoods() {
        let entry = map.first_open_year(h.x, h.y, STORE_RADIUS, focal);
        if entry.is_some_and(|e| e < spec.first_year) {
            dropped += 1;
            continue;
        }
        let density: Vec<Option<f64>> = years.iter().map(|&t| map.dbi(h.x, h.y, t)).collect();
        let flags: Vec<u8> = years
            .iter()
            .map(|&t| u8::from(map.consolidation_flag(h.x, h.y, t).treated))
            .collect();
        let consolidation = flags.iter().position(|&f| f == 1).map(|i| years[i]);
        units.push(Unit {
            hood: *h,
            entry,
            consolidation,
            density,
            flags,
        });
    }

    // event dummies through the dataset builder, outcomes filled below
    let mut rows = Vec::with_capacity(units.len() * t_len);
    for u in &units {
        for (ti, &t) in years.iter().enumerate() {
            rows.push(PanelRow {
                unit: u.hood.id,
                business_area: u.hood.business_area,
                year: t,
                log_number: 0.0,
                price_concession: 0.0,
                density: u.density[ti],
                entry_year: u.entry,
                entry_dummies: [0; 5],
                consolidation_year: u.consolidation,
                consolidation_flag: u.flags[ti],
                consolidation_dummies: [0; 5],
                controls: Vec::new(),
                lag_log_number: None,
                lag_price_concession: None,
            });
        }
    }

    let mut control_rng = task_rng(seed, "controls");
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    for r in &mut rows {
        r.controls = (0..spec.controls).map(|_| std.sample(&mut control_rng)).collect();
    }

    let areas = spec.geography.business_areas as usize;
    let mut fe_sums = vec![[0.0; 2]; rows.len()];
    for (oi, outcome) in super::Outcome::ALL.iter().enumerate() {
        let os = spec.outcome(*outcome);
        let mut rng = task_rng(seed, outcome.as_str());
        let eta: Vec<f64> = (0..areas * t_len).map(|_| os.cell_sd * std.sample(&mut rng)).collect();
        let shock: Vec<f64> = (0..areas * t_len).map(|_| std.sample(&mut rng)).collect();
        let innovation = (1.0 - os.serial_corr * os.serial_corr).sqrt();
        let (w_idio, w_cluster) = ((1.0 - os.cluster_corr).sqrt(), os.cluster_corr.sqrt());
        for (ui, u) in units.iter().enumerate() {
            let mu = os.mean + os.unit_sd * std.sample(&mut rng);
            let loading = 2.0 * rng.random::<f64>();
            let mut e = std.sample(&mut rng);
            // pre-sample history for the lagged outcome
            let mut prev = if os.lag != 0.0 {
                let mut y = mu / (1.0 - os.lag);
                for _ in 0..50 {
                    e = os.serial_corr * e + innovation * std.sample(&mut rng);
                    y = os.lag * y + mu + os.error_sd * w_idio * e;
                }
                y
            } else {
                0.0
            };
            for (ti, _) in years.iter().enumerate() {
                let row_idx = ui * t_len + ti;
                let b = u.hood.business_area as usize;
                let cell = b * t_len + ti;
                if ti > 0 {
                    e = os.serial_corr * e + innovation * std.sample(&mut rng);
                }
                let fe = mu + eta[cell];
                fe_sums[row_idx][oi] = fe;
                let r = &rows[row_idx];
                let mut y = fe;
                y += event_part(&os.entry_effects, r.year, r.entry_year);
                y += event_part(&os.consolidation_effects, r.year, r.consolidation_year);
                y += os.control_coefs.iter().zip(&r.controls).map(|(c, x)| c * x).sum::<f64>();
                if let (Some(d), Some(effect)) = (r.density, os.density_effects.get(ti)) {
                    y += effect * d;
                }
                y += os.error_sd * (w_idio * e + w_cluster * loading * shock[cell]);
                if os.lag != 0.0 {
                    y += os.lag * prev;
                    prev = y;
                }
                match outcome {
                    super::Outcome::LogNumber => rows[row_idx].log_number = y,
                    super::Outcome::PriceConcession => rows[row_idx].price_concession = y,
                }
            }
        }
    }

    let panel = PanelDataset::new(rows)?;
    Ok(GeneratedPanel {
        panel,
        map,
        fixed_effect_sums: fe_sums,
        dropped_units: dropped,
    })
}

fn event_part(effects: &EventEffects, year: i32, event: Option<i32>) -> f64 {
    event
        .and_then(|e| EventBin::of(year, e))
        .map_or(0.0, |bin| effects.effect(bin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::spatial::STORE_RADIUS;

    fn small() -> DgpSpec {
        let mut s = DgpSpec::entry_calibrated();
        s.geography.business_areas = 12;
        s.geography.neighborhoods_per_area = 8;
        s
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_panel(&small(), 9).unwrap();
        let b = generate_panel(&small(), 9).unwrap();
        assert_eq!(a.panel, b.panel);
        let c = generate_panel(&small(), 10).unwrap();
        assert_ne!(a.panel, c.panel);
    }

    #[test]
    fn noiseless_outcome_is_the_fixed_effects() {
        let mut s = small();
        for o in [&mut s.log_number, &mut s.price_concession] {
            o.entry_effects = EventEffects::default();
            o.error_sd = 0.0;
            o.control_coefs = vec![0.0; 2];
        }
        let g = generate_panel(&s, 1).unwrap();
        for (r, fe) in g.panel.rows().iter().zip(&g.fixed_effect_sums) {
            assert_eq!(r.log_number, fe[0]);
            assert_eq!(r.price_concession, fe[1]);
        }
    }

    #[test]
    fn early_focal_neighborhoods_are_dropped() {
        let g = generate_panel(&small(), 4).unwrap();
        let first = small().first_year;
        for r in g.panel.rows() {
            assert!(r.entry_year.is_none_or(|e| e >= first));
        }
        // the map still carries the dropped neighbourhoods
        let kept = g.panel.num_units();
        assert_eq!(kept + g.dropped_units, g.map.neighborhoods().len());
        // entry years agree with the map
        for h in g.map.neighborhoods() {
            let e = g
                .map
                .first_open_year(h.x, h.y, STORE_RADIUS, StoreFilter::brand(Brand::Focal));
            if let Some(r) = g.panel.rows().iter().find(|r| r.unit == h.id) {
                assert_eq!(r.entry_year, e);
            }
        }
    }

    #[test]
    fn entry_is_staggered_with_controls() {
        let g = generate_panel(&DgpSpec::entry_calibrated(), 2).unwrap();
        let mut years: Vec<Option<i32>> = g.panel.rows().iter().map(|r| r.entry_year).collect();
        years.sort();
        years.dedup();
        assert!(years.contains(&None));
        assert!(years.len() >= 5, "{years:?}");
        assert!(g.panel.num_units() > 1500);
    }

    #[test]
    fn validation_errors() {
        let mut s = DgpSpec::default();
        s.log_number.entry_effects = EventEffects {
            post3: Some(0.1),
            ..EventEffects::new(0.1, 0.1, 0.0, 0.0)
        };
        s.log_number.entry_effects.post2 = None;
        assert!(s.validate().is_err());
        let mut s = DgpSpec::default();
        s.price_concession.control_coefs = vec![1.0];
        assert!(s.validate().is_err());
        let mut s = DgpSpec::default();
        s.last_year = s.first_year;
        assert!(s.validate().is_err());
    }
}
