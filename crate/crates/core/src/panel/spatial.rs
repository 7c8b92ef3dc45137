use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Influence radius of a store, in meters.
pub const STORE_RADIUS: f64 = 410.0;

/// Focal-brand share of platform-listed stores below which a neighbourhood
/// counts as consolidated.
pub const CONSOLIDATION_RATIO: f64 = 0.8;

/// First year the platform consolidates listings.
pub const CONSOLIDATION_START_YEAR: i32 = 2018;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Brand {
    Focal,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Store {
    pub x: f64,
    pub y: f64,
    pub brand: Brand,
    pub open_year: i32,
    /// Listed on the consolidating platform. Focal stores always are.
    #[serde(default)]
    pub listed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Neighborhood {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub business_area: u32,
}

/// Which stores a query counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StoreFilter {
    pub brand: Option<Brand>,
    /// Only stores open in or before this year.
    pub open_by: Option<i32>,
    /// Only stores listed on the platform (focal stores included).
    pub listed_only: bool,
}

impl StoreFilter {
    pub fn brand(brand: Brand) -> Self {
        Self {
            brand: Some(brand),
            ..Self::default()
        }
    }

    pub fn open_by(mut self, year: i32) -> Self {
        self.open_by = Some(year);
        self
    }

    pub fn listed(mut self) -> Self {
        self.listed_only = true;
        self
    }

    fn accepts(&self, store: &Store) -> bool {
        self.brand.is_none_or(|b| b == store.brand)
            && self.open_by.is_none_or(|y| store.open_year <= y)
            && (!self.listed_only || store.listed || store.brand == Brand::Focal)
    }
}

/// Stores and neighbourhoods on a planar map in meters, with a uniform grid
/// index whose cell side is the store radius.
#[derive(Debug, Clone)]
pub struct StoreMap {
    stores: Vec<Store>,
    neighborhoods: Vec<Neighborhood>,
    cell: f64,
    grid: HashMap<(i64, i64), Vec<usize>>,
}

impl StoreMap {
    pub fn new(stores: Vec<Store>, neighborhoods: Vec<Neighborhood>) -> Result<Self> {
        Self::with_cell(stores, neighborhoods, STORE_RADIUS)
    }

    pub fn with_cell(stores: Vec<Store>, neighborhoods: Vec<Neighborhood>, cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::domain("grid cell size must be positive"));
        }
        for (i, s) in stores.iter().enumerate() {
            if !(s.x.is_finite() && s.y.is_finite()) {
                return Err(Error::config(format!("stores[{i}]"), "coordinates must be finite"));
            }
        }
        for (i, n) in neighborhoods.iter().enumerate() {
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(Error::config(format!("neighborhoods[{i}]"), "coordinates must be finite"));
            }
        }
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, s) in stores.iter().enumerate() {
            grid.entry(cell_of(s.x, s.y, cell)).or_default().push(i);
        }
        Ok(Self {
            stores,
            neighborhoods,
            cell,
            grid,
        })
    }

    pub fn stores(&self) -> &[Store] {
        &self.stores
    }

    pub fn neighborhoods(&self) -> &[Neighborhood] {
        &self.neighborhoods
    }

    /// Stores passing `filter` within `radius` of `(x, y)`, boundary included.
    pub fn radius_count(&self, x: f64, y: f64, radius: f64, filter: StoreFilter) -> Result<usize> {
        if !(radius > 0.0) {
            return Err(Error::domain("radius must be positive"));
        }
        let mut count = 0;
        self.visit_within(x, y, radius, |s| {
            if filter.accepts(s) {
                count += 1;
            }
        });
        Ok(count)
    }

    /// Earliest opening year among stores passing `filter` within `radius`.
    pub fn first_open_year(&self, x: f64, y: f64, radius: f64, filter: StoreFilter) -> Option<i32> {
        let mut first: Option<i32> = None;
        self.visit_within(x, y, radius, |s| {
            if filter.accepts(s) {
                first = Some(first.map_or(s.open_year, |f| f.min(s.open_year)));
            }
        });
        first
    }

    fn visit_within(&self, x: f64, y: f64, radius: f64, mut f: impl FnMut(&Store)) {
        let reach = (radius / self.cell).ceil() as i64;
        let (cx, cy) = cell_of(x, y, self.cell);
        let r2 = radius * radius;
        for gx in cx - reach..=cx + reach {
            for gy in cy - reach..=cy + reach {
                let Some(bucket) = self.grid.get(&(gx, gy)) else { continue };
                for &i in bucket {
                    let s = &self.stores[i];
                    let (dx, dy) = (s.x - x, s.y - y);
                    if dx * dx + dy * dy <= r2 {
                        f(s);
                    }
                }
            }
        }
    }

    /// Focal share of all stores open by `year` within the store radius;
    /// `None` when there are no stores at all.
    pub fn dbi(&self, x: f64, y: f64, year: i32) -> Option<f64> {
        let (focal, total) = self.shares(x, y, StoreFilter::default().open_by(year));
        ratio(focal, total)
    }

    /// Consolidation indicator from the platform-listed stores around a point.
    pub fn consolidation_flag(&self, x: f64, y: f64, year: i32) -> ConsolidationFlag {
        let (focal, listed) = self.shares(x, y, StoreFilter::default().open_by(year).listed());
        consolidation_flag(focal, listed, year)
    }

    fn shares(&self, x: f64, y: f64, filter: StoreFilter) -> (usize, usize) {
        let (mut focal, mut total) = (0, 0);
        self.visit_within(x, y, STORE_RADIUS, |s| {
            if filter.accepts(s) {
                total += 1;
                if s.brand == Brand::Focal {
                    focal += 1;
                }
            }
        });
        (focal, total)
    }
}

fn cell_of(x: f64, y: f64, cell: f64) -> (i64, i64) {
    ((x / cell).floor() as i64, (y / cell).floor() as i64)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsolidationFlag {
    pub treated: bool,
    /// Focal share of listed stores; `None` when nothing is listed nearby.
    pub ratio: Option<f64>,
}

/// 1 iff the focal share of platform-listed stores is below
/// [`CONSOLIDATION_RATIO`] and the platform has started consolidating.
pub fn consolidation_flag(focal: usize, platform_total: usize, year: i32) -> ConsolidationFlag {
    let ratio = ratio(focal, platform_total);
    ConsolidationFlag {
        treated: year >= CONSOLIDATION_START_YEAR && ratio.is_some_and(|r| r < CONSOLIDATION_RATIO),
        ratio,
    }
}
