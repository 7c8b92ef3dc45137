use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Event-time bins around a treatment year. The year before the event is the
/// omitted reference; years three or more after it share the last bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventBin {
    Pre2,
    Event,
    Post1,
    Post2,
    Post3,
}

impl EventBin {
    pub const ALL: [EventBin; 5] = [EventBin::Pre2, EventBin::Event, EventBin::Post1, EventBin::Post2, EventBin::Post3];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Bin of `year` for an event in `event_year`, `None` for reference years.
    pub fn of(year: i32, event_year: i32) -> Option<EventBin> {
        match year - event_year {
            -2 => Some(EventBin::Pre2),
            0 => Some(EventBin::Event),
            1 => Some(EventBin::Post1),
            2 => Some(EventBin::Post2),
            k if k >= 3 => Some(EventBin::Post3),
            _ => None,
        }
    }
}

/// Per-bin values for one event family. The window must be contiguous: a
/// later post-event bin needs every earlier one. Missing bins mean no effect.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventEffects {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post3: Option<f64>,
}

impl EventEffects {
    pub fn new(event: f64, post1: f64, post2: f64, post3: f64) -> Self {
        Self {
            pre2: None,
            event: Some(event),
            post1: Some(post1),
            post2: Some(post2),
            post3: Some(post3),
        }
    }

    pub fn get(&self, bin: EventBin) -> Option<f64> {
        match bin {
            EventBin::Pre2 => self.pre2,
            EventBin::Event => self.event,
            EventBin::Post1 => self.post1,
            EventBin::Post2 => self.post2,
            EventBin::Post3 => self.post3,
        }
    }

    pub fn effect(&self, bin: EventBin) -> f64 {
        self.get(bin).unwrap_or(0.0)
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let chain = [
            ("event", self.event),
            ("post1", self.post1),
            ("post2", self.post2),
            ("post3", self.post3),
        ];
        for w in chain.windows(2) {
            if w[1].1.is_some() && w[0].1.is_none() {
                return Err(Error::config(
                    format!("{key}.{}", w[1].0),
                    format!("requires `{}` to be set (event window must be contiguous)", w[0].0),
                ));
            }
        }
        for bin in EventBin::ALL {
            if let Some(v) = self.get(bin) {
                if !v.is_finite() {
                    return Err(Error::config(format!("{key}.{bin:?}"), "must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// One 0/1 column per [`EventBin`] for each `(unit event year, year)` row.
/// Rows of never-treated units are all zero.
pub fn build_event_dummies(event_years: &[Option<i32>], years: &[i32]) -> Vec<[u8; 5]> {
    event_years
        .iter()
        .zip(years)
        .map(|(&event, &year)| {
            let mut row = [0u8; 5];
            if let Some(bin) = event.and_then(|e| EventBin::of(year, e)) {
                row[bin.index()] = 1;
            }
            row
        })
        .collect()
}
