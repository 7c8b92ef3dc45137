use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{MarketConfig, StrategyProfile};
use crate::outcome::firm_volumes;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocResidual {
    /// `sum_m' (mu_m' - c_im') dQ_im'/dc_im - Q_im`.
    pub residual: f64,
    /// `|residual| / max(1, Q_im)`.
    pub relative: f64,
    pub volume: f64,
    /// The concession sits at (or within one step of) a bound, or the segment
    /// is inactive; the residual carries no optimality information then.
    pub corner: bool,
}

/// First-order condition of `firm`'s concession in `segment`.
///
/// The derivative of `sum_m' (mu_m' - c_im') Q_im'` with respect to `c_im` is
/// taken by a central difference with step `1e-6 * cap`, refined by one
/// Richardson extrapolation. Cross-segment terms vanish when segments do not
/// interact, which leaves `(mu - c) dQ/dc - Q`.
pub fn concession_foc_residual(
    config: &MarketConfig,
    profile: &StrategyProfile,
    firm: usize,
    segment: usize,
) -> Result<FocResidual> {
    profile.check_feasible(config)?;
    if firm >= config.num_intermediaries() || segment >= config.num_segments() {
        return Err(Error::domain(format!("no cell ({firm}, {segment})")));
    }
    let cap = config.intermediaries[firm].concession_cap[segment];
    let c = profile.concessions[firm][segment];
    let h = 1e-6 * cap;
    let volume = firm_volumes(config, profile, firm)[segment];
    if profile.branches[firm][segment] == 0 || h <= 0.0 || c - h < 0.0 || c + h > cap {
        return Ok(FocResidual {
            residual: f64::NAN,
            relative: f64::NAN,
            volume,
            corner: true,
        });
    }

    let mut work = profile.clone();
    let mut value = |x: f64| {
        work.concessions[firm][segment] = x;
        let q = firm_volumes(config, &work, firm);
        q.iter()
            .enumerate()
            .map(|(m, q)| (config.segments[m].base_price - work.concessions[firm][m]) * q)
            .sum::<f64>()
    };
    let d_h = (value(c + h) - value(c - h)) / (2.0 * h);
    let d_half = (value(c + 0.5 * h) - value(c - 0.5 * h)) / h;
    let residual = (4.0 * d_half - d_h) / 3.0;
    Ok(FocResidual {
        residual,
        relative: residual.abs() / volume.max(1.0),
        volume,
        corner: false,
    })
}
