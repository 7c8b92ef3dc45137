//! Prices, costs, profits and the welfare decomposition.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{IntermediaryProfile, Segment};

/// Per-transaction commission income `beta * (mu - c)`.
pub fn per_transaction_price(commission: f64, base_price: f64, concession: f64) -> Result<f64> {
    if !(concession >= 0.0 && concession < base_price) {
        return Err(Error::domain(format!(
            "concession {concession} must lie in [0, {base_price})"
        )));
    }
    Ok(commission * (base_price - concession))
}

/// Entry plus per-branch cost in one segment; nothing is paid without branches.
pub fn segment_cost(branches: u32, entry_cost: f64, branch_cost: f64) -> f64 {
    if branches == 0 {
        0.0
    } else {
        entry_cost + branch_cost * f64::from(branches)
    }
}

/// Segment costs plus the convex global term `h2 * (sum_m n_m)^2`.
pub fn firm_cost(branches: &[u32], firm: &IntermediaryProfile) -> f64 {
    let local: f64 = branches
        .iter()
        .zip(&firm.entry_cost)
        .map(|(&n, &fc)| segment_cost(n, fc, firm.branch_cost))
        .sum();
    let total: u32 = branches.iter().sum();
    local + firm.global_convexity * f64::from(total).powi(2)
}

/// `pi = sum_m p_m Q_m - cost`.
pub fn profit(prices: &[f64], volumes: &[f64], cost: f64) -> f64 {
    prices.iter().zip(volumes).map(|(p, q)| p * q).sum::<f64>() - cost
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub buyer_surplus: Vec<f64>,
    pub seller_surplus: Vec<f64>,
    pub fee_revenue: Vec<f64>,
    pub buyer_total: f64,
    pub seller_total: f64,
    pub fee_total: f64,
    pub total_cost: f64,
    /// `W^B + W^S + R^fee - cost`.
    pub total_welfare: f64,
    /// `sum Q (v - r) - cost`, computed independently of the components.
    pub direct_welfare: f64,
    /// Some transaction leaves the seller below its reserve utility.
    pub negative_seller_surplus: bool,
}

impl WelfareReport {
    /// Relative gap of the accounting identity, `|W - W_direct| / (1 + |W|)`.
    pub fn identity_gap(&self) -> f64 {
        (self.total_welfare - self.direct_welfare).abs() / (1.0 + self.total_welfare.abs())
    }
}

/// Buyer, seller and fee components per segment from volumes `Q` (N x M) and
/// concessions `c` (N x M).
pub fn welfare_decompose(
    segments: &[Segment],
    commission: f64,
    volumes: &[Vec<f64>],
    concessions: &[Vec<f64>],
    total_cost: f64,
) -> WelfareReport {
    let m_count = segments.len();
    let mut buyer = vec![0.0; m_count];
    let mut seller = vec![0.0; m_count];
    let mut fee = vec![0.0; m_count];
    let mut gross = 0.0;
    let mut negative = false;
    for (q_row, c_row) in volumes.iter().zip(concessions) {
        for (m, seg) in segments.iter().enumerate() {
            let q = q_row[m];
            if q == 0.0 {
                continue;
            }
            let net = seg.base_price - c_row[m];
            let ss = (1.0 - commission) * net - seg.reserve_utility;
            negative |= ss < 0.0;
            buyer[m] += q * (seg.gross_benefit - net);
            seller[m] += q * ss;
            fee[m] += q * commission * net;
            gross += q * (seg.gross_benefit - seg.reserve_utility);
        }
    }
    let buyer_total: f64 = buyer.iter().sum();
    let seller_total: f64 = seller.iter().sum();
    let fee_total: f64 = fee.iter().sum();
    WelfareReport {
        buyer_total,
        seller_total,
        fee_total,
        total_welfare: buyer_total + seller_total + fee_total - total_cost,
        direct_welfare: gross - total_cost,
        buyer_surplus: buyer,
        seller_surplus: seller,
        fee_revenue: fee,
        total_cost,
        negative_seller_surplus: negative,
    }
}
