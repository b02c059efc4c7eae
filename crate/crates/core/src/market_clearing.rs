//! Two-seller clearing against one buyer, transaction payoffs, the bargaining
//! validity check and regulator caps. Transmission losses are neglected, so
//! the quantity a seller ships is the quantity the buyer receives.

use serde::{Deserialize, Serialize};

use crate::cost_model::{AggregatorCostModel, BidCurve};
use crate::error::{Error, Result};

/// A seller's bid together with its cost structure and current local feed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellerState {
    pub bid: BidCurve,
    pub cost: AggregatorCostModel,
    /// Local load currently fed from storage, kW.
    pub p_g: f64,
    pub p_max: f64,
}

impl SellerState {
    pub fn new(bid: BidCurve, cost: AggregatorCostModel, p_g: f64, p_max: f64) -> Result<Self> {
        if !(p_g >= 0.0 && p_g <= p_max) {
            return Err(Error::Domain(format!(
                "local feed {p_g} kW must lie in [0, {p_max}]"
            )));
        }
        Ok(SellerState { bid, cost, p_g, p_max })
    }
}

/// Which dimensions a regulator cap clipped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CappedFlags {
    pub price: bool,
    pub quantity_a: bool,
    pub quantity_b: bool,
}

impl CappedFlags {
    pub fn any(&self) -> bool {
        self.price || self.quantity_a || self.quantity_b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketOutcome {
    pub p_a: f64,
    pub p_b: f64,
    pub phi_t: f64,
    pub capped: CappedFlags,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegulatoryCaps {
    #[serde(default, rename = "price", skip_serializing_if = "Option::is_none")]
    pub phi_max: Option<f64>,
    #[serde(default, rename = "quantity_a", skip_serializing_if = "Option::is_none")]
    pub p_max_a: Option<f64>,
    #[serde(default, rename = "quantity_b", skip_serializing_if = "Option::is_none")]
    pub p_max_b: Option<f64>,
}

impl RegulatoryCaps {
    pub fn is_empty(&self) -> bool {
        self.phi_max.is_none() && self.p_max_a.is_none() && self.p_max_b.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for (field, cap) in [
            ("caps.price", self.phi_max),
            ("caps.quantity_a", self.p_max_a),
            ("caps.quantity_b", self.p_max_b),
        ] {
            if let Some(v) = cap {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(field, format!("cap must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// Seller payoff δ and buyer payoff ω of one transaction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PayoffPair {
    pub delta: f64,
    pub omega: f64,
}

impl PayoffPair {
    pub const NO_TRADE: PayoffPair = PayoffPair { delta: 0.0, omega: 0.0 };
}

/// Equalizes both bids at the transaction price while the quantities sum to
/// the buyer's demand. If the interior split would give a seller a negative
/// quantity, that seller is dropped and the other serves all of `l_c` at its
/// own bid.
pub fn clear_two_sellers(bid_a: &BidCurve, bid_b: &BidCurve, l_c: f64) -> Result<MarketOutcome> {
    if !(l_c.is_finite() && l_c > 0.0) {
        return Err(Error::Domain(format!("buyer demand must be positive, got {l_c}")));
    }
    let total_slope = bid_a.slope + bid_b.slope;
    if bid_a.slope < 0.0 || bid_b.slope < 0.0 || total_slope <= 0.0 {
        return Err(Error::Singular(format!(
            "bid slopes {} and {} leave the clearing system without a solution",
            bid_a.slope, bid_b.slope
        )));
    }
    let p_a = (bid_b.lambda0 - bid_a.lambda0 + bid_b.slope * l_c) / total_slope;
    let outcome = if p_a < 0.0 {
        MarketOutcome {
            p_a: 0.0,
            p_b: l_c,
            phi_t: bid_b.price_at(l_c),
            capped: CappedFlags::default(),
        }
    } else if p_a > l_c {
        MarketOutcome {
            p_a: l_c,
            p_b: 0.0,
            phi_t: bid_a.price_at(l_c),
            capped: CappedFlags::default(),
        }
    } else {
        MarketOutcome {
            p_a,
            p_b: l_c - p_a,
            phi_t: bid_a.price_at(p_a),
            capped: CappedFlags::default(),
        }
    };
    if !(outcome.phi_t > 0.0) {
        return Err(Error::Domain(format!(
            "clearing price {} is not positive",
            outcome.phi_t
        )));
    }
    Ok(outcome)
}

/// Clips price and quantities to the regulator's caps. Residual demand left
/// by a quantity cap is not re-cleared.
pub fn apply_caps(outcome: &MarketOutcome, caps: &RegulatoryCaps) -> MarketOutcome {
    let mut out = *outcome;
    if let Some(cap) = caps.phi_max {
        if out.phi_t > cap {
            out.phi_t = cap;
            out.capped.price = true;
        }
    }
    if let Some(cap) = caps.p_max_a {
        if out.p_a > cap {
            out.p_a = cap;
            out.capped.quantity_a = true;
        }
    }
    if let Some(cap) = caps.p_max_b {
        if out.p_b > cap {
            out.p_b = cap;
            out.capped.quantity_b = true;
        }
    }
    out
}

/// `φ·t − [C(p_g + t) − C(p_g)]`.
pub fn seller_payoff(cost: &AggregatorCostModel, p_g: f64, t: f64, phi: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("sold quantity must be non-negative, got {t}")));
    }
    Ok(phi * t - (cost.cost(p_g + t) - cost.cost(p_g)))
}

/// `−φ·t − [C(p_g − t) − C(p_g)]`: discharge cost the buyer avoids, net of
/// what it pays.
pub fn buyer_payoff(cost: &AggregatorCostModel, p_g: f64, t: f64, phi: f64) -> Result<f64> {
    if t < 0.0 || t > p_g {
        return Err(Error::Domain(format!(
            "received quantity {t} kW must lie in [0, {p_g}]"
        )));
    }
    Ok(-phi * t - (cost.cost(p_g - t) - cost.cost(p_g)))
}

/// A trade is acceptable only if it strictly improves both sides over the
/// no-trade point.
pub fn validate_bargain(pair: &PayoffPair) -> bool {
    pair.delta > 0.0 && pair.omega > 0.0
}
