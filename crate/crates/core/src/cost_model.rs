//! Battery discharge cost, its aggregation over a fleet of houses, and the
//! linear bid curves sellers derive from it.
//!
//! A single house's battery is priced with a logarithmic barrier
//! `-a·ln(1 - ΔE/B)`, which is approximated by its truncated series
//! `a·ΔE/B + a·ΔE²/B²`. Load is held constant over each quarter hour, so a
//! power draw `ΔP` moves `0.25·ΔP` kWh. Summing identical quadratic houses
//! gives the aggregator cost `C(P) = v·P + u·P²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hours per scheduling slot.
pub const SLOT_HOURS: f64 = 0.25;

/// Per-house battery cost coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Pricing coefficient `a`.
    #[serde(rename = "a")]
    pub pricing: f64,
    /// Energy scale `B` in kWh; also the largest typical |ΔE|.
    #[serde(rename = "b")]
    pub scale_kwh: f64,
}

impl CostParams {
    pub fn new(pricing: f64, scale_kwh: f64) -> Result<Self> {
        let params = CostParams { pricing, scale_kwh };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pricing.is_finite() && self.pricing > 0.0) {
            return Err(Error::Domain(format!(
                "pricing coefficient must be positive, got {}",
                self.pricing
            )));
        }
        if !(self.scale_kwh.is_finite() && self.scale_kwh > 0.0) {
            return Err(Error::Domain(format!(
                "energy scale must be positive, got {}",
                self.scale_kwh
            )));
        }
        Ok(())
    }
}

/// Quadratic cost `C(P) = v·P + u·P²` of an aggregator selling `P` kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatorCostModel {
    /// `v`, currency per kW.
    pub linear: f64,
    /// `u`, currency per kW².
    pub quadratic: f64,
    /// Mean pricing coefficient over the fleet.
    pub mean_pricing: f64,
    pub scale_kwh: f64,
    pub n_houses: usize,
}

impl AggregatorCostModel {
    /// Builds the model for a fleet whose mean pricing coefficient is `mean_pricing`.
    pub fn from_mean(mean_pricing: f64, scale_kwh: f64, n_houses: usize) -> Result<Self> {
        CostParams::new(mean_pricing, scale_kwh)?;
        if n_houses == 0 {
            return Err(Error::Domain("aggregator must manage at least one house".into()));
        }
        Ok(AggregatorCostModel {
            linear: SLOT_HOURS * mean_pricing / scale_kwh,
            quadratic: mean_pricing * SLOT_HOURS * SLOT_HOURS / (scale_kwh * scale_kwh),
            mean_pricing,
            scale_kwh,
            n_houses,
        })
    }

    pub fn cost(&self, p: f64) -> f64 {
        self.linear * p + self.quadratic * p * p
    }
}

/// Linear offer `λ(P) = λ₀ + m·P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidCurve {
    pub lambda0: f64,
    pub slope: f64,
    /// Baseline local feed `P₀` in kW.
    pub p0: f64,
    pub p_max: f64,
}

impl BidCurve {
    pub fn price_at(&self, p: f64) -> f64 {
        self.lambda0 + self.slope * p
    }

    /// Bounds on the net interchange `T`: `-P₀ ≤ T ≤ P_max - P₀`.
    pub fn interchange_bounds(&self) -> (f64, f64) {
        (-self.p0, self.p_max - self.p0)
    }
}

fn check_energy(params: &CostParams, delta_e: f64) -> Result<()> {
    params.validate()?;
    if !delta_e.is_finite() {
        return Err(Error::Domain(format!("energy must be finite, got {delta_e}")));
    }
    Ok(())
}

/// `-a·ln(1 - ΔE/B)` for `0 ≤ ΔE < B`.
pub fn battery_cost_log(params: &CostParams, delta_e: f64) -> Result<f64> {
    check_energy(params, delta_e)?;
    if delta_e < 0.0 {
        return Err(Error::Domain(format!("energy must be non-negative, got {delta_e}")));
    }
    if delta_e >= params.scale_kwh {
        return Err(Error::Domain(format!(
            "energy {delta_e} kWh reaches the barrier at B = {}",
            params.scale_kwh
        )));
    }
    Ok(-params.pricing * (-delta_e / params.scale_kwh).ln_1p())
}

/// Series truncation `a·ΔE/B + a·ΔE²/B²`, valid for `|ΔE|/B < 1`.
pub fn battery_cost_quadratic(params: &CostParams, delta_e: f64) -> Result<f64> {
    check_energy(params, delta_e)?;
    let ratio = delta_e / params.scale_kwh;
    if ratio.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "|ΔE|/B = {} is outside the series radius",
            ratio.abs()
        )));
    }
    Ok(params.pricing * ratio + params.pricing * ratio * ratio)
}

/// Quadratic cost of drawing `delta_p` kW for one quarter hour.
pub fn battery_cost_power(params: &CostParams, delta_p: f64) -> Result<f64> {
    battery_cost_quadratic(params, SLOT_HOURS * delta_p)
}

/// Result of fitting `(a, B)` to sampled cost data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub params: CostParams,
    /// Root-mean-square residual of the fit.
    pub rms_residual: f64,
}

/// Least-squares fit of `(a, B)` to the pointwise sum of grid-charging and
/// capital/maintenance cost samples, each given as `(power kW, cost)`.
///
/// The quarter-hour quadratic is linear in `α = a/B` and `β = a/B²`, so the
/// fit is an ordinary 2×2 normal-equation solve followed by `B = α/β`,
/// `a = α²/β`.
pub fn calibrate_params(grid: &[(f64, f64)], capital: &[(f64, f64)]) -> Result<Calibration> {
    if grid.is_empty() || capital.is_empty() {
        return Err(Error::Calibration("sample sets must be non-empty".into()));
    }
    if grid.len() != capital.len() {
        return Err(Error::Calibration(format!(
            "grid has {} samples but capital/maintenance has {}",
            grid.len(),
            capital.len()
        )));
    }
    let mut totals = Vec::with_capacity(grid.len());
    for (i, (&(pg, cg), &(pc, cc))) in grid.iter().zip(capital).enumerate() {
        if (pg - pc).abs() > 1e-12 * pg.abs().max(1.0) {
            return Err(Error::Calibration(format!(
                "sample {i}: power {pg} does not match {pc}"
            )));
        }
        if !(pg.is_finite() && cg.is_finite() && cc.is_finite()) {
            return Err(Error::Calibration(format!("sample {i} is not finite")));
        }
        totals.push((SLOT_HOURS * pg, cg + cc));
    }

    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &totals {
        let x2 = x * x;
        s11 += x2;
        s12 += x2 * x;
        s22 += x2 * x2;
        r1 += x * y;
        r2 += x2 * y;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-12 * (s11 * s22).max(f64::MIN_POSITIVE) {
        return Err(Error::Calibration(
            "need at least two distinct non-zero power levels".into(),
        ));
    }
    let alpha = (r1 * s22 - r2 * s12) / det;
    let beta = (s11 * r2 - s12 * r1) / det;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Calibration(format!(
            "fitted coefficients are not positive (a/B = {alpha}, a/B² = {beta})"
        )));
    }
    let scale_kwh = alpha / beta;
    let params = CostParams::new(alpha * scale_kwh, scale_kwh)?;
    let sse: f64 = totals
        .iter()
        .map(|&(x, y)| {
            let fit = alpha * x + beta * x * x;
            (fit - y).powi(2)
        })
        .sum();
    Ok(Calibration {
        params,
        rms_residual: (sse / totals.len() as f64).sqrt(),
    })
}

/// Aggregates per-house coefficients that share one energy scale.
pub fn aggregate_cost(houses: &[CostParams], shared_scale_kwh: f64) -> Result<AggregatorCostModel> {
    if houses.is_empty() {
        return Err(Error::Domain("cannot aggregate an empty fleet".into()));
    }
    for (i, house) in houses.iter().enumerate() {
        house.validate()?;
        if house.scale_kwh != shared_scale_kwh {
            return Err(Error::Domain(format!(
                "house {i} has B = {} but the aggregator uses B = {shared_scale_kwh}",
                house.scale_kwh
            )));
        }
    }
    let mean = houses.iter().map(|h| h.pricing).sum::<f64>() / houses.len() as f64;
    AggregatorCostModel::from_mean(mean, shared_scale_kwh, houses.len())
}

/// `dC/dP = v + 2u·P`.
pub fn marginal_cost(model: &AggregatorCostModel, p: f64) -> f64 {
    model.linear + 2.0 * model.quadratic * p
}

/// Bid with slope `ε·u` anchored at the marginal cost of the baseline feed `p0`.
pub fn make_bid(model: &AggregatorCostModel, p0: f64, p_max: f64, epsilon: f64) -> Result<BidCurve> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Domain(format!("strategy multiplier must be positive, got {epsilon}")));
    }
    if !(p0 >= 0.0 && p0 <= p_max && p_max.is_finite()) {
        return Err(Error::Domain(format!(
            "baseline feed must satisfy 0 ≤ P₀ ≤ P_max, got P₀ = {p0}, P_max = {p_max}"
        )));
    }
    Ok(BidCurve {
        lambda0: marginal_cost(model, p0),
        slope: epsilon * model.quadratic,
        p0,
        p_max,
    })
}
