//! Water-heater scheduling by dynamic programming.
//!
//! The tank is a first-order linear model: each slot the temperature moves
//! by `heat_rate·on − loss_rate − draw_drop·draw`. Because the update has no
//! clamping, the temperature after slot `t` is a closed-form function of the
//! number of on-slots so far, so the DP runs over the exact lattice
//! `(slot, on-count)` instead of binned temperatures.
//!
//! Two objectives are supported:
//!
//! * welfare: minimize comfort shortfall `Σ max(0, setpoint − T)`; price is
//!   ignored. With `comfort_setpoint == temp_min` this is pure on-slot
//!   minimization.
//! * price-sensitive: minimize `Σ price·on`.
//!
//! Both keep every slot inside `[temp_min, temp_max]` and break ties toward
//! fewer on-slots, then toward the schedule whose first difference is an
//! off-slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::{PriceProfile, WaterDrawProfile};

/// Slack used when comparing temperatures to the band and when comparing
/// accumulated objective values.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TankModel {
    pub temp_min: f64,
    pub temp_max: f64,
    /// °F gained per on-slot.
    pub heat_rate: f64,
    /// °F lost per slot to standing losses.
    pub loss_rate: f64,
    /// °F lost per unit of normalized draw.
    pub draw_drop: f64,
    pub initial_temp: f64,
    /// Temperature below which the welfare objective accrues shortfall.
    pub comfort_setpoint: f64,
}

impl TankModel {
    /// Calibration bundled with the case study.
    pub fn case_study() -> Self {
        TankModel {
            temp_min: 110.0,
            temp_max: 130.0,
            heat_rate: 3.0,
            loss_rate: 0.2,
            draw_drop: 1.5,
            initial_temp: 120.0,
            comfort_setpoint: 115.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("temp_min", self.temp_min),
            ("temp_max", self.temp_max),
            ("heat_rate", self.heat_rate),
            ("loss_rate", self.loss_rate),
            ("draw_drop", self.draw_drop),
            ("initial_temp", self.initial_temp),
            ("comfort_setpoint", self.comfort_setpoint),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::config(format!("tank.{name}"), "must be finite"));
        }
        if self.temp_min >= self.temp_max {
            return Err(Error::config("tank.temp_min", "must be below temp_max"));
        }
        if self.heat_rate <= 0.0 {
            return Err(Error::config("tank.heat_rate", "must be positive"));
        }
        if self.loss_rate < 0.0 {
            return Err(Error::config("tank.loss_rate", "must be non-negative"));
        }
        if self.draw_drop < 0.0 {
            return Err(Error::config("tank.draw_drop", "must be non-negative"));
        }
        if !(self.temp_min..=self.temp_max).contains(&self.initial_temp) {
            return Err(Error::config("tank.initial_temp", "must lie inside the band"));
        }
        if !(self.temp_min..=self.temp_max).contains(&self.comfort_setpoint) {
            return Err(Error::config("tank.comfort_setpoint", "must lie inside the band"));
        }
        Ok(())
    }

    fn in_band(&self, temp: f64) -> bool {
        temp >= self.temp_min - TOLERANCE && temp <= self.temp_max + TOLERANCE
    }

    fn shortfall(&self, temp: f64) -> f64 {
        (self.comfort_setpoint - temp).max(0.0)
    }
}

impl Default for TankModel {
    fn default() -> Self {
        Self::case_study()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhSchedule {
    pub on: Vec<bool>,
}

impl WhSchedule {
    pub fn new(on: Vec<bool>) -> Self {
        WhSchedule { on }
    }

    pub fn all_off(len: usize) -> Self {
        WhSchedule { on: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.on.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on.is_empty()
    }

    pub fn on_count(&self) -> usize {
        self.on.iter().filter(|&&b| b).count()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("slot,on\n");
        for (slot, &on) in self.on.iter().enumerate() {
            out.push_str(&format!("{slot},{}\n", u8::from(on)));
        }
        out
    }
}

/// Temperature after each slot under `schedule`.
pub fn simulate_tank(tank: &TankModel, schedule: &WhSchedule, draws: &[f64]) -> Vec<f64> {
    let mut temp = tank.initial_temp;
    schedule
        .on
        .iter()
        .zip(draws)
        .map(|(&on, &draw)| {
            temp += if on { tank.heat_rate } else { 0.0 } - tank.loss_rate - tank.draw_drop * draw;
            temp
        })
        .collect()
}

/// First slot whose simulated temperature leaves the band, if any.
pub fn first_band_violation(tank: &TankModel, trajectory: &[f64]) -> Option<usize> {
    trajectory.iter().position(|&t| !tank.in_band(t))
}

#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    Welfare,
    PriceSensitive(&'a [f64]),
}

#[derive(Debug, Clone, Copy)]
struct Key {
    cost: f64,
    ons: usize,
}

impl Key {
    const UNREACHABLE: Key = Key {
        cost: f64::INFINITY,
        ons: usize::MAX,
    };

    fn is_reachable(&self) -> bool {
        self.cost.is_finite()
    }

    fn better_than(&self, other: &Key) -> bool {
        if !other.is_reachable() {
            return self.is_reachable();
        }
        if self.cost < other.cost - TOLERANCE {
            return true;
        }
        (self.cost - other.cost).abs() <= TOLERANCE && self.ons < other.ons
    }

    fn ties(&self, other: &Key) -> bool {
        (self.cost - other.cost).abs() <= TOLERANCE && self.ons == other.ons
    }
}

/// Optimal schedule over an arbitrary horizon; `draws` fixes the horizon length.
pub fn schedule_slots(tank: &TankModel, draws: &[f64], objective: Objective<'_>) -> Result<WhSchedule> {
    tank.validate()?;
    let n = draws.len();
    if let Objective::PriceSensitive(prices) = objective {
        if prices.len() != n {
            return Err(Error::Dimension(format!(
                "{} prices for {n} draw slots",
                prices.len()
            )));
        }
    }

    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0.0);
    for &d in draws {
        cum.push(cum.last().unwrap() + d);
    }
    // Temperature after slot t when k of slots 0..=t were on.
    let temp = |t: usize, k: usize| {
        tank.initial_temp + tank.heat_rate * k as f64
            - tank.loss_rate * (t + 1) as f64
            - tank.draw_drop * cum[t + 1]
    };
    let stage = |t: usize, on: bool, temp: f64| match objective {
        Objective::Welfare => tank.shortfall(temp),
        Objective::PriceSensitive(prices) => {
            if on {
                prices[t]
            } else {
                0.0
            }
        }
    };

    // Forward reachability gives the diagnostic slot for infeasible inputs.
    let mut reachable = vec![true];
    for t in 0..n {
        let mut next = vec![false; t + 2];
        for (k, _) in reachable.iter().enumerate().filter(|(_, &r)| r) {
            for a in 0..2 {
                if tank.in_band(temp(t, k + a)) {
                    next[k + a] = true;
                }
            }
        }
        if !next.iter().any(|&r| r) {
            return Err(Error::Infeasible { slot: t });
        }
        reachable = next;
    }

    // value[t][k]: best continuation entering slot t with k on-slots so far.
    let mut value: Vec<Vec<Key>> = (0..=n).map(|t| vec![Key::UNREACHABLE; t + 1]).collect();
    value[n].fill(Key { cost: 0.0, ons: 0 });
    let candidate = |value: &Vec<Vec<Key>>, t: usize, k: usize, a: usize| -> Key {
        let temp_after = temp(t, k + a);
        let next = value[t + 1][k + a];
        if !tank.in_band(temp_after) || !next.is_reachable() {
            return Key::UNREACHABLE;
        }
        Key {
            cost: stage(t, a == 1, temp_after) + next.cost,
            ons: a + next.ons,
        }
    };
    for t in (0..n).rev() {
        for k in 0..=t {
            let mut best = Key::UNREACHABLE;
            for a in 0..2 {
                let c = candidate(&value, t, k, a);
                if c.better_than(&best) {
                    best = c;
                }
            }
            value[t][k] = best;
        }
    }

    let mut on = Vec::with_capacity(n);
    let mut k = 0;
    for t in 0..n {
        let target = value[t][k];
        let a = (0..2)
            .find(|&a| {
                let c = candidate(&value, t, k, a);
                c.is_reachable() && c.ties(&target)
            })
            .expect("reachable DP state has an optimal action");
        on.push(a == 1);
        k += a;
    }
    Ok(WhSchedule { on })
}

/// Comfort-driven schedule that ignores prices.
pub fn schedule_welfare(tank: &TankModel, draws: &WaterDrawProfile) -> Result<WhSchedule> {
    schedule_slots(tank, draws.values(), Objective::Welfare)
}

/// Schedule minimizing the priced energy `Σ price·on`.
pub fn schedule_price_sensitive(
    tank: &TankModel,
    draws: &WaterDrawProfile,
    prices: &PriceProfile,
) -> Result<WhSchedule> {
    schedule_slots(tank, draws.values(), Objective::PriceSensitive(prices.values()))
}

/// On/off frequencies, overall and conditioned on the price level.
///
/// A price category with no slots reports `on = 0`, `off = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnOffStats {
    pub p_on: f64,
    pub p_off: f64,
    pub p_on_given_exp: f64,
    pub p_off_given_exp: f64,
    pub p_on_given_cheap: f64,
    pub p_off_given_cheap: f64,
}

impl OnOffStats {
    /// Stats of a price-independent process, where conditionals equal the marginal.
    pub fn independent(p_on: f64) -> Self {
        OnOffStats {
            p_on,
            p_off: 1.0 - p_on,
            p_on_given_exp: p_on,
            p_off_given_exp: 1.0 - p_on,
            p_on_given_cheap: p_on,
            p_off_given_cheap: 1.0 - p_on,
        }
    }

    pub fn to_csv_string(&self) -> String {
        format!(
            "p_on,p_off,p_on_given_exp,p_off_given_exp,p_on_given_cheap,p_off_given_cheap\n{},{},{},{},{},{}\n",
            self.p_on,
            self.p_off,
            self.p_on_given_exp,
            self.p_off_given_exp,
            self.p_on_given_cheap,
            self.p_off_given_cheap
        )
    }
}

pub fn on_off_stats(schedule: &WhSchedule, prices: &PriceProfile, threshold_fraction: f64) -> Result<OnOffStats> {
    let expensive = prices.expensive_mask(threshold_fraction);
    if expensive.len() != schedule.len() {
        return Err(Error::Dimension(format!(
            "schedule has {} slots, prices have {}",
            schedule.len(),
            expensive.len()
        )));
    }
    let (mut on_exp, mut n_exp, mut on_cheap, mut n_cheap) = (0usize, 0usize, 0usize, 0usize);
    for (&on, &exp) in schedule.on.iter().zip(&expensive) {
        match (exp, on) {
            (true, true) => {
                on_exp += 1;
                n_exp += 1;
            }
            (true, false) => n_exp += 1,
            (false, true) => {
                on_cheap += 1;
                n_cheap += 1;
            }
            (false, false) => n_cheap += 1,
        }
    }
    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let p_on = frac(on_exp + on_cheap, schedule.len());
    let p_on_given_exp = frac(on_exp, n_exp);
    let p_on_given_cheap = frac(on_cheap, n_cheap);
    Ok(OnOffStats {
        p_on,
        p_off: 1.0 - p_on,
        p_on_given_exp,
        p_off_given_exp: 1.0 - p_on_given_exp,
        p_on_given_cheap,
        p_off_given_cheap: 1.0 - p_on_given_cheap,
    })
}

/// Relative reduction in on-slots from `baseline` to `scheduled`.
pub fn curtailment_ratio(baseline: &WhSchedule, scheduled: &WhSchedule) -> Result<f64> {
    if baseline.len() != scheduled.len() {
        return Err(Error::Dimension(format!(
            "baseline has {} slots, scheduled has {}",
            baseline.len(),
            scheduled.len()
        )));
    }
    let base = baseline.on_count();
    if base == 0 {
        return Err(Error::NoBaseline);
    }
    Ok((base as f64 - scheduled.on_count() as f64) / base as f64)
}

/// Targets the tank calibration search tries to hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalibrationTarget {
    pub welfare_on: usize,
    pub scheduled_on: usize,
    pub scheduled_expensive_on: usize,
}

impl CalibrationTarget {
    /// 18 welfare on-slots; 16 price-sensitive on-slots, 10 of them expensive.
    pub const CASE_STUDY: CalibrationTarget = CalibrationTarget {
        welfare_on: 18,
        scheduled_on: 16,
        scheduled_expensive_on: 10,
    };
}

/// Coarse grid for the tank calibration search.
#[derive(Debug, Clone)]
pub struct TankGrid {
    pub heat_rates: Vec<f64>,
    pub loss_rates: Vec<f64>,
    pub draw_drops: Vec<f64>,
    pub setpoints: Vec<f64>,
    pub temp_min: f64,
    pub temp_max: f64,
    pub initial_temp: f64,
}

impl Default for TankGrid {
    fn default() -> Self {
        TankGrid {
            heat_rates: (0..9).map(|i| 2.0 + 0.5 * i as f64).collect(),
            loss_rates: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            draw_drops: (1..=8).map(|i| 0.5 * i as f64).collect(),
            setpoints: vec![110.0, 115.0, 120.0, 125.0],
            temp_min: 110.0,
            temp_max: 130.0,
            initial_temp: 120.0,
        }
    }
}

/// Scans `grid` in order (heat rate, loss, draw drop, setpoint) and returns
/// every tank whose welfare and price-sensitive schedules hit `target`.
pub fn calibrate_tank(
    grid: &TankGrid,
    draws: &WaterDrawProfile,
    prices: &PriceProfile,
    threshold_fraction: f64,
    target: CalibrationTarget,
) -> Vec<TankModel> {
    let expensive = prices.expensive_mask(threshold_fraction);
    let mut hits = Vec::new();
    for &heat_rate in &grid.heat_rates {
        for &loss_rate in &grid.loss_rates {
            for &draw_drop in &grid.draw_drops {
                for &comfort_setpoint in &grid.setpoints {
                    let tank = TankModel {
                        temp_min: grid.temp_min,
                        temp_max: grid.temp_max,
                        heat_rate,
                        loss_rate,
                        draw_drop,
                        initial_temp: grid.initial_temp,
                        comfort_setpoint,
                    };
                    let Ok(welfare) = schedule_welfare(&tank, draws) else {
                        continue;
                    };
                    if welfare.on_count() != target.welfare_on {
                        continue;
                    }
                    let Ok(priced) = schedule_price_sensitive(&tank, draws, prices) else {
                        continue;
                    };
                    let expensive_on = priced.on.iter().zip(&expensive).filter(|(&on, &e)| on && e).count();
                    if priced.on_count() == target.scheduled_on && expensive_on == target.scheduled_expensive_on {
                        hits.push(tank);
                    }
                }
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::profiles::synthetic;

    fn flat_tank() -> TankModel {
        TankModel {
            temp_min: 110.0,
            temp_max: 130.0,
            heat_rate: 1.0,
            loss_rate: 0.0,
            draw_drop: 0.0,
            initial_temp: 110.0,
            comfort_setpoint: 110.0,
        }
    }

    #[test]
    fn simulate_idle_tank_is_constant() {
        let tank = TankModel { initial_temp: 120.0, ..flat_tank() };
        let traj = simulate_tank(&tank, &WhSchedule::all_off(96), &[0.0; 96]);
        assert!(traj.iter().all(|&t| t == 120.0));
    }

    #[test]
    fn simulate_always_on_ramps() {
        let traj = simulate_tank(&flat_tank(), &WhSchedule::new(vec![true; 5]), &[0.0; 5]);
        assert_eq!(traj, vec![111.0, 112.0, 113.0, 114.0, 115.0]);
    }

    #[test]
    fn welfare_without_draws_stays_off() {
        let tank = TankModel { initial_temp: 120.0, comfort_setpoint: 115.0, ..flat_tank() };
        let draws = WaterDrawProfile::new(vec![0.0; 96]).unwrap();
        assert_eq!(schedule_welfare(&tank, &draws).unwrap().on_count(), 0);
    }

    #[test]
    fn overwhelming_draws_are_infeasible() {
        let tank = TankModel::case_study();
        let mut values = vec![0.05; 96];
        for v in values.iter_mut().skip(40).take(10) {
            *v = 1.0;
        }
        let draws = WaterDrawProfile::new(values).unwrap();
        let heavy = TankModel { draw_drop: 10.0, ..tank };
        match schedule_welfare(&heavy, &draws) {
            Err(Error::Infeasible { slot }) => assert!((40..50).contains(&slot), "slot {slot}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn two_slot_toy_heats_in_cheap_slot() {
        // Must heat exactly once to stay above 110: start at 110, lose 1 per slot, heat 2.
        let tank = TankModel {
            temp_min: 110.0,
            temp_max: 130.0,
            heat_rate: 2.0,
            loss_rate: 1.0,
            draw_drop: 0.0,
            initial_temp: 111.0,
            comfort_setpoint: 110.0,
        };
        let prices = [1.0, 0.1];
        let mut feasible = Vec::new();
        for bits in 0..4u8 {
            let s = WhSchedule::new(vec![bits & 2 != 0, bits & 1 != 0]);
            if first_band_violation(&tank, &simulate_tank(&tank, &s, &[0.0, 0.0])).is_none() {
                let cost: f64 = s.on.iter().zip(&prices).map(|(&o, &p)| if o { p } else { 0.0 }).sum();
                feasible.push((cost, s));
            }
        }
        feasible.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let best = &feasible[0].1;
        assert_eq!(best.on, vec![false, true]);
        let dp = schedule_slots(&tank, &[0.0, 0.0], Objective::PriceSensitive(&prices)).unwrap();
        assert_eq!(&dp, best);
    }

    #[test]
    fn constant_prices_match_welfare_count_at_min_setpoint() {
        let tank = TankModel { comfort_setpoint: 110.0, ..TankModel::case_study() };
        let draws = synthetic::water_draw_profile();
        let flat = PriceProfile::new(vec![0.7; 96]).unwrap();
        let welfare = schedule_welfare(&tank, &draws).unwrap();
        let priced = schedule_price_sensitive(&tank, &draws, &flat).unwrap();
        assert_eq!(welfare.on_count(), priced.on_count());
    }

    #[test]
    fn case_study_schedules() {
        let tank = TankModel::case_study();
        let draws = synthetic::water_draw_profile();
        let prices = synthetic::price_profile();
        let welfare = schedule_welfare(&tank, &draws).unwrap();
        let priced = schedule_price_sensitive(&tank, &draws, &prices).unwrap();
        assert_eq!(welfare.on_count(), 18);
        assert_eq!(priced.on_count(), 16);
        for s in [&welfare, &priced] {
            assert_eq!(first_band_violation(&tank, &simulate_tank(&tank, s, draws.values())), None);
        }

        let stats = on_off_stats(&welfare, &prices, 0.5).unwrap();
        assert_eq!(stats.p_on, 0.1875);
        assert_eq!(stats.p_off, 0.8125);

        let stats = on_off_stats(&priced, &prices, 0.5).unwrap();
        assert_eq!(stats.p_on_given_exp, 10.0 / 68.0);
        assert_eq!(stats.p_off_given_exp, 1.0 - 10.0 / 68.0);
        assert_eq!(stats.p_on_given_cheap, 6.0 / 28.0);
        assert!((stats.p_off_given_cheap - 22.0 / 28.0).abs() < 1e-15);

        let ratio = curtailment_ratio(&welfare, &priced).unwrap();
        assert!((ratio - 2.0 / 18.0).abs() < 1e-12);
    }

    #[test]
    fn all_off_stats() {
        let prices = synthetic::price_profile();
        let s = on_off_stats(&WhSchedule::all_off(96), &prices, 0.5).unwrap();
        assert_eq!(s.p_on, 0.0);
        assert_eq!((s.p_off, s.p_off_given_exp, s.p_off_given_cheap), (1.0, 1.0, 1.0));
    }

    #[test]
    fn curtailment_examples() {
        let mk = |n: usize| WhSchedule::new((0..96).map(|i| i < n).collect());
        assert!((curtailment_ratio(&mk(18), &mk(16)).unwrap() - 2.0 / 18.0).abs() < 1e-15);
        assert_eq!(curtailment_ratio(&mk(18), &mk(18)).unwrap(), 0.0);
        assert_eq!(curtailment_ratio(&mk(18), &mk(9)).unwrap(), 0.5);
        assert!(matches!(curtailment_ratio(&mk(0), &mk(0)), Err(Error::NoBaseline)));
    }

    #[test]
    fn grid_search_recovers_bundled_calibration() {
        let hits = calibrate_tank(
            &TankGrid::default(),
            &synthetic::water_draw_profile(),
            &synthetic::price_profile(),
            0.5,
            CalibrationTarget::CASE_STUDY,
        );
        assert_eq!(hits, vec![TankModel::case_study()]);
    }

    #[test]
    fn tank_validation_names_field() {
        let bad = TankModel { heat_rate: 0.0, ..TankModel::case_study() };
        let err = bad.validate().unwrap_err();
        assert!(err.to_string().contains("tank.heat_rate"));
    }

    proptest! {
        #[test]
        fn stats_reweight_to_marginal(bits in proptest::collection::vec(any::<bool>(), 96)) {
            let prices = synthetic::price_profile();
            let schedule = WhSchedule::new(bits);
            let s = on_off_stats(&schedule, &prices, 0.5).unwrap();
            let p_exp = 68.0 / 96.0;
            let mixed = p_exp * s.p_on_given_exp + (1.0 - p_exp) * s.p_on_given_cheap;
            prop_assert!((mixed - s.p_on).abs() < 1e-12);
        }
    }
}
