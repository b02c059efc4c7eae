//! Two-seller Bayesian bidding game: conditional and expected payoff
//! matrices, dominance, exhaustive pure equilibrium search and the full
//! pipeline from profiles to equilibrium.
//!
//! Expected payoff columns use the lexicographic κ layout. With `S`
//! strategies and `K` opponent types, column `κ` encodes the opponent's
//! type-contingent strategy `(j_1, …, j_K)` with `j_1` most significant, so
//! for `S = 3, K = 2` the columns run `(1,1), (1,2), (1,3), (2,1), …, (3,3)`.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bayesian_types::{
    conditional_type_distributions, joint_type_distribution, price_expensive_prob,
    scenario_probs_conditional, scenario_probs_independent, ConditionalTypeDistributions,
    JointTypeDistribution, ParticipationFlags, ScenarioProbabilities, TypePrior,
};
use crate::cost_model::{make_bid, AggregatorCostModel, BidCurve, CostParams};
use crate::error::{Error, Result};
use crate::market_clearing::{
    apply_caps, buyer_payoff, clear_two_sellers, seller_payoff, validate_bargain, MarketOutcome,
    PayoffPair, RegulatoryCaps,
};
use crate::profiles::{PriceProfile, WaterDrawProfile};
use crate::wh_scheduler::{
    curtailment_ratio, on_off_stats, schedule_price_sensitive, schedule_welfare, OnOffStats,
    TankModel, WhSchedule,
};

/// Two payoffs closer than this are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StrategySet {
    epsilons: Vec<f64>,
}

impl StrategySet {
    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.is_empty() {
            return Err(Error::config("strategies", "at least one strategy is required"));
        }
        if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::config("strategies", format!("multiplier {e} must be positive")));
        }
        if epsilons.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("strategies", "multipliers must be strictly increasing"));
        }
        Ok(StrategySet { epsilons })
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    /// `low`, `marginal` or `high` relative to bidding at marginal cost (ε = 2).
    pub fn label(&self, index: usize) -> &'static str {
        let e = self.epsilons[index];
        if (e - 2.0).abs() < 1e-12 {
            "marginal"
        } else if e < 2.0 {
            "low"
        } else {
            "high"
        }
    }
}

impl Default for StrategySet {
    fn default() -> Self {
        StrategySet { epsilons: vec![1.6, 2.0, 2.4] }
    }
}

impl TryFrom<Vec<f64>> for StrategySet {
    type Error = String;

    fn try_from(epsilons: Vec<f64>) -> std::result::Result<Self, Self::Error> {
        StrategySet::new(epsilons).map_err(|e| e.to_string())
    }
}

impl From<StrategySet> for Vec<f64> {
    fn from(set: StrategySet) -> Self {
        set.epsilons
    }
}

/// Strategy index (0-based) chosen by each of a player's own types.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TypeContingentStrategy {
    pub actions: Vec<usize>,
}

impl TypeContingentStrategy {
    /// Decodes a κ column index into per-type actions.
    pub fn from_column(column: usize, strategies: usize, types: usize) -> Self {
        let mut actions = vec![0; types];
        let mut rest = column;
        for slot in actions.iter_mut().rev() {
            *slot = rest % strategies;
            rest /= strategies;
        }
        TypeContingentStrategy { actions }
    }

    pub fn column(&self, strategies: usize) -> usize {
        self.actions.iter().fold(0, |acc, &a| acc * strategies + a)
    }

    /// One-based, e.g. `(3,1)`.
    pub fn display(&self) -> String {
        let parts: Vec<String> = self.actions.iter().map(|a| (a + 1).to_string()).collect();
        format!("({})", parts.join(","))
    }
}

/// Number of κ columns, `strategies^types`.
pub fn column_count(strategies: usize, types: usize) -> Result<usize> {
    u32::try_from(types)
        .ok()
        .and_then(|t| strategies.checked_pow(t))
        .ok_or_else(|| Error::Dimension(format!("{strategies}^{types} columns overflow")))
}

/// Header label of a κ column, e.g. `k31`.
pub fn column_label(column: usize, strategies: usize, types: usize) -> String {
    let s = TypeContingentStrategy::from_column(column, strategies, types);
    let digits: Vec<String> = s.actions.iter().map(|a| (a + 1).to_string()).collect();
    let sep = if strategies > 9 { "_" } else { "" };
    format!("k{}", digits.join(sep))
}

/// Payoffs of both sellers for one type realization `(m, n)`. Rows are A's
/// strategy and columns B's strategy in both matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPayoffMatrix {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
}

/// Conditional matrices for every type pair, indexed `[m][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPayoffs {
    pub cells: Vec<Vec<ConditionalPayoffMatrix>>,
}

impl ConditionalPayoffs {
    pub fn get(&self, m: usize, n: usize) -> &ConditionalPayoffMatrix {
        &self.cells[m][n]
    }

    pub fn type_counts(&self) -> (usize, usize) {
        (self.cells.len(), self.cells.first().map_or(0, Vec::len))
    }
}

/// One type's expected payoff, `S` rows by `S^K` κ columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedPayoffMatrix {
    values: Array2<f64>,
    opponent_types: usize,
}

impl ExpectedPayoffMatrix {
    pub fn new(values: Array2<f64>, opponent_types: usize) -> Result<Self> {
        let (rows, cols) = values.dim();
        if rows == 0 {
            return Err(Error::Dimension("expected payoff matrix has no rows".into()));
        }
        let want = column_count(rows, opponent_types)?;
        if cols != want {
            return Err(Error::Dimension(format!(
                "{rows} strategies against {opponent_types} opponent types need {want} columns, got {cols}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("expected payoff matrix has a non-finite entry".into()));
        }
        Ok(ExpectedPayoffMatrix { values, opponent_types })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn strategies(&self) -> usize {
        self.values.nrows()
    }

    pub fn opponent_types(&self) -> usize {
        self.opponent_types
    }

    /// CSV with header `strategy,k11,k12,…` and one-based strategy rows.
    pub fn to_csv_string(&self) -> String {
        let s = self.strategies();
        let mut out = String::from("strategy");
        for c in 0..self.values.ncols() {
            write!(out, ",{}", column_label(c, s, self.opponent_types)).unwrap();
        }
        out.push('\n');
        for (i, row) in self.values.rows().into_iter().enumerate() {
            write!(out, "{}", i + 1).unwrap();
            for v in row {
                write!(out, ",{}", crate::report::sig6(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let bad = |reason: String| Error::Parse { path: origin.into(), reason };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| bad(e.to_string()))?
            .iter()
            .map(str::to_owned)
            .collect();
        if header.first().map(String::as_str) != Some("strategy") || header.len() < 2 {
            return Err(bad("header must start with `strategy` followed by κ columns".into()));
        }
        let cols = header.len() - 1;
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            let index: usize = record[0]
                .parse()
                .map_err(|e| bad(format!("row {}: strategy index: {e}", i + 1)))?;
            if index != i + 1 {
                return Err(bad(format!("row {} has strategy {index}, expected {}", i + 1, i + 1)));
            }
            let values = record
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|e| bad(format!("row {}: `{v}`: {e}", i + 1))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(values);
        }
        let s = rows.len();
        if s == 0 {
            return Err(bad("no strategy rows".into()));
        }
        let mut types = 0;
        while column_count(s, types)? < cols {
            types += 1;
            if s == 1 {
                break;
            }
        }
        if column_count(s, types)? != cols {
            return Err(bad(format!("{cols} columns is not a power of {s} strategies")));
        }
        for (c, label) in header.iter().skip(1).enumerate() {
            let want = column_label(c, s, types);
            if *label != want {
                return Err(bad(format!("column {} is `{label}`, expected `{want}`", c + 1)));
            }
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((s, cols), flat).map_err(|e| bad(e.to_string()))?;
        ExpectedPayoffMatrix::new(values, types).map_err(|e| e.context(origin.to_string()))
    }
}

/// `a[m]` is `EP_A^m`, `b[n]` is `EP_B^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedPayoffs {
    pub a: Vec<ExpectedPayoffMatrix>,
    pub b: Vec<ExpectedPayoffMatrix>,
}

/// Weights each conditional matrix by the owner's belief about the
/// opponent's type and lays the result out in κ columns.
pub fn expected_payoffs(h: &ConditionalPayoffs, eta: &ConditionalTypeDistributions) -> Result<ExpectedPayoffs> {
    let (m_types, n_types) = h.type_counts();
    if eta.eta_a.dim() != (m_types, n_types) || eta.eta_b.dim() != (n_types, m_types) {
        return Err(Error::Dimension(format!(
            "beliefs {:?}/{:?} do not match {m_types}×{n_types} type pairs",
            eta.eta_a.dim(),
            eta.eta_b.dim()
        )));
    }
    let s = h.get(0, 0).a.nrows();
    for row in &h.cells {
        for cell in row {
            if cell.a.dim() != (s, s) || cell.b.dim() != (s, s) {
                return Err(Error::Dimension("conditional payoff matrices differ in size".into()));
            }
        }
    }

    let cols_a = column_count(s, n_types)?;
    let mut a = Vec::with_capacity(m_types);
    for m in 0..m_types {
        let mut ep = Array2::<f64>::zeros((s, cols_a));
        for kappa in 0..cols_a {
            let opp = TypeContingentStrategy::from_column(kappa, s, n_types);
            for i in 0..s {
                ep[[i, kappa]] = (0..n_types)
                    .map(|n| eta.eta_a[[m, n]] * h.get(m, n).a[[i, opp.actions[n]]])
                    .sum();
            }
        }
        a.push(ExpectedPayoffMatrix::new(ep, n_types)?);
    }

    let cols_b = column_count(s, m_types)?;
    let mut b = Vec::with_capacity(n_types);
    for n in 0..n_types {
        let mut ep = Array2::<f64>::zeros((s, cols_b));
        for kappa in 0..cols_b {
            let opp = TypeContingentStrategy::from_column(kappa, s, m_types);
            for j in 0..s {
                ep[[j, kappa]] = (0..m_types)
                    .map(|m| eta.eta_b[[n, m]] * h.get(m, n).b[[opp.actions[m], j]])
                    .sum();
            }
        }
        b.push(ExpectedPayoffMatrix::new(ep, m_types)?);
    }
    Ok(ExpectedPayoffs { a, b })
}

/// Pairwise dominance among the rows of one expected payoff matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    /// Row that weakly dominates every other row, with at least one strict
    /// column against each.
    pub dominant: Option<usize>,
    /// `dominates[r][i]`: row r weakly dominates row i with some strict column.
    pub dominates: Vec<Vec<bool>>,
}

pub fn find_dominant_row(ep: &ExpectedPayoffMatrix) -> DominanceReport {
    let v = ep.values();
    let s = v.nrows();
    let mut dominates = vec![vec![false; s]; s];
    for r in 0..s {
        for i in 0..s {
            if r == i {
                continue;
            }
            let weak = v.row(r).iter().zip(v.row(i)).all(|(x, y)| *x >= *y - TIE_TOLERANCE);
            let strict = v.row(r).iter().zip(v.row(i)).any(|(x, y)| *x > *y + TIE_TOLERANCE);
            dominates[r][i] = weak && strict;
        }
    }
    let dominant = (0..s).find(|&r| (0..s).all(|i| i == r || dominates[r][i]));
    DominanceReport { dominant, dominates }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub a: TypeContingentStrategy,
    pub b: TypeContingentStrategy,
    /// Interim expected payoff of each of A's types.
    pub payoff_a: Vec<f64>,
    pub payoff_b: Vec<f64>,
    /// Some type has another best reply within tolerance.
    pub tied_best_reply: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    /// Every pure equilibrium in lexicographic order of (A, B); empty when
    /// none exists.
    pub equilibria: Vec<Equilibrium>,
    pub dominance_a: Vec<DominanceReport>,
    pub dominance_b: Vec<DominanceReport>,
}

impl EquilibriumResult {
    pub fn primary(&self) -> Option<&Equilibrium> {
        self.equilibria.first()
    }

    pub fn has_ties(&self) -> bool {
        self.equilibria.len() > 1 || self.equilibria.iter().any(|e| e.tied_best_reply)
    }
}

/// Best-reply check for one type: returns (is best, has a tied alternative).
fn best_reply(ep: &ExpectedPayoffMatrix, action: usize, column: usize) -> (bool, bool) {
    let v = ep.values();
    let chosen = v[[action, column]];
    let best = v.column(column).iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let is_best = chosen >= best - TIE_TOLERANCE;
    let tied = (0..v.nrows()).any(|r| r != action && (v[[r, column]] - chosen).abs() <= TIE_TOLERANCE);
    (is_best, tied)
}

/// Enumerates all type-contingent strategy pairs and keeps those where every
/// type of both players plays a best reply.
pub fn bayesian_nash(ep_a: &[ExpectedPayoffMatrix], ep_b: &[ExpectedPayoffMatrix]) -> Result<EquilibriumResult> {
    let (m_types, n_types) = (ep_a.len(), ep_b.len());
    if m_types == 0 || n_types == 0 {
        return Err(Error::Dimension("both players need at least one type".into()));
    }
    let s = ep_a[0].strategies();
    for (who, set, opp) in [("A", ep_a, n_types), ("B", ep_b, m_types)] {
        for (k, ep) in set.iter().enumerate() {
            if ep.strategies() != s || ep.opponent_types() != opp {
                return Err(Error::Dimension(format!(
                    "EP_{who}^{} is {}×{} for {} opponent types; expected {s} strategies against {opp} types",
                    k + 1,
                    ep.strategies(),
                    ep.values().ncols(),
                    ep.opponent_types()
                )));
            }
        }
    }

    let mut equilibria = Vec::new();
    for code_a in 0..column_count(s, m_types)? {
        let sa = TypeContingentStrategy::from_column(code_a, s, m_types);
        for code_b in 0..column_count(s, n_types)? {
            let sb = TypeContingentStrategy::from_column(code_b, s, n_types);
            let mut tied = false;
            let a_ok = (0..m_types).all(|m| {
                let (ok, t) = best_reply(&ep_a[m], sa.actions[m], code_b);
                tied |= t;
                ok
            });
            if !a_ok {
                continue;
            }
            let b_ok = (0..n_types).all(|n| {
                let (ok, t) = best_reply(&ep_b[n], sb.actions[n], code_a);
                tied |= t;
                ok
            });
            if !b_ok {
                continue;
            }
            let payoff_a = (0..m_types).map(|m| ep_a[m].values()[[sa.actions[m], code_b]]).collect();
            let payoff_b = (0..n_types).map(|n| ep_b[n].values()[[sb.actions[n], code_a]]).collect();
            equilibria.push(Equilibrium { a: sa.clone(), b: sb, payoff_a, payoff_b, tied_best_reply: tied });
        }
    }
    Ok(EquilibriumResult {
        equilibria,
        dominance_a: ep_a.iter().map(find_dominant_row).collect(),
        dominance_b: ep_b.iter().map(find_dominant_row).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "non-coop")]
    NonCooperative,
    #[serde(rename = "stackelberg")]
    Stackelberg,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::NonCooperative => "non-coop",
            Mechanism::Stackelberg => "stackelberg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Variant {
    pub mechanism: Mechanism,
    /// Water heaters follow the price-sensitive schedule.
    pub dr: bool,
}

impl Variant {
    pub fn name(&self) -> String {
        format!("{}{}", self.mechanism.name(), if self.dr { "+dr" } else { "" })
    }
}

/// Load composition used only for reporting demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandSpec {
    pub houses: usize,
    pub wh_kw: f64,
    pub wh_share: f64,
    pub gen_kw: f64,
}

/// `(1 − curtail)·houses·wh_kw / wh_share + gen_kw`.
pub fn demand_arithmetic(houses: usize, wh_kw: f64, wh_share: f64, gen_kw: f64, curtail: f64) -> Result<f64> {
    if !(wh_share > 0.0 && wh_share <= 1.0) {
        return Err(Error::Domain(format!("water heater share {wh_share} must lie in (0, 1]")));
    }
    if !(0.0..1.0).contains(&curtail) {
        return Err(Error::Domain(format!("curtailment {curtail} must lie in [0, 1)")));
    }
    if !(wh_kw >= 0.0 && gen_kw >= 0.0) {
        return Err(Error::Domain("heater rating and generation must be non-negative".into()));
    }
    Ok((1.0 - curtail) * houses as f64 * wh_kw / wh_share + gen_kw)
}

impl DemandSpec {
    pub fn demand(&self, curtail: f64) -> Result<f64> {
        demand_arithmetic(self.houses, self.wh_kw, self.wh_share, self.gen_kw, curtail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellerSpec {
    pub name: String,
    #[serde(flatten)]
    pub demand: DemandSpec,
    /// Baseline feed `P₀` anchoring the bid, kW.
    pub p0: f64,
    /// Local load fed from storage before trading, kW.
    pub p_g: f64,
    /// Upper bound on the feed, kW.
    pub p_max: f64,
    /// Whether the seller's water heaters follow the price-sensitive schedule
    /// in DR variants, freeing `P₀` and `P_g` by the curtailment ratio.
    #[serde(default)]
    pub schedules_water_heaters: bool,
    pub prior: TypePrior,
    pub types: Vec<CostParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerSpec {
    pub name: String,
    #[serde(flatten)]
    pub demand: DemandSpec,
    #[serde(flatten)]
    pub cost: CostParams,
    pub p_g: f64,
    /// Energy the buyer purchases, `L_C`.
    pub load_kw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub variant: Variant,
    pub strategies: StrategySet,
    pub threshold_fraction: f64,
    pub participation: ParticipationFlags,
    pub tank: TankModel,
    pub caps: RegulatoryCaps,
    pub sellers: [SellerSpec; 2],
    pub buyer: BuyerSpec,
    pub prices: PriceProfile,
    pub draws: WaterDrawProfile,
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::config(
                "threshold_fraction",
                format!("must lie in (0, 1), got {}", self.threshold_fraction),
            ));
        }
        self.tank.validate()?;
        self.caps.validate()?;
        if self.variant.mechanism == Mechanism::Stackelberg && self.caps.is_empty() {
            return Err(Error::config("caps", "the stackelberg variant needs at least one cap"));
        }
        for (k, s) in self.sellers.iter().enumerate() {
            let field = |f: &str| format!("seller[{k}].{f}");
            if s.types.is_empty() {
                return Err(Error::config(field("types"), "at least one type is required"));
            }
            for (t, p) in s.types.iter().enumerate() {
                p.validate().map_err(|e| Error::config(field(&format!("types[{t}]")), e.to_string()))?;
            }
            if s.prior.type_count() != s.types.len() {
                return Err(Error::config(
                    field("prior"),
                    format!("prior covers {} types, seller has {}", s.prior.type_count(), s.types.len()),
                ));
            }
            if !(s.p_max.is_finite() && s.p_max > 0.0) {
                return Err(Error::config(field("p_max"), format!("must be positive, got {}", s.p_max)));
            }
            for (name, v) in [("p0", s.p0), ("p_g", s.p_g)] {
                if !(v >= 0.0 && v <= s.p_max) {
                    return Err(Error::config(field(name), format!("{v} must lie in [0, p_max = {}]", s.p_max)));
                }
            }
            check_demand(&s.demand, &field)?;
        }
        let b = &self.buyer;
        b.cost.validate().map_err(|e| Error::config("buyer", e.to_string()))?;
        check_demand(&b.demand, &|f: &str| format!("buyer.{f}"))?;
        if !(b.load_kw.is_finite() && b.load_kw > 0.0) {
            return Err(Error::config("buyer.load_kw", format!("must be positive, got {}", b.load_kw)));
        }
        if !(b.p_g >= b.load_kw) {
            return Err(Error::config(
                "buyer.p_g",
                format!("local feed {} kW cannot cover a purchase of {} kW", b.p_g, b.load_kw),
            ));
        }
        Ok(())
    }
}

fn check_demand(d: &DemandSpec, field: &dyn Fn(&str) -> String) -> Result<()> {
    if d.houses == 0 {
        return Err(Error::config(field("houses"), "must be at least 1"));
    }
    if !(d.wh_share > 0.0 && d.wh_share <= 1.0) {
        return Err(Error::config(field("wh_share"), format!("must lie in (0, 1], got {}", d.wh_share)));
    }
    if !(d.wh_kw.is_finite() && d.wh_kw >= 0.0) {
        return Err(Error::config(field("wh_kw"), format!("must be non-negative, got {}", d.wh_kw)));
    }
    if !(d.gen_kw.is_finite() && d.gen_kw >= 0.0) {
        return Err(Error::config(field("gen_kw"), format!("must be non-negative, got {}", d.gen_kw)));
    }
    Ok(())
}

/// Cost model, effective feeds and one bid per strategy for one seller type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeBids {
    pub cost: AggregatorCostModel,
    pub p0: f64,
    pub p_g: f64,
    pub bids: Vec<BidCurve>,
}

/// `bids[k][t]` is seller k of type t.
fn build_bids(config: &GameConfig, curtail: f64) -> Result<[Vec<TypeBids>; 2]> {
    let one = |k: usize| -> Result<Vec<TypeBids>> {
        let s = &config.sellers[k];
        let scale = if config.variant.dr && s.schedules_water_heaters { 1.0 - curtail } else { 1.0 };
        let (p0, p_g) = (s.p0 * scale, s.p_g * scale);
        s.types
            .iter()
            .map(|t| {
                let cost = AggregatorCostModel::from_mean(t.pricing, t.scale_kwh, s.demand.houses)?;
                let bids = config
                    .strategies
                    .epsilons()
                    .iter()
                    .map(|&e| make_bid(&cost, p0, s.p_max, e))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TypeBids { cost, p0, p_g, bids })
            })
            .collect()
    };
    Ok([one(0)?, one(1)?])
}

/// Cleared trade and both sellers' payoffs in one cell of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellOutcome {
    pub market: MarketOutcome,
    pub payoff_a: f64,
    pub payoff_b: f64,
    pub buyer_payoff: f64,
}

fn play_cell(config: &GameConfig, buyer: &AggregatorCostModel, a: &TypeBids, b: &TypeBids, i: usize, j: usize) -> Result<CellOutcome> {
    let cleared = clear_two_sellers(&a.bids[i], &b.bids[j], config.buyer.load_kw)?;
    let market = match config.variant.mechanism {
        Mechanism::Stackelberg => apply_caps(&cleared, &config.caps),
        Mechanism::NonCooperative => cleared,
    };
    let phi = market.phi_t;
    let omega = buyer_payoff(buyer, config.buyer.p_g, market.p_a + market.p_b, phi)?;
    let settle = |seller: &TypeBids, t: f64| -> Result<f64> {
        let delta = seller_payoff(&seller.cost, seller.p_g, t, phi)?;
        Ok(if validate_bargain(&PayoffPair { delta, omega }) { delta } else { 0.0 })
    };
    Ok(CellOutcome {
        market,
        payoff_a: settle(a, market.p_a)?,
        payoff_b: settle(b, market.p_b)?,
        buyer_payoff: omega,
    })
}

/// Payoff matrices of both sellers when A is type `m` and B is type `n`.
/// A seller whose trade fails the bargaining check earns nothing.
pub fn conditional_payoffs(config: &GameConfig, curtail: f64, m: usize, n: usize) -> Result<ConditionalPayoffMatrix> {
    let bids = build_bids(config, curtail)?;
    conditional_from_bids(config, &bids, m, n)
}

fn buyer_model(config: &GameConfig) -> Result<AggregatorCostModel> {
    let b = &config.buyer;
    AggregatorCostModel::from_mean(b.cost.pricing, b.cost.scale_kwh, b.demand.houses)
}

fn conditional_from_bids(config: &GameConfig, bids: &[Vec<TypeBids>; 2], m: usize, n: usize) -> Result<ConditionalPayoffMatrix> {
    let (ta, tb) = match (bids[0].get(m), bids[1].get(n)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Dimension(format!("type pair ({}, {}) out of range", m + 1, n + 1))),
    };
    let buyer = buyer_model(config)?;
    let s = config.strategies.len();
    let mut a = Array2::zeros((s, s));
    let mut b = Array2::zeros((s, s));
    for i in 0..s {
        for j in 0..s {
            let cell = play_cell(config, &buyer, ta, tb, i, j).map_err(|e| {
                e.context(format!("types ({}, {}), strategies ({}, {})", m + 1, n + 1, i + 1, j + 1))
            })?;
            a[[i, j]] = cell.payoff_a;
            b[[i, j]] = cell.payoff_b;
        }
    }
    Ok(ConditionalPayoffMatrix { a, b })
}

/// Cleared trade when types `(m, n)` meet at the equilibrium strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealizedOutcome {
    pub m: usize,
    pub n: usize,
    pub strategy_a: usize,
    pub strategy_b: usize,
    pub cell: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandReport {
    pub name: String,
    pub demand_kw: f64,
}

/// Every intermediate artifact of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct GameReport {
    pub variant: Variant,
    pub strategies: StrategySet,
    pub p_expensive: f64,
    pub welfare_schedule: WhSchedule,
    pub dr_schedule: Option<WhSchedule>,
    /// Statistics of the schedule the scenario probabilities come from.
    pub stats: OnOffStats,
    pub curtailment: f64,
    pub scenario_probs: ScenarioProbabilities,
    pub joint: JointTypeDistribution,
    pub eta: ConditionalTypeDistributions,
    pub bids: [Vec<TypeBids>; 2],
    pub demands: Vec<DemandReport>,
    pub conditional: ConditionalPayoffs,
    pub expected: ExpectedPayoffs,
    pub equilibrium: EquilibriumResult,
    pub outcomes: Vec<RealizedOutcome>,
    pub caps_applied: bool,
}

impl GameReport {
    /// A's interim expected payoff per type at the primary equilibrium.
    pub fn expected_payoff_a(&self) -> Option<&[f64]> {
        self.equilibrium.primary().map(|e| e.payoff_a.as_slice())
    }

    /// A's ex-ante expected payoff at the primary equilibrium, weighting its
    /// types by their marginal probability.
    pub fn ex_ante_payoff_a(&self) -> Option<f64> {
        let marginal = self.joint.marginal_a();
        self.expected_payoff_a()
            .map(|p| p.iter().zip(&marginal).map(|(x, w)| x * w).sum())
    }

    pub fn ex_ante_payoff_b(&self) -> Option<f64> {
        let marginal = self.joint.marginal_b();
        self.equilibrium
            .primary()
            .map(|e| e.payoff_b.iter().zip(&marginal).map(|(x, w)| x * w).sum())
    }
}

/// Runs the whole pipeline: heater schedules and scenario statistics, type
/// beliefs, bids, conditional and expected payoffs, then the equilibrium.
pub fn play_game(config: &GameConfig) -> Result<GameReport> {
    config.validate()?;
    let variant = config.variant;
    let tank = &config.tank;
    let p_expensive = price_expensive_prob(&config.prices, config.threshold_fraction);

    let welfare_schedule = schedule_welfare(tank, &config.draws).map_err(|e| e.context("welfare schedule"))?;
    let (dr_schedule, stats, curtailment, scenario_probs) = if variant.dr {
        let scheduled = schedule_price_sensitive(tank, &config.draws, &config.prices)
            .map_err(|e| match e {
                Error::Infeasible { slot } => Error::config(
                    "tank",
                    format!("price-sensitive schedule cannot hold the comfort band at slot {slot}"),
                ),
                other => other,
            })?;
        let stats = on_off_stats(&scheduled, &config.prices, config.threshold_fraction)?;
        let curtail = curtailment_ratio(&welfare_schedule, &scheduled)?;
        let sp = scenario_probs_conditional(p_expensive, &stats)?;
        (Some(scheduled), stats, curtail, sp)
    } else {
        let stats = on_off_stats(&welfare_schedule, &config.prices, config.threshold_fraction)?;
        let sp = scenario_probs_independent(p_expensive, &stats)?;
        (None, stats, 0.0, sp)
    };

    let [seller_a, seller_b] = &config.sellers;
    let joint = joint_type_distribution(&scenario_probs, &config.participation, &seller_a.prior, &seller_b.prior)?;
    let eta = conditional_type_distributions(&joint)?;

    let bids = build_bids(config, curtailment)?;
    let mut demands = Vec::with_capacity(3);
    for s in &config.sellers {
        let curtail = if variant.dr && s.schedules_water_heaters { curtailment } else { 0.0 };
        demands.push(DemandReport { name: s.name.clone(), demand_kw: s.demand.demand(curtail)? });
    }
    demands.push(DemandReport { name: config.buyer.name.clone(), demand_kw: config.buyer.demand.demand(0.0)? });

    let (m_types, n_types) = (seller_a.types.len(), seller_b.types.len());
    let mut cells = Vec::with_capacity(m_types);
    for m in 0..m_types {
        let mut row = Vec::with_capacity(n_types);
        for n in 0..n_types {
            row.push(conditional_from_bids(config, &bids, m, n)?);
        }
        cells.push(row);
    }
    let conditional = ConditionalPayoffs { cells };
    let expected = expected_payoffs(&conditional, &eta)?;
    let equilibrium = bayesian_nash(&expected.a, &expected.b)?;

    let mut outcomes = Vec::new();
    let mut caps_applied = false;
    let buyer = buyer_model(config)?;
    if let Some(eq) = equilibrium.primary() {
        for m in 0..m_types {
            for n in 0..n_types {
                let (i, j) = (eq.a.actions[m], eq.b.actions[n]);
                let cell = play_cell(config, &buyer, &bids[0][m], &bids[1][n], i, j)?;
                caps_applied |= cell.market.capped.any();
                outcomes.push(RealizedOutcome { m, n, strategy_a: i, strategy_b: j, cell });
            }
        }
    }

    Ok(GameReport {
        variant,
        strategies: config.strategies.clone(),
        p_expensive,
        welfare_schedule,
        dr_schedule,
        stats,
        curtailment,
        scenario_probs,
        joint,
        eta,
        bids,
        demands,
        conditional,
        expected,
        equilibrium,
        outcomes,
        caps_applied,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn ep(values: Array2<f64>, opp: usize) -> ExpectedPayoffMatrix {
        ExpectedPayoffMatrix::new(values, opp).unwrap()
    }

    /// Independent check: no single type of either player gains by deviating.
    fn no_profitable_deviation(ep_a: &[ExpectedPayoffMatrix], ep_b: &[ExpectedPayoffMatrix], e: &Equilibrium) -> bool {
        let s = ep_a[0].strategies();
        let col_b = e.b.column(s);
        let col_a = e.a.column(s);
        let a_ok = ep_a.iter().enumerate().all(|(m, ep)| {
            (0..s).all(|r| ep.values()[[r, col_b]] <= ep.values()[[e.a.actions[m], col_b]] + TIE_TOLERANCE)
        });
        let b_ok = ep_b.iter().enumerate().all(|(n, ep)| {
            (0..s).all(|r| ep.values()[[r, col_a]] <= ep.values()[[e.b.actions[n], col_a]] + TIE_TOLERANCE)
        });
        a_ok && b_ok
    }

    #[test]
    fn kappa_layout() {
        let labels: Vec<String> = (0..9).map(|c| column_label(c, 3, 2)).collect();
        assert_eq!(labels, ["k11", "k12", "k13", "k21", "k22", "k23", "k31", "k32", "k33"]);
        let s = TypeContingentStrategy::from_column(6, 3, 2);
        assert_eq!(s.actions, vec![2, 0]);
        assert_eq!(s.column(3), 6);
        assert_eq!(TypeContingentStrategy::from_column(8, 3, 2).actions, vec![2, 2]);
        assert_eq!(column_count(3, 2).unwrap(), 9);
    }

    #[test]
    fn strategy_set_rules() {
        assert_eq!(StrategySet::default().epsilons(), &[1.6, 2.0, 2.4]);
        assert!(StrategySet::new(vec![2.0]).is_ok());
        assert!(StrategySet::new(vec![2.0, 1.6]).is_err());
        assert!(StrategySet::new(vec![0.0, 1.0]).is_err());
        assert!(StrategySet::new(vec![]).is_err());
        let d = StrategySet::default();
        assert_eq!((d.label(0), d.label(1), d.label(2)), ("low", "marginal", "high"));
    }

    fn two_types(h1: f64, h2: f64, s: usize) -> ConditionalPayoffs {
        let m = |v: f64| ConditionalPayoffMatrix { a: Array2::from_elem((s, s), v), b: Array2::from_elem((s, s), v) };
        ConditionalPayoffs { cells: vec![vec![m(h1), m(h2)], vec![m(h1), m(h2)]] }
    }

    #[test]
    fn constant_matrices_mix_by_belief() {
        let h = two_types(1.0, 2.0, 3);
        let eta = ConditionalTypeDistributions {
            eta_a: array![[0.21, 0.79], [0.21, 0.79]],
            eta_b: array![[0.5, 0.5], [0.5, 0.5]],
        };
        let e = expected_payoffs(&h, &eta).unwrap();
        assert_eq!(e.a[0].values().dim(), (3, 9));
        for v in e.a[0].values() {
            assert_relative_eq!(*v, 1.79, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_opponent_type_reproduces_h() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let b = array![[5.0, 6.0], [7.0, 8.0]];
        let h = ConditionalPayoffs { cells: vec![vec![ConditionalPayoffMatrix { a: a.clone(), b: b.clone() }]] };
        let eta = ConditionalTypeDistributions { eta_a: array![[1.0]], eta_b: array![[1.0]] };
        let e = expected_payoffs(&h, &eta).unwrap();
        assert_eq!(e.a[0].values(), &a);
        // B's rows are its own strategy, columns A's.
        assert_eq!(e.b[0].values(), &b.t().to_owned());
    }

    #[test]
    fn expected_payoffs_match_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = 3;
        let mut cells = Vec::new();
        for _ in 0..2 {
            let mut row = Vec::new();
            for _ in 0..2 {
                row.push(ConditionalPayoffMatrix {
                    a: Array2::from_shape_fn((s, s), |_| rng.random_range(-5.0..50.0)),
                    b: Array2::from_shape_fn((s, s), |_| rng.random_range(-5.0..50.0)),
                });
            }
            cells.push(row);
        }
        let h = ConditionalPayoffs { cells };
        let eta = ConditionalTypeDistributions {
            eta_a: array![[0.3, 0.7], [0.6, 0.4]],
            eta_b: array![[0.2, 0.8], [0.9, 0.1]],
        };
        let e = expected_payoffs(&h, &eta).unwrap();
        // κ = 7 (1-based) is opponent (3, 1).
        for m in 0..2 {
            for i in 0..s {
                let want = eta.eta_a[[m, 0]] * h.get(m, 0).a[[i, 2]] + eta.eta_a[[m, 1]] * h.get(m, 1).a[[i, 0]];
                assert_relative_eq!(e.a[m].values()[[i, 6]], want, max_relative = 1e-12);
            }
        }
        for n in 0..2 {
            for j in 0..s {
                let want = eta.eta_b[[n, 0]] * h.get(0, n).b[[2, j]] + eta.eta_b[[n, 1]] * h.get(1, n).b[[2, j]];
                assert_relative_eq!(e.b[n].values()[[j, 8]], want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn dominance_examples() {
        let id = ep(Array2::eye(3), 1);
        assert_eq!(find_dominant_row(&id).dominant, None);
        let m = ep(array![[1.0, 1.0, 1.0], [2.0, 1.0, 3.0], [0.0, 0.0, 0.0]], 1);
        let r = find_dominant_row(&m);
        assert_eq!(r.dominant, Some(1));
        assert!(r.dominates[1][0] && r.dominates[0][2] && !r.dominates[0][1]);
        let equal = ep(Array2::ones((2, 2)), 1);
        assert_eq!(find_dominant_row(&equal).dominant, None);
    }

    #[test]
    fn constant_game_ties_everywhere() {
        let a: Vec<_> = (0..2).map(|_| ep(Array2::from_elem((3, 9), 4.0), 2)).collect();
        let b = a.clone();
        let r = bayesian_nash(&a, &b).unwrap();
        assert_eq!(r.equilibria.len(), 81);
        assert!(r.has_ties());
        let p = r.primary().unwrap();
        assert_eq!((p.a.actions.clone(), p.b.actions.clone()), (vec![0, 0], vec![0, 0]));
    }

    #[test]
    fn matching_pennies_has_no_pure_equilibrium() {
        // One type each; A wants to match, B wants to mismatch.
        let a = vec![ep(array![[1.0, -1.0], [-1.0, 1.0]], 1)];
        let b = vec![ep(array![[-1.0, 1.0], [1.0, -1.0]], 1)];
        let r = bayesian_nash(&a, &b).unwrap();
        assert!(r.equilibria.is_empty());
        assert!(r.primary().is_none());

        // Two types each, every type playing pennies against the opponent's
        // first type only.
        let pa = |flip: bool| {
            ep(Array2::from_shape_fn((2, 4), |(i, c)| {
                let j = TypeContingentStrategy::from_column(c, 2, 2).actions[0];
                let v = if i == j { 1.0 } else { -1.0 };
                if flip { -v } else { v }
            }), 2)
        };
        let r = bayesian_nash(&[pa(false), pa(false)], &[pa(true), pa(true)]).unwrap();
        // Brute force over all 4×4 pairs agrees.
        let mut brute = 0;
        for ca in 0..4 {
            for cb in 0..4 {
                let sa = TypeContingentStrategy::from_column(ca, 2, 2);
                let sb = TypeContingentStrategy::from_column(cb, 2, 2);
                let a_ok = sa.actions.iter().all(|&x| x == sb.actions[0]);
                let b_ok = sb.actions.iter().all(|&x| x != sa.actions[0]);
                brute += usize::from(a_ok && b_ok);
            }
        }
        assert_eq!(brute, 0);
        assert!(r.equilibria.is_empty());
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let a = vec![ep(Array2::zeros((3, 9)), 2)];
        let b = vec![ep(Array2::zeros((3, 3)), 1)];
        assert!(matches!(bayesian_nash(&a, &b), Err(Error::Dimension(_))));
        assert!(ExpectedPayoffMatrix::new(Array2::zeros((3, 8)), 2).is_err());
    }

    #[test]
    fn ep_csv_round_trip() {
        let m = ep(Array2::from_shape_fn((3, 9), |(i, c)| (i * 9 + c) as f64 * 1.25 - 3.0), 2);
        let text = m.to_csv_string();
        assert!(text.starts_with("strategy,k11,k12,k13,k21,k22,k23,k31,k32,k33\n1,-3,"));
        assert_eq!(ExpectedPayoffMatrix::from_csv_str(&text, "mem").unwrap(), m);
        assert!(ExpectedPayoffMatrix::from_csv_str("strategy,k11,k21\n1,1,2\n", "mem").is_err());
        assert!(ExpectedPayoffMatrix::from_csv_str("strategy,k1,k2\n1,1,x\n2,3,4\n", "mem").is_err());
    }

    #[test]
    fn demand_examples() {
        assert_eq!(demand_arithmetic(200, 4.5, 0.6, 660.0, 0.0).unwrap().round(), 2160.0);
        assert!((demand_arithmetic(200, 4.5, 0.6, 660.0, 0.0).unwrap() - 2160.0).abs() < 1e-9);
        assert!((demand_arithmetic(200, 4.5, 0.6, 660.0, 0.112).unwrap() - 1992.0).abs() < 1e-9);
        assert!((demand_arithmetic(240, 4.5, 0.6, 594.0, 0.0).unwrap() - 2394.0).abs() < 1e-9);
        assert!(demand_arithmetic(200, 4.5, 0.0, 660.0, 0.0).is_err());
        assert!(demand_arithmetic(200, 4.5, 0.6, 660.0, 1.0).is_err());
    }

    /// Two identical sellers, v = 0.04, u = 0.0004, nothing fed locally.
    fn toy_config(mechanism: Mechanism, caps: RegulatoryCaps) -> GameConfig {
        // a·0.25/B = 0.04 and a·0.0625/B² = 0.0004 give B = 25, a = 4.
        let ty = CostParams::new(4.0, 25.0).unwrap();
        let demand = DemandSpec { houses: 1, wh_kw: 4.5, wh_share: 0.6, gen_kw: 0.0 };
        let seller = |name: &str| SellerSpec {
            name: name.into(),
            demand,
            p0: 0.0,
            p_g: 0.0,
            p_max: 1000.0,
            schedules_water_heaters: false,
            prior: TypePrior::uniform_across_scenarios(vec![1.0]).unwrap(),
            types: vec![ty],
        };
        GameConfig {
            variant: Variant { mechanism, dr: false },
            strategies: StrategySet::new(vec![2.0]).unwrap(),
            threshold_fraction: 0.5,
            participation: ParticipationFlags { g: [true; 4] },
            tank: TankModel::case_study(),
            caps,
            sellers: [seller("A"), seller("B")],
            buyer: BuyerSpec {
                name: "C".into(),
                demand,
                cost: CostParams::new(5.0, 21.5).unwrap(),
                p_g: 528.0,
                load_kw: 100.0,
            },
            prices: crate::profiles::synthetic::price_profile(),
            draws: crate::profiles::synthetic::water_draw_profile(),
        }
    }

    #[test]
    fn toy_cell_hand_oracle() {
        let cfg = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
        let h = conditional_payoffs(&cfg, 0.0, 0, 0).unwrap();
        // λ₀ = 0.04, m = 0.0008 each ⇒ 50 kW each at φ = 0.08;
        // payoff 0.08·50 − (0.04·50 + 0.0004·2500) = 1.
        assert_relative_eq!(h.a[[0, 0]], 1.0, max_relative = 1e-12);
        assert_relative_eq!(h.b[[0, 0]], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn symmetric_sellers_have_symmetric_diagonal() {
        let mut cfg = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
        cfg.strategies = StrategySet::default();
        let h = conditional_payoffs(&cfg, 0.0, 0, 0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(h.a[[i, i]], h.b[[i, i]], max_relative = 1e-12);
            for j in 0..3 {
                assert_relative_eq!(h.a[[i, j]], h.b[[j, i]], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn binding_cap_lowers_every_cell() {
        let mut free = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
        free.strategies = StrategySet::default();
        let mut capped = free.clone();
        capped.variant.mechanism = Mechanism::Stackelberg;
        capped.caps.phi_max = Some(0.07);
        let (hf, hc) = (conditional_payoffs(&free, 0.0, 0, 0).unwrap(), conditional_payoffs(&capped, 0.0, 0, 0).unwrap());
        for (c, f) in hc.a.iter().zip(hf.a.iter()).chain(hc.b.iter().zip(hf.b.iter())) {
            assert!(*c <= *f + 1e-12, "{c} > {f}");
        }
        assert!(hc.a[[1, 1]] < hf.a[[1, 1]]);
    }

    #[test]
    fn config_validation_names_fields() {
        let cfg = toy_config(Mechanism::Stackelberg, RegulatoryCaps::default());
        let err = cfg.validate().unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "caps"), "{err}");

        let mut cfg = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
        cfg.sellers[1].p0 = 2000.0;
        let err = cfg.validate().unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "seller[1].p0"), "{err}");

        let mut cfg = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
        cfg.buyer.load_kw = 0.0;
        assert!(matches!(cfg.validate().unwrap_err(), Error::Config { field, .. } if field == "buyer.load_kw"));
    }

    #[test]
    fn single_strategy_game_runs() {
        let cfg = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
        let report = play_game(&cfg).unwrap();
        assert_eq!(report.equilibrium.equilibria.len(), 1);
        let eq = report.equilibrium.primary().unwrap();
        assert_relative_eq!(eq.payoff_a[0], 1.0, max_relative = 1e-12);
        assert_eq!(report.outcomes.len(), 1);
        assert_relative_eq!(report.outcomes[0].cell.market.phi_t, 0.08, max_relative = 1e-12);
    }

    /// Coarse integer payoffs make ties common; continuous ones make them
    /// vanishingly unlikely.
    fn random_game(rng: &mut ChaCha8Rng, coarse: bool) -> (Vec<ExpectedPayoffMatrix>, Vec<ExpectedPayoffMatrix>) {
        let s = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let n = rng.random_range(1..=3);
        let mut mat = |opp: usize| {
            let cols = column_count(s, opp).unwrap();
            let values = Array2::from_shape_fn((s, cols), |_| {
                if coarse { rng.random_range(0..4) as f64 } else { rng.random_range(-10.0..10.0) }
            });
            ep(values, opp)
        };
        let a = (0..m).map(|_| mat(n)).collect();
        let b = (0..n).map(|_| mat(m)).collect();
        (a, b)
    }

    /// The action an equilibrium assigns to a type with a dominant row `r`
    /// must be `r` or tie with it in the column actually faced.
    fn plays_dominant(ep: &ExpectedPayoffMatrix, action: usize, column: usize, exact: bool) -> bool {
        match find_dominant_row(ep).dominant {
            None => true,
            Some(r) if exact => action == r,
            Some(r) => (ep.values()[[action, column]] - ep.values()[[r, column]]).abs() <= TIE_TOLERANCE,
        }
    }

    #[test]
    fn equilibria_survive_deviation_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for round in 0..400 {
            let coarse = round % 2 == 0;
            let (a, b) = random_game(&mut rng, coarse);
            let s = a[0].strategies();
            let r = bayesian_nash(&a, &b).unwrap();
            for e in &r.equilibria {
                assert!(no_profitable_deviation(&a, &b, e));
                let (col_a, col_b) = (e.a.column(s), e.b.column(s));
                for (m, ep) in a.iter().enumerate() {
                    assert!(plays_dominant(ep, e.a.actions[m], col_b, !coarse));
                }
                for (n, ep) in b.iter().enumerate() {
                    assert!(plays_dominant(ep, e.b.actions[n], col_a, !coarse));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn kappa_round_trip(s in 1usize..5, k in 1usize..4, seed in any::<u64>()) {
            let cols = column_count(s, k).unwrap();
            let c = (seed as usize) % cols;
            let t = TypeContingentStrategy::from_column(c, s, k);
            prop_assert_eq!(t.column(s), c);
            prop_assert!(t.actions.iter().all(|&a| a < s));
        }

        #[test]
        fn scaling_multipliers_scales_slopes(c in 0.1f64..5.0) {
            let cfg = toy_config(Mechanism::NonCooperative, RegulatoryCaps::default());
            let mut scaled = cfg.clone();
            scaled.strategies = StrategySet::new(vec![2.0 * c]).unwrap();
            let base = build_bids(&cfg, 0.0).unwrap();
            let other = build_bids(&scaled, 0.0).unwrap();
            prop_assert!((other[0][0].bids[0].slope - c * base[0][0].bids[0].slope).abs() <= 1e-15);
        }
    }
}
