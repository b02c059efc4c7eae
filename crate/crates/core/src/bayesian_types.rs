//! Scenario probabilities, type priors, the joint type distribution and the
//! conditional beliefs each seller holds about its rival's type.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::PriceProfile;
use crate::wh_scheduler::OnOffStats;

const SUM_TOLERANCE: f64 = 1e-9;

/// Joint price level and water-heater state, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    ExpensiveOff,
    ExpensiveOn,
    CheapOff,
    CheapOn,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::ExpensiveOff,
        Scenario::ExpensiveOn,
        Scenario::CheapOff,
        Scenario::CheapOn,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn price_label(self) -> &'static str {
        match self {
            Scenario::ExpensiveOff | Scenario::ExpensiveOn => "expensive",
            Scenario::CheapOff | Scenario::CheapOn => "cheap",
        }
    }

    pub fn wh_label(self) -> &'static str {
        match self {
            Scenario::ExpensiveOff | Scenario::CheapOff => "off",
            Scenario::ExpensiveOn | Scenario::CheapOn => "on",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioProbabilities {
    pub p: [f64; 4],
}

impl ScenarioProbabilities {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!("scenario probabilities {p:?} leave [0, 1]")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Domain(format!("scenario probabilities sum to {sum}")));
        }
        Ok(ScenarioProbabilities { p })
    }

    pub fn get(&self, s: Scenario) -> f64 {
        self.p[s.index()]
    }
}

/// 0/1 weight per scenario marking whether sellers offer energy in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u8; 4]", into = "[u8; 4]")]
pub struct ParticipationFlags {
    pub g: [bool; 4],
}

impl ParticipationFlags {
    /// Flags that reproduce the published joint distribution: only σ₁ counts.
    pub const CASE_STUDY: ParticipationFlags = ParticipationFlags {
        g: [true, false, false, false],
    };
    /// Flags as described in prose: every scenario except (expensive, on).
    pub const PROSE: ParticipationFlags = ParticipationFlags {
        g: [true, false, true, true],
    };
}

impl TryFrom<[u8; 4]> for ParticipationFlags {
    type Error = String;

    fn try_from(raw: [u8; 4]) -> std::result::Result<Self, Self::Error> {
        let mut g = [false; 4];
        for (slot, &v) in g.iter_mut().zip(&raw) {
            *slot = match v {
                0 => false,
                1 => true,
                other => return Err(format!("participation flag must be 0 or 1, got {other}")),
            };
        }
        Ok(ParticipationFlags { g })
    }
}

impl From<ParticipationFlags> for [u8; 4] {
    fn from(flags: ParticipationFlags) -> Self {
        flags.g.map(u8::from)
    }
}

/// Per-scenario prior over one seller's types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TypePrior {
    per_scenario: [Vec<f64>; 4],
}

impl TypePrior {
    pub fn new(per_scenario: [Vec<f64>; 4]) -> Result<Self> {
        let types = per_scenario[0].len();
        if types == 0 {
            return Err(Error::Dimension("type prior needs at least one type".into()));
        }
        for (f, psi) in per_scenario.iter().enumerate() {
            if psi.len() != types {
                return Err(Error::Dimension(format!(
                    "scenario {} prior has {} types, scenario 1 has {types}",
                    f + 1,
                    psi.len()
                )));
            }
            if psi.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Domain(format!("scenario {} prior {psi:?} leaves [0, 1]", f + 1)));
            }
            let sum: f64 = psi.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::Domain(format!("scenario {} prior sums to {sum}", f + 1)));
            }
        }
        Ok(TypePrior { per_scenario })
    }

    /// Same prior in every scenario.
    pub fn uniform_across_scenarios(psi: Vec<f64>) -> Result<Self> {
        Self::new([psi.clone(), psi.clone(), psi.clone(), psi])
    }

    pub fn type_count(&self) -> usize {
        self.per_scenario[0].len()
    }

    pub fn scenario(&self, s: Scenario) -> &[f64] {
        &self.per_scenario[s.index()]
    }
}

impl TryFrom<Vec<Vec<f64>>> for TypePrior {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> std::result::Result<Self, Self::Error> {
        let rows: [Vec<f64>; 4] = rows
            .try_into()
            .map_err(|v: Vec<Vec<f64>>| format!("expected 4 scenario rows, got {}", v.len()))?;
        TypePrior::new(rows).map_err(|e| e.to_string())
    }
}

impl From<TypePrior> for Vec<Vec<f64>> {
    fn from(prior: TypePrior) -> Self {
        prior.per_scenario.into()
    }
}

/// Unnormalized joint weight `π[m][n]` of A being type m and B type n.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTypeDistribution {
    pub pi: Array2<f64>,
}

impl JointTypeDistribution {
    pub fn new(pi: Array2<f64>) -> Result<Self> {
        if pi.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::Domain("joint type weights must be finite and non-negative".into()));
        }
        if pi.iter().all(|&v| v == 0.0) {
            return Err(Error::Domain("joint type distribution is all zero: no scenario participates".into()));
        }
        Ok(JointTypeDistribution { pi })
    }

    /// Marginal probability of each of A's types, normalized to sum to 1.
    pub fn marginal_a(&self) -> Vec<f64> {
        let total = self.pi.sum();
        self.pi.rows().into_iter().map(|r| r.sum() / total).collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        let total = self.pi.sum();
        self.pi.columns().into_iter().map(|c| c.sum() / total).collect()
    }
}

/// Row `m` of `eta_a` is A's belief over B's types when A is type m; row `n`
/// of `eta_b` is B's belief over A's types.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTypeDistributions {
    pub eta_a: Array2<f64>,
    pub eta_b: Array2<f64>,
}

/// Fraction of slots priced strictly above `threshold_fraction` of the maximum.
pub fn price_expensive_prob(prices: &PriceProfile, threshold_fraction: f64) -> f64 {
    let mask = prices.expensive_mask(threshold_fraction);
    mask.iter().filter(|&&e| e).count() as f64 / mask.len() as f64
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Price level and heater state treated as independent events.
pub fn scenario_probs_independent(p_exp: f64, stats: &OnOffStats) -> Result<ScenarioProbabilities> {
    check_prob("P(expensive)", p_exp)?;
    check_prob("P(on)", stats.p_on)?;
    let p_off = 1.0 - stats.p_on;
    ScenarioProbabilities::new([
        p_exp * p_off,
        p_exp * stats.p_on,
        (1.0 - p_exp) * p_off,
        (1.0 - p_exp) * stats.p_on,
    ])
}

/// Heater state conditioned on the price level.
pub fn scenario_probs_conditional(p_exp: f64, stats: &OnOffStats) -> Result<ScenarioProbabilities> {
    check_prob("P(expensive)", p_exp)?;
    check_prob("P(on | expensive)", stats.p_on_given_exp)?;
    check_prob("P(on | cheap)", stats.p_on_given_cheap)?;
    ScenarioProbabilities::new([
        p_exp * stats.p_off_given_exp,
        p_exp * stats.p_on_given_exp,
        (1.0 - p_exp) * stats.p_off_given_cheap,
        (1.0 - p_exp) * stats.p_on_given_cheap,
    ])
}

/// `π[m][n] = Σ_f P(σ_f)·g(σ_f)·Ψ_A^f(m)·Ψ_B^f(n)`, left unnormalized.
pub fn joint_type_distribution(
    sp: &ScenarioProbabilities,
    flags: &ParticipationFlags,
    psi_a: &TypePrior,
    psi_b: &TypePrior,
) -> Result<JointTypeDistribution> {
    let (m_types, n_types) = (psi_a.type_count(), psi_b.type_count());
    let mut pi = Array2::<f64>::zeros((m_types, n_types));
    for s in Scenario::ALL {
        if !flags.g[s.index()] {
            continue;
        }
        let weight = sp.get(s);
        let (a, b) = (psi_a.scenario(s), psi_b.scenario(s));
        if a.len() != m_types || b.len() != n_types {
            return Err(Error::Dimension("type prior changes size across scenarios".into()));
        }
        for (m, &pa) in a.iter().enumerate() {
            for (n, &pb) in b.iter().enumerate() {
                pi[[m, n]] += weight * pa * pb;
            }
        }
    }
    JointTypeDistribution::new(pi)
}

/// Normalizes each row (for A) and column (for B) of `π`.
pub fn conditional_type_distributions(joint: &JointTypeDistribution) -> Result<ConditionalTypeDistributions> {
    let pi = &joint.pi;
    let mut eta_a = pi.clone();
    for (m, mut row) in eta_a.rows_mut().into_iter().enumerate() {
        let sum = row.sum();
        if sum <= 0.0 {
            return Err(Error::StarvedType { player: 'A', index: m + 1 });
        }
        row /= sum;
    }
    let mut eta_b = pi.t().to_owned();
    for (n, mut row) in eta_b.rows_mut().into_iter().enumerate() {
        let sum = row.sum();
        if sum <= 0.0 {
            return Err(Error::StarvedType { player: 'B', index: n + 1 });
        }
        row /= sum;
    }
    Ok(ConditionalTypeDistributions { eta_a, eta_b })
}
