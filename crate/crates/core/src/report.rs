//! Rendering a [`GameReport`] into CSV files and a plain-text summary, plus
//! the run manifest and atomic-ish output writing.
//!
//! Numbers are printed with six significant digits, `.` as decimal separator
//! and LF line endings. Files:
//!
//! | file | header |
//! |------|--------|
//! | `scenario_probs.csv` | `scenario,price,water_heater,probability` |
//! | `pi.csv` | `type_a,type_b,pi` |
//! | `eta.csv` | `player,own_type,opponent_type,eta` |
//! | `bids.csv` | `seller,type,strategy,epsilon,lambda0,slope,p0,p_g` |
//! | `h_m<m>_n<n>.csv` | `strategy_a,strategy_b,payoff_a,payoff_b` |
//! | `ep_A_m<k>.csv`, `ep_B_n<k>.csv` | `strategy,k11,k12,…` |
//! | `equilibrium.csv` | `equilibrium,player,type,strategy,label,expected_payoff` |
//! | `outcomes.csv` | `type_a,type_b,strategy_a,strategy_b,p_a,p_b,phi_t,price_capped,payoff_a,payoff_b,buyer_payoff` |
//! | `schedule_welfare.csv`, `schedule_dr.csv` | `slot,on` |
//! | `stats.csv` | `statistic,value` |
//! | `demand.csv` | `aggregator,demand_kw` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bayesian_types::Scenario;
use crate::config::{sha256_hex, ProfileDigest};
use crate::error::{Error, Result};
use crate::game_engine::{GameReport, Mechanism};

/// Six significant digits, shortest form: `32.8812`, `0.0193457`, `2160`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

/// Named output files in a fixed order.
pub type Rendered = Vec<(String, String)>;

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn render_matrices(report: &GameReport) -> Rendered {
    let mut files = Vec::new();
    for (m, row) in report.conditional.cells.iter().enumerate() {
        for (n, cell) in row.iter().enumerate() {
            let s = cell.a.nrows();
            let rows = (0..s).flat_map(|i| {
                (0..s).map(move |j| {
                    vec![(i + 1).to_string(), (j + 1).to_string(), sig6(cell.a[[i, j]]), sig6(cell.b[[i, j]])]
                })
            });
            files.push((
                format!("h_m{}_n{}.csv", m + 1, n + 1),
                csv("strategy_a,strategy_b,payoff_a,payoff_b", rows),
            ));
        }
    }
    for (k, ep) in report.expected.a.iter().enumerate() {
        files.push((format!("ep_A_m{}.csv", k + 1), ep.to_csv_string()));
    }
    for (k, ep) in report.expected.b.iter().enumerate() {
        files.push((format!("ep_B_n{}.csv", k + 1), ep.to_csv_string()));
    }
    files
}

pub fn render_report(report: &GameReport) -> Rendered {
    let mut files = Vec::new();
    files.push((
        "scenario_probs.csv".into(),
        csv(
            "scenario,price,water_heater,probability",
            Scenario::ALL.iter().map(|&s| {
                vec![
                    format!("{}", s.index() + 1),
                    s.price_label().into(),
                    s.wh_label().into(),
                    sig6(report.scenario_probs.get(s)),
                ]
            }),
        ),
    ));
    let pi = &report.joint.pi;
    files.push((
        "pi.csv".into(),
        csv(
            "type_a,type_b,pi",
            pi.indexed_iter().map(|((m, n), v)| vec![(m + 1).to_string(), (n + 1).to_string(), sig6(*v)]),
        ),
    ));
    let eta_rows = [("A", &report.eta.eta_a), ("B", &report.eta.eta_b)].into_iter().flat_map(|(p, eta)| {
        eta.indexed_iter()
            .map(move |((own, opp), v)| vec![p.to_string(), (own + 1).to_string(), (opp + 1).to_string(), sig6(*v)])
    });
    files.push(("eta.csv".into(), csv("player,own_type,opponent_type,eta", eta_rows)));

    let eps = report.strategies.epsilons();
    let mut bid_rows = Vec::new();
    for (k, seller) in report.bids.iter().enumerate() {
        for (t, tb) in seller.iter().enumerate() {
            for (i, b) in tb.bids.iter().enumerate() {
                bid_rows.push(vec![
                    ["A", "B"][k].to_string(),
                    (t + 1).to_string(),
                    (i + 1).to_string(),
                    sig6(eps[i]),
                    sig6(b.lambda0),
                    sig6(b.slope),
                    sig6(tb.p0),
                    sig6(tb.p_g),
                ]);
            }
        }
    }
    files.push(("bids.csv".into(), csv("seller,type,strategy,epsilon,lambda0,slope,p0,p_g", bid_rows)));

    files.extend(render_matrices(report));

    let mut eq_rows = Vec::new();
    for (e_idx, e) in report.equilibrium.equilibria.iter().enumerate() {
        for (player, strat, pay) in [("A", &e.a, &e.payoff_a), ("B", &e.b, &e.payoff_b)] {
            for (t, &a) in strat.actions.iter().enumerate() {
                eq_rows.push(vec![
                    (e_idx + 1).to_string(),
                    player.into(),
                    (t + 1).to_string(),
                    (a + 1).to_string(),
                    report.strategies.label(a).into(),
                    sig6(pay[t]),
                ]);
            }
        }
    }
    files.push((
        "equilibrium.csv".into(),
        csv("equilibrium,player,type,strategy,label,expected_payoff", eq_rows),
    ));

    files.push((
        "outcomes.csv".into(),
        csv(
            "type_a,type_b,strategy_a,strategy_b,p_a,p_b,phi_t,price_capped,payoff_a,payoff_b,buyer_payoff",
            report.outcomes.iter().map(|o| {
                vec![
                    (o.m + 1).to_string(),
                    (o.n + 1).to_string(),
                    (o.strategy_a + 1).to_string(),
                    (o.strategy_b + 1).to_string(),
                    sig6(o.cell.market.p_a),
                    sig6(o.cell.market.p_b),
                    sig6(o.cell.market.phi_t),
                    o.cell.market.capped.price.to_string(),
                    sig6(o.cell.payoff_a),
                    sig6(o.cell.payoff_b),
                    sig6(o.cell.buyer_payoff),
                ]
            }),
        ),
    ));

    files.push(("schedule_welfare.csv".into(), report.welfare_schedule.to_csv_string()));
    if let Some(s) = &report.dr_schedule {
        files.push(("schedule_dr.csv".into(), s.to_csv_string()));
    }
    let mut stats = report.stats.to_csv_string();
    writeln!(stats, "p_expensive,{}", sig6(report.p_expensive)).unwrap();
    writeln!(stats, "curtailment_ratio,{}", sig6(report.curtailment)).unwrap();
    files.push(("stats.csv".into(), stats));
    files.push((
        "demand.csv".into(),
        csv(
            "aggregator,demand_kw",
            report.demands.iter().map(|d| vec![d.name.clone(), sig6(d.demand_kw)]),
        ),
    ));
    files.push(("summary.txt".into(), summary(report, None)));
    files
}

fn join_sig6(values: &[f64]) -> String {
    values.iter().map(|v| sig6(*v)).collect::<Vec<_>>().join(", ")
}

/// Human-readable summary. `price_cap` is the cap in force for the
/// stackelberg mechanism, if any.
pub fn summary(report: &GameReport, price_cap: Option<f64>) -> String {
    let mut out = String::new();
    let v = report.variant;
    let mechanism = match v.mechanism {
        Mechanism::NonCooperative => "non-cooperative",
        Mechanism::Stackelberg => "stackelberg",
    };
    let dr = if v.dr { "price-sensitive water heater scheduling" } else { "unscheduled water heaters" };
    writeln!(out, "variant: {mechanism}, {dr}").unwrap();
    writeln!(out, "P(expensive price) = {}", sig6(report.p_expensive)).unwrap();
    writeln!(out, "P(water heater on) = {}", sig6(report.stats.p_on)).unwrap();
    if v.dr {
        writeln!(out, "curtailment ratio = {}", sig6(report.curtailment)).unwrap();
    }
    let sp: Vec<f64> = Scenario::ALL.iter().map(|&s| report.scenario_probs.get(s)).collect();
    writeln!(out, "scenario probabilities = {}", join_sig6(&sp)).unwrap();
    for d in &report.demands {
        writeln!(out, "demand {} = {} kW", d.name, sig6(d.demand_kw)).unwrap();
    }
    if v.mechanism == Mechanism::Stackelberg {
        match price_cap {
            Some(cap) if report.caps_applied => writeln!(out, "price cap {} applied (binding at equilibrium)", sig6(cap)).unwrap(),
            Some(cap) => writeln!(out, "price cap {} applied (not binding at equilibrium)", sig6(cap)).unwrap(),
            None => writeln!(out, "quantity caps applied").unwrap(),
        }
    }
    let labels = |actions: &[usize]| -> String {
        let l: Vec<&str> = actions.iter().map(|&a| report.strategies.label(a)).collect();
        format!("({})", l.join(","))
    };
    match report.equilibrium.primary() {
        None => writeln!(out, "equilibrium: no pure Bayesian Nash equilibrium").unwrap(),
        Some(e) => {
            writeln!(out, "equilibrium: A:{} B:{}", labels(&e.a.actions), labels(&e.b.actions)).unwrap();
            writeln!(out, "strategy indices: A:{} B:{}", e.a.display(), e.b.display()).unwrap();
            writeln!(out, "expected payoff A by type = {}", join_sig6(&e.payoff_a)).unwrap();
            writeln!(out, "expected payoff B by type = {}", join_sig6(&e.payoff_b)).unwrap();
            if let (Some(a), Some(b)) = (report.ex_ante_payoff_a(), report.ex_ante_payoff_b()) {
                writeln!(out, "ex-ante expected payoff: A = {}, B = {}", sig6(a), sig6(b)).unwrap();
            }
            if report.equilibrium.has_ties() {
                writeln!(
                    out,
                    "note: {} equilibria or tied best replies; the first in lexicographic order is shown",
                    report.equilibrium.equilibria.len()
                )
                .unwrap();
            }
        }
    }
    for (player, dom) in [("A", &report.equilibrium.dominance_a), ("B", &report.equilibrium.dominance_b)] {
        for (t, d) in dom.iter().enumerate() {
            let text = d.dominant.map_or("none".to_string(), |r| format!("strategy {}", r + 1));
            writeln!(out, "dominant row {player}{}: {text}", t + 1).unwrap();
        }
    }
    out
}

/// What a run read and where it wrote.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub variant: String,
    pub output_dir: String,
    pub profiles: Vec<ProfileDigest>,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &str, variant: &str, output_dir: &Path, profiles: Vec<ProfileDigest>) -> Self {
        RunManifest {
            command: command.into(),
            config: config.into(),
            variant: variant.into(),
            output_dir: output_dir.display().to_string(),
            profiles,
            outputs: Vec::new(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

/// Writes every file into `dir` followed by `manifest.toml` listing their
/// digests. On failure, files written by this call are removed again.
pub fn write_outputs(dir: &Path, files: &Rendered, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
    let created_dir = !dir.exists();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            manifest.outputs.push(OutputDigest { file: name.clone(), sha256: sha256_hex(text.as_bytes()) });
        }
        let path = dir.join("manifest.toml");
        std::fs::write(&path, manifest.to_toml_string()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    })();
    if let Err(e) = result {
        remove_outputs(dir, &written, created_dir);
        return Err(e);
    }
    Ok(written)
}

/// Best-effort cleanup of a failed run's outputs.
pub fn remove_outputs(dir: &Path, written: &[PathBuf], remove_dir: bool) {
    for path in written {
        let _ = std::fs::remove_file(path);
    }
    if remove_dir {
        let _ = std::fs::remove_dir(dir);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(32.881234), "32.8812");
        assert_eq!(sig6(0.019345678), "0.0193457");
        assert_eq!(sig6(2160.0), "2160");
        assert_eq!(sig6(1993.3333333), "1993.33");
        assert_eq!(sig6(-0.0), "0");
        assert_eq!(sig6(-10.75), "-10.75");
        assert_eq!(sig6(1e-12), "0.000000000001");
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let files = vec![("a.csv".to_string(), "x\n".to_string()), ("sub/b.csv".to_string(), "y\n".to_string())];
        let manifest = RunManifest::new("run", "cfg", "non-coop", &out, vec![]);
        assert!(write_outputs(&out, &files, manifest).is_err());
        assert!(!out.exists());
    }
}
