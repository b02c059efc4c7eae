//! Day-long 15-minute profiles and their CSV form.
//!
//! A profile file is `slot,value` followed by exactly 96 rows with slots
//! `0..=95` in order and values in `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const SLOTS_PER_DAY: usize = 96;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceProfile {
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterDrawProfile {
    values: Vec<f64>,
}

fn check_values(values: &[f64], what: &str) -> Result<()> {
    if values.len() != SLOTS_PER_DAY {
        return Err(Error::Profile {
            path: what.into(),
            reason: format!("expected {SLOTS_PER_DAY} slots, got {}", values.len()),
        });
    }
    if let Some((slot, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
    {
        return Err(Error::Profile {
            path: what.into(),
            reason: format!("slot {slot} value {v} is outside [0, 1]"),
        });
    }
    Ok(())
}

impl PriceProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values, "price profile")?;
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::Profile {
                path: "price profile".into(),
                reason: "maximum price must be positive".into(),
            });
        }
        Ok(PriceProfile { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Slots priced strictly above `threshold_fraction` of the daily maximum.
    pub fn expensive_mask(&self, threshold_fraction: f64) -> Vec<bool> {
        let cut = threshold_fraction * self.max();
        self.values.iter().map(|&v| v > cut).collect()
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let values = parse_profile(text, origin)?;
        Self::new(values).map_err(|e| relabel(e, origin))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn to_csv_string(&self) -> String {
        write_profile(&self.values)
    }
}

impl WaterDrawProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values, "water draw profile")?;
        Ok(WaterDrawProfile { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let values = parse_profile(text, origin)?;
        Self::new(values).map_err(|e| relabel(e, origin))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn to_csv_string(&self) -> String {
        write_profile(&self.values)
    }
}

fn relabel(err: Error, origin: &str) -> Error {
    match err {
        Error::Profile { reason, .. } => Error::Profile {
            path: origin.into(),
            reason,
        },
        other => other,
    }
}

#[derive(Deserialize)]
struct Row {
    slot: usize,
    value: f64,
}

fn parse_profile(text: &str, origin: &str) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::Profile {
        path: origin.into(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["slot", "value"] {
        return Err(bad(format!("header must be `slot,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut values = Vec::with_capacity(SLOTS_PER_DAY);
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        if row.slot != i {
            return Err(bad(format!("row {} has slot {}, expected {i}", i + 1, row.slot)));
        }
        values.push(row.value);
    }
    Ok(values)
}

fn write_profile(values: &[f64]) -> String {
    let mut out = String::from("slot,value\n");
    for (slot, v) in values.iter().enumerate() {
        writeln!(out, "{slot},{v}").unwrap();
    }
    out
}

/// Generators for the bundled synthetic case-study profiles.
///
/// Both series are smooth daily shapes rounded to four decimals. The price
/// curve has 28 cheap slots (night, 00:00–06:00 and 23:00–24:00) below half
/// of its peak and 68 expensive slots, with a shoulder around 08:00 and the
/// daily peak at 19:00. Water draws peak in the morning and the evening with
/// a smaller midday bump.
pub mod synthetic {
    use std::f64::consts::PI;

    use super::{PriceProfile, WaterDrawProfile, SLOTS_PER_DAY};

    fn round4(x: f64) -> f64 {
        (x * 1e4).round() / 1e4
    }

    fn bump(hour: f64, centre: f64, width: f64) -> f64 {
        (-((hour - centre) / width).powi(2)).exp()
    }

    pub fn price_value(slot: usize) -> f64 {
        let hour = slot as f64 / 4.0;
        if !(24..92).contains(&slot) {
            round4(0.30 + 0.10 * (2.0 * PI * (hour - 2.0) / 24.0).cos())
        } else {
            let v = 0.62 + 0.38 * bump(hour, 19.0, 2.2) + 0.12 * bump(hour, 8.0, 1.5);
            round4(v.min(1.0))
        }
    }

    pub fn draw_value(slot: usize) -> f64 {
        let hour = slot as f64 / 4.0;
        let v = 0.05 + 0.95 * bump(hour, 7.0, 1.2) + 0.8 * bump(hour, 20.0, 1.5) + 0.3 * bump(hour, 13.0, 1.5);
        round4(v.min(1.0))
    }

    pub fn price_profile() -> PriceProfile {
        PriceProfile::new((0..SLOTS_PER_DAY).map(price_value).collect())
            .expect("synthetic prices lie in [0, 1]")
    }

    pub fn water_draw_profile() -> WaterDrawProfile {
        WaterDrawProfile::new((0..SLOTS_PER_DAY).map(draw_value).collect())
            .expect("synthetic draws lie in [0, 1]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let p = synthetic::price_profile();
        let text = p.to_csv_string();
        assert!(text.starts_with("slot,value\n0,"));
        assert_eq!(PriceProfile::from_csv_str(&text, "mem").unwrap(), p);
    }

    #[test]
    fn rejects_malformed_files() {
        let short = "slot,value\n0,0.5\n";
        assert!(PriceProfile::from_csv_str(short, "x").is_err());

        let mut rows: Vec<String> = (0..96).map(|s| format!("{s},0.5")).collect();
        rows.swap(3, 4);
        let text = format!("slot,value\n{}\n", rows.join("\n"));
        let err = WaterDrawProfile::from_csv_str(&text, "x").unwrap_err();
        assert!(err.to_string().contains("slot"), "{err}");

        let body: Vec<String> = (0..96).map(|s| format!("{s},1.5")).collect();
        let text = format!("slot,value\n{}\n", body.join("\n"));
        assert!(WaterDrawProfile::from_csv_str(&text, "x").is_err());

        let text = format!("time,price\n{}\n", (0..96).map(|s| format!("{s},0.5")).collect::<Vec<_>>().join("\n"));
        assert!(PriceProfile::from_csv_str(&text, "x").is_err());

        assert!(PriceProfile::new(vec![0.0; 96]).is_err());
    }

    #[test]
    fn synthetic_price_has_68_expensive_slots() {
        let p = synthetic::price_profile();
        assert_eq!(p.max(), 1.0);
        assert_eq!(p.expensive_mask(0.5).iter().filter(|&&e| e).count(), 68);
    }
}
