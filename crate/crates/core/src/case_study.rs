//! Bundled case-study data: configuration, synthetic profiles and the
//! published expected payoff matrices for all four game variants.

use std::path::{Path, PathBuf};

use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::game_engine::{ExpectedPayoffMatrix, GameConfig, Mechanism, Variant};
use crate::profiles::{PriceProfile, WaterDrawProfile};

pub const CONFIG_TOML: &str = include_str!("../data/casestudy.toml");
pub const PRICE_CSV: &str = include_str!("../data/price.csv");
pub const WATER_DRAW_CSV: &str = include_str!("../data/water_draw.csv");

pub const CONFIG_FILE_NAME: &str = "casestudy.toml";

/// Reported demand of each aggregator, kW.
pub const PUBLISHED_DEMANDS_KW: [(&str, f64); 3] = [("A", 2160.0), ("B", 2394.0), ("C", 2478.0)];
/// Local generation capacity of each aggregator, kW.
pub const GENERATION_KW: [(&str, f64); 3] = [("A", 660.0), ("B", 594.0), ("C", 528.0)];
pub const PRICE_CAP: f64 = 0.4;

pub fn config() -> Result<GameConfig> {
    let file = ConfigFile::from_toml_str(CONFIG_TOML, Path::new(CONFIG_FILE_NAME))?;
    let prices = PriceProfile::from_csv_str(PRICE_CSV, "price.csv")?;
    let draws = WaterDrawProfile::from_csv_str(WATER_DRAW_CSV, "water_draw.csv")?;
    file.into_game_config(prices, draws)
}

/// Bundled config with the variant replaced.
pub fn config_for(variant: Variant) -> Result<GameConfig> {
    let mut c = config()?;
    c.variant = variant;
    c.validate()?;
    Ok(c)
}

/// Writes the config and both profiles into `dir`; returns the config path.
pub fn write_bundle(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [(CONFIG_FILE_NAME, CONFIG_TOML), ("price.csv", PRICE_CSV), ("water_draw.csv", WATER_DRAW_CSV)] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(dir.join(CONFIG_FILE_NAME))
}

/// Published expected payoff matrices of one variant.
pub struct GoldenMatrices {
    pub variant: Variant,
    pub ep_a: Vec<ExpectedPayoffMatrix>,
    pub ep_b: Vec<ExpectedPayoffMatrix>,
}

macro_rules! golden_dir {
    ($dir:literal) => {
        [
            ("ep_A_m1.csv", include_str!(concat!("../data/golden/", $dir, "/ep_A_m1.csv"))),
            ("ep_A_m2.csv", include_str!(concat!("../data/golden/", $dir, "/ep_A_m2.csv"))),
            ("ep_B_n1.csv", include_str!(concat!("../data/golden/", $dir, "/ep_B_n1.csv"))),
            ("ep_B_n2.csv", include_str!(concat!("../data/golden/", $dir, "/ep_B_n2.csv"))),
        ]
    };
}

const GOLDEN: [(Mechanism, bool, &str, [(&str, &str); 4]); 4] = [
    (Mechanism::NonCooperative, false, "non-coop", golden_dir!("non-coop")),
    (Mechanism::NonCooperative, true, "non-coop-dr", golden_dir!("non-coop-dr")),
    (Mechanism::Stackelberg, false, "stackelberg", golden_dir!("stackelberg")),
    (Mechanism::Stackelberg, true, "stackelberg-dr", golden_dir!("stackelberg-dr")),
];

pub fn golden_matrices() -> Result<Vec<GoldenMatrices>> {
    GOLDEN
        .iter()
        .map(|(mechanism, dr, dir, files)| {
            let parse = |(name, text): &(&str, &str)| {
                ExpectedPayoffMatrix::from_csv_str(text, &format!("golden/{dir}/{name}"))
            };
            Ok(GoldenMatrices {
                variant: Variant { mechanism: *mechanism, dr: *dr },
                ep_a: files[..2].iter().map(parse).collect::<Result<_>>()?,
                ep_b: files[2..].iter().map(parse).collect::<Result<_>>()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::synthetic;

    #[test]
    fn bundled_profiles_come_from_the_generator() {
        assert_eq!(PRICE_CSV, synthetic::price_profile().to_csv_string());
        assert_eq!(WATER_DRAW_CSV, synthetic::water_draw_profile().to_csv_string());
    }

    #[test]
    fn golden_matrices_are_three_by_nine() {
        let all = golden_matrices().unwrap();
        assert_eq!(all.len(), 4);
        for g in &all {
            for m in g.ep_a.iter().chain(&g.ep_b) {
                assert_eq!(m.values().dim(), (3, 9));
            }
        }
        // Spot value: row 3 of A's type-1 matrix starts 20.25, 26.5, 32.
        let r = all[0].ep_a[0].values().row(2);
        assert_eq!((r[0], r[1], r[2]), (20.25, 26.5, 32.0));
    }

    #[test]
    fn bundled_config_is_valid() {
        let c = config().unwrap();
        assert_eq!(c.caps.phi_max, Some(PRICE_CAP));
        assert!(config_for(Variant { mechanism: Mechanism::Stackelberg, dr: true }).is_ok());
        for ((name, gen), s) in GENERATION_KW.iter().zip(c.sellers.iter()) {
            assert_eq!((*name, *gen), (s.name.as_str(), s.demand.gen_kw));
        }
        assert_eq!(c.buyer.demand.gen_kw, GENERATION_KW[2].1);
    }
}
