//! TOML game configuration.
//!
//! ```toml
//! variant = "non-coop"            # or "stackelberg"
//! dr = false
//! strategies = [1.6, 2.0, 2.4]    # optional, this is the default
//! threshold_fraction = 0.5        # optional
//! participation = [1, 0, 0, 0]
//!
//! [profiles]                      # relative to the config file
//! price = "price.csv"
//! water_draw = "water_draw.csv"
//!
//! [tank]                          # optional, defaults to the case study
//! [caps]                          # price, quantity_a, quantity_b; all optional
//!
//! [[seller]]                      # exactly two
//! name, houses, wh_kw, wh_share, gen_kw, p0, p_g, p_max,
//! schedules_water_heaters, prior (4 rows), types = [{ a, b }, …]
//!
//! [buyer]
//! name, houses, wh_kw, wh_share, gen_kw, a, b, p_g, load_kw
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayesian_types::ParticipationFlags;
use crate::error::{Error, Result};
use crate::game_engine::{BuyerSpec, GameConfig, Mechanism, SellerSpec, StrategySet, Variant};
use crate::market_clearing::RegulatoryCaps;
use crate::profiles::{PriceProfile, WaterDrawProfile};
use crate::wh_scheduler::TankModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilePaths {
    pub price: PathBuf,
    pub water_draw: PathBuf,
}

fn default_threshold() -> f64 {
    0.5
}

/// On-disk form of a [`GameConfig`], with profiles referenced by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub variant: Mechanism,
    #[serde(default)]
    pub dr: bool,
    #[serde(default)]
    pub strategies: StrategySet,
    #[serde(default = "default_threshold")]
    pub threshold_fraction: f64,
    pub participation: ParticipationFlags,
    pub profiles: ProfilePaths,
    #[serde(default)]
    pub tank: TankModel,
    #[serde(default)]
    pub caps: RegulatoryCaps,
    #[serde(rename = "seller")]
    pub sellers: Vec<SellerSpec>,
    pub buyer: BuyerSpec,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            reason: e.to_string().trim_end().to_string(),
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Attaches already loaded profiles and validates the result.
    pub fn into_game_config(self, prices: PriceProfile, draws: WaterDrawProfile) -> Result<GameConfig> {
        let sellers: [SellerSpec; 2] = self.sellers.try_into().map_err(|v: Vec<SellerSpec>| {
            Error::config("seller", format!("exactly two sellers are required, got {}", v.len()))
        })?;
        let config = GameConfig {
            variant: Variant { mechanism: self.variant, dr: self.dr },
            strategies: self.strategies,
            threshold_fraction: self.threshold_fraction,
            participation: self.participation,
            tank: self.tank,
            caps: self.caps,
            sellers,
            buyer: self.buyer,
            prices,
            draws,
        };
        config.validate()?;
        Ok(config)
    }

    /// Inverse of [`ConfigFile::into_game_config`]; profiles are referenced by
    /// the given paths.
    pub fn from_game_config(config: &GameConfig, profiles: ProfilePaths) -> Self {
        ConfigFile {
            variant: config.variant.mechanism,
            dr: config.variant.dr,
            strategies: config.strategies.clone(),
            threshold_fraction: config.threshold_fraction,
            participation: config.participation,
            profiles,
            tank: config.tank,
            caps: config.caps,
            sellers: config.sellers.to_vec(),
            buyer: config.buyer.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileDigest {
    pub name: String,
    pub path: PathBuf,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// A validated configuration with the digests of the profiles it read.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub config: GameConfig,
    pub digests: Vec<ProfileDigest>,
}

fn read(path: &Path, field: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::config(field, format!("cannot read {}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> Result<GameConfig> {
    load_config_with_digests(path).map(|l| l.config)
}

/// Reads the config, resolves profile paths against its directory and
/// hashes each profile before parsing it.
pub fn load_config_with_digests(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = ConfigFile::from_toml_str(&text, path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let price_path = base.join(&file.profiles.price);
    let draw_path = base.join(&file.profiles.water_draw);
    let price_text = read(&price_path, "profiles.price")?;
    let draw_text = read(&draw_path, "profiles.water_draw")?;
    let digests = vec![
        ProfileDigest { name: "price".into(), path: price_path.clone(), sha256: sha256_hex(price_text.as_bytes()) },
        ProfileDigest { name: "water_draw".into(), path: draw_path.clone(), sha256: sha256_hex(draw_text.as_bytes()) },
    ];
    let prices = PriceProfile::from_csv_str(&price_text, &price_path.display().to_string())?;
    let draws = WaterDrawProfile::from_csv_str(&draw_text, &draw_path.display().to_string())?;
    let config = file.into_game_config(prices, draws)?;
    Ok(LoadedConfig { path: path.to_path_buf(), config, digests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study;

    fn write_bundle(dir: &Path) -> PathBuf {
        case_study::write_bundle(dir).unwrap()
    }

    #[test]
    fn bundled_config_loads_with_two_types_each() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_bundle(dir.path());
        let loaded = load_config_with_digests(&path).unwrap();
        assert_eq!(loaded.config.sellers[0].types.len(), 2);
        assert_eq!(loaded.config.sellers[1].types.len(), 2);
        assert_eq!(loaded.config, case_study::config().unwrap());
        assert_eq!(loaded.digests.len(), 2);
        assert_eq!(loaded.digests[0].sha256, sha256_hex(case_study::PRICE_CSV.as_bytes()));
    }

    #[test]
    fn round_trip_through_toml() {
        let dir = tempfile::tempdir().unwrap();
        let original = case_study::config().unwrap();
        let paths = ProfilePaths { price: "p.csv".into(), water_draw: "w.csv".into() };
        std::fs::write(dir.path().join("p.csv"), original.prices.to_csv_string()).unwrap();
        std::fs::write(dir.path().join("w.csv"), original.draws.to_csv_string()).unwrap();
        let text = ConfigFile::from_game_config(&original, paths).to_toml_string().unwrap();
        let path = dir.path().join("rt.toml");
        std::fs::write(&path, text).unwrap();
        assert_eq!(load_config(&path).unwrap(), original);
    }

    fn edit(field_line: &str, replacement: &str) -> Error {
        let dir = tempfile::tempdir().unwrap();
        let path = write_bundle(dir.path());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(field_line), "{field_line}");
        std::fs::write(&path, text.replacen(field_line, replacement, 1)).unwrap();
        load_config(&path).unwrap_err()
    }

    #[test]
    fn validation_errors_name_the_field() {
        let e = edit("dr = false", "dr = false\nbogus = 1");
        assert!(matches!(&e, Error::Parse { .. }) && e.to_string().contains("bogus"), "{e}");

        let e = edit("threshold_fraction = 0.5", "threshold_fraction = 1.5");
        assert!(matches!(&e, Error::Config { field, .. } if field == "threshold_fraction"), "{e}");

        let e = edit("load_kw = 400.0", "load_kw = -1.0");
        assert!(matches!(&e, Error::Config { field, .. } if field == "buyer.load_kw"), "{e}");

        let e = edit("p0 = 160.0", "p0 = 900.0");
        assert!(matches!(&e, Error::Config { field, .. } if field == "seller[0].p0"), "{e}");

        let e = edit("price = \"price.csv\"", "price = \"missing.csv\"");
        assert!(matches!(&e, Error::Config { field, .. } if field == "profiles.price"), "{e}");

        let e = edit("strategies = [1.6, 2.0, 2.4]", "strategies = [2.4, 2.0]");
        assert!(matches!(&e, Error::Parse { .. }) && e.to_string().contains("strategies"), "{e}");
    }

    #[test]
    fn stackelberg_without_caps_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_bundle(dir.path());
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("variant = \"non-coop\"", "variant = \"stackelberg\"")
            .replace("[caps]\nprice = 0.4\n", "");
        std::fs::write(&path, text).unwrap();
        let e = load_config(&path).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "caps"), "{e}");
    }

    #[test]
    fn single_strategy_config_is_legal() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_bundle(dir.path());
        let text = std::fs::read_to_string(&path).unwrap().replace("[1.6, 2.0, 2.4]", "[2.0]");
        std::fs::write(&path, text).unwrap();
        assert_eq!(load_config(&path).unwrap().strategies.len(), 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = load_config(Path::new("/nonexistent/x.toml")).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
