//! Demand-response aware bilateral energy trading between battery-backed
//! aggregators under incomplete information.
//!
//! The pipeline runs from day-long price and hot-water profiles through
//! water-heater scheduling, Bayesian type beliefs and bid construction to
//! market clearing and a pure Bayesian Nash equilibrium of the bidding game.
//! [`game_engine::play_game`] ties the stages together.

pub mod bayesian_types;
pub mod case_study;
pub mod config;
pub mod cost_model;
pub mod error;
pub mod game_engine;
pub mod market_clearing;
pub mod profiles;
pub mod report;
pub mod wh_scheduler;

pub use error::{Error, Result};
