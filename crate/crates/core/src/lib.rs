//! Air-to-ground cellular KPI modelling for UAV flights.
//!
//! The crate covers the whole chain from raw drone logs to model reports:
//!
//! - [`geo`]: WGS-84 conversions and the UAV's distance, azimuth and
//!   elevation relative to a base-station antenna.
//! - [`antenna`]: horizontal and vertical pattern cuts with interpolation.
//! - [`linkbudget`]: SS transmit power per resource element, free-space path
//!   loss and RSRP prediction.
//! - [`data`]: flight-log CSV ingestion, synthetic trajectories and
//!   synthetic measurements.
//! - [`models`]: polynomial, random-forest, boosted-tree and MLP regressors,
//!   grid search, and a two-class LDA rank classifier.
//! - [`eval`]: accuracy metrics, error histograms, altitude comparisons,
//!   heatmaps and RSRQ flags.
//! - [`cli`]: the `aerokpi` command-line front end.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! ```text
//! cargo run --example fspl_link_budget
//! cargo run --example polynomial_fit
//! cargo run --example tree_ensembles
//! ```
//!
//! ```
//! use aerokpi::antenna::AntennaPattern;
//! use aerokpi::geo::{BsSiteConfig, GeoPosition};
//! use aerokpi::linkbudget::predict_rsrp;
//!
//! let site = BsSiteConfig::nr_default(GeoPosition::new(35.7275, -78.6960, 10.0)?, 0.0);
//! let uav = GeoPosition::new(35.7365, -78.6960, 10.0)?;
//! let p = predict_rsrp(&site, &AntennaPattern::isotropic(), &uav)?;
//! assert!((p.rsrp_dbm + 101.24).abs() < 0.1);
//! # Ok::<(), aerokpi::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod geo;
pub mod linkbudget;
pub mod models;

pub use error::{Error, Result};
