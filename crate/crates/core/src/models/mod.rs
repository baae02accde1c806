//! Data-driven RSRP predictors and the channel-rank classifier.
//!
//! Every regressor consumes [`Observation`]s, i.e. the UAV geometry relative
//! to the antenna plus the measured RSRP, and maps them to a
//! [`FeatureVector`] through its own [`DistanceTransform`].

mod forest;
mod gbt;
mod grid;
mod lda;
mod mlp;
mod poly;
mod tree;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::FlightLog;
use crate::error::{Error, Result};
use crate::geo::{relative_geometry, BsSiteConfig, RelativeGeometry};

pub use forest::{fit_forest, ForestModel, ForestParams};
pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use grid::{
    fit_config, grid_search, train_test_split, GridResult, HyperGrid, LeaderboardEntry,
    ModelConfig, ModelFamily, TRAIN_FRACTION,
};
pub use lda::{classify_rank, confusion, fit_lda, Confusion, LdaModel, LdaPoint};
pub use mlp::{fit_mlp, Activation, DenseLayer, MlpConfig, MlpModel};
pub use poly::{expand_monomials, fit_polynomial, predict_polynomial, FeatureScaling, PolyModel, PolyTerm};
pub use tree::{RegressionTree, TreeNode};

/// One training row: geometry and measured RSRP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub d_m: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub rsrp_dbm: f64,
}

impl Observation {
    pub fn new(geometry: &RelativeGeometry, rsrp_dbm: f64) -> Self {
        Observation {
            d_m: geometry.d_uav_m,
            elevation_deg: geometry.elevation_deg,
            azimuth_deg: geometry.azimuth_deg,
            rsrp_dbm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceTransform {
    #[default]
    Log10,
    Linear,
}

impl DistanceTransform {
    pub fn apply(self, d_m: f64) -> Result<f64> {
        match self {
            DistanceTransform::Linear => Ok(d_m),
            DistanceTransform::Log10 if d_m > 0.0 => Ok(d_m.log10()),
            DistanceTransform::Log10 => Err(Error::domain(format!(
                "log-distance feature needs d > 0, got {d_m}"
            ))),
        }
    }
}

/// Model input `(distance feature, elevation, azimuth)`, in the monomial order
/// `d^i theta^j phi^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub distance_feature: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

impl FeatureVector {
    pub fn from_observation(o: &Observation, transform: DistanceTransform) -> Result<Self> {
        Ok(FeatureVector {
            distance_feature: transform.apply(o.d_m)?,
            elevation_deg: o.elevation_deg,
            azimuth_deg: o.azimuth_deg,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.distance_feature, self.elevation_deg, self.azimuth_deg]
    }
}

/// Training rows from every record carrying RSRP. Records co-located with the
/// antenna are skipped.
pub fn observations_from_log(log: &FlightLog, site: &BsSiteConfig) -> Vec<Observation> {
    log.records
        .iter()
        .filter_map(|r| {
            let rsrp = r.rsrp_dbm?;
            let g = relative_geometry(&r.position, site).ok()?;
            Some(Observation::new(&g, rsrp))
        })
        .collect()
}

/// Classifier points from every record carrying a rank label.
pub fn lda_points_from_log(log: &FlightLog, site: &BsSiteConfig) -> Vec<LdaPoint> {
    log.records
        .iter()
        .filter_map(|r| {
            let rank = r.rank?;
            let g = relative_geometry(&r.position, site).ok()?;
            Some(LdaPoint {
                d_m: g.d_uav_m,
                azimuth_deg: g.azimuth_deg,
                elevation_deg: g.elevation_deg,
                rank,
            })
        })
        .collect()
}

pub(crate) fn feature_matrix(
    data: &[Observation],
    transform: DistanceTransform,
) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    let mut x = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for o in data {
        let f = FeatureVector::from_observation(o, transform)?.as_array();
        if f.iter().any(|v| !v.is_finite()) || !o.rsrp_dbm.is_finite() {
            return Err(Error::domain("non-finite feature or target"));
        }
        x.push(f);
        y.push(o.rsrp_dbm);
    }
    Ok((x, y))
}

/// SHA-256 over the bit patterns of every observation, hex encoded.
pub fn data_hash(data: &[Observation]) -> String {
    let mut h = Sha256::new();
    for o in data {
        for v in [o.d_m, o.elevation_deg, o.azimuth_deg, o.rsrp_dbm] {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// A fitted regressor of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    Poly(PolyModel),
    Forest(ForestModel),
    Gbt(GbtModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            TrainedModel::Poly(_) => ModelFamily::Poly,
            TrainedModel::Forest(_) => ModelFamily::Forest,
            TrainedModel::Gbt(_) => ModelFamily::Gbt,
            TrainedModel::Mlp(_) => ModelFamily::Mlp,
        }
    }

    pub fn distance_transform(&self) -> DistanceTransform {
        match self {
            TrainedModel::Poly(m) => m.distance_transform,
            TrainedModel::Forest(m) => m.params.distance_transform,
            TrainedModel::Gbt(m) => m.params.distance_transform,
            TrainedModel::Mlp(m) => m.config.distance_transform,
        }
    }

    pub fn predict(&self, o: &Observation) -> Result<f64> {
        let f = FeatureVector::from_observation(o, self.distance_transform())?;
        Ok(match self {
            TrainedModel::Poly(m) => m.predict(&f),
            TrainedModel::Forest(m) => m.predict(&f),
            TrainedModel::Gbt(m) => m.predict(&f),
            TrainedModel::Mlp(m) => m.predict(&f),
        })
    }

    pub fn predict_all(&self, data: &[Observation]) -> Result<Vec<f64>> {
        data.iter().map(|o| self.predict(o)).collect()
    }
}

/// Provenance stored next to a serialized model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub data_hash: String,
    pub split_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(default)]
    pub device: Option<String>,
}

/// On-disk model: one JSON document per fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub model: TrainedModel,
    pub training: TrainingMetadata,
}

impl ModelDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
