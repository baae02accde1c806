use serde::{Deserialize, Serialize};

use super::tree::{grow, RegressionTree, TreeGrowth};
use super::{feature_matrix, DistanceTransform, FeatureVector, Observation};
use crate::error::{Error, Result};

fn default_min_leaf() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    #[serde(default)]
    pub distance_transform: DistanceTransform,
}

impl GbtParams {
    pub fn new(n_trees: usize, max_depth: usize, learning_rate: f64) -> Self {
        GbtParams {
            n_trees,
            max_depth,
            learning_rate,
            min_leaf: 2,
            distance_transform: DistanceTransform::Log10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub params: GbtParams,
    /// Recorded for provenance; boosting here uses every row every round.
    pub seed: u64,
    pub base_prediction: f64,
    pub trees: Vec<RegressionTree>,
    /// Training mean squared error before the first round and after each one.
    pub training_loss: Vec<f64>,
}

impl GbtModel {
    /// base + learning_rate * sum of tree outputs.
    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let x = f.as_array();
        let boost: f64 = self.trees.iter().map(|t| t.predict(&x)).sum();
        self.base_prediction + self.params.learning_rate * boost
    }
}

/// Squared-loss gradient boosting: every tree fits the current residuals.
pub fn fit_gbt(data: &[Observation], params: &GbtParams, seed: u64) -> Result<GbtModel> {
    if data.is_empty() {
        return Err(Error::domain("boosting needs at least one observation"));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::Config("learning_rate must lie in (0, 1]".into()));
    }
    let (x, y) = feature_matrix(data, params.distance_transform)?;
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut current = vec![base; n];
    let rows: Vec<usize> = (0..n).collect();
    let growth = TreeGrowth {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let mse = |pred: &[f64]| pred.iter().zip(&y).map(|(p, t)| (t - p).powi(2)).sum::<f64>() / n as f64;

    let mut trees = Vec::with_capacity(params.n_trees);
    let mut training_loss = vec![mse(&current)];
    for _ in 0..params.n_trees {
        let residual: Vec<f64> = y.iter().zip(&current).map(|(t, p)| t - p).collect();
        let tree = grow(&x, &residual, &rows, growth);
        for (p, xi) in current.iter_mut().zip(&x) {
            *p += params.learning_rate * tree.predict(xi);
        }
        training_loss.push(mse(&current));
        trees.push(tree);
    }
    Ok(GbtModel {
        params: params.clone(),
        seed,
        base_prediction: base,
        trees,
        training_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(d: f64, el: f64, az: f64, y: f64) -> Observation {
        Observation {
            d_m: d,
            elevation_deg: el,
            azimuth_deg: az,
            rsrp_dbm: y,
        }
    }

    fn wavy() -> Vec<Observation> {
        (0..200)
            .map(|i| {
                let d = 50.0 + i as f64 * 9.0;
                let el = (i % 31) as f64;
                let az = (i % 17) as f64 * 10.0 - 80.0;
                obs(d, el, az, -60.0 - 20.0 * d.log10() + (az * 0.05).sin() * 4.0 + el * 0.1)
            })
            .collect()
    }

    #[test]
    fn constant_target_uses_base_only() {
        let data: Vec<Observation> = (0..30).map(|i| obs(100.0 + i as f64, 1.0, 2.0, -88.0)).collect();
        let m = fit_gbt(&data, &GbtParams::new(10, 3, 0.1), 0).unwrap();
        assert_eq!(m.base_prediction, -88.0);
        let x = FeatureVector::from_observation(&data[3], m.params.distance_transform).unwrap();
        for t in &m.trees {
            assert!(t.predict(&x.as_array()).abs() < 1e-12);
        }
        assert!((m.predict(&x) + 88.0).abs() < 1e-12);
    }

    #[test]
    fn training_loss_non_increasing() {
        let m = fit_gbt(&wavy(), &GbtParams::new(60, 3, 0.3), 0).unwrap();
        assert_eq!(m.training_loss.len(), 61);
        for w in m.training_loss.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn separable_step_converges() {
        let data: Vec<Observation> = (0..80)
            .map(|i| {
                let near = i < 40;
                obs(if near { 100.0 + i as f64 } else { 1500.0 + i as f64 }, 0.0, 0.0, if near { -70.0 } else { -100.0 })
            })
            .collect();
        let m = fit_gbt(&data, &GbtParams::new(200, 1, 0.1), 0).unwrap();
        assert!(m.training_loss.last().unwrap().sqrt() < 1e-3);
    }

    #[test]
    fn reconstruction_identity() {
        let data = wavy();
        let m = fit_gbt(&data, &GbtParams::new(25, 4, 0.2), 0).unwrap();
        for o in data.iter().step_by(13) {
            let f = FeatureVector::from_observation(o, m.params.distance_transform).unwrap();
            let x = f.as_array();
            let manual = m.base_prediction + 0.2 * m.trees.iter().map(|t| t.predict(&x)).sum::<f64>();
            assert!((m.predict(&f) - manual).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_learning_rate() {
        let data = wavy();
        assert!(fit_gbt(&data, &GbtParams::new(5, 2, 0.0), 0).is_err());
        assert!(fit_gbt(&data, &GbtParams::new(5, 2, 1.5), 0).is_err());
        assert!(fit_gbt(&data, &GbtParams::new(5, 2, 1.0), 0).is_ok());
    }
}
