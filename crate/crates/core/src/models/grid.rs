use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    fit_forest, fit_gbt, fit_mlp, fit_polynomial, Activation, DistanceTransform, ForestParams, GbtParams,
    MlpConfig, Observation, TrainedModel,
};
use crate::error::{Error, Result};
use crate::eval::{metrics, EvalReport};

/// Share of rows used for training; the rest is held out.
pub const TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    Poly,
    Forest,
    Gbt,
    Mlp,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 4] = [ModelFamily::Poly, ModelFamily::Forest, ModelFamily::Gbt, ModelFamily::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Poly => "poly",
            ModelFamily::Forest => "forest",
            ModelFamily::Gbt => "gbt",
            ModelFamily::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poly" | "polynomial" => Ok(ModelFamily::Poly),
            "forest" | "rf" | "random_forest" => Ok(ModelFamily::Forest),
            "gbt" | "xgb" | "boosting" => Ok(ModelFamily::Gbt),
            "mlp" | "nn" => Ok(ModelFamily::Mlp),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyGrid {
    pub degrees: Vec<u32>,
    pub distance_transforms: Vec<DistanceTransform>,
}

impl Default for PolyGrid {
    fn default() -> Self {
        PolyGrid {
            degrees: (2..=9).collect(),
            distance_transforms: vec![DistanceTransform::Log10, DistanceTransform::Linear],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestGrid {
    pub n_trees: Vec<usize>,
    pub max_depths: Vec<usize>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid {
            n_trees: (50..=300).step_by(50).collect(),
            max_depths: (5..=20).step_by(5).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtGrid {
    pub n_trees: Vec<usize>,
    pub max_depths: Vec<usize>,
    pub learning_rates: Vec<f64>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        let f = ForestGrid::default();
        GbtGrid {
            n_trees: f.n_trees,
            max_depths: f.max_depths,
            learning_rates: vec![0.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpGrid {
    /// Number of hidden layers; every hidden layer gets the same width.
    pub hidden_layer_counts: Vec<usize>,
    pub neurons: Vec<usize>,
    pub activations: Vec<Activation>,
    pub alphas: Vec<f64>,
    pub learning_rates: Vec<f64>,
    pub epochs: usize,
}

impl Default for MlpGrid {
    fn default() -> Self {
        MlpGrid {
            hidden_layer_counts: vec![1, 2],
            neurons: vec![10, 15, 20, 25, 30, 50],
            activations: Activation::ALL.to_vec(),
            alphas: vec![1e-4, 1e-3, 1e-2, 0.1],
            learning_rates: vec![0.001, 0.01, 0.05],
            epochs: 500,
        }
    }
}

/// Hyper-parameter ranges searched per family. Missing JSON fields fall back
/// to the defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperGrid {
    pub poly: PolyGrid,
    pub forest: ForestGrid,
    pub gbt: GbtGrid,
    pub mlp: MlpGrid,
    /// Distance feature for the tree and neural families.
    pub ml_distance_transform: DistanceTransform,
}

impl HyperGrid {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("grid JSON: {e}")))
    }

    /// Every configuration of `family`, in nested-loop order.
    pub fn configs(&self, family: ModelFamily) -> Vec<ModelConfig> {
        let t = self.ml_distance_transform;
        let mut out = Vec::new();
        match family {
            ModelFamily::Poly => {
                for &degree in &self.poly.degrees {
                    for &distance_transform in &self.poly.distance_transforms {
                        out.push(ModelConfig::Poly { degree, distance_transform });
                    }
                }
            }
            ModelFamily::Forest => {
                for &n in &self.forest.n_trees {
                    for &depth in &self.forest.max_depths {
                        out.push(ModelConfig::Forest(ForestParams { distance_transform: t, ..ForestParams::new(n, depth) }));
                    }
                }
            }
            ModelFamily::Gbt => {
                for &n in &self.gbt.n_trees {
                    for &depth in &self.gbt.max_depths {
                        for &lr in &self.gbt.learning_rates {
                            out.push(ModelConfig::Gbt(GbtParams { distance_transform: t, ..GbtParams::new(n, depth, lr) }));
                        }
                    }
                }
            }
            ModelFamily::Mlp => {
                for &layers in &self.mlp.hidden_layer_counts {
                    for &width in &self.mlp.neurons {
                        for &activation in &self.mlp.activations {
                            for &alpha in &self.mlp.alphas {
                                for &lr in &self.mlp.learning_rates {
                                    let mut c = MlpConfig::new(vec![width; layers], activation, alpha, lr);
                                    c.epochs = self.mlp.epochs;
                                    c.distance_transform = t;
                                    out.push(ModelConfig::Mlp(c));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One point of a hyper-parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Poly {
        degree: u32,
        distance_transform: DistanceTransform,
    },
    Forest(ForestParams),
    Gbt(GbtParams),
    Mlp(MlpConfig),
}

pub fn fit_config(data: &[Observation], config: &ModelConfig, seed: u64) -> Result<TrainedModel> {
    Ok(match config {
        ModelConfig::Poly { degree, distance_transform } => {
            TrainedModel::Poly(fit_polynomial(data, *degree, *distance_transform)?)
        }
        ModelConfig::Forest(p) => TrainedModel::Forest(fit_forest(data, p, seed)?),
        ModelConfig::Gbt(p) => TrainedModel::Gbt(fit_gbt(data, p, seed)?),
        ModelConfig::Mlp(c) => TrainedModel::Mlp(fit_mlp(data, c, seed)?),
    })
}

/// Seeded uniform shuffle into sorted `(train, test)` index lists. Both sides
/// are nonempty.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::domain("a train/test split needs at least two rows"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config("train fraction must lie in (0, 1)".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut test = idx.split_off(n_train);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub config: ModelConfig,
    /// Held-out accuracy; `None` when fitting failed.
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: ModelFamily,
    pub best: TrainedModel,
    pub best_index: usize,
    pub leaderboard: Vec<LeaderboardEntry>,
    pub split_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
}

fn evaluate(train: &[Observation], test: &[Observation], cfg: &ModelConfig, seed: u64) -> Result<(TrainedModel, EvalReport)> {
    let model = fit_config(train, cfg, seed)?;
    let predicted = model.predict_all(test)?;
    let measured: Vec<f64> = test.iter().map(|o| o.rsrp_dbm).collect();
    let report = metrics(&measured, &predicted)?;
    Ok((model, report))
}

/// Fits every configuration of `family` on a seeded 70/30 split and ranks
/// them by held-out RMSE. Ties keep the earlier configuration.
pub fn grid_search(data: &[Observation], grid: &HyperGrid, family: ModelFamily, seed: u64) -> Result<GridResult> {
    let configs = grid.configs(family);
    if configs.is_empty() {
        return Err(Error::Config(format!("grid for `{family}` is empty")));
    }
    let (tr, te) = train_test_split(data.len(), TRAIN_FRACTION, seed)?;
    let train: Vec<Observation> = tr.iter().map(|&i| data[i]).collect();
    let test: Vec<Observation> = te.iter().map(|&i| data[i]).collect();

    let results: Vec<Result<(TrainedModel, EvalReport)>> =
        configs.par_iter().map(|c| evaluate(&train, &test, c, seed)).collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Ok((_, rep)) = r {
            if rep.rmse_db.is_finite() && best.is_none_or(|(_, b)| rep.rmse_db < b) {
                best = Some((i, rep.rmse_db));
            }
        }
    }
    let mut leaderboard = Vec::with_capacity(configs.len());
    let mut best_model = None;
    for (i, (config, r)) in configs.into_iter().zip(results).enumerate() {
        let entry = match r {
            Ok((model, report)) => {
                if best.is_some_and(|(b, _)| b == i) {
                    best_model = Some(model);
                }
                LeaderboardEntry { config, report: Some(report), error: None }
            }
            Err(e) => LeaderboardEntry { config, report: None, error: Some(e.to_string()) },
        };
        leaderboard.push(entry);
    }
    let (Some((best_index, _)), Some(best)) = (best, best_model) else {
        let first = leaderboard.iter().find_map(|e| e.error.clone()).unwrap_or_default();
        return Err(Error::Config(format!("no `{family}` configuration could be fit: {first}")));
    };
    Ok(GridResult {
        family,
        best,
        best_index,
        leaderboard,
        split_seed: seed,
        n_train: train.len(),
        n_test: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn planted_cubic(n: usize) -> Vec<Observation> {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        (0..n)
            .map(|_| {
                let d: f64 = rng.random_range(60.0..1500.0);
                let el: f64 = rng.random_range(0.0..50.0);
                let az: f64 = rng.random_range(-80.0..80.0);
                let x = d.log10();
                let y = -20.0 - 8.0 * x.powi(3) + 0.002 * el * el * x - 1e-5 * az.powi(3) + 0.05 * el;
                Observation { d_m: d, elevation_deg: el, azimuth_deg: az, rsrp_dbm: y }
            })
            .collect()
    }

    #[test]
    fn default_grid_sizes() {
        let g = HyperGrid::default();
        assert_eq!(g.configs(ModelFamily::Poly).len(), 16);
        assert_eq!(g.configs(ModelFamily::Forest).len(), 24);
        assert_eq!(g.configs(ModelFamily::Gbt).len(), 24);
        assert_eq!(g.configs(ModelFamily::Mlp).len(), 2 * 6 * 3 * 4 * 3);
    }

    #[test]
    fn partial_grid_json() {
        let g = HyperGrid::from_json_str(r#"{"forest": {"n_trees": [10]}}"#).unwrap();
        assert_eq!(g.forest.n_trees, vec![10]);
        assert_eq!(g.forest.max_depths, vec![5, 10, 15, 20]);
        assert!(HyperGrid::from_json_str(r#"{"trees": 3}"#).is_err());
    }

    #[test]
    fn split_is_seeded_and_disjoint() {
        let (a, b) = train_test_split(100, TRAIN_FRACTION, 4).unwrap();
        assert_eq!((a.len(), b.len()), (70, 30));
        let mut all = [a.clone(), b.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(train_test_split(100, TRAIN_FRACTION, 4).unwrap(), (a.clone(), b));
        assert_ne!(train_test_split(100, TRAIN_FRACTION, 5).unwrap().0, a);
        assert_eq!(train_test_split(2, TRAIN_FRACTION, 0).unwrap().1.len(), 1);
        assert!(train_test_split(1, TRAIN_FRACTION, 0).is_err());
    }

    #[test]
    fn single_config_is_best() {
        let g = HyperGrid { forest: ForestGrid { n_trees: vec![5], max_depths: vec![4] }, ..Default::default() };
        let r = grid_search(&planted_cubic(80), &g, ModelFamily::Forest, 1).unwrap();
        assert_eq!((r.leaderboard.len(), r.best_index), (1, 0));
        assert_eq!(r.n_train + r.n_test, 80);
    }

    #[test]
    fn planted_cubic_needs_degree_three() {
        let mut g = HyperGrid::default();
        g.poly.distance_transforms = vec![DistanceTransform::Log10];
        let r = grid_search(&planted_cubic(500), &g, ModelFamily::Poly, 9).unwrap();
        assert_eq!(r.leaderboard.len(), 8);
        for e in &r.leaderboard {
            let ModelConfig::Poly { degree, .. } = e.config else { panic!() };
            let rmse = e.report.as_ref().map(|r| r.rmse_db);
            if degree >= 3 {
                assert!(rmse.unwrap() < 1e-6, "degree {degree}: {rmse:?}");
            } else {
                assert!(rmse.unwrap() > 1e-2);
            }
        }
    }

    #[test]
    fn search_is_deterministic() {
        let g = HyperGrid {
            gbt: GbtGrid { n_trees: vec![10, 20], max_depths: vec![2], learning_rates: vec![0.1] },
            ..Default::default()
        };
        let data = planted_cubic(120);
        let a = serde_json::to_string(&grid_search(&data, &g, ModelFamily::Gbt, 3).unwrap()).unwrap();
        let b = serde_json::to_string(&grid_search(&data, &g, ModelFamily::Gbt, 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn family_names() {
        for f in ModelFamily::ALL {
            assert_eq!(f.name().parse::<ModelFamily>().unwrap(), f);
        }
        assert!("svm".parse::<ModelFamily>().is_err());
    }
}
