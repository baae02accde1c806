use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, RegressionTree, TreeGrowth};
use super::{feature_matrix, DistanceTransform, FeatureVector, Observation};
use crate::error::{Error, Result};

fn default_min_leaf() -> usize {
    2
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
    /// Train each tree on a same-size resample with replacement. When off,
    /// every tree sees the full training set.
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub distance_transform: DistanceTransform,
}

impl ForestParams {
    pub fn new(n_trees: usize, max_depth: usize) -> Self {
        ForestParams {
            n_trees,
            max_depth,
            min_leaf: 2,
            bootstrap: true,
            distance_transform: DistanceTransform::Log10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<RegressionTree>,
}

impl ForestModel {
    /// Mean of the individual tree predictions.
    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let x = f.as_array();
        self.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Bagged CART regression trees. Tree `t` draws its bootstrap sample from a
/// ChaCha stream keyed by `(seed, t)`, so the result does not depend on how
/// the trees are scheduled across threads.
pub fn fit_forest(data: &[Observation], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::domain("random forest needs at least one observation"));
    }
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    let (x, y) = feature_matrix(data, params.distance_transform)?;
    let n = x.len();
    let growth = TreeGrowth {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&x, &y, &rows, growth)
        })
        .collect();
    Ok(ForestModel {
        params: params.clone(),
        seed,
        trees,
    })
}
