use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{feature_matrix, DistanceTransform, FeatureVector, Observation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Logistic,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Tanh, Activation::Logistic];

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Logistic => a * (1.0 - a),
        }
    }
}

fn default_epochs() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    /// L2 penalty on weights.
    pub alpha: f64,
    pub learning_rate_init: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub distance_transform: DistanceTransform,
}

impl MlpConfig {
    pub fn new(hidden_layers: Vec<usize>, activation: Activation, alpha: f64, learning_rate_init: f64) -> Self {
        MlpConfig {
            hidden_layers,
            activation,
            alpha,
            learning_rate_init,
            epochs: default_epochs(),
            distance_transform: DistanceTransform::Log10,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() || self.hidden_layers.len() > 2 {
            return Err(Error::Config("MLP needs 1 or 2 hidden layers".into()));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::Config("hidden layer width must be >= 1".into()));
        }
        if !(self.alpha >= 0.0) || !(self.learning_rate_init > 0.0) {
            return Err(Error::Config("alpha must be >= 0 and learning rate > 0".into()));
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![3];
        widths.extend(&self.hidden_layers);
        widths.push(1);
        widths.windows(2).map(|w| (w[1], w[0])).collect()
    }
}

/// Fully connected layer; `weights[o][i]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// Feed-forward regressor with a linear output unit. Inputs and target are
/// z-scored with the stored statistics before entering the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub seed: u64,
    pub layers: Vec<DenseLayer>,
    pub feature_mean: [f64; 3],
    pub feature_std: [f64; 3],
    pub target_mean: f64,
    pub target_std: f64,
    /// Objective after the last epoch; `None` if no epoch ran.
    pub final_loss: Option<f64>,
}

struct Forward {
    /// Activations per layer, starting with the input batch.
    acts: Vec<DMatrix<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<DMatrix<f64>>,
}

impl MlpModel {
    /// Glorot-uniform initialisation with identity input/target scaling.
    pub fn init(config: &MlpConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gain = if config.activation == Activation::Logistic { 2.0 } else { 6.0 };
        let layers = config
            .shapes()
            .into_iter()
            .map(|(out, inp)| {
                let bound = (gain / (out + inp) as f64).sqrt();
                DenseLayer {
                    weights: (0..out)
                        .map(|_| (0..inp).map(|_| rng.random_range(-bound..bound)).collect())
                        .collect(),
                    biases: (0..out).map(|_| rng.random_range(-bound..bound)).collect(),
                }
            })
            .collect();
        Ok(MlpModel {
            config: config.clone(),
            seed,
            layers,
            feature_mean: [0.0; 3],
            feature_std: [1.0; 3],
            target_mean: 0.0,
            target_std: 1.0,
            final_loss: None,
        })
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.biases.len() * (l.weights.first().map_or(0, Vec::len) + 1))
            .sum()
    }

    /// Flattened parameters: per layer, weights row-major then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_parameters());
        for l in &self.layers {
            for row in &l.weights {
                p.extend(row);
            }
            p.extend(&l.biases);
        }
        p
    }

    pub fn set_parameters(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_parameters(), "parameter vector length");
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            for row in &mut l.weights {
                for w in row.iter_mut() {
                    *w = it.next().unwrap();
                }
            }
            for b in &mut l.biases {
                *b = it.next().unwrap();
            }
        }
    }

    fn matrices(&self) -> Vec<(DMatrix<f64>, Vec<f64>)> {
        self.layers
            .iter()
            .map(|l| {
                let out = l.weights.len();
                let inp = l.weights[0].len();
                let flat: Vec<f64> = l.weights.iter().flatten().copied().collect();
                (DMatrix::from_row_slice(out, inp, &flat), l.biases.clone())
            })
            .collect()
    }

    fn forward(&self, mats: &[(DMatrix<f64>, Vec<f64>)], input: DMatrix<f64>) -> Forward {
        let mut acts = vec![input];
        let mut pre = Vec::with_capacity(mats.len());
        let last = mats.len() - 1;
        for (l, (w, b)) in mats.iter().enumerate() {
            let mut z = acts[l].clone() * w.transpose();
            for (c, bias) in b.iter().enumerate() {
                z.column_mut(c).add_scalar_mut(*bias);
            }
            let a = if l == last {
                z.clone()
            } else {
                z.map(|v| self.config.activation.apply(v))
            };
            pre.push(z);
            acts.push(a);
        }
        Forward { acts, pre }
    }

    fn batch(inputs: &[[f64; 3]]) -> DMatrix<f64> {
        DMatrix::from_fn(inputs.len(), 3, |r, c| inputs[r][c])
    }

    fn l2_term(&self, mats: &[(DMatrix<f64>, Vec<f64>)], n: usize) -> f64 {
        let sq: f64 = mats.iter().map(|(w, _)| w.norm_squared()).sum();
        0.5 * self.config.alpha * sq / n as f64
    }

    /// Training objective on network-space inputs and targets:
    /// `mean((yhat - y)^2) / 2 + alpha * |W|^2 / (2 n)`.
    pub fn objective(&self, inputs: &[[f64; 3]], targets: &[f64]) -> f64 {
        let mats = self.matrices();
        let fw = self.forward(&mats, Self::batch(inputs));
        let out = fw.acts.last().unwrap();
        let n = targets.len();
        let sse: f64 = out.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
        0.5 * sse / n as f64 + self.l2_term(&mats, n)
    }

    /// Objective and its gradient with respect to [`MlpModel::parameters`].
    pub fn objective_gradient(&self, inputs: &[[f64; 3]], targets: &[f64]) -> (f64, Vec<f64>) {
        let mats = self.matrices();
        let n = targets.len();
        let fw = self.forward(&mats, Self::batch(inputs));
        let out = fw.acts.last().unwrap();
        let mut delta = DMatrix::from_fn(n, 1, |r, _| (out[(r, 0)] - targets[r]) / n as f64);
        let sse: f64 = out.iter().zip(targets).map(|(p, t)| (p - t).powi(2)).sum();
        let loss = 0.5 * sse / n as f64 + self.l2_term(&mats, n);

        let mut grads: Vec<(DMatrix<f64>, Vec<f64>)> = Vec::with_capacity(mats.len());
        for l in (0..mats.len()).rev() {
            let (w, _) = &mats[l];
            let mut gw = delta.transpose() * &fw.acts[l];
            gw += w * (self.config.alpha / n as f64);
            let gb: Vec<f64> = (0..delta.ncols()).map(|c| delta.column(c).sum()).collect();
            if l > 0 {
                let back = &delta * w;
                let z = &fw.pre[l - 1];
                let a = &fw.acts[l];
                let act = self.config.activation;
                delta = DMatrix::from_fn(back.nrows(), back.ncols(), |r, c| {
                    back[(r, c)] * act.derivative(z[(r, c)], a[(r, c)])
                });
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.n_parameters());
        for (gw, gb) in grads {
            for r in 0..gw.nrows() {
                flat.extend(gw.row(r).iter());
            }
            flat.extend(gb);
        }
        (loss, flat)
    }

    pub fn predict(&self, f: &FeatureVector) -> f64 {
        let x = f.as_array();
        let z: [f64; 3] = std::array::from_fn(|i| (x[i] - self.feature_mean[i]) / self.feature_std[i]);
        let mats = self.matrices();
        let fw = self.forward(&mats, Self::batch(&[z]));
        fw.acts.last().unwrap()[(0, 0)] * self.target_std + self.target_mean
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
}

/// Full-batch Adam on the standardized data for `config.epochs` epochs.
pub fn fit_mlp(data: &[Observation], config: &MlpConfig, seed: u64) -> Result<MlpModel> {
    if data.is_empty() {
        return Err(Error::domain("MLP training needs at least one observation"));
    }
    let mut model = MlpModel::init(config, seed)?;
    let (x, y) = feature_matrix(data, config.distance_transform)?;
    for f in 0..3 {
        let (m, s) = mean_std(x.iter().map(|r| r[f]));
        model.feature_mean[f] = m;
        model.feature_std[f] = s;
    }
    let (tm, ts) = mean_std(y.iter().copied());
    model.target_mean = tm;
    model.target_std = ts;
    let inputs: Vec<[f64; 3]> = x
        .iter()
        .map(|r| std::array::from_fn(|i| (r[i] - model.feature_mean[i]) / model.feature_std[i]))
        .collect();
    let targets: Vec<f64> = y.iter().map(|v| (v - tm) / ts).collect();

    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let mut params = model.parameters();
    let mut m1 = vec![0.0; params.len()];
    let mut m2 = vec![0.0; params.len()];
    for epoch in 1..=config.epochs {
        let (loss, grad) = model.objective_gradient(&inputs, &targets);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { epoch });
        }
        let c1 = 1.0 - BETA1.powi(epoch as i32);
        let c2 = 1.0 - BETA2.powi(epoch as i32);
        for (((p, g), a), b) in params.iter_mut().zip(&grad).zip(&mut m1).zip(&mut m2) {
            *a = BETA1 * *a + (1.0 - BETA1) * g;
            *b = BETA2 * *b + (1.0 - BETA2) * g * g;
            *p -= config.learning_rate_init * (*a / c1) / ((*b / c2).sqrt() + EPS);
        }
        model.set_parameters(&params);
        model.final_loss = Some(loss);
    }
    if config.epochs > 0 {
        let loss = model.objective(&inputs, &targets);
        if !loss.is_finite() {
            return Err(Error::NonFinite { epoch: config.epochs });
        }
        model.final_loss = Some(loss);
    }
    Ok(model)
}
