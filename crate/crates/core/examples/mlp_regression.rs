// Small feed-forward network trained with Adam, plus a numerical check of
// its analytic gradient.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{generate_trajectory, synthesize_measurements, SynthConfig, TrajectorySpec};
use aerokpi::eval::metrics;
use aerokpi::geo::BsSiteConfig;
use aerokpi::models::{
    fit_mlp, observations_from_log, train_test_split, Activation, MlpConfig, MlpModel, Observation, TrainedModel,
    TRAIN_FRACTION,
};

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const SPEC: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/polygon.json"));

pub fn run() -> Result<f64, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let spec: TrajectorySpec = serde_json::from_str(SPEC)?;
    let log = synthesize_measurements(
        &generate_trajectory(&spec, &site)?,
        &site,
        &AntennaPattern::stand_in(),
        &SynthConfig::new(2.0, 5),
    )?;
    let data = observations_from_log(&log, &site);
    let (tr, te) = train_test_split(data.len(), TRAIN_FRACTION, 5)?;
    let train: Vec<Observation> = tr.iter().map(|&i| data[i]).collect();
    let test: Vec<Observation> = te.iter().map(|&i| data[i]).collect();

    let mut cfg = MlpConfig::new(vec![20, 20], Activation::Tanh, 1e-3, 0.01);
    cfg.epochs = 300;
    let m = fit_mlp(&train, &cfg, 5)?;
    let model = TrainedModel::Mlp(m.clone());
    let measured: Vec<f64> = test.iter().map(|o| o.rsrp_dbm).collect();
    let r = metrics(&measured, &model.predict_all(&test)?)?;
    println!("MLP {:?}: final loss {:.4}, test RMSE {:.2} dB", cfg.hidden_layers, m.final_loss.unwrap(), r.rmse_db);

    let probe = MlpModel::init(&MlpConfig::new(vec![3], Activation::Logistic, 0.1, 0.01), 1)?;
    let x = [[0.3, -1.0, 0.5], [1.2, 0.4, -0.7]];
    let y = [0.5, -0.25];
    let (_, grad) = probe.objective_gradient(&x, &y);
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let mut p = probe.parameters();
        let h = 1e-6;
        p[i] += h;
        let mut up = probe.clone();
        up.set_parameters(&p);
        p[i] -= 2.0 * h;
        let mut down = probe.clone();
        down.set_parameters(&p);
        let fd = (up.objective(&x, &y) - down.objective(&x, &y)) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs());
    }
    println!("gradient check over {} parameters: max abs diff {worst:.2e}", grad.len());
    Ok(r.rmse_db)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
