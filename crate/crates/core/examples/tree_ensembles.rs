// Random forest and gradient-boosted trees tuned over a small grid.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{generate_trajectory, synthesize_measurements, SynthConfig, TrajectorySpec};
use aerokpi::geo::BsSiteConfig;
use aerokpi::models::{grid_search, observations_from_log, HyperGrid, ModelFamily, TrainedModel};

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const SPEC: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/two_sweeps.json"));
const GRID: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/small_grid.json"));

pub fn run() -> Result<Vec<(ModelFamily, f64)>, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let spec: TrajectorySpec = serde_json::from_str(SPEC)?;
    let positions = generate_trajectory(&spec, &site)?;
    let log = synthesize_measurements(&positions, &site, &AntennaPattern::stand_in(), &SynthConfig::new(2.0, 3))?;
    let data = observations_from_log(&log, &site);
    let grid = HyperGrid::from_json_str(GRID)?;

    let mut out = Vec::new();
    for family in [ModelFamily::Forest, ModelFamily::Gbt] {
        let r = grid_search(&data, &grid, family, 42)?;
        println!("{family}: {} configurations", r.leaderboard.len());
        for (i, e) in r.leaderboard.iter().enumerate() {
            let rmse = e.report.as_ref().map_or(f64::NAN, |r| r.rmse_db);
            let mark = if i == r.best_index { "*" } else { " " };
            println!("  {mark} {} -> RMSE {rmse:.3} dB", serde_json::to_string(&e.config)?);
        }
        match &r.best {
            TrainedModel::Forest(m) => println!("  best forest depth {}", m.trees.iter().map(|t| t.depth()).max().unwrap_or(0)),
            TrainedModel::Gbt(m) => println!("  final training loss {:.3}", m.training_loss.last().unwrap()),
            _ => {}
        }
        let best_rmse = r.leaderboard[r.best_index].report.as_ref().unwrap().rmse_db;
        out.push((family, best_rmse));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
