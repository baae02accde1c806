// RSRP heatmap over the local east/north plane, exported as CSV.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{generate_trajectory, synthesize_measurements, Kpi, SynthConfig, TrajectorySpec};
use aerokpi::eval::{heatmap, HeatmapGrid};
use aerokpi::geo::BsSiteConfig;

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const SPEC: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sawtooth_50m.json"));

pub fn run() -> Result<HeatmapGrid, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let spec: TrajectorySpec = serde_json::from_str(SPEC)?;
    let log = synthesize_measurements(
        &generate_trajectory(&spec, &site)?,
        &site,
        &AntennaPattern::stand_in(),
        &SynthConfig::new(2.0, 11),
    )?;
    let grid = heatmap(&log, Kpi::Rsrp, 50.0, Some(site.position))?;
    println!("{} samples in {} bins of {} m", grid.total_count(), grid.cells.len(), grid.bin_m);
    let strongest = grid.cells.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).unwrap();
    println!(
        "strongest bin centred at ({:.0} E, {:.0} N): {:.1} dBm over {} samples",
        strongest.east_m, strongest.north_m, strongest.mean, strongest.count
    );
    let mut csv = Vec::new();
    grid.write_csv(&mut csv)?;
    for line in String::from_utf8(csv)?.lines().take(5) {
        println!("{line}");
    }
    Ok(grid)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
