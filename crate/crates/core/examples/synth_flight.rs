// Synthetic sawtooth flight with noisy RSRP and planted rank labels,
// written as a flight-log CSV.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{
    generate_trajectory, load_flight_csv, synthesize_measurements, write_flight_csv, FlightLog, RankPlane, SynthConfig,
    TrajectorySpec,
};
use aerokpi::geo::BsSiteConfig;

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const SPEC: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sawtooth_30m.json"));
const PLANE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/rank_plane.json"));

pub fn run() -> Result<FlightLog, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let spec: TrajectorySpec = serde_json::from_str(SPEC)?;
    let positions = generate_trajectory(&spec, &site)?;

    let mut cfg = SynthConfig::new(4.0, 7);
    cfg.rank_plane = Some(serde_json::from_str::<RankPlane>(PLANE)?);
    let log = synthesize_measurements(&positions, &site, &AntennaPattern::stand_in(), &cfg)?;

    let mut csv = Vec::new();
    write_flight_csv(&log, &mut csv)?;
    let text = String::from_utf8(csv)?;
    for line in text.lines().take(4) {
        println!("{line}");
    }
    let back = load_flight_csv(text.as_bytes())?.log;
    println!("{} rows, {} after CSV round trip", log.len(), back.len());
    Ok(back)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
