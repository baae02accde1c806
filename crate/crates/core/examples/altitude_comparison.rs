// Two sawtooth passes over the same ground track at 30 m and 50 m.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{generate_trajectory, synthesize_measurements, FlightLog, Kpi, SynthConfig, TrajectorySpec};
use aerokpi::eval::{altitude_table, compare_altitudes, AltitudeComparison};
use aerokpi::geo::BsSiteConfig;

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const LOW: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sawtooth_30m.json"));
const HIGH: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sawtooth_50m.json"));

fn flight(spec: &str, site: &BsSiteConfig, seed: u64) -> Result<FlightLog, Box<dyn std::error::Error>> {
    let spec: TrajectorySpec = serde_json::from_str(spec)?;
    let mut log = synthesize_measurements(
        &generate_trajectory(&spec, site)?,
        site,
        &AntennaPattern::stand_in(),
        &SynthConfig::new(3.0, seed),
    )?;
    // A crude CQI proxy so an integer KPI is available too.
    for r in &mut log.records {
        r.cqi = r.rsrp_dbm.map(|v| ((v + 125.0) / 3.0).clamp(0.0, 15.0).round() as u8);
    }
    Ok(log)
}

pub fn run() -> Result<Vec<AltitudeComparison>, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let low = flight(LOW, &site, 30)?;
    let high = flight(HIGH, &site, 50)?;
    let rows = vec![
        compare_altitudes(&low, &high, Kpi::Rsrp)?,
        compare_altitudes(&low, &high, Kpi::Cqi)?,
    ];
    print!("{}", altitude_table(&rows));
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
