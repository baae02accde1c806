// Polynomial RSRP regression in log distance, elevation and azimuth,
// compared to the free-space baseline on held-out rows.
//
// At a single altitude elevation is nearly a function of distance, which
// makes high-degree designs singular, so the box is flown at four altitudes.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{generate_trajectory, synthesize_measurements, SynthConfig, TrajectorySpec};
use aerokpi::eval::metrics;
use aerokpi::geo::BsSiteConfig;
use aerokpi::linkbudget::predict_rsrp_at;
use aerokpi::geo::RelativeGeometry;
use aerokpi::models::{
    fit_polynomial, observations_from_log, predict_polynomial, train_test_split, DistanceTransform, Observation,
    TRAIN_FRACTION,
};

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const SPEC: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/polygon.json"));

pub fn run() -> Result<Vec<(u32, f64)>, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let pattern = AntennaPattern::stand_in();
    let mut data = Vec::new();
    for (k, altitude) in [20.0, 40.0, 60.0, 90.0].into_iter().enumerate() {
        let mut spec: TrajectorySpec = serde_json::from_str(SPEC)?;
        spec.altitude_m = altitude;
        let positions = generate_trajectory(&spec, &site)?;
        let log = synthesize_measurements(&positions, &site, &pattern, &SynthConfig::new(3.0, k as u64))?;
        data.extend(observations_from_log(&log, &site));
    }
    let (tr, te) = train_test_split(data.len(), TRAIN_FRACTION, 1)?;
    let train: Vec<Observation> = tr.iter().map(|&i| data[i]).collect();
    let test: Vec<Observation> = te.iter().map(|&i| data[i]).collect();
    let measured: Vec<f64> = test.iter().map(|o| o.rsrp_dbm).collect();

    let fspl: Vec<f64> = test
        .iter()
        .map(|o| {
            let g = RelativeGeometry { d_uav_m: o.d_m, azimuth_deg: o.azimuth_deg, elevation_deg: o.elevation_deg };
            predict_rsrp_at(&site, &pattern, g).map(|p| p.rsrp_dbm)
        })
        .collect::<Result<_, _>>()?;
    println!("FSPL baseline RMSE {:.2} dB", metrics(&measured, &fspl)?.rmse_db);

    let mut out = Vec::new();
    for degree in 2..=6 {
        let m = match fit_polynomial(&train, degree, DistanceTransform::Log10) {
            Ok(m) => m,
            Err(e) => {
                println!("degree {degree}: {e}");
                continue;
            }
        };
        let pred: Vec<f64> = test.iter().map(|o| predict_polynomial(&m, o)).collect::<Result<_, _>>()?;
        let r = metrics(&measured, &pred)?;
        println!(
            "degree {degree}: {:>3} terms, cond {:.1e}, test RMSE {:.2} dB, MAE {:.2} dB",
            m.terms.len(),
            m.condition,
            r.rmse_db,
            r.mae_db
        );
        out.push((degree, r.rmse_db));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
