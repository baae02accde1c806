// Channel-rank decision plane learned by linear discriminant analysis.

use aerokpi::antenna::AntennaPattern;
use aerokpi::data::{generate_trajectory, synthesize_measurements, RankPlane, SynthConfig, TrajectorySpec};
use aerokpi::geo::BsSiteConfig;
use aerokpi::models::{confusion, fit_lda, lda_points_from_log, Confusion};

const SITE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/site.json"));
const LOW: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sawtooth_30m.json"));
const HIGH: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sawtooth_50m.json"));
const PLANE: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/rank_plane.json"));

pub fn run() -> Result<Confusion, Box<dyn std::error::Error>> {
    let site = BsSiteConfig::from_json_str(SITE)?;
    let mut cfg = SynthConfig::new(0.0, 0);
    cfg.rank_plane = Some(serde_json::from_str::<RankPlane>(PLANE)?);
    let mut points = Vec::new();
    for spec in [LOW, HIGH] {
        let spec: TrajectorySpec = serde_json::from_str(spec)?;
        let positions = generate_trajectory(&spec, &site)?;
        let log = synthesize_measurements(&positions, &site, &AntennaPattern::isotropic(), &cfg)?;
        points.extend(lda_points_from_log(&log, &site));
    }
    let m = fit_lda(&points)?;
    let c = confusion(&m, &points);
    let [w_d, w_az, w_el] = m.weights;
    // Scaled so the bias matches the planted plane.
    let k = -15.549 / m.bias;
    println!("fitted:  {:.4} d {:+.4} az {:+.4} el {:+.4}", w_d * k, w_az * k, w_el * k, m.bias * k);
    println!("planted: 0.0475 d -0.1051 az -0.0892 el -15.5490");
    println!(
        "positive side -> rank {}, misclassified {}/{} ({:.1}% accuracy)",
        m.class_for_positive_side,
        c.misclassified,
        c.total,
        100.0 * c.accuracy()
    );
    Ok(c)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run().map(|_| ())
}
