use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::FlightLog;
use crate::antenna::AntennaPattern;
use crate::error::{Error, Result};
use crate::geo::BsSiteConfig;
use crate::linkbudget::predict_rsrp;

/// Plane `w_d d + w_az az + w_el el + bias`; rows on the non-negative side get
/// `positive_rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankPlane {
    pub weights: [f64; 3],
    pub bias: f64,
    pub positive_rank: u8,
    pub negative_rank: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub noise_std_db: f64,
    pub seed: u64,
    #[serde(default)]
    pub rank_plane: Option<RankPlane>,
}

impl SynthConfig {
    pub fn new(noise_std_db: f64, seed: u64) -> Self {
        SynthConfig {
            noise_std_db,
            seed,
            rank_plane: None,
        }
    }
}

/// Fills `rsrp_dbm` with the free-space prediction plus i.i.d. Gaussian noise.
/// Rows co-located with the antenna are left without RSRP.
pub fn synthesize_measurements(
    positions: &FlightLog,
    site: &BsSiteConfig,
    pattern: &AntennaPattern,
    cfg: &SynthConfig,
) -> Result<FlightLog> {
    if !(cfg.noise_std_db >= 0.0 && cfg.noise_std_db.is_finite()) {
        return Err(Error::Config("noise_std_db must be >= 0".into()));
    }
    let noise = Normal::new(0.0, cfg.noise_std_db).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = positions.clone();
    for rec in &mut out.records {
        let Ok(pred) = predict_rsrp(site, pattern, &rec.position) else {
            continue;
        };
        let n = if cfg.noise_std_db > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        rec.rsrp_dbm = Some(pred.rsrp_dbm + n);
        if let Some(plane) = &cfg.rank_plane {
            let g = pred.geometry;
            let s = plane.weights[0] * g.d_uav_m
                + plane.weights[1] * g.azimuth_deg
                + plane.weights[2] * g.elevation_deg
                + plane.bias;
            rec.rank = Some(if s >= 0.0 {
                plane.positive_rank
            } else {
                plane.negative_rank
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_trajectory, Pattern, TrajectorySpec};
    use crate::geo::GeoPosition;

    fn setup() -> (BsSiteConfig, AntennaPattern, FlightLog) {
        let site = BsSiteConfig::nr_default(GeoPosition::new(35.727, -78.696, 12.0).unwrap(), 0.0);
        let spec = TrajectorySpec::new(
            Pattern::Polygon {
                vertices: vec![[300.0, 300.0], [-300.0, 300.0], [-300.0, -300.0], [300.0, -300.0]],
            },
            40.0,
            5.0,
            0.5,
        );
        let log = generate_trajectory(&spec, &site).unwrap();
        (site, AntennaPattern::stand_in(), log)
    }

    #[test]
    fn zero_noise_equals_prediction() {
        let (site, pattern, log) = setup();
        let out = synthesize_measurements(&log, &site, &pattern, &SynthConfig::new(0.0, 1)).unwrap();
        for r in &out.records {
            let p = predict_rsrp(&site, &pattern, &r.position).unwrap();
            assert_eq!(r.rsrp_dbm, Some(p.rsrp_dbm));
        }
    }

    #[test]
    fn seeded_determinism() {
        let (site, pattern, log) = setup();
        let cfg = SynthConfig::new(6.39, 99);
        let a = synthesize_measurements(&log, &site, &pattern, &cfg).unwrap();
        let b = synthesize_measurements(&log, &site, &pattern, &cfg).unwrap();
        assert_eq!(a, b);
        let c = synthesize_measurements(&log, &site, &pattern, &SynthConfig::new(6.39, 100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_sample_std() {
        let (site, pattern, log) = setup();
        // Repeat the short loop until there are 1e5 samples.
        let mut residuals = Vec::with_capacity(100_000);
        let mut seed = 0;
        while residuals.len() < 100_000 {
            let out =
                synthesize_measurements(&log, &site, &pattern, &SynthConfig::new(5.0, seed)).unwrap();
            for r in &out.records {
                let p = predict_rsrp(&site, &pattern, &r.position).unwrap().rsrp_dbm;
                residuals.push(r.rsrp_dbm.unwrap() - p);
            }
            seed += 1;
        }
        residuals.truncate(100_000);
        let n = residuals.len() as f64;
        let mean = residuals.iter().sum::<f64>() / n;
        let var = residuals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 5.0).abs() < 0.1, "std {}", var.sqrt());
    }

    #[test]
    fn plants_rank_labels() {
        let (site, pattern, log) = setup();
        let mut cfg = SynthConfig::new(0.0, 3);
        cfg.rank_plane = Some(RankPlane {
            weights: [1.0, 0.0, 0.0],
            bias: -400.0,
            positive_rank: 1,
            negative_rank: 4,
        });
        let out = synthesize_measurements(&log, &site, &pattern, &cfg).unwrap();
        for r in &out.records {
            let d = predict_rsrp(&site, &pattern, &r.position).unwrap().geometry.d_uav_m;
            assert_eq!(r.rank, Some(if d >= 400.0 { 1 } else { 4 }));
        }
        assert!(synthesize_measurements(&log, &site, &pattern, &SynthConfig::new(-1.0, 0)).is_err());
    }
}
