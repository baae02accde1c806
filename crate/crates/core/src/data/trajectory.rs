use serde::{Deserialize, Serialize};

use super::{FlightLog, KpiRecord, LogMetadata};
use crate::error::{Error, Result};
use crate::geo::{enu_to_geodetic, BsSiteConfig, Enu, GeoPosition};

/// Flight pattern, described in meters east/north of the base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Pattern {
    /// Closed loop through `vertices` (`[east, north]` pairs).
    Polygon { vertices: Vec<[f64; 2]> },
    /// Zig-zag that starts `start_range_m` from the BS along `bearing_deg` and
    /// moves `spacing_m` farther out on each of `legs` lateral passes, swinging
    /// `half_width_m` to either side of the axis.
    Sawtooth {
        bearing_deg: f64,
        start_range_m: f64,
        spacing_m: f64,
        half_width_m: f64,
        legs: usize,
    },
    /// Rectangle made of two north-south passes at `near_east_m` and
    /// `far_east_m`, each running from `-half_length_m` to `half_length_m`
    /// north of the BS.
    TwoSweeps {
        near_east_m: f64,
        far_east_m: f64,
        half_length_m: f64,
    },
    /// Open polyline through `points`.
    Waypoints { points: Vec<[f64; 2]> },
}

fn default_device() -> String {
    "synthetic".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub pattern: Pattern,
    /// Flight altitude above ground.
    pub altitude_m: f64,
    pub speed_mps: f64,
    pub sample_period_s: f64,
    /// Ground elevation on the site's altitude datum.
    #[serde(default)]
    pub ground_alt_m: f64,
    #[serde(default)]
    pub start_time_s: f64,
    #[serde(default = "default_device")]
    pub device: String,
    #[serde(default)]
    pub label: Option<String>,
}

impl TrajectorySpec {
    pub fn new(pattern: Pattern, altitude_m: f64, speed_mps: f64, sample_period_s: f64) -> Self {
        TrajectorySpec {
            pattern,
            altitude_m,
            speed_mps,
            sample_period_s,
            ground_alt_m: 0.0,
            start_time_s: 0.0,
            device: default_device(),
            label: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::BadSpec(format!("{name} must be > 0")))
            }
        };
        positive(self.altitude_m, "altitude_m")?;
        positive(self.speed_mps, "speed_mps")?;
        positive(self.sample_period_s, "sample_period_s")?;
        Ok(())
    }

    /// Vertices of the path in local east/north meters.
    pub fn path(&self) -> Result<Vec<[f64; 2]>> {
        let path = match &self.pattern {
            Pattern::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::BadSpec("polygon needs at least 3 vertices".into()));
                }
                let mut p = vertices.clone();
                p.push(vertices[0]);
                p
            }
            Pattern::Waypoints { points } => {
                if points.len() < 2 {
                    return Err(Error::BadSpec("waypoints need at least 2 points".into()));
                }
                points.clone()
            }
            Pattern::Sawtooth {
                bearing_deg,
                start_range_m,
                spacing_m,
                half_width_m,
                legs,
            } => {
                if *legs == 0 || !(*spacing_m > 0.0) || !(*half_width_m > 0.0) || *start_range_m < 0.0 {
                    return Err(Error::BadSpec(
                        "sawtooth needs legs >= 1, spacing and half width > 0".into(),
                    ));
                }
                let (s, c) = bearing_deg.to_radians().sin_cos();
                let axis = [s, c];
                let lateral = [c, -s];
                (0..=*legs)
                    .map(|k| {
                        let range = start_range_m + k as f64 * spacing_m;
                        let side = if k % 2 == 0 { -half_width_m } else { *half_width_m };
                        [
                            range * axis[0] + side * lateral[0],
                            range * axis[1] + side * lateral[1],
                        ]
                    })
                    .collect()
            }
            Pattern::TwoSweeps {
                near_east_m,
                far_east_m,
                half_length_m,
            } => {
                if !(*half_length_m > 0.0) || near_east_m == far_east_m {
                    return Err(Error::BadSpec(
                        "two sweeps need distinct offsets and half length > 0".into(),
                    ));
                }
                let l = *half_length_m;
                vec![
                    [*near_east_m, -l],
                    [*near_east_m, l],
                    [*far_east_m, l],
                    [*far_east_m, -l],
                    [*near_east_m, -l],
                ]
            }
        };
        if path.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::BadSpec("non-finite vertex".into()));
        }
        Ok(path)
    }
}

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Samples the pattern at constant speed every `sample_period_s`; the final
/// vertex is always included. Records carry positions only.
pub fn generate_trajectory(spec: &TrajectorySpec, site: &BsSiteConfig) -> Result<FlightLog> {
    spec.validate()?;
    let path = spec.path()?;
    let lengths: Vec<f64> = path.windows(2).map(|w| seg_len(w[0], w[1])).collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::BadSpec("path has zero length".into()));
    }
    let step = spec.speed_mps * spec.sample_period_s;
    let altitude = spec.ground_alt_m + spec.altitude_m;

    let point_at = |s: f64| -> [f64; 2] {
        let mut rem = s;
        for (i, &len) in lengths.iter().enumerate() {
            if rem <= len || i == lengths.len() - 1 {
                let t = if len > 0.0 { (rem / len).min(1.0) } else { 0.0 };
                let (a, b) = (path[i], path[i + 1]);
                return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            }
            rem -= len;
        }
        unreachable!("path has segments")
    };

    let mut stations: Vec<f64> = (0..)
        .map(|k| k as f64 * step)
        .take_while(|s| *s < total)
        .collect();
    if total - stations.last().copied().unwrap_or(0.0) > 1e-9 * total {
        stations.push(total);
    }

    let mut records = Vec::with_capacity(stations.len());
    for s in stations {
        let [east, north] = point_at(s);
        let horizontal = enu_to_geodetic(&Enu { east, north, up: 0.0 }, &site.position);
        let position = GeoPosition {
            altitude_m: altitude,
            ..horizontal
        };
        records.push(KpiRecord::at(
            spec.start_time_s + s / spec.speed_mps,
            position,
            spec.device.clone(),
        ));
    }
    Ok(FlightLog {
        records,
        metadata: LogMetadata {
            device: Some(spec.device.clone()),
            altitude_label: Some(format!("{}m", spec.altitude_m)),
            trajectory_label: spec.label.clone().or_else(|| {
                Some(
                    match spec.pattern {
                        Pattern::Polygon { .. } => "polygon",
                        Pattern::Sawtooth { .. } => "sawtooth",
                        Pattern::TwoSweeps { .. } => "two_sweeps",
                        Pattern::Waypoints { .. } => "waypoints",
                    }
                    .to_string(),
                )
            }),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::geodetic_to_enu;

    fn site() -> BsSiteConfig {
        BsSiteConfig::nr_default(GeoPosition::new(35.727, -78.696, 12.0).unwrap(), 315.0)
    }

    fn local(log: &FlightLog, site: &BsSiteConfig) -> Vec<[f64; 2]> {
        log.records
            .iter()
            .map(|r| {
                let p = GeoPosition {
                    altitude_m: site.position.altitude_m,
                    ..r.position
                };
                let e = geodetic_to_enu(&p, &site.position);
                [e.east, e.north]
            })
            .collect()
    }

    fn walked(points: &[[f64; 2]]) -> f64 {
        points.windows(2).map(|w| seg_len(w[0], w[1])).sum()
    }

    #[test]
    fn square_polygon_kinematics() {
        let site = site();
        let spec = TrajectorySpec::new(
            Pattern::Polygon {
                vertices: vec![[100.0, 100.0], [-100.0, 100.0], [-100.0, -100.0], [100.0, -100.0]],
            },
            50.0,
            5.0,
            1.0,
        );
        let log = generate_trajectory(&spec, &site).unwrap();
        assert!(log.records.iter().all(|r| r.position.altitude_m == 50.0));
        let pts = local(&log, &site);
        for w in pts.windows(2) {
            let d = seg_len(w[0], w[1]);
            assert!(d <= 5.0 + 1e-3, "step {d}");
        }
        // 800 m perimeter at 5 m per sample; corners fall on sample stations.
        assert_eq!(pts.len(), 161);
        assert!((walked(&pts) - 800.0).abs() < 5.0);
        let first = pts[0];
        let last = pts[pts.len() - 1];
        assert!(seg_len(first, last) < 1e-3);
        assert_eq!(log.records[1].timestamp_s, 1.0);
    }

    #[test]
    fn off_grid_corners_stay_within_a_step() {
        let site = site();
        let spec = TrajectorySpec::new(
            Pattern::Polygon {
                vertices: vec![[0.0, 50.0], [130.0, 260.0], [-170.0, 330.0], [-60.0, 90.0], [-90.0, 40.0]],
            },
            30.0,
            7.0,
            0.7,
        );
        let analytic: f64 = {
            let mut p = spec.path().unwrap();
            p.dedup();
            walked(&p)
        };
        let pts = local(&generate_trajectory(&spec, &site).unwrap(), &site);
        assert!((walked(&pts) - analytic).abs() < 7.0 * 0.7);
        assert!(walked(&pts) <= analytic + 1e-6);
    }

    #[test]
    fn sawtooth_moves_outward() {
        let site = site();
        let spec = TrajectorySpec::new(
            Pattern::Sawtooth {
                bearing_deg: 315.0,
                start_range_m: 100.0,
                spacing_m: 60.0,
                half_width_m: 150.0,
                legs: 6,
            },
            30.0,
            6.0,
            1.0,
        );
        let path = spec.path().unwrap();
        assert_eq!(path.len(), 7);
        let ranges: Vec<f64> = path
            .iter()
            .map(|p| {
                let (s, c) = 315f64.to_radians().sin_cos();
                p[0] * s + p[1] * c
            })
            .collect();
        assert!(ranges.windows(2).all(|w| w[1] > w[0]));
        let log = generate_trajectory(&spec, &site).unwrap();
        assert!((walked(&local(&log, &site)) - walked(&path)).abs() < 6.0);
    }

    #[test]
    fn two_sweeps_rectangle() {
        let spec = TrajectorySpec::new(
            Pattern::TwoSweeps {
                near_east_m: -100.0,
                far_east_m: -300.0,
                half_length_m: 400.0,
            },
            30.0,
            5.0,
            1.0,
        );
        let path = spec.path().unwrap();
        assert_eq!(walked(&path), 2.0 * 800.0 + 2.0 * 200.0);
        assert_eq!(path.first(), path.last());
    }

    #[test]
    fn bad_specs() {
        let site = site();
        let mut spec = TrajectorySpec::new(Pattern::Waypoints { points: vec![[0.0, 0.0]] }, 30.0, 5.0, 1.0);
        assert!(matches!(generate_trajectory(&spec, &site), Err(Error::BadSpec(_))));
        spec.pattern = Pattern::Waypoints {
            points: vec![[1.0, 1.0], [1.0, 1.0]],
        };
        assert!(matches!(generate_trajectory(&spec, &site), Err(Error::BadSpec(_))));
        spec.pattern = Pattern::Waypoints {
            points: vec![[0.0, 0.0], [10.0, 0.0]],
        };
        spec.speed_mps = 0.0;
        assert!(matches!(generate_trajectory(&spec, &site), Err(Error::BadSpec(_))));
        spec.speed_mps = 1.0;
        spec.altitude_m = -5.0;
        assert!(matches!(generate_trajectory(&spec, &site), Err(Error::BadSpec(_))));
    }

    #[test]
    fn spec_json_and_determinism() {
        let json = r#"{"pattern": {"type": "two_sweeps", "near_east_m": -80, "far_east_m": -250, "half_length_m": 300},
                       "altitude_m": 30, "speed_mps": 5, "sample_period_s": 1, "device": "S23"}"#;
        let spec: TrajectorySpec = serde_json::from_str(json).unwrap();
        let a = generate_trajectory(&spec, &site()).unwrap();
        let b = generate_trajectory(&spec, &site()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records[0].device, "S23");
    }
}
