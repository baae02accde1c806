//! Tabulated antenna radiation-pattern cuts.
//!
//! The azimuth cut is periodic: angles are canonicalised into (-180, 180] so
//! -180 and 180 denote the same sample, and lookups interpolate across the
//! wrap. The elevation cut spans at most [-90, 90] and clamps outside its
//! tabulated range. Interpolation is linear in dB.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{wrap_deg, RelativeGeometry};

const STAND_IN_AZIMUTH: &str = include_str!("../data/pattern_azimuth.csv");
const STAND_IN_ELEVATION: &str = include_str!("../data/pattern_elevation.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub angle_deg: f64,
    pub gain_db: f64,
}

/// One principal-plane cut, sorted by strictly increasing angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternCut {
    samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CutKind {
    Azimuth,
    Elevation,
}

impl PatternCut {
    /// Azimuth cut from `(angle_deg, gain_db)` pairs in any order.
    pub fn azimuth(samples: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(samples, CutKind::Azimuth)
    }

    /// Elevation cut from `(angle_deg, gain_db)` pairs in any order.
    pub fn elevation(samples: Vec<(f64, f64)>) -> Result<Self> {
        Self::build(samples, CutKind::Elevation)
    }

    fn build(raw: Vec<(f64, f64)>, kind: CutKind) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::domain("pattern cut has no samples"));
        }
        let (lo, hi) = match kind {
            CutKind::Azimuth => (-180.0, 180.0),
            CutKind::Elevation => (-90.0, 90.0),
        };
        let mut samples = Vec::with_capacity(raw.len());
        for (angle, gain) in raw {
            if !angle.is_finite() || !gain.is_finite() {
                return Err(Error::domain(format!("non-finite sample ({angle}, {gain})")));
            }
            if angle < lo || angle > hi {
                return Err(Error::domain(format!(
                    "angle {angle} outside [{lo}, {hi}]"
                )));
            }
            let angle_deg = if kind == CutKind::Azimuth && angle == -180.0 {
                180.0
            } else {
                angle
            };
            samples.push(Sample {
                angle_deg,
                gain_db: gain,
            });
        }
        samples.sort_by(|a, b| a.angle_deg.total_cmp(&b.angle_deg));

        let mut deduped: Vec<Sample> = Vec::with_capacity(samples.len());
        for s in samples {
            if let Some(last) = deduped.last() {
                if last.angle_deg == s.angle_deg {
                    // -180 and 180 were folded together; they must agree.
                    if s.angle_deg == 180.0 && kind == CutKind::Azimuth && last.gain_db == s.gain_db {
                        continue;
                    }
                    return Err(Error::domain(format!("duplicate angle {}", s.angle_deg)));
                }
            }
            deduped.push(s);
        }
        Ok(PatternCut { samples: deduped })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn lerp(a: &Sample, b: &Sample, a_angle: f64, b_angle: f64, x: f64) -> f64 {
        if x == a_angle {
            return a.gain_db;
        }
        if x == b_angle {
            return b.gain_db;
        }
        let t = (x - a_angle) / (b_angle - a_angle);
        a.gain_db + t * (b.gain_db - a.gain_db)
    }

    /// Index of the first sample whose angle is >= x.
    fn upper(&self, x: f64) -> usize {
        self.samples.partition_point(|s| s.angle_deg < x)
    }

    fn periodic_gain(&self, angle: f64) -> f64 {
        let x = wrap_deg(angle);
        let s = &self.samples;
        if s.len() == 1 {
            return s[0].gain_db;
        }
        let i = self.upper(x);
        if i < s.len() && s[i].angle_deg == x {
            return s[i].gain_db;
        }
        if i == 0 || i == s.len() {
            // Between the last sample and the first one shifted by 360.
            let last = &s[s.len() - 1];
            let first = &s[0];
            let xs = if x < first.angle_deg { x + 360.0 } else { x };
            return Self::lerp(last, first, last.angle_deg, first.angle_deg + 360.0, xs);
        }
        Self::lerp(&s[i - 1], &s[i], s[i - 1].angle_deg, s[i].angle_deg, x)
    }

    fn clamped_gain(&self, angle: f64) -> f64 {
        let s = &self.samples;
        let x = angle.clamp(-90.0, 90.0);
        if x <= s[0].angle_deg {
            return s[0].gain_db;
        }
        if x >= s[s.len() - 1].angle_deg {
            return s[s.len() - 1].gain_db;
        }
        let i = self.upper(x);
        if s[i].angle_deg == x {
            return s[i].gain_db;
        }
        Self::lerp(&s[i - 1], &s[i], s[i - 1].angle_deg, s[i].angle_deg, x)
    }
}

/// Azimuth and elevation cuts of the base-station antenna, gains in dBi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub azimuth_cut: PatternCut,
    pub elevation_cut: PatternCut,
}

fn parse_cut_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let angle = rec[0].parse::<f64>();
        let gain = rec[1].parse::<f64>();
        match (angle, gain) {
            (Ok(a), Ok(g)) => rows.push((a, g)),
            // A non-numeric first row is a header.
            _ if row == 1 && rows.is_empty() && rec[0].parse::<f64>().is_err() => continue,
            _ => {
                return Err(Error::Parse {
                    row,
                    message: format!("malformed row `{},{}`", &rec[0], &rec[1]),
                })
            }
        }
    }
    Ok(rows)
}

/// Reads `angle_deg,gain_db` CSV streams for both cuts. A header row is optional.
pub fn load_pattern<A: Read, E: Read>(azimuth_csv: A, elevation_csv: E) -> Result<AntennaPattern> {
    let azimuth_cut = PatternCut::azimuth(parse_cut_csv(azimuth_csv)?)?;
    let elevation_cut = PatternCut::elevation(parse_cut_csv(elevation_csv)?)?;
    Ok(AntennaPattern {
        azimuth_cut,
        elevation_cut,
    })
}

impl AntennaPattern {
    /// 0 dB in every direction.
    pub fn isotropic() -> Self {
        AntennaPattern {
            azimuth_cut: PatternCut::azimuth(vec![(0.0, 0.0)]).unwrap(),
            elevation_cut: PatternCut::elevation(vec![(0.0, 0.0)]).unwrap(),
        }
    }

    /// Synthetic sector pattern bundled with the crate: 17 dBi peak, about 65 deg
    /// horizontal beamwidth, and a narrow vertical lobe.
    pub fn stand_in() -> Self {
        load_pattern(STAND_IN_AZIMUTH.as_bytes(), STAND_IN_ELEVATION.as_bytes())
            .expect("bundled pattern is valid")
    }

    /// Parabolic sector cuts sampled every `step_deg`: horizontal
    /// `peak - min(12 (phi/hpbw_h)^2, floor_db)` and the matching vertical cut
    /// with 0 dB peak, so the composite peak equals `peak_dbi`.
    pub fn parabolic_sector(
        peak_dbi: f64,
        hpbw_h_deg: f64,
        hpbw_v_deg: f64,
        floor_db: f64,
        step_deg: f64,
    ) -> Result<Self> {
        if !(step_deg > 0.0 && hpbw_h_deg > 0.0 && hpbw_v_deg > 0.0) {
            return Err(Error::domain("beamwidths and step must be positive"));
        }
        let cut = |limit: f64, hpbw: f64, peak: f64| {
            let n = (2.0 * limit / step_deg).round() as i64;
            (0..=n)
                .map(|i| {
                    let a = (-limit + i as f64 * step_deg).min(limit);
                    (a, peak - (12.0 * (a / hpbw).powi(2)).min(floor_db))
                })
                .collect::<Vec<_>>()
        };
        Ok(AntennaPattern {
            azimuth_cut: PatternCut::azimuth(cut(180.0, hpbw_h_deg, peak_dbi))?,
            elevation_cut: PatternCut::elevation(cut(90.0, hpbw_v_deg, 0.0))?,
        })
    }

    /// Horizontal gain G_H at an azimuth offset from boresight.
    pub fn gain_h(&self, azimuth_deg: f64) -> f64 {
        self.azimuth_cut.periodic_gain(azimuth_deg)
    }

    /// Vertical gain G_V at an elevation offset from boresight.
    pub fn gain_v(&self, elevation_deg: f64) -> f64 {
        self.elevation_cut.clamped_gain(elevation_deg)
    }

    /// G_H(phi) + G_V(theta) in dB.
    pub fn directional_gain(&self, g: &RelativeGeometry) -> f64 {
        self.gain_h(g.azimuth_deg) + self.gain_v(g.elevation_deg)
    }

    pub fn write_csv(cut: &PatternCut, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "angle_deg,gain_db")?;
        for s in cut.samples() {
            writeln!(w, "{},{}", s.angle_deg, s.gain_db)?;
        }
        Ok(())
    }
}
