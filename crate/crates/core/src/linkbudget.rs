//! Synchronization-signal transmit power and free-space RSRP prediction.
//!
//! Powers are expressed in dBm. The UE antenna is treated as isotropic, so no
//! UAV orientation enters the prediction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::antenna::AntennaPattern;
use crate::data::FlightLog;
use crate::error::{Error, Result};
use crate::geo::{relative_geometry, wavelength, BsSiteConfig, GeoPosition, RelativeGeometry};

/// Power per resource element of the SS burst.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsTxPower {
    pub per_re_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsrpBreakdown {
    pub tx_dbm: f64,
    pub gain_h_db: f64,
    pub gain_v_db: f64,
    pub fspl_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsrpPrediction {
    pub rsrp_dbm: f64,
    pub components: RsrpBreakdown,
    pub geometry: RelativeGeometry,
}

/// P_T / (N_PRB * N_SC), converted to dBm.
pub fn ss_tx_power(site: &BsSiteConfig) -> SsTxPower {
    let per_re_w = site.tx_power_w / (f64::from(site.n_prb) * f64::from(site.n_sc));
    SsTxPower {
        per_re_dbm: 10.0 * (per_re_w * 1e3).log10(),
    }
}

/// Free-space path loss 20 log10(4 pi d / lambda) in dB.
pub fn fspl_db(d_m: f64, lambda_m: f64) -> Result<f64> {
    if !(d_m > 0.0) || !(lambda_m > 0.0) {
        return Err(Error::domain(format!(
            "FSPL needs positive distance and wavelength, got d={d_m}, lambda={lambda_m}"
        )));
    }
    Ok(20.0 * (4.0 * PI * d_m / lambda_m).log10())
}

/// SS-RSRP for a known geometry.
pub fn predict_rsrp_at(
    site: &BsSiteConfig,
    pattern: &AntennaPattern,
    geometry: RelativeGeometry,
) -> Result<RsrpPrediction> {
    let tx_dbm = ss_tx_power(site).per_re_dbm;
    let gain_h_db = pattern.gain_h(geometry.azimuth_deg);
    let gain_v_db = pattern.gain_v(geometry.elevation_deg);
    let fspl = fspl_db(geometry.d_uav_m, wavelength(site))?;
    Ok(RsrpPrediction {
        rsrp_dbm: tx_dbm + gain_h_db + gain_v_db - fspl,
        components: RsrpBreakdown {
            tx_dbm,
            gain_h_db,
            gain_v_db,
            fspl_db: fspl,
        },
        geometry,
    })
}

pub fn predict_rsrp(
    site: &BsSiteConfig,
    pattern: &AntennaPattern,
    uav: &GeoPosition,
) -> Result<RsrpPrediction> {
    let g = relative_geometry(uav, site)?;
    predict_rsrp_at(site, pattern, g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedSample {
    pub row: usize,
    pub timestamp_s: f64,
    pub prediction: RsrpPrediction,
}

#[derive(Debug, Default)]
pub struct TrajectoryPrediction {
    pub samples: Vec<PredictedSample>,
    /// Rows that could not be predicted, with the reason.
    pub rejected: Vec<(usize, Error)>,
}

/// Row-wise [`predict_rsrp`] over a flight log. Failing rows are collected in
/// `rejected` and do not abort the run.
pub fn predict_trajectory(
    site: &BsSiteConfig,
    pattern: &AntennaPattern,
    log: &FlightLog,
) -> TrajectoryPrediction {
    let mut out = TrajectoryPrediction::default();
    for (row, rec) in log.records.iter().enumerate() {
        match predict_rsrp(site, pattern, &rec.position) {
            Ok(prediction) => out.samples.push(PredictedSample {
                row,
                timestamp_s: rec.timestamp_s,
                prediction,
            }),
            Err(e) => out.rejected.push((row, e)),
        }
    }
    out
}

/// Writes `timestamp,d_m,azimuth_deg,elevation_deg,rsrp_pred_dbm`.
pub fn write_predictions_csv<W: std::io::Write>(samples: &[PredictedSample], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["timestamp", "d_m", "azimuth_deg", "elevation_deg", "rsrp_pred_dbm"])?;
    for s in samples {
        let g = &s.prediction.geometry;
        wtr.write_record([
            s.timestamp_s.to_string(),
            g.d_uav_m.to_string(),
            g.azimuth_deg.to_string(),
            g.elevation_deg.to_string(),
            s.prediction.rsrp_dbm.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::PatternCut;
    use crate::data::{FlightLog, KpiRecord};
    use crate::geo::{enu_to_geodetic, Enu};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn site() -> BsSiteConfig {
        BsSiteConfig::nr_default(GeoPosition::new(35.7, -78.7, 10.0).unwrap(), 0.0)
    }

    fn north(site: &BsSiteConfig, d: f64) -> GeoPosition {
        enu_to_geodetic(
            &Enu {
                east: 0.0,
                north: d,
                up: 0.0,
            },
            &site.position,
        )
    }

    #[test]
    fn ss_power_values() {
        let mut s = site();
        s.tx_power_w = 1.0;
        s.n_prb = 1;
        s.n_sc = 1;
        assert_abs_diff_eq!(ss_tx_power(&s).per_re_dbm, 30.0, epsilon = 1e-12);
        let s = site();
        assert_abs_diff_eq!(ss_tx_power(&s).per_re_dbm, 1.837, epsilon = 1e-3);
        let mut lte = site();
        lte.n_prb = 25;
        assert_abs_diff_eq!(ss_tx_power(&lte).per_re_dbm, 12.22, epsilon = 5e-3);
    }

    #[test]
    fn fspl_values() {
        let lambda = 0.0881742;
        assert_abs_diff_eq!(fspl_db(lambda / (4.0 * PI), lambda).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fspl_db(1000.0, lambda).unwrap(), 103.08, epsilon = 5e-3);
        let step = fspl_db(2000.0, lambda).unwrap() - fspl_db(1000.0, lambda).unwrap();
        assert_abs_diff_eq!(step, 20.0 * 2f64.log10(), epsilon = 1e-9);
        assert!(fspl_db(0.0, lambda).is_err());
        assert!(fspl_db(10.0, -1.0).is_err());
    }

    #[test]
    fn isotropic_kilometre() {
        let s = site();
        let p = predict_rsrp(&s, &AntennaPattern::isotropic(), &north(&s, 1000.0)).unwrap();
        assert_abs_diff_eq!(p.rsrp_dbm, -101.24, epsilon = 0.01);
    }

    #[test]
    fn boresight_gain_shift() {
        let s = site();
        let uav = north(&s, 500.0);
        let iso = predict_rsrp(&s, &AntennaPattern::isotropic(), &uav).unwrap();
        let pattern = AntennaPattern {
            azimuth_cut: PatternCut::azimuth(vec![(0.0, 17.0)]).unwrap(),
            elevation_cut: PatternCut::elevation(vec![(0.0, 8.0)]).unwrap(),
        };
        let p = predict_rsrp(&s, &pattern, &uav).unwrap();
        assert_abs_diff_eq!(p.rsrp_dbm - iso.rsrp_dbm, 25.0, epsilon = 1e-12);
    }

    #[test]
    fn trajectory_contract() {
        let s = site();
        let pattern = AntennaPattern::stand_in();
        let empty = FlightLog::default();
        assert!(predict_trajectory(&s, &pattern, &empty).samples.is_empty());

        let rec = |t: f64, p: GeoPosition| KpiRecord::at(t, p, "S23");
        let log = FlightLog::from_records(vec![rec(0.0, north(&s, 300.0))]);
        let out = predict_trajectory(&s, &pattern, &log);
        assert_eq!(out.samples.len(), 1);
        assert_eq!(
            out.samples[0].prediction,
            predict_rsrp(&s, &pattern, &north(&s, 300.0)).unwrap()
        );

        let log = FlightLog::from_records(vec![
            rec(0.0, north(&s, 300.0)),
            rec(1.0, s.position),
            rec(2.0, north(&s, 400.0)),
        ]);
        let out = predict_trajectory(&s, &pattern, &log);
        assert_eq!(out.samples.len(), 2);
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].0, 1);
        assert_eq!(out.samples[1].timestamp_s, 2.0);
    }

    #[test]
    fn predictions_csv_header() {
        let s = site();
        let pattern = AntennaPattern::isotropic();
        let log = FlightLog::from_records(vec![KpiRecord::at(5.0, north(&s, 100.0), "S21")]);
        let out = predict_trajectory(&s, &pattern, &log);
        let mut buf = Vec::new();
        write_predictions_csv(&out.samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("timestamp,d_m,azimuth_deg,elevation_deg,rsrp_pred_dbm\n5,"));
    }

    proptest! {
        #[test]
        fn breakdown_reconstructs(e in -2000.0f64..2000.0, n in -2000.0f64..2000.0, u in -50.0f64..200.0) {
            prop_assume!(e.abs() + n.abs() > 1.0);
            let s = site();
            let uav = enu_to_geodetic(&Enu { east: e, north: n, up: u }, &s.position);
            let p = predict_rsrp(&s, &AntennaPattern::stand_in(), &uav).unwrap();
            let c = p.components;
            prop_assert!((c.tx_dbm + c.gain_h_db + c.gain_v_db - c.fspl_db - p.rsrp_dbm).abs() <= 1e-12);
        }

        #[test]
        fn monotone_in_distance(d in 1.0f64..5000.0, extra in 0.01f64..1000.0) {
            let s = site();
            let iso = AntennaPattern::isotropic();
            let g = |d_uav_m| RelativeGeometry { d_uav_m, azimuth_deg: 10.0, elevation_deg: 3.0 };
            let near = predict_rsrp_at(&s, &iso, g(d)).unwrap();
            let far = predict_rsrp_at(&s, &iso, g(d + extra)).unwrap();
            prop_assert!(far.rsrp_dbm < near.rsrp_dbm);
        }
    }
}
