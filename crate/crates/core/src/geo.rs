//! Geodetic positions, the base-station site, and UAV geometry relative to the
//! antenna boresight.
//!
//! Positions are converted to a local East-North-Up frame on the WGS-84
//! ellipsoid. Altitudes of the UAV and the antenna are taken on the same datum
//! with no geoid correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// WGS-84 semi-major axis, meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

const MIN_SEPARATION_M: f64 = 0.01;

fn wgs84_e2() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPosition {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl GeoPosition {
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Result<Self> {
        let p = GeoPosition {
            latitude_deg,
            longitude_deg,
            altitude_m,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::domain(format!(
                "latitude {} outside [-90, 90]",
                self.latitude_deg
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::domain(format!(
                "longitude {} outside [-180, 180]",
                self.longitude_deg
            )));
        }
        if !self.altitude_m.is_finite() {
            return Err(Error::domain("altitude is not finite"));
        }
        Ok(())
    }

    /// Earth-centred, earth-fixed coordinates in meters.
    pub fn to_ecef(&self) -> [f64; 3] {
        let lat = self.latitude_deg.to_radians();
        let lon = self.longitude_deg.to_radians();
        let (slat, clat) = lat.sin_cos();
        let (slon, clon) = lon.sin_cos();
        let e2 = wgs84_e2();
        let n = WGS84_A / (1.0 - e2 * slat * slat).sqrt();
        let h = self.altitude_m;
        [
            (n + h) * clat * clon,
            (n + h) * clat * slon,
            (n * (1.0 - e2) + h) * slat,
        ]
    }

    /// Inverse of [`GeoPosition::to_ecef`], iterating on latitude until it
    /// settles below 1e-13 rad.
    pub fn from_ecef(ecef: [f64; 3]) -> Self {
        let [x, y, z] = ecef;
        let e2 = wgs84_e2();
        let lon = y.atan2(x);
        let p = x.hypot(y);
        let mut lat = z.atan2(p * (1.0 - e2));
        let mut h = 0.0;
        for _ in 0..16 {
            let slat = lat.sin();
            let n = WGS84_A / (1.0 - e2 * slat * slat).sqrt();
            h = if lat.cos().abs() > 1e-10 {
                p / lat.cos() - n
            } else {
                z.abs() - n * (1.0 - e2)
            };
            let next = z.atan2(p * (1.0 - e2 * n / (n + h)));
            let done = (next - lat).abs() < 1e-13;
            lat = next;
            if done {
                break;
            }
        }
        GeoPosition {
            latitude_deg: lat.to_degrees(),
            longitude_deg: lon.to_degrees(),
            altitude_m: h,
        }
    }
}

/// Local East-North-Up offsets, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enu {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl Enu {
    pub fn norm(&self) -> f64 {
        (self.east * self.east + self.north * self.north + self.up * self.up).sqrt()
    }

    pub fn horizontal(&self) -> f64 {
        self.east.hypot(self.north)
    }
}

/// East-North-Up offsets of `p` relative to `origin`.
pub fn geodetic_to_enu(p: &GeoPosition, origin: &GeoPosition) -> Enu {
    let a = p.to_ecef();
    let o = origin.to_ecef();
    let d = [a[0] - o[0], a[1] - o[1], a[2] - o[2]];
    let lat = origin.latitude_deg.to_radians();
    let lon = origin.longitude_deg.to_radians();
    let (slat, clat) = lat.sin_cos();
    let (slon, clon) = lon.sin_cos();
    Enu {
        east: -slon * d[0] + clon * d[1],
        north: -slat * clon * d[0] - slat * slon * d[1] + clat * d[2],
        up: clat * clon * d[0] + clat * slon * d[1] + slat * d[2],
    }
}

/// Geodetic position of a local ENU offset from `origin`.
pub fn enu_to_geodetic(enu: &Enu, origin: &GeoPosition) -> GeoPosition {
    let o = origin.to_ecef();
    let lat = origin.latitude_deg.to_radians();
    let lon = origin.longitude_deg.to_radians();
    let (slat, clat) = lat.sin_cos();
    let (slon, clon) = lon.sin_cos();
    let dx = -slon * enu.east - slat * clon * enu.north + clat * clon * enu.up;
    let dy = clon * enu.east - slat * slon * enu.north + clat * slon * enu.up;
    let dz = clat * enu.north + slat * enu.up;
    GeoPosition::from_ecef([o[0] + dx, o[1] + dy, o[2] + dz])
}

/// Wraps an angle in degrees into (-180, 180].
pub fn wrap_deg(angle: f64) -> f64 {
    let w = (angle + 180.0).rem_euclid(360.0) - 180.0;
    if w <= -180.0 {
        w + 360.0
    } else {
        w
    }
}

/// Base-station site: antenna phase centre, orientation and carrier setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsSiteConfig {
    pub position: GeoPosition,
    /// Degrees clockwise from true north.
    pub boresight_azimuth_deg: f64,
    /// Positive tilts the boresight below the horizon.
    pub mechanical_downtilt_deg: f64,
    pub carrier_frequency_hz: f64,
    /// Total transmit power P_T in watts.
    pub tx_power_w: f64,
    pub n_prb: u32,
    pub n_sc: u32,
}

impl BsSiteConfig {
    /// 5 W, 273 PRBs of 12 subcarriers at 3.4 GHz; a 100 MHz NR carrier at
    /// 30 kHz subcarrier spacing.
    pub fn nr_default(position: GeoPosition, boresight_azimuth_deg: f64) -> Self {
        BsSiteConfig {
            position,
            boresight_azimuth_deg,
            mechanical_downtilt_deg: 0.0,
            carrier_frequency_hz: 3.4e9,
            tx_power_w: 5.0,
            n_prb: 273,
            n_sc: 12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.position.validate()?;
        if !(self.carrier_frequency_hz > 0.0 && self.carrier_frequency_hz.is_finite()) {
            return Err(Error::Config("carrier frequency must be > 0".into()));
        }
        if !(self.tx_power_w > 0.0 && self.tx_power_w.is_finite()) {
            return Err(Error::Config("tx power must be > 0".into()));
        }
        if self.n_prb == 0 || self.n_sc == 0 {
            return Err(Error::Config("n_prb and n_sc must be >= 1".into()));
        }
        if !self.boresight_azimuth_deg.is_finite() || !self.mechanical_downtilt_deg.is_finite() {
            return Err(Error::Config("antenna orientation must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: SiteDocument = serde_json::from_str(s)?;
        doc.into_config()
    }

    pub fn to_json_string(&self) -> String {
        let doc = SiteDocument::from(self);
        serde_json::to_string_pretty(&doc).expect("site document serializes")
    }
}

fn default_carrier() -> f64 {
    3.4e9
}
fn default_tx_power() -> f64 {
    5.0
}
fn default_n_prb() -> u32 {
    273
}
fn default_n_sc() -> u32 {
    12
}

/// On-disk site description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDocument {
    pub lat: f64,
    pub lon: f64,
    pub alt_m: f64,
    pub boresight_azimuth_deg: f64,
    #[serde(default)]
    pub downtilt_deg: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default = "default_tx_power")]
    pub tx_power_w: f64,
    #[serde(default = "default_n_prb")]
    pub n_prb: u32,
    #[serde(default = "default_n_sc")]
    pub n_sc: u32,
}

impl SiteDocument {
    pub fn into_config(self) -> Result<BsSiteConfig> {
        let cfg = BsSiteConfig {
            position: GeoPosition {
                latitude_deg: self.lat,
                longitude_deg: self.lon,
                altitude_m: self.alt_m,
            },
            boresight_azimuth_deg: self.boresight_azimuth_deg,
            mechanical_downtilt_deg: self.downtilt_deg,
            carrier_frequency_hz: self.carrier_hz,
            tx_power_w: self.tx_power_w,
            n_prb: self.n_prb,
            n_sc: self.n_sc,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&BsSiteConfig> for SiteDocument {
    fn from(c: &BsSiteConfig) -> Self {
        SiteDocument {
            lat: c.position.latitude_deg,
            lon: c.position.longitude_deg,
            alt_m: c.position.altitude_m,
            boresight_azimuth_deg: c.boresight_azimuth_deg,
            downtilt_deg: c.mechanical_downtilt_deg,
            carrier_hz: c.carrier_frequency_hz,
            tx_power_w: c.tx_power_w,
            n_prb: c.n_prb,
            n_sc: c.n_sc,
        }
    }
}

/// Distance and angles of the UAV as seen from the antenna.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeGeometry {
    /// 3D distance, meters.
    pub d_uav_m: f64,
    /// Horizontal angle from boresight, degrees in (-180, 180].
    pub azimuth_deg: f64,
    /// Angle above the tilted boresight plane, degrees in [-90, 90].
    pub elevation_deg: f64,
}

/// Geometry of `uav` relative to the site antenna.
///
/// Directly above or below the antenna (horizontal offset under 1 cm) the
/// azimuth is reported as 0.
pub fn relative_geometry(uav: &GeoPosition, site: &BsSiteConfig) -> Result<RelativeGeometry> {
    let enu = geodetic_to_enu(uav, &site.position);
    let d = enu.norm();
    if !(d >= MIN_SEPARATION_M) {
        return Err(Error::DegenerateGeometry { separation_m: d });
    }
    let horizontal = enu.horizontal();
    let (azimuth, raw_elevation) = if horizontal < MIN_SEPARATION_M {
        (0.0, 90.0_f64.copysign(enu.up))
    } else {
        let bearing = enu.east.atan2(enu.north).to_degrees();
        (
            wrap_deg(bearing - site.boresight_azimuth_deg),
            enu.up.atan2(horizontal).to_degrees(),
        )
    };
    let elevation = (raw_elevation + site.mechanical_downtilt_deg).clamp(-90.0, 90.0);
    Ok(RelativeGeometry {
        d_uav_m: d,
        azimuth_deg: azimuth,
        elevation_deg: elevation,
    })
}

/// Carrier wavelength c / f in meters.
pub fn wavelength(site: &BsSiteConfig) -> f64 {
    SPEED_OF_LIGHT / site.carrier_frequency_hz
}
