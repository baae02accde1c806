// Distance, azimuth and elevation of a UAV orbiting a base station.

use aerokpi::geo::{enu_to_geodetic, geodetic_to_enu, relative_geometry, BsSiteConfig, Enu, GeoPosition};

pub fn run() -> Result<Vec<(f64, f64, f64)>, aerokpi::Error> {
    let origin = GeoPosition::new(35.72747, -78.69591, 12.0)?;
    let mut site = BsSiteConfig::nr_default(origin, 90.0);
    site.mechanical_downtilt_deg = 4.0;

    let mut out = Vec::new();
    for bearing in (0..360).step_by(45) {
        let b = f64::from(bearing).to_radians();
        let enu = Enu { east: 300.0 * b.sin(), north: 300.0 * b.cos(), up: 38.0 };
        let uav = enu_to_geodetic(&enu, &origin);
        let back = geodetic_to_enu(&uav, &origin);
        let g = relative_geometry(&uav, &site)?;
        println!(
            "bearing {bearing:>3}: lat {:.6} lon {:.6} alt {:.1} | d {:.1} m az {:>7.2} el {:>6.2} | enu err {:.1e} m",
            uav.latitude_deg,
            uav.longitude_deg,
            uav.altitude_m,
            g.d_uav_m,
            g.azimuth_deg,
            g.elevation_deg,
            ((back.east - enu.east).powi(2) + (back.north - enu.north).powi(2) + (back.up - enu.up).powi(2)).sqrt()
        );
        out.push((g.d_uav_m, g.azimuth_deg, g.elevation_deg));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), aerokpi::Error> {
    run().map(|_| ())
}
