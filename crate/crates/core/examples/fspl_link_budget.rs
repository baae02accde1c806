// Free-space SS-RSRP for an NR carrier: per-RE power, path loss and the
// effect of antenna gain along a radial.

use aerokpi::antenna::AntennaPattern;
use aerokpi::geo::{enu_to_geodetic, BsSiteConfig, Enu, GeoPosition};
use aerokpi::linkbudget::{fspl_db, predict_rsrp, ss_tx_power};

pub fn run() -> Result<Vec<(f64, f64, f64)>, aerokpi::Error> {
    let origin = GeoPosition::new(35.72747, -78.69591, 12.0)?;
    let site = BsSiteConfig::nr_default(origin, 90.0);
    let tx = ss_tx_power(&site);
    let lambda = aerokpi::geo::wavelength(&site);
    println!("per-RE transmit power: {:.2} dBm", tx.per_re_dbm);
    println!("wavelength: {:.4} m, FSPL(1 km): {:.2} dB", lambda, fspl_db(1000.0, lambda)?);

    let iso = AntennaPattern::isotropic();
    let sector = AntennaPattern::stand_in();
    println!("{:>8} {:>12} {:>12}", "d (m)", "iso (dBm)", "sector (dBm)");
    let mut rows = Vec::new();
    for d in [100.0, 200.0, 400.0, 800.0, 1600.0] {
        let uav = enu_to_geodetic(&Enu { east: d, north: 0.0, up: 0.0 }, &origin);
        let a = predict_rsrp(&site, &iso, &uav)?.rsrp_dbm;
        let b = predict_rsrp(&site, &sector, &uav)?.rsrp_dbm;
        println!("{d:>8.0} {a:>12.2} {b:>12.2}");
        rows.push((d, a, b));
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), aerokpi::Error> {
    run().map(|_| ())
}
