// Loading pattern cuts from CSV and reading interpolated gains.

use aerokpi::antenna::{load_pattern, AntennaPattern};

const AZIMUTH: &str = "angle_deg,gain_db
# coarse sector cut
-180,-25
-90,-8
0,16
90,-8
180,-25
";

const ELEVATION: &str = "angle_deg,gain_db
-30,-20
-10,-3
0,0
10,-3
30,-20
";

pub fn run() -> Result<AntennaPattern, aerokpi::Error> {
    let p = load_pattern(AZIMUTH.as_bytes(), ELEVATION.as_bytes())?;
    for az in [-170.0, -45.0, 0.0, 45.0, 135.0, 179.0] {
        println!("G_H({az:>6.1}) = {:>7.2} dB", p.gain_h(az));
    }
    for el in [-60.0, -5.0, 0.0, 5.0, 60.0] {
        println!("G_V({el:>6.1}) = {:>7.2} dB", p.gain_v(el));
    }

    let sector = AntennaPattern::parabolic_sector(17.0, 65.0, 10.0, 30.0, 5.0)?;
    let mut csv = Vec::new();
    AntennaPattern::write_csv(&sector.azimuth_cut, &mut csv)?;
    println!("parabolic sector azimuth cut: {} samples", sector.azimuth_cut.len());
    let again = load_pattern(csv.as_slice(), ELEVATION.as_bytes())?;
    assert_eq!(again.gain_h(32.5), sector.gain_h(32.5));
    Ok(p)
}

#[allow(dead_code)]
fn main() -> Result<(), aerokpi::Error> {
    run().map(|_| ())
}
