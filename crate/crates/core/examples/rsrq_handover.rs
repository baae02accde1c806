// Flags poor RSRQ stretches in a log, e.g. right before a handover.

use aerokpi::data::{load_flight_csv, FlightLog};
use aerokpi::eval::rsrq_poor_flags;

const LOG: &str = "timestamp,lat,lon,alt_m,device,pci,rsrp_dbm,rsrq_db
0,35.72750,-78.69000,42,S21,1,-82.0,-10.5
1,35.72750,-78.68990,42,S21,1,-86.5,-12.0
2,35.72750,-78.68980,42,S21,1,-90.1,-14.9
3,35.72750,-78.68970,42,S21,1,-93.4,-15.0
4,35.72750,-78.68960,42,S21,1,-97.2,-16.8
5,35.72750,-78.68950,42,S21,1,-99.0,-18.2
6,35.72750,-78.68940,42,S21,2,-88.3,-11.1
7,35.72750,-78.68930,42,S21,2,-86.0,-10.2
";

pub fn run() -> Result<Vec<(f64, bool)>, aerokpi::Error> {
    let log: FlightLog = load_flight_csv(LOG.as_bytes())?.log;
    let flags = rsrq_poor_flags(&log)?;
    let mut prev_pci = None;
    for (r, (t, poor)) in log.records.iter().zip(&flags) {
        if prev_pci.is_some() && prev_pci != r.pci {
            println!("t={t:>3}  handover to PCI {}", r.pci.unwrap());
        }
        prev_pci = r.pci;
        println!("t={t:>3}  RSRQ {:>6.1} dB {}", r.rsrq_db.unwrap(), if *poor { "POOR" } else { "" });
    }
    Ok(flags)
}

#[allow(dead_code)]
fn main() -> Result<(), aerokpi::Error> {
    run().map(|_| ())
}
