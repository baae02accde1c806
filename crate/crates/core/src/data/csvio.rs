use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{FlightLog, KpiRecord};
use crate::error::{Error, Result};
use crate::geo::GeoPosition;

const REQUIRED: [&str; 5] = ["timestamp", "lat", "lon", "alt_m", "device"];
const OPTIONAL: [&str; 7] = [
    "pci",
    "rsrp_dbm",
    "rsrq_db",
    "sinr_db",
    "cqi",
    "rank",
    "throughput_mbps",
];

/// Renames external column headers to canonical ones before ingestion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap(pub BTreeMap<String, String>);

impl ColumnMap {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let map: ColumnMap = serde_json::from_str(s)?;
        for canonical in map.0.values() {
            if !REQUIRED.contains(&canonical.as_str()) && !OPTIONAL.contains(&canonical.as_str()) {
                return Err(Error::Config(format!(
                    "column map targets unknown canonical column `{canonical}`"
                )));
            }
        }
        Ok(map)
    }

    fn canonical<'a>(&'a self, header: &'a str) -> &'a str {
        self.0.get(header).map(String::as_str).unwrap_or(header)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub log: FlightLog,
    /// Records that arrived out of time order and were moved by the sort.
    pub out_of_order: usize,
}

pub fn load_flight_csv<R: Read>(reader: R) -> Result<Ingested> {
    read_flight_csv(reader, &ColumnMap::default())
}

#[derive(Clone, Copy)]
enum Field {
    Timestamp,
    Lat,
    Lon,
    Alt,
    Device,
    Pci,
    Rsrp,
    Rsrq,
    Sinr,
    Cqi,
    Rank,
    Throughput,
    Extra(usize),
}

fn bad(row: usize, column: &str, value: &str) -> Error {
    Error::Parse {
        row,
        message: format!("column `{column}`: cannot parse `{value}`"),
    }
}

fn opt_f64(row: usize, column: &str, v: &str) -> Result<Option<f64>> {
    if v.is_empty() {
        return Ok(None);
    }
    let x: f64 = v.parse().map_err(|_| bad(row, column, v))?;
    if !x.is_finite() {
        return Err(bad(row, column, v));
    }
    Ok(Some(x))
}

fn opt_int<T: std::str::FromStr>(row: usize, column: &str, v: &str) -> Result<Option<T>> {
    if v.is_empty() {
        return Ok(None);
    }
    v.parse().map(Some).map_err(|_| bad(row, column, v))
}

/// Reads a flight log. `row` numbers in errors are file line numbers, the
/// header being line 1.
pub fn read_flight_csv<R: Read>(reader: R, map: &ColumnMap) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();

    let mut fields = Vec::with_capacity(headers.len());
    let mut extra_names = Vec::new();
    let mut seen = BTreeSet::new();
    for h in headers.iter() {
        let name = map.canonical(h);
        if !seen.insert(name.to_string()) {
            return Err(Error::Parse {
                row: 1,
                message: format!("duplicate column `{name}`"),
            });
        }
        let f = match name {
            "timestamp" => Field::Timestamp,
            "lat" => Field::Lat,
            "lon" => Field::Lon,
            "alt_m" => Field::Alt,
            "device" => Field::Device,
            "pci" => Field::Pci,
            "rsrp_dbm" => Field::Rsrp,
            "rsrq_db" => Field::Rsrq,
            "sinr_db" => Field::Sinr,
            "cqi" => Field::Cqi,
            "rank" => Field::Rank,
            "throughput_mbps" => Field::Throughput,
            other => {
                extra_names.push(other.to_string());
                Field::Extra(extra_names.len() - 1)
            }
        };
        fields.push(f);
    }
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|c| !seen.contains(**c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Schema { missing });
    }

    let mut records = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let mut r = KpiRecord::at(
            0.0,
            GeoPosition {
                latitude_deg: 0.0,
                longitude_deg: 0.0,
                altitude_m: 0.0,
            },
            String::new(),
        );
        let mut required = [None::<f64>; 4];
        for (value, (field, header)) in rec.iter().zip(fields.iter().zip(headers.iter())) {
            let col = map.canonical(header);
            match *field {
                Field::Timestamp => required[0] = opt_f64(row, col, value)?,
                Field::Lat => required[1] = opt_f64(row, col, value)?,
                Field::Lon => required[2] = opt_f64(row, col, value)?,
                Field::Alt => required[3] = opt_f64(row, col, value)?,
                Field::Device => r.device = value.to_string(),
                Field::Pci => r.pci = opt_int(row, col, value)?,
                Field::Rsrp => r.rsrp_dbm = opt_f64(row, col, value)?,
                Field::Rsrq => r.rsrq_db = opt_f64(row, col, value)?,
                Field::Sinr => r.sinr_db = opt_f64(row, col, value)?,
                Field::Cqi => r.cqi = opt_int(row, col, value)?,
                Field::Rank => r.rank = opt_int(row, col, value)?,
                Field::Throughput => r.throughput_mbps = opt_f64(row, col, value)?,
                Field::Extra(i) => {
                    if !value.is_empty() {
                        r.extras.insert(extra_names[i].clone(), value.to_string());
                    }
                }
            }
        }
        let [Some(t), Some(lat), Some(lon), Some(alt)] = required else {
            return Err(Error::Parse {
                row,
                message: "timestamp, lat, lon and alt_m must be present".into(),
            });
        };
        if r.device.is_empty() {
            return Err(Error::Parse {
                row,
                message: "device is empty".into(),
            });
        }
        r.timestamp_s = t;
        r.position = GeoPosition::new(lat, lon, alt).map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if r.cqi.is_some_and(|c| c > 15) {
            return Err(Error::Parse {
                row,
                message: "cqi outside 0..=15".into(),
            });
        }
        if r.rank == Some(0) {
            return Err(Error::Parse {
                row,
                message: "rank must be >= 1".into(),
            });
        }
        records.push(r);
    }

    let mut out_of_order = 0;
    let mut latest = f64::NEG_INFINITY;
    for r in &records {
        if r.timestamp_s < latest {
            out_of_order += 1;
        } else {
            latest = r.timestamp_s;
        }
    }
    Ok(Ingested {
        log: FlightLog::from_records(records),
        out_of_order,
    })
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes every canonical column followed by the union of extra columns in
/// name order. Missing values are empty cells.
pub fn write_flight_csv<W: Write>(log: &FlightLog, w: W) -> Result<()> {
    let extras: BTreeSet<&String> = log.records.iter().flat_map(|r| r.extras.keys()).collect();
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = REQUIRED.to_vec();
    header.extend(OPTIONAL);
    header.extend(extras.iter().map(|s| s.as_str()));
    wtr.write_record(&header)?;
    for r in &log.records {
        let mut row = vec![
            r.timestamp_s.to_string(),
            r.position.latitude_deg.to_string(),
            r.position.longitude_deg.to_string(),
            r.position.altitude_m.to_string(),
            r.device.clone(),
            cell(r.pci),
            cell(r.rsrp_dbm),
            cell(r.rsrq_db),
            cell(r.sinr_db),
            cell(r.cqi),
            cell(r.rank),
            cell(r.throughput_mbps),
        ];
        row.extend(extras.iter().map(|k| r.extras.get(*k).cloned().unwrap_or_default()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
