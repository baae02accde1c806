//! Flight logs: ingestion, export, partitioning, synthetic trajectories and
//! synthetic measurements.

mod csvio;
mod synth;
mod trajectory;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geo::GeoPosition;

pub use csvio::{load_flight_csv, read_flight_csv, write_flight_csv, ColumnMap, Ingested};
pub use synth::{synthesize_measurements, RankPlane, SynthConfig};
pub use trajectory::{generate_trajectory, Pattern, TrajectorySpec};

/// One timestamped measurement row. KPI fields are `None` when the device did
/// not report them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub timestamp_s: f64,
    pub position: GeoPosition,
    pub device: String,
    pub pci: Option<u32>,
    pub rsrp_dbm: Option<f64>,
    pub rsrq_db: Option<f64>,
    pub sinr_db: Option<f64>,
    pub cqi: Option<u8>,
    pub rank: Option<u8>,
    pub throughput_mbps: Option<f64>,
    /// Columns the loader did not recognise, kept verbatim.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl KpiRecord {
    /// A record with a position and no KPI values.
    pub fn at(timestamp_s: f64, position: GeoPosition, device: impl Into<String>) -> Self {
        KpiRecord {
            timestamp_s,
            position,
            device: device.into(),
            pci: None,
            rsrp_dbm: None,
            rsrq_db: None,
            sinr_db: None,
            cqi: None,
            rank: None,
            throughput_mbps: None,
            extras: BTreeMap::new(),
        }
    }

    pub fn kpi(&self, kpi: Kpi) -> Option<f64> {
        match kpi {
            Kpi::Rsrp => self.rsrp_dbm,
            Kpi::Rsrq => self.rsrq_db,
            Kpi::Sinr => self.sinr_db,
            Kpi::Cqi => self.cqi.map(f64::from),
            Kpi::Rank => self.rank.map(f64::from),
            Kpi::Throughput => self.throughput_mbps,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogMetadata {
    /// Set when every record comes from the same device.
    pub device: Option<String>,
    pub altitude_label: Option<String>,
    pub trajectory_label: Option<String>,
}

/// Time-ordered sequence of records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlightLog {
    pub records: Vec<KpiRecord>,
    pub metadata: LogMetadata,
}

impl FlightLog {
    /// Builds a log, stably sorting records by timestamp.
    pub fn from_records(mut records: Vec<KpiRecord>) -> Self {
        records.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
        let mut log = FlightLog {
            records,
            metadata: LogMetadata::default(),
        };
        log.refresh_device();
        log
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub(crate) fn refresh_device(&mut self) {
        let first = self.records.first().map(|r| r.device.clone());
        self.metadata.device = match first {
            Some(d) if self.records.iter().all(|r| r.device == d) => Some(d),
            _ => None,
        };
    }

    pub fn devices(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.records {
            if !seen.contains(&r.device) {
                seen.push(r.device.clone());
            }
        }
        seen
    }

    pub fn has_kpi(&self, kpi: Kpi) -> bool {
        self.records.iter().any(|r| r.kpi(kpi).is_some())
    }
}

/// Splits a log into one log per device, preserving record order.
pub fn partition_by_device(log: &FlightLog) -> BTreeMap<String, FlightLog> {
    let mut parts: BTreeMap<String, FlightLog> = BTreeMap::new();
    for r in &log.records {
        parts
            .entry(r.device.clone())
            .or_insert_with(|| FlightLog {
                records: Vec::new(),
                metadata: LogMetadata {
                    device: Some(r.device.clone()),
                    ..log.metadata.clone()
                },
            })
            .records
            .push(r.clone());
    }
    parts
}

/// Measured quantities that can be compared, mapped, or flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kpi {
    Rsrp,
    Rsrq,
    Sinr,
    Cqi,
    Rank,
    Throughput,
}

impl Kpi {
    pub const ALL: [Kpi; 6] = [
        Kpi::Rsrp,
        Kpi::Rsrq,
        Kpi::Sinr,
        Kpi::Cqi,
        Kpi::Rank,
        Kpi::Throughput,
    ];

    pub fn is_integer(self) -> bool {
        matches!(self, Kpi::Cqi | Kpi::Rank)
    }

    pub fn column(self) -> &'static str {
        match self {
            Kpi::Rsrp => "rsrp_dbm",
            Kpi::Rsrq => "rsrq_db",
            Kpi::Sinr => "sinr_db",
            Kpi::Cqi => "cqi",
            Kpi::Rank => "rank",
            Kpi::Throughput => "throughput_mbps",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Kpi::Rsrp => "dBm",
            Kpi::Rsrq | Kpi::Sinr => "dB",
            Kpi::Cqi | Kpi::Rank => "",
            Kpi::Throughput => "Mbps",
        }
    }
}

impl fmt::Display for Kpi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Kpi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = match s.to_ascii_lowercase().as_str() {
            "rsrp" | "rsrp_dbm" => Kpi::Rsrp,
            "rsrq" | "rsrq_db" => Kpi::Rsrq,
            "sinr" | "sinr_db" => Kpi::Sinr,
            "cqi" => Kpi::Cqi,
            "rank" => Kpi::Rank,
            "throughput" | "throughput_mbps" => Kpi::Throughput,
            _ => return Err(Error::UnknownKpi(s.to_string())),
        };
        Ok(k)
    }
}
