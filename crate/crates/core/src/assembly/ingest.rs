//! ADS-B state-vector CSV in the OpenSky export layout.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AssemblyError, Result, StateVector};
use crate::codec::{icao_from_hex, icao_to_hex};
use crate::trajectory::KM_PER_NM;

const FT_PER_M: f64 = 1.0 / 0.3048;
const KN_PER_MPS: f64 = 3600.0 / (KM_PER_NM * 1000.0);

const COLUMNS: [&str; 9] = [
    "time",
    "icao24",
    "callsign",
    "lat",
    "lon",
    "baroaltitude",
    "velocity",
    "vertrate",
    "onground",
];

/// Units of the altitude and speed columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltitudeUnit {
    /// Feet, knots and ft/min, stored as is.
    #[default]
    Feet,
    /// Metres and m/s as in the OpenSky export; converted on read.
    Metric,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows: u64,
    pub accepted: u64,
    /// Rows with an empty latitude or longitude.
    pub no_position: u64,
    pub malformed: u64,
}

fn opt_f64(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| format!("`{s}` is not a number"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" | "" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

/// Read state vectors. Rows without a position are skipped and counted; so
/// are rows that fail to parse or validate (logged at warn level).
pub fn read_state_vectors<R: Read>(reader: R, unit: AltitudeUnit) -> Result<(Vec<StateVector>, IngestSummary)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(AssemblyError::MissingColumn(name))?;
    }
    let (alt_k, vel_k, vr_k) = match unit {
        AltitudeUnit::Feet => (1.0, 1.0, 1.0),
        AltitudeUnit::Metric => (FT_PER_M, KN_PER_MPS, FT_PER_M * 60.0),
    };
    let mut out = Vec::new();
    let mut summary = IngestSummary::default();
    for record in rdr.records() {
        let record = record?;
        summary.rows += 1;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let parsed = (|| -> std::result::Result<Option<StateVector>, String> {
            let (Some(lat), Some(lon)) = (opt_f64(field(3))?, opt_f64(field(4))?) else {
                return Ok(None);
            };
            let t = opt_f64(field(0))?.ok_or("missing time")?;
            let icao24 = icao_from_hex(field(1)).ok_or_else(|| format!("bad icao24 `{}`", field(1)))?;
            let callsign = Some(field(2).trim().to_string()).filter(|c| !c.is_empty());
            let v = StateVector {
                t,
                icao24,
                callsign,
                lat,
                lon,
                baro_altitude_ft: opt_f64(field(5))?.map(|a| a * alt_k),
                velocity_kn: opt_f64(field(6))?.map(|v| v * vel_k),
                vertical_rate_fpm: opt_f64(field(7))?.map(|v| v * vr_k),
                on_ground: parse_bool(field(8))?,
            };
            v.validate()?;
            Ok(Some(v))
        })();
        match parsed {
            Ok(Some(v)) => {
                summary.accepted += 1;
                out.push(v);
            }
            Ok(None) => summary.no_position += 1,
            Err(reason) => {
                log::warn!("{}", AssemblyError::InvalidRecord { line, reason });
                summary.malformed += 1;
            }
        }
    }
    Ok((out, summary))
}

/// Write state vectors in feet/knots units.
pub fn write_state_vectors<W: Write>(writer: W, vectors: &[StateVector]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(COLUMNS)?;
    let num = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for v in vectors {
        w.write_record([
            v.t.to_string(),
            icao_to_hex(v.icao24),
            v.callsign.clone().unwrap_or_default(),
            v.lat.to_string(),
            v.lon.to_string(),
            num(v.baro_altitude_ft),
            num(v.velocity_kn),
            num(v.vertical_rate_fpm),
            v.on_ground.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
