//! Frame ingest, batch decode, dataset statistics and reconstruction
//! metrics.

pub mod pipeline;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{decode_frame, icao_from_hex, icao_to_hex, AdscReport, RawFrame};
use crate::contract::{Emission, TruthTrajectory};
use crate::geo::distance_to_arc_km;
use crate::trajectory::FusedTrajectory;

pub use pipeline::{run_pipeline, PipelineSummary, RunConfig};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("input: {0}")]
    Input(String),
}

impl AnalyticsError {
    /// True when the failure comes from a bad configuration rather than bad
    /// input data.
    pub fn is_config(&self) -> bool {
        matches!(self, AnalyticsError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

/// One line of raw-frame JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Reception time, epoch seconds.
    pub ts: f64,
    pub atsu: String,
    pub payload_hex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icao24: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub callsign: Option<String>,
}

impl FrameRecord {
    pub fn from_frame(frame: &RawFrame) -> Self {
        FrameRecord {
            ts: frame.received_at,
            atsu: frame.atsu.clone(),
            payload_hex: hex::encode(&frame.payload),
            icao24: None,
            callsign: None,
        }
    }

    pub fn to_frame(&self) -> std::result::Result<RawFrame, hex::FromHexError> {
        Ok(RawFrame::new(
            hex::decode(self.payload_hex.trim())?,
            self.ts,
            self.atsu.clone(),
        ))
    }

    pub fn sidecar_icao24(&self) -> Option<u32> {
        self.icao24.as_deref().and_then(icao_from_hex)
    }
}

pub fn write_emissions<W: Write>(mut w: W, emissions: &[Emission]) -> Result<()> {
    for e in emissions {
        serde_json::to_writer(&mut w, &FrameRecord::from_frame(&e.frame))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// One successfully decoded frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub ts: f64,
    pub atsu: String,
    /// From a tag-17 group, else the sidecar.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub icao24: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub callsign: Option<String>,
    pub report: AdscReport,
}

impl DecodedRecord {
    pub fn icao24_code(&self) -> Option<u32> {
        self.icao24.as_deref().and_then(icao_from_hex)
    }

    pub fn frame_stub(&self) -> RawFrame {
        RawFrame::new(Vec::new(), self.ts, self.atsu.clone())
    }
}

/// Result of decoding one JSONL line.
pub fn decode_line(line: &str) -> std::result::Result<DecodedRecord, &'static str> {
    let rec: FrameRecord = serde_json::from_str(line).map_err(|_| "malformed_json")?;
    let frame = rec.to_frame().map_err(|_| "invalid_hex")?;
    let report = decode_frame(&frame).map_err(|e| e.class())?;
    let icao24 = report.icao24().or(rec.sidecar_icao24()).map(icao_to_hex);
    let callsign = report
        .callsign()
        .map(str::to_string)
        .or(rec.callsign.clone())
        .filter(|c| !c.trim().is_empty());
    Ok(DecodedRecord {
        ts: rec.ts,
        atsu: rec.atsu,
        icao24,
        callsign,
        report,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeSummary {
    /// Non-blank input lines.
    pub messages: u64,
    pub decoded: u64,
    /// Failures per error class.
    pub errors: BTreeMap<String, u64>,
}

impl DecodeSummary {
    pub fn error_count(&self) -> u64 {
        self.errors.values().sum()
    }

    pub fn error_rate(&self) -> f64 {
        if self.messages == 0 {
            0.0
        } else {
            self.error_count() as f64 / self.messages as f64
        }
    }

    pub fn within_ceiling(&self, ceiling: f64) -> bool {
        self.error_count() == 0 || self.error_rate() < ceiling
    }
}

/// Stream raw-frame JSONL into decoded-report JSONL.
pub fn decode_stream<R: BufRead, W: Write>(input: R, mut output: W) -> Result<DecodeSummary> {
    let mut summary = DecodeSummary::default();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        summary.messages += 1;
        match decode_line(&line) {
            Ok(rec) => {
                serde_json::to_writer(&mut output, &rec)?;
                output.write_all(b"\n")?;
                summary.decoded += 1;
            }
            Err(class) => *summary.errors.entry(class.to_string()).or_default() += 1,
        }
    }
    output.flush()?;
    Ok(summary)
}

/// Aggregate statistics over decoded reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_messages: u64,
    pub unique_aircraft: u64,
    /// Messages carrying each tag, by two-digit tag number.
    pub tag_counts: BTreeMap<String, u64>,
    /// Share of messages carrying each tag.
    pub tag_histogram: BTreeMap<String, f64>,
    pub atsu_histogram: BTreeMap<String, u64>,
    /// Messages with a position, by 1000 ft bin (lower edge).
    pub altitude_histogram: BTreeMap<i64, u64>,
    /// Messages with a position, by 1 degree cell keyed `"lat,lon"` of the
    /// south-west corner.
    pub position_density: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    total: u64,
    aircraft: BTreeSet<String>,
    tags: BTreeMap<String, u64>,
    atsu: BTreeMap<String, u64>,
    altitude: BTreeMap<i64, u64>,
    density: BTreeMap<(i64, i64), u64>,
}

impl StatsAccumulator {
    pub fn add(&mut self, rec: &DecodedRecord) {
        self.total += 1;
        if let Some(i) = &rec.icao24 {
            self.aircraft.insert(i.to_ascii_lowercase());
        }
        let tags: BTreeSet<u8> = rec.report.tags().map(|t| t.number()).collect();
        for t in tags {
            *self.tags.entry(format!("{t:02}")).or_default() += 1;
        }
        *self.atsu.entry(rec.atsu.clone()).or_default() += 1;
        if let Some((_, b)) = rec.report.positions().next() {
            let bin = (b.altitude_ft / 1000.0).floor() as i64 * 1000;
            *self.altitude.entry(bin).or_default() += 1;
            let cell = (b.latitude.floor() as i64, b.longitude.floor() as i64);
            *self.density.entry(cell).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        self.total += other.total;
        self.aircraft.extend(other.aircraft);
        for (k, v) in other.tags {
            *self.tags.entry(k).or_default() += v;
        }
        for (k, v) in other.atsu {
            *self.atsu.entry(k).or_default() += v;
        }
        for (k, v) in other.altitude {
            *self.altitude.entry(k).or_default() += v;
        }
        for (k, v) in other.density {
            *self.density.entry(k).or_default() += v;
        }
    }

    pub fn finish(self) -> DatasetStats {
        let total = self.total;
        DatasetStats {
            total_messages: total,
            unique_aircraft: self.aircraft.len() as u64,
            tag_histogram: self
                .tags
                .iter()
                .map(|(k, &v)| (k.clone(), v as f64 / total as f64))
                .collect(),
            tag_counts: self.tags,
            atsu_histogram: self.atsu,
            altitude_histogram: self.altitude,
            position_density: self
                .density
                .into_iter()
                .map(|((la, lo), v)| (format!("{la},{lo}"), v))
                .collect(),
        }
    }
}

/// Statistics over decoded-report JSONL. Lines that do not parse are
/// counted in the second return value and otherwise ignored.
pub fn stats_from_decoded<R: BufRead>(input: R) -> Result<(DatasetStats, u64)> {
    let mut acc = StatsAccumulator::default();
    let mut bad = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<DecodedRecord>(&line) {
            Ok(rec) => acc.add(&rec),
            Err(_) => bad += 1,
        }
    }
    Ok((acc.finish(), bad))
}

/// Distance from each sample to the truth path, km. The search is limited
/// to truth legs within `window_s` of the sample time.
pub fn cross_track_errors_km(traj: &FusedTrajectory, truth: &TruthTrajectory, window_s: f64) -> Vec<f64> {
    let fixes = truth.fixes();
    traj.samples
        .iter()
        .map(|s| {
            let lo = fixes.partition_point(|f| f.t < s.t - window_s).saturating_sub(1);
            let hi = fixes.partition_point(|f| f.t <= s.t + window_s).min(fixes.len() - 1);
            let p = s.point();
            (lo..hi.max(lo + 1))
                .map(|i| distance_to_arc_km(p, fixes[i].point(), fixes[i + 1].point()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Root-mean-square cross-track error of `traj` against the truth path, km.
pub fn cross_track_rms_km(traj: &FusedTrajectory, truth: &TruthTrajectory) -> f64 {
    rms(&cross_track_errors_km(traj, truth, 3600.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Tag;

    const GOLDEN: &str = r#"{"ts":1717200000.0,"atsu":"Shanwick","payload_hex":"0700000000000000fa000000"}"#;

    #[test]
    fn decode_counts_each_line_once() {
        let input = format!(
            "{GOLDEN}\n\n{}\nnot json\n{}\n",
            GOLDEN.replace("0700", "07zz"),
            GOLDEN.replace("0700000000000000fa000000", "99")
        );
        let mut out = Vec::new();
        let s = decode_stream(input.as_bytes(), &mut out).unwrap();
        assert_eq!(s.messages, 4);
        assert_eq!(s.decoded, 1);
        assert_eq!(s.errors["invalid_hex"], 1);
        assert_eq!(s.errors["malformed_json"], 1);
        assert_eq!(s.errors["unknown_tag"], 1);
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
        assert!(!s.within_ceiling(0.5));
        assert!(s.within_ceiling(0.8));
    }

    #[test]
    fn empty_input() {
        let mut out = Vec::new();
        let s = decode_stream("".as_bytes(), &mut out).unwrap();
        assert_eq!(s, DecodeSummary::default());
        assert!(out.is_empty());
        assert!(s.within_ceiling(0.0));
    }

    #[test]
    fn stats_all_basic() {
        let rec = decode_line(GOLDEN).unwrap();
        assert!(rec.report.has_tag(Tag::Basic));
        let mut acc = StatsAccumulator::default();
        for _ in 0..10 {
            acc.add(&rec);
        }
        let s = acc.finish();
        assert_eq!(s.total_messages, 10);
        assert_eq!(s.tag_histogram["07"], 1.0);
        assert_eq!(s.altitude_histogram[&0], 10);
        assert_eq!(s.position_density["0,0"], 10);
        assert_eq!(s.unique_aircraft, 0);
    }

    #[test]
    fn sidecar_identity() {
        let line = GOLDEN.replace("}", r#","icao24":"4CA2D1","callsign":"EIN105"}"#);
        let rec = decode_line(&line).unwrap();
        assert_eq!(rec.icao24.as_deref(), Some("4ca2d1"));
        assert_eq!(rec.callsign.as_deref(), Some("EIN105"));
    }
}
