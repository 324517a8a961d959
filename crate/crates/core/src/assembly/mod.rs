//! Flight assembly: split ADS-C fixes into flights, join ADS-B state vectors
//! by airframe, fuse both streams and resample.

pub mod ingest;

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{AdscReport, RawFrame};
use crate::geo::{gc_interpolate, GeoError};
use crate::trajectory::{implied_speed_kn, FusedSample, FusedTrajectory, Provenance};

pub use ingest::{read_state_vectors, write_state_vectors, AltitudeUnit, IngestSummary};

pub const DEFAULT_GAP_THRESHOLD_S: f64 = 14_400.0;
pub const DEFAULT_MATCH_PAD_S: f64 = 10_800.0;
pub const DEFAULT_TIE_WINDOW_S: f64 = 10.0;
pub const DEFAULT_SPEED_GATE_KN: f64 = 700.0;
pub const DEFAULT_RESAMPLE_DT_S: f64 = 60.0;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("both ADS-C and ADS-B inputs are empty")]
    BothSourcesEmpty,
    #[error("resampling needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("resample step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("line {line}: {reason}")]
    InvalidRecord { line: u64, reason: String },
    #[error("missing CSV column `{0}`")]
    MissingColumn(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

pub type Result<T> = std::result::Result<T, AssemblyError>;

/// One ADS-B sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub t: f64,
    pub icao24: u32,
    pub callsign: Option<String>,
    pub lat: f64,
    pub lon: f64,
    pub baro_altitude_ft: Option<f64>,
    pub velocity_kn: Option<f64>,
    pub vertical_rate_fpm: Option<f64>,
    pub on_ground: bool,
}

impl StateVector {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.t > 0.0) {
            return Err(format!("time {} must be positive", self.t));
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(format!("position ({}, {}) out of range", self.lat, self.lon));
        }
        if self.icao24 > 0xFF_FFFF {
            return Err(format!("icao24 {:#x} wider than 24 bits", self.icao24));
        }
        Ok(())
    }

    fn sample(&self) -> FusedSample {
        FusedSample {
            t: self.t,
            lat: self.lat,
            lon: self.lon,
            alt_ft: self.baro_altitude_ft,
            provenance: Provenance::Adsb,
        }
    }
}

/// A positioned ADS-C group with a resolved absolute time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdscFix {
    pub t: f64,
    pub icao24: Option<u32>,
    pub callsign: Option<String>,
    pub lat: f64,
    pub lon: f64,
    pub alt_ft: f64,
    pub source_tag: u8,
    pub atsu: String,
}

impl AdscFix {
    fn sample(&self) -> FusedSample {
        FusedSample {
            t: self.t,
            lat: self.lat,
            lon: self.lon,
            alt_ft: Some(self.alt_ft),
            provenance: Provenance::Adsc,
        }
    }
}

/// Absolute time of a report whose position time is given as seconds past
/// the hour. Picks the candidate hour nearest to `received_at`.
pub fn reconcile_time(received_at: f64, time_of_report: u16) -> f64 {
    let hour = (received_at / 3600.0).floor() * 3600.0;
    let tor = f64::from(time_of_report);
    [hour - 3600.0 + tor, hour + tor, hour + 3600.0 + tor]
        .into_iter()
        .min_by(|a, b| (a - received_at).abs().total_cmp(&(b - received_at).abs()))
        .expect("three candidates")
}

/// Every positioned group of `report` as a fix. Identity comes from the
/// report's own tag 12/17 groups, falling back to the sidecar values.
pub fn extract_fixes(
    frame: &RawFrame,
    report: &AdscReport,
    sidecar_icao24: Option<u32>,
    sidecar_callsign: Option<&str>,
) -> Vec<AdscFix> {
    let icao24 = report.icao24().or(sidecar_icao24);
    let callsign = report
        .callsign()
        .or(sidecar_callsign)
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty());
    report
        .positions()
        .map(|(tag, b)| AdscFix {
            t: reconcile_time(frame.received_at, b.time_of_report),
            icao24,
            callsign: callsign.clone(),
            lat: b.latitude,
            lon: b.longitude,
            alt_ft: b.altitude_ft,
            source_tag: tag.number(),
            atsu: frame.atsu.clone(),
        })
        .collect()
}

/// Fill missing callsigns from the nearest fix of the same airframe within
/// `max_gap_s`, and missing airframes from the nearest fix with the same
/// callsign.
pub fn propagate_identity(fixes: &mut [AdscFix], max_gap_s: f64) {
    let mut by_icao: HashMap<u32, Vec<(f64, String)>> = HashMap::new();
    let mut by_call: HashMap<String, Vec<(f64, u32)>> = HashMap::new();
    for f in fixes.iter() {
        if let (Some(i), Some(c)) = (f.icao24, &f.callsign) {
            by_icao.entry(i).or_default().push((f.t, c.clone()));
            by_call.entry(c.clone()).or_default().push((f.t, i));
        }
    }
    fn nearest<T: Clone>(v: &[(f64, T)], t: f64, max_gap: f64) -> Option<T> {
        v.iter()
            .map(|(ft, x)| ((ft - t).abs(), x))
            .filter(|(d, _)| *d <= max_gap)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, x)| x.clone())
    }
    for f in fixes.iter_mut() {
        match (f.icao24, &f.callsign) {
            (Some(i), None) => {
                f.callsign = by_icao.get(&i).and_then(|v| nearest(v, f.t, max_gap_s));
            }
            (None, Some(c)) => {
                f.icao24 = by_call.get(c).and_then(|v| nearest(v, f.t, max_gap_s));
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSegment {
    /// `CALLSIGN-YYYYMMDD-N`, N counting flights of that callsign on the
    /// date of the first fix.
    pub flight_id: String,
    pub callsign: String,
    pub icao24: Option<u32>,
    pub fixes: Vec<AdscFix>,
    /// Fewer than two fixes.
    pub degenerate: bool,
}

impl FlightSegment {
    pub fn start(&self) -> f64 {
        self.fixes[0].t
    }

    pub fn end(&self) -> f64 {
        self.fixes[self.fixes.len() - 1].t
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Segmentation {
    pub segments: Vec<FlightSegment>,
    /// Fixes without a callsign.
    pub rejects: Vec<AdscFix>,
}

/// Partition fixes into flights.
///
/// Fixes are grouped by airframe (fixes without an icao24 form one shared
/// group), then scanned in time order; a new flight starts on a callsign
/// change or a gap above `gap_threshold_s`.
pub fn segment_flights(fixes: &[AdscFix], gap_threshold_s: f64) -> Segmentation {
    let mut out = Segmentation::default();
    let mut streams: BTreeMap<Option<u32>, Vec<&AdscFix>> = BTreeMap::new();
    for f in fixes {
        if f.callsign.is_none() {
            out.rejects.push(f.clone());
        } else {
            streams.entry(f.icao24).or_default().push(f);
        }
    }
    let mut raw: Vec<(String, Option<u32>, Vec<AdscFix>)> = Vec::new();
    for (icao, mut stream) in streams {
        stream.sort_by(|a, b| a.t.total_cmp(&b.t));
        let mut current: Vec<AdscFix> = Vec::new();
        for f in stream {
            let callsign = f.callsign.as_deref().expect("filtered above");
            if let Some(last) = current.last() {
                if last.callsign.as_deref() != Some(callsign) || f.t - last.t > gap_threshold_s {
                    let done = std::mem::take(&mut current);
                    raw.push((done[0].callsign.clone().unwrap(), icao, done));
                }
            }
            current.push(f.clone());
        }
        if !current.is_empty() {
            raw.push((current[0].callsign.clone().unwrap(), icao, current));
        }
    }
    raw.sort_by(|a, b| {
        a.2[0]
            .t
            .total_cmp(&b.2[0].t)
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    let mut ordinals: HashMap<(String, String), u32> = HashMap::new();
    for (callsign, icao24, fixes) in raw {
        let date = DateTime::<Utc>::from_timestamp(fixes[0].t.floor() as i64, 0)
            .map_or_else(|| "00000000".to_string(), |d| d.format("%Y%m%d").to_string());
        let n = ordinals.entry((callsign.clone(), date.clone())).or_insert(0);
        *n += 1;
        let icao24 = icao24.or_else(|| fixes.iter().find_map(|f| f.icao24));
        out.segments.push(FlightSegment {
            flight_id: format!("{callsign}-{date}-{n}"),
            callsign,
            icao24,
            degenerate: fixes.len() < 2,
            fixes,
        });
    }
    out
}

/// State vectors of the segment's airframe inside the padded time window
/// (closed interval).
pub fn match_adsb(segment: &FlightSegment, vectors: &[StateVector], pad_s: f64) -> Vec<StateVector> {
    let Some(icao) = segment.icao24 else {
        log::warn!("flight {} has no icao24; skipping ADS-B join", segment.flight_id);
        return Vec::new();
    };
    let (lo, hi) = (segment.start() - pad_s, segment.end() + pad_s);
    vectors
        .iter()
        .filter(|v| v.icao24 == icao && v.t >= lo && v.t <= hi)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Same timestamp as an earlier-kept sample.
    Duplicate,
    /// ADS-C fix within the tie window of an ADS-B sample.
    Superseded,
    SpeedGate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejected {
    pub sample: FusedSample,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub tie_window_s: f64,
    pub speed_gate_kn: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            tie_window_s: DEFAULT_TIE_WINDOW_S,
            speed_gate_kn: DEFAULT_SPEED_GATE_KN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FusionResult {
    pub trajectory: FusedTrajectory,
    pub rejected: Vec<Rejected>,
}

impl FusionResult {
    pub fn rejected_count(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|r| r.reason == reason).count()
    }
}

/// Merge a flight's ADS-C fixes with its ADS-B state vectors.
pub fn fuse(segment: &FlightSegment, adsb: &[StateVector], config: &FusionConfig) -> Result<FusionResult> {
    let samples = adsb
        .iter()
        .map(StateVector::sample)
        .chain(segment.fixes.iter().map(AdscFix::sample))
        .collect();
    fuse_samples(samples, config)
}

/// Fusion over already-tagged samples. ADS-B samples are preferred over
/// any other provenance on ties.
pub fn fuse_samples(mut samples: Vec<FusedSample>, config: &FusionConfig) -> Result<FusionResult> {
    if samples.is_empty() {
        return Err(AssemblyError::BothSourcesEmpty);
    }
    samples.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.provenance.cmp(&b.provenance)));
    let mut rejected = Vec::new();

    let mut kept: Vec<FusedSample> = Vec::with_capacity(samples.len());
    for s in samples {
        if kept.last().is_some_and(|k| k.t == s.t) {
            rejected.push(Rejected {
                sample: s,
                reason: RejectReason::Duplicate,
            });
        } else {
            kept.push(s);
        }
    }

    let adsb_times: Vec<f64> = kept
        .iter()
        .filter(|s| s.provenance == Provenance::Adsb)
        .map(|s| s.t)
        .collect();
    let near_adsb = |t: f64| {
        let i = adsb_times.partition_point(|&x| x < t - config.tie_window_s);
        adsb_times.get(i).is_some_and(|&x| x <= t + config.tie_window_s)
    };
    let (mut kept, superseded): (Vec<_>, Vec<_>) = kept
        .into_iter()
        .partition(|s| s.provenance == Provenance::Adsb || !near_adsb(s.t));
    rejected.extend(superseded.into_iter().map(|sample| Rejected {
        sample,
        reason: RejectReason::Superseded,
    }));

    speed_gate(&mut kept, config.speed_gate_kn, &mut rejected);
    Ok(FusionResult {
        trajectory: FusedTrajectory::new(kept),
        rejected,
    })
}

/// Drop samples that imply an impossible ground speed. First removes
/// samples too fast relative to both neighbours (an endpoint counts when its
/// single neighbour is itself consistent), repeated to a fixed point; then
/// drops the later sample of any pair still over the gate.
fn speed_gate(samples: &mut Vec<FusedSample>, gate_kn: f64, rejected: &mut Vec<Rejected>) {
    let fast = |a: &FusedSample, b: &FusedSample| implied_speed_kn(a, b) > gate_kn;
    loop {
        let n = samples.len();
        if n < 3 {
            break;
        }
        let drop: Vec<bool> = (0..n)
            .map(|i| {
                if i == 0 {
                    fast(&samples[0], &samples[1]) && !fast(&samples[1], &samples[2])
                } else if i == n - 1 {
                    fast(&samples[n - 2], &samples[n - 1]) && !fast(&samples[n - 3], &samples[n - 2])
                } else {
                    fast(&samples[i - 1], &samples[i]) && fast(&samples[i], &samples[i + 1])
                }
            })
            .collect();
        if !drop.contains(&true) {
            break;
        }
        let mut i = 0;
        samples.retain(|s| {
            let d = drop[i];
            i += 1;
            if d {
                rejected.push(Rejected {
                    sample: s.clone(),
                    reason: RejectReason::SpeedGate,
                });
            }
            !d
        });
    }
    let mut out: Vec<FusedSample> = Vec::with_capacity(samples.len());
    for s in samples.drain(..) {
        match out.last() {
            Some(last) if fast(last, &s) => rejected.push(Rejected {
                sample: s,
                reason: RejectReason::SpeedGate,
            }),
            _ => out.push(s),
        }
    }
    *samples = out;
}

/// Uniform resampling at `dt`: position along the great circle between the
/// bracketing samples, altitude linear in time. The first and last samples
/// are kept as they are; grid points that coincide with an input sample
/// copy it.
pub fn resample(traj: &FusedTrajectory, dt: f64) -> Result<FusedTrajectory> {
    let s = &traj.samples;
    if s.len() < 2 {
        return Err(AssemblyError::TooFewSamples(s.len()));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(AssemblyError::InvalidStep(dt));
    }
    let (t0, t_end) = (s[0].t, s[s.len() - 1].t);
    let mut out = vec![s[0].clone()];
    let mut j = 0usize;
    let mut k = 1u64;
    loop {
        let t = t0 + k as f64 * dt;
        if t >= t_end {
            break;
        }
        while s[j + 1].t < t {
            j += 1;
        }
        let (a, b) = (&s[j], &s[j + 1]);
        if b.t == t {
            out.push(b.clone());
        } else {
            let f = (t - a.t) / (b.t - a.t);
            let p = gc_interpolate(a.point(), b.point(), f)?;
            let alt_ft = match (a.alt_ft, b.alt_ft) {
                (Some(x), Some(y)) => Some(x + (y - x) * f),
                (x, y) => x.or(y),
            };
            out.push(FusedSample {
                t,
                lat: p.lat,
                lon: p.lon,
                alt_ft,
                provenance: Provenance::Interpolated,
            });
        }
        k += 1;
    }
    out.push(s[s.len() - 1].clone());
    Ok(FusedTrajectory::new(out))
}
