//! End-to-end batch run: decode, segment, match, fuse, resample, analytics.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_track_rms_km, decode_line, AnalyticsError, DecodeSummary, DecodedRecord, Result};
use crate::assembly::{
    extract_fixes, fuse, match_adsb, propagate_identity, read_state_vectors, resample, segment_flights, AdscFix,
    AltitudeUnit, FlightSegment, FusionConfig, IngestSummary, RejectReason, StateVector, DEFAULT_GAP_THRESHOLD_S,
    DEFAULT_MATCH_PAD_S, DEFAULT_RESAMPLE_DT_S, DEFAULT_SPEED_GATE_KN, DEFAULT_TIE_WINDOW_S,
};
use crate::codec::icao_to_hex;
use crate::contract::TruthTrajectory;
use crate::fuel::{compare_paths, ComparisonReport, FuelModelParams, FuelTable};
use crate::geo::{baseline_trajectory, country_crossings, crossing_table, Anchor, CountryPolygons};
use crate::trajectory::{FusedSample, FusedTrajectory, Provenance};

/// Settings for [`run_pipeline`], usually read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Raw-frame JSONL.
    pub adsc_input: PathBuf,
    /// State-vector CSV; none runs ADS-C only.
    pub adsb_input: Option<PathBuf>,
    /// ADS-B altitude in metres and speeds in m/s.
    pub adsb_metric: bool,
    pub output_dir: PathBuf,
    pub gap_threshold_s: f64,
    pub resample_dt_s: f64,
    pub speed_gate_kn: f64,
    pub tie_window_s: f64,
    pub match_pad_s: f64,
    /// Fuel table TOML; the shipped table when absent.
    pub fuel_params: Option<PathBuf>,
    pub fuel_family: String,
    /// GeoJSON feature collection of country boundaries.
    pub boundaries: Option<PathBuf>,
    pub boundary_code_key: Option<String>,
    /// Worker threads; 0 picks the number of CPUs.
    pub workers: usize,
    pub seed: u64,
    /// Truth trajectory JSON from the simulator, for a reconstruction report.
    pub truth: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            adsc_input: PathBuf::new(),
            adsb_input: None,
            adsb_metric: false,
            output_dir: PathBuf::from("out"),
            gap_threshold_s: DEFAULT_GAP_THRESHOLD_S,
            resample_dt_s: DEFAULT_RESAMPLE_DT_S,
            speed_gate_kn: DEFAULT_SPEED_GATE_KN,
            tie_window_s: DEFAULT_TIE_WINDOW_S,
            match_pad_s: DEFAULT_MATCH_PAD_S,
            fuel_params: None,
            fuel_family: "A350".into(),
            boundaries: None,
            boundary_code_key: None,
            workers: 0,
            seed: 0,
            truth: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AnalyticsError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("gap_threshold_s", self.gap_threshold_s),
            ("resample_dt_s", self.resample_dt_s),
            ("speed_gate_kn", self.speed_gate_kn),
            ("tie_window_s", self.tie_window_s),
            ("match_pad_s", self.match_pad_s),
        ];
        for (name, v) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(AnalyticsError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.adsc_input.as_os_str().is_empty() {
            return Err(AnalyticsError::Config("adsc_input is required".into()));
        }
        Ok(())
    }

    pub fn fusion(&self) -> FusionConfig {
        FusionConfig {
            tie_window_s: self.tie_window_s,
            speed_gate_kn: self.speed_gate_kn,
        }
    }

    fn fuel_model(&self) -> Result<FuelModelParams> {
        let table = match &self.fuel_params {
            Some(p) => {
                let text =
                    fs::read_to_string(p).map_err(|e| AnalyticsError::Config(format!("{}: {e}", p.display())))?;
                FuelTable::from_toml(&text).map_err(|e| AnalyticsError::Config(e.to_string()))?
            }
            None => FuelTable::builtin(),
        };
        table
            .by_name(&self.fuel_family)
            .or_else(|| table.by_typecode(&self.fuel_family))
            .cloned()
            .ok_or_else(|| AnalyticsError::Config(format!("no fuel parameters for `{}`", self.fuel_family)))
    }

    fn polygons(&self) -> Result<Option<CountryPolygons>> {
        self.boundaries
            .as_deref()
            .map(|p| {
                CountryPolygons::from_geojson_file(p, self.boundary_code_key.as_deref())
                    .map_err(|e| AnalyticsError::Config(format!("{}: {e}", p.display())))
            })
            .transpose()
    }

    fn truth(&self) -> Result<Option<TruthTrajectory>> {
        self.truth.as_deref().map(read_truth).transpose()
    }
}

/// Read a truth trajectory written by the simulator, re-checking its
/// invariants.
pub fn read_truth(path: &Path) -> Result<TruthTrajectory> {
    let text = fs::read_to_string(path)?;
    let t: TruthTrajectory = serde_json::from_str(&text)?;
    TruthTrajectory::new(t.fixes().to_vec(), t.waypoints().to_vec())
        .map_err(|e| AnalyticsError::Input(format!("{}: {e}", path.display())))
}

/// Decode raw-frame JSONL, keeping the decoded records in memory.
pub fn decode_file(path: &Path) -> Result<(Vec<DecodedRecord>, DecodeSummary)> {
    let file = File::open(path).map_err(|e| AnalyticsError::Input(format!("{}: {e}", path.display())))?;
    let mut summary = DecodeSummary::default();
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        summary.messages += 1;
        match decode_line(&line) {
            Ok(r) => {
                summary.decoded += 1;
                records.push(r);
            }
            Err(class) => *summary.errors.entry(class.into()).or_default() += 1,
        }
    }
    Ok((records, summary))
}

/// Read decoded-report JSONL; unparsable lines are an input error.
pub fn read_decoded<R: BufRead>(input: R) -> Result<Vec<DecodedRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| AnalyticsError::Input(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn fixes_from_records(records: &[DecodedRecord]) -> Vec<AdscFix> {
    records
        .iter()
        .flat_map(|r| extract_fixes(&r.frame_stub(), &r.report, r.icao24_code(), r.callsign.as_deref()))
        .collect()
}

pub fn read_adsb(path: &Path, metric: bool) -> Result<(Vec<StateVector>, IngestSummary)> {
    let file = File::open(path).map_err(|e| AnalyticsError::Input(format!("{}: {e}", path.display())))?;
    let unit = if metric {
        AltitudeUnit::Metric
    } else {
        AltitudeUnit::Feet
    };
    read_state_vectors(BufReader::new(file), unit).map_err(|e| AnalyticsError::Input(e.to_string()))
}

pub fn write_samples<W: Write>(mut w: W, samples: &[FusedSample]) -> Result<()> {
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: BufRead>(r: R) -> Result<FusedTrajectory> {
    let mut samples = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        samples.push(serde_json::from_str(&line).map_err(|e| AnalyticsError::Input(format!("line {}: {e}", i + 1)))?);
    }
    Ok(FusedTrajectory::new(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub fused_rms_km: f64,
    pub baseline_rms_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightResult {
    pub flight_id: String,
    pub callsign: String,
    pub icao24: Option<String>,
    pub adsc_fixes: usize,
    pub adsb_vectors: usize,
    pub samples: usize,
    /// No ADS-B data joined; trajectory is ADS-C only.
    pub no_adsb: bool,
    pub rejected: BTreeMap<RejectReason, usize>,
    pub countries: Vec<String>,
    pub fuel: Option<ComparisonReport>,
    pub reconstruction: Option<Reconstruction>,
    pub error: Option<String>,
}

struct Context<'a> {
    config: &'a RunConfig,
    adsb: &'a [StateVector],
    fuel: &'a FuelModelParams,
    polygons: Option<&'a CountryPolygons>,
    truth: Option<&'a TruthTrajectory>,
}

fn process_flight(seg: &FlightSegment, ctx: &Context) -> (FlightResult, Option<FusedTrajectory>) {
    let matched = match_adsb(seg, ctx.adsb, ctx.config.match_pad_s);
    let mut result = FlightResult {
        flight_id: seg.flight_id.clone(),
        callsign: seg.callsign.clone(),
        icao24: seg.icao24.map(icao_to_hex),
        adsc_fixes: seg.fixes.len(),
        adsb_vectors: matched.len(),
        samples: 0,
        no_adsb: matched.is_empty(),
        rejected: BTreeMap::new(),
        countries: Vec::new(),
        fuel: None,
        reconstruction: None,
        error: None,
    };
    let fused = match fuse(seg, &matched, &ctx.config.fusion()) {
        Ok(f) => f,
        Err(e) => {
            result.error = Some(e.to_string());
            return (result, None);
        }
    };
    for r in &fused.rejected {
        *result.rejected.entry(r.reason).or_default() += 1;
    }
    let traj = match resample(&fused.trajectory, ctx.config.resample_dt_s) {
        Ok(t) => t,
        Err(e) => {
            log::warn!("flight {}: {e}", seg.flight_id);
            result.error = Some(e.to_string());
            return (result, None);
        }
    };
    result.samples = traj.len();
    if let Some(p) = ctx.polygons {
        result.countries = country_crossings(&traj, p).into_iter().collect();
    }
    match compare_paths(&traj, ctx.fuel) {
        Ok(r) => result.fuel = Some(r),
        Err(e) => log::info!("flight {}: no fuel comparison: {e}", seg.flight_id),
    }
    if let Some(truth) = ctx.truth {
        result.reconstruction = reconstruction(&traj, truth, ctx.config.resample_dt_s);
    }
    (result, Some(traj))
}

/// Cross-track RMS of the trajectory and of the great-circle stand-in
/// between its outermost ADS-B samples (outermost samples of any kind when
/// there is no ADS-B).
pub fn reconstruction(traj: &FusedTrajectory, truth: &TruthTrajectory, dt: f64) -> Option<Reconstruction> {
    let adsb: Vec<&FusedSample> = traj
        .samples
        .iter()
        .filter(|s| s.provenance == Provenance::Adsb)
        .collect();
    let (a, b) = if adsb.len() >= 2 {
        (adsb[0], adsb[adsb.len() - 1])
    } else {
        (traj.samples.first()?, traj.samples.last()?)
    };
    let anchor = |s: &FusedSample| Anchor {
        t: s.t,
        point: s.point(),
        alt_ft: s.alt_ft,
    };
    let baseline = baseline_trajectory(anchor(a), anchor(b), dt).ok()?;
    Some(Reconstruction {
        fused_rms_km: cross_track_rms_km(traj, truth),
        baseline_rms_km: cross_track_rms_km(&baseline, truth),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub decode: DecodeSummary,
    pub adsb: Option<IngestSummary>,
    pub fixes: usize,
    /// Fixes without a usable callsign.
    pub rejected_fixes: usize,
    pub flights: usize,
    pub failed_flights: usize,
}

/// Run the whole batch and write outputs under `config.output_dir`:
/// `summary.json`, `flights.jsonl`, `flights/<id>.jsonl`, `fuel.csv`, and
/// `crossings.csv` when boundaries are configured.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineSummary> {
    config.validate()?;
    let fuel = config.fuel_model()?;
    let polygons = config.polygons()?;
    let truth = config.truth()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| AnalyticsError::Config(e.to_string()))?;

    let (records, decode) = decode_file(&config.adsc_input)?;
    let (adsb, adsb_summary) = match &config.adsb_input {
        Some(p) => {
            let (v, s) = read_adsb(p, config.adsb_metric)?;
            (v, Some(s))
        }
        None => (Vec::new(), None),
    };
    let mut fixes = fixes_from_records(&records);
    propagate_identity(&mut fixes, config.gap_threshold_s);
    let seg = segment_flights(&fixes, config.gap_threshold_s);

    let ctx = Context {
        config,
        adsb: &adsb,
        fuel: &fuel,
        polygons: polygons.as_ref(),
        truth: truth.as_ref(),
    };
    let results: Vec<(FlightResult, Option<FusedTrajectory>)> =
        pool.install(|| seg.segments.par_iter().map(|s| process_flight(s, &ctx)).collect());

    let out = &config.output_dir;
    let flights_dir = out.join("flights");
    fs::create_dir_all(&flights_dir)?;
    let mut index = BufWriter::new(File::create(out.join("flights.jsonl"))?);
    let mut fuel_csv = csv::Writer::from_path(out.join("fuel.csv")).map_err(csv_err)?;
    fuel_csv
        .write_record([
            "flight_id",
            "fuel_adsb_only_kg",
            "fuel_fused_kg",
            "distance_adsb_only_km",
            "distance_fused_km",
            "relative_delta",
        ])
        .map_err(csv_err)?;
    let mut failed = 0;
    for (r, traj) in &results {
        serde_json::to_writer(&mut index, r)?;
        index.write_all(b"\n")?;
        match traj {
            Some(t) => write_samples(
                BufWriter::new(File::create(flights_dir.join(format!("{}.jsonl", r.flight_id)))?),
                &t.samples,
            )?,
            None => failed += 1,
        }
        if let Some(f) = &r.fuel {
            fuel_csv
                .write_record([
                    r.flight_id.clone(),
                    f.fuel_adsb_only_kg.to_string(),
                    f.fuel_fused_kg.to_string(),
                    f.distance_adsb_only_km.to_string(),
                    f.distance_fused_km.to_string(),
                    f.relative_delta.to_string(),
                ])
                .map_err(csv_err)?;
        }
    }
    index.flush()?;
    fuel_csv.flush()?;

    if polygons.is_some() {
        let sets: Vec<(String, std::collections::BTreeSet<String>)> = results
            .iter()
            .filter(|(_, t)| t.is_some())
            .map(|(r, _)| (r.flight_id.clone(), r.countries.iter().cloned().collect()))
            .collect();
        let table = crossing_table(&sets, sets.len() as u64).map_err(|e| AnalyticsError::Input(e.to_string()))?;
        fs::write(out.join("crossings.csv"), table.to_csv())?;
    }

    let summary = PipelineSummary {
        decode,
        adsb: adsb_summary,
        fixes: fixes.len(),
        rejected_fixes: seg.rejects.len(),
        flights: results.len(),
        failed_flights: failed,
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}

fn csv_err(e: csv::Error) -> AnalyticsError {
    AnalyticsError::Io(std::io::Error::other(e.to_string()))
}
