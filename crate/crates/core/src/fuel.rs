//! First-order cruise fuel-flow model and the ADS-B-only versus fused
//! comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atmosphere::mach_from_tas;
use crate::geo::{baseline_trajectory, gc_distance, Anchor, GeoError};
use crate::trajectory::{implied_speed_kn, FusedSample, FusedTrajectory, Provenance};

/// kg CO2 per kg of kerosene burned.
pub const CO2_PER_KG_FUEL: f64 = 3.16;
/// Lower bound on each correction factor; keeps flow positive far from the
/// reference point.
pub const MIN_FACTOR: f64 = 0.1;

pub const DEFAULT_TABLE: &str = include_str!("../data/fuel_params.toml");

#[derive(Debug, Error)]
pub enum FuelError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("sample {index} has no altitude")]
    MissingAltitude { index: usize },
    #[error("trajectory has no ADS-B samples to anchor the baseline")]
    NoAdsbAnchors,
    #[error("comparison needs at least 2 samples")]
    TooFewSamples,
    #[error("invalid parameters for {name}: {reason}")]
    InvalidParams { name: String, reason: String },
    #[error("parameter table: {0}")]
    Table(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

pub type Result<T> = std::result::Result<T, FuelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AircraftClass {
    WidebodyTwin,
    WidebodyQuad,
    BusinessJet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuelModelParams {
    pub name: String,
    pub class: AircraftClass,
    pub nominal_cruise_flow_kg_h: f64,
    /// Fractional flow change per 1000 ft above the reference altitude.
    pub altitude_sensitivity: f64,
    /// Fractional flow change per 0.01 Mach above the reference Mach.
    pub speed_sensitivity: f64,
    pub reference_alt_ft: f64,
    pub reference_mach: f64,
    #[serde(default)]
    pub typecodes: Vec<String>,
}

impl FuelModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(FuelError::InvalidParams {
                name: self.name.clone(),
                reason,
            })
        };
        if !(self.nominal_cruise_flow_kg_h > 0.0) || !self.nominal_cruise_flow_kg_h.is_finite() {
            return bad(format!(
                "nominal flow {} must be positive",
                self.nominal_cruise_flow_kg_h
            ));
        }
        for (label, s) in [
            ("altitude", self.altitude_sensitivity),
            ("speed", self.speed_sensitivity),
        ] {
            if !(s > -0.2 && s < 0.2) {
                return bad(format!("{label} sensitivity {s} outside (-0.2, 0.2)"));
            }
        }
        if !(self.reference_mach > 0.0) || !self.reference_alt_ft.is_finite() {
            return bad("reference point must be finite with positive Mach".into());
        }
        Ok(())
    }

    /// Flow at the given conditions, kg/h.
    pub fn flow_kg_h(&self, alt_ft: f64, mach: f64) -> f64 {
        let d_kft = (alt_ft - self.reference_alt_ft) / 1000.0;
        let d_speed = (mach - self.reference_mach) / 0.01;
        let fa = (1.0 + self.altitude_sensitivity * d_kft).max(MIN_FACTOR);
        let fs = (1.0 + self.speed_sensitivity * d_speed).max(MIN_FACTOR);
        self.nominal_cruise_flow_kg_h * fa * fs
    }
}

/// Anything that can price one trajectory leg in kg of fuel.
pub trait FuelModel {
    fn segment_fuel_kg(&self, a: &FusedSample, b: &FusedSample) -> Result<f64>;
}

impl FuelModel for FuelModelParams {
    /// Flow at the mean altitude and the Mach implied by ground speed (no
    /// wind), times the leg duration.
    fn segment_fuel_kg(&self, a: &FusedSample, b: &FusedSample) -> Result<f64> {
        let (Some(x), Some(y)) = (a.alt_ft, b.alt_ft) else {
            return Err(FuelError::MissingAltitude { index: 0 });
        };
        let alt = 0.5 * (x + y);
        let mach = mach_from_tas(implied_speed_kn(a, b), alt);
        Ok(self.flow_kg_h(alt, mach) * (b.t - a.t) / 3600.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentFuel {
    pub t_start: f64,
    pub t_end: f64,
    pub distance_km: f64,
    pub fuel_kg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelEstimate {
    pub total_fuel_kg: f64,
    pub total_co2_kg: f64,
    pub per_segment: Vec<SegmentFuel>,
}

pub fn estimate_fuel<M: FuelModel + ?Sized>(traj: &FusedTrajectory, model: &M) -> Result<FuelEstimate> {
    if traj.is_empty() {
        return Err(FuelError::EmptyTrajectory);
    }
    if let Some(index) = traj.samples.iter().position(|s| s.alt_ft.is_none()) {
        return Err(FuelError::MissingAltitude { index });
    }
    let per_segment = traj
        .samples
        .windows(2)
        .map(|w| {
            Ok(SegmentFuel {
                t_start: w[0].t,
                t_end: w[1].t,
                distance_km: gc_distance(w[0].point(), w[1].point()),
                fuel_kg: model.segment_fuel_kg(&w[0], &w[1])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_fuel_kg: f64 = per_segment.iter().map(|s| s.fuel_kg).sum();
    Ok(FuelEstimate {
        total_fuel_kg,
        total_co2_kg: CO2_PER_KG_FUEL * total_fuel_kg,
        per_segment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub fuel_adsb_only_kg: f64,
    pub fuel_fused_kg: f64,
    pub distance_adsb_only_km: f64,
    pub distance_fused_km: f64,
    /// `(fused - adsb_only) / adsb_only`.
    pub relative_delta: f64,
}

/// Median spacing of the samples, seconds.
fn median_step(traj: &FusedTrajectory) -> f64 {
    let mut gaps: Vec<f64> = traj.samples.windows(2).map(|w| w[1].t - w[0].t).collect();
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Fuel on the fused trajectory against the great-circle stand-in an
/// ADS-B-only view would assume between its first and last ADS-B samples.
pub fn compare_paths<M: FuelModel + ?Sized>(fused: &FusedTrajectory, model: &M) -> Result<ComparisonReport> {
    if fused.len() < 2 {
        return Err(FuelError::TooFewSamples);
    }
    let mut adsb = fused.samples.iter().filter(|s| s.provenance == Provenance::Adsb);
    let first = adsb.next().ok_or(FuelError::NoAdsbAnchors)?;
    let last = adsb.next_back().ok_or(FuelError::NoAdsbAnchors)?;
    let anchor = |s: &FusedSample| Anchor {
        t: s.t,
        point: s.point(),
        alt_ft: s.alt_ft,
    };
    let baseline = baseline_trajectory(anchor(first), anchor(last), median_step(fused))?;
    let base = estimate_fuel(&baseline, model)?;
    let fused_est = estimate_fuel(fused, model)?;
    Ok(ComparisonReport {
        fuel_adsb_only_kg: base.total_fuel_kg,
        fuel_fused_kg: fused_est.total_fuel_kg,
        distance_adsb_only_km: baseline.distance_km(),
        distance_fused_km: fused.distance_km(),
        relative_delta: (fused_est.total_fuel_kg - base.total_fuel_kg) / base.total_fuel_kg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelTable {
    pub family: Vec<FuelModelParams>,
}

impl FuelTable {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: FuelTable = toml::from_str(text).map_err(|e| FuelError::Table(e.to_string()))?;
        for p in &table.family {
            p.validate()?;
        }
        Ok(table)
    }

    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_TABLE).expect("shipped table is valid")
    }

    pub fn by_name(&self, name: &str) -> Option<&FuelModelParams> {
        self.family.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    /// Family for an ICAO type designator such as `A359`.
    pub fn by_typecode(&self, typecode: &str) -> Option<&FuelModelParams> {
        self.family
            .iter()
            .find(|p| p.typecodes.iter().any(|t| t.eq_ignore_ascii_case(typecode.trim())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atmosphere::speed_of_sound_kn;
    use crate::geo::{destination, GeoPoint};
    use crate::trajectory::KM_PER_NM;

    fn params() -> FuelModelParams {
        FuelTable::builtin().by_name("A350").unwrap().clone()
    }

    /// Eastbound along the equator at `kn`, one sample per minute.
    fn cruise(minutes: usize, kn: f64, alt: f64) -> FusedTrajectory {
        let step_km = kn * KM_PER_NM / 60.0;
        let samples = (0..=minutes)
            .map(|k| {
                let p = destination(GeoPoint::new(0.0, -40.0), 90.0, k as f64 * step_km);
                FusedSample {
                    t: k as f64 * 60.0,
                    lat: p.lat,
                    lon: p.lon,
                    alt_ft: Some(alt),
                    provenance: if k == 0 || k == minutes {
                        Provenance::Adsb
                    } else {
                        Provenance::Adsc
                    },
                }
            })
            .collect();
        FusedTrajectory::new(samples)
    }

    #[test]
    fn builtin_table() {
        let t = FuelTable::builtin();
        assert_eq!(t.family.len(), 6);
        assert_eq!(t.by_typecode("a388").unwrap().class, AircraftClass::WidebodyQuad);
        assert_eq!(t.by_typecode("GLF6").unwrap().name, "GLF");
        assert!(t.by_typecode("C172").is_none());
    }

    #[test]
    fn invalid_params() {
        let mut p = params();
        p.altitude_sensitivity = 0.2;
        assert!(p.validate().is_err());
        p.altitude_sensitivity = 0.0;
        p.nominal_cruise_flow_kg_h = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn empty_and_missing_altitude() {
        let p = params();
        assert!(matches!(
            estimate_fuel(&FusedTrajectory::default(), &p),
            Err(FuelError::EmptyTrajectory)
        ));
        let mut t = cruise(3, 480.0, 39_000.0);
        t.samples[2].alt_ft = None;
        assert!(matches!(
            estimate_fuel(&t, &p),
            Err(FuelError::MissingAltitude { index: 2 })
        ));
    }

    #[test]
    fn reference_cruise_two_hours() {
        let p = params();
        let kn = p.reference_mach * speed_of_sound_kn(p.reference_alt_ft);
        let est = estimate_fuel(&cruise(120, kn, p.reference_alt_ft), &p).unwrap();
        let expected = 2.0 * p.nominal_cruise_flow_kg_h;
        assert!(
            (est.total_fuel_kg - expected).abs() / expected < 1e-6,
            "{}",
            est.total_fuel_kg
        );
        assert_eq!(est.total_co2_kg, 3.16 * est.total_fuel_kg);
    }

    #[test]
    fn two_segments_hand_computed() {
        let mut p = params();
        p.speed_sensitivity = 0.0;
        let mk = |t: f64, lon: f64, alt: f64| FusedSample {
            t,
            lat: 0.0,
            lon,
            alt_ft: Some(alt),
            provenance: Provenance::Adsb,
        };
        let r = p.reference_alt_ft;
        // second leg averages 2000 ft above reference
        let traj = FusedTrajectory::new(vec![mk(0.0, 0.0, r), mk(3600.0, 8.0, r), mk(5400.0, 12.0, r + 4000.0)]);
        let est = estimate_fuel(&traj, &p).unwrap();
        let f = p.nominal_cruise_flow_kg_h;
        let expected = f * 1.0 + f * (1.0 + p.altitude_sensitivity * 2.0) * 0.5;
        assert!((est.total_fuel_kg - expected).abs() < 1e-9 * expected);
        assert_eq!(est.per_segment.len(), 2);
    }

    #[test]
    fn factors_are_floored() {
        let p = params();
        assert!(p.flow_kg_h(200_000.0, 0.85) > 0.0);
        assert!(p.flow_kg_h(39_000.0, -10.0) > 0.0);
    }

    #[test]
    fn coincident_paths_have_zero_delta() {
        let p = params();
        let r = compare_paths(&cruise(300, 480.0, 39_000.0), &p).unwrap();
        assert!(r.relative_delta.abs() < 1e-3, "{}", r.relative_delta);
    }

    #[test]
    fn no_adsb_anchor() {
        let mut t = cruise(10, 480.0, 39_000.0);
        for s in &mut t.samples {
            s.provenance = Provenance::Adsc;
        }
        assert!(matches!(compare_paths(&t, &params()), Err(FuelError::NoAdsbAnchors)));
    }

    #[test]
    fn lower_cruise_changes_fuel_not_distance() {
        let p = params();
        let mut t = cruise(300, 480.0, 39_000.0);
        let n = t.len();
        for s in &mut t.samples[1..n - 1] {
            s.alt_ft = Some(35_000.0);
        }
        let r = compare_paths(&t, &p).unwrap();
        assert!(r.relative_delta.abs() > 0.01);
        assert!((r.distance_fused_km - r.distance_adsb_only_km).abs() / r.distance_fused_km < 1e-3);
    }
}
