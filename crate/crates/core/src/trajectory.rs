//! Time-ordered position samples shared by fusion, geodesy and fuel code.

use serde::{Deserialize, Serialize};

use crate::geo::{gc_distance, GeoPoint};

/// Where a trajectory sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Adsb,
    Adsc,
    Interpolated,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Adsb => "adsb",
            Provenance::Adsc => "adsc",
            Provenance::Interpolated => "interpolated",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedSample {
    /// Epoch seconds.
    pub t: f64,
    pub lat: f64,
    pub lon: f64,
    /// Pressure altitude, ft.
    pub alt_ft: Option<f64>,
    pub provenance: Provenance,
}

impl FusedSample {
    pub fn point(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FusedTrajectory {
    pub samples: Vec<FusedSample>,
}

impl FusedTrajectory {
    pub fn new(samples: Vec<FusedSample>) -> Self {
        FusedTrajectory { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> Option<f64> {
        self.samples.first().map(|s| s.t)
    }

    pub fn end(&self) -> Option<f64> {
        self.samples.last().map(|s| s.t)
    }

    /// Summed great-circle length, km.
    pub fn distance_km(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| gc_distance(w[0].point(), w[1].point()))
            .sum()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[0].t < w[1].t)
    }

    /// Largest ground speed implied by any consecutive pair, knots.
    pub fn max_ground_speed_kn(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| implied_speed_kn(&w[0], &w[1]))
            .fold(0.0, f64::max)
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.samples.iter().filter(|s| s.provenance == provenance).count()
    }
}

pub const KM_PER_NM: f64 = 1.852;

/// Ground speed implied by two samples, knots. Infinite for coincident times
/// at distinct positions.
pub fn implied_speed_kn(a: &FusedSample, b: &FusedSample) -> f64 {
    let d_nm = gc_distance(a.point(), b.point()) / KM_PER_NM;
    let dt_h = (b.t - a.t).abs() / 3600.0;
    if dt_h == 0.0 {
        return if d_nm == 0.0 { 0.0 } else { f64::INFINITY };
    }
    d_nm / dt_h
}
