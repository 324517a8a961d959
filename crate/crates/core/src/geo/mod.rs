//! Spherical geodesy: distances, interpolation, cross-track geometry and the
//! great-circle baseline used across surveillance gaps.

pub mod countries;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{FusedSample, FusedTrajectory, Provenance};

pub use countries::{
    country_crossings, crossing_table, crossing_table_from_counts, crossings_by_samples, solve_total, CountryPolygons,
    CrossingRow, CrossingTable, Polygon,
};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("endpoints are antipodal; great circle is ambiguous")]
    AntipodalAmbiguity,
    #[error("end time {end} is not after start time {start}")]
    NonMonotonicTime { start: f64, end: f64 },
    #[error("invalid polygon for {code}: {reason}")]
    InvalidPolygon { code: String, reason: String },
    #[error("total {total} is smaller than the count {count} for {code}")]
    TotalTooSmall { code: String, count: u64, total: u64 },
    #[error("boundaries file: {0}")]
    Boundaries(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GeoError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub(crate) fn to_vec(self) -> Vec3 {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        Vec3([lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()])
    }

    pub(crate) fn from_vec(v: Vec3) -> Self {
        let [x, y, z] = v.0;
        GeoPoint {
            lat: z.atan2(x.hypot(y)).to_degrees(),
            lon: normalize_lon(y.atan2(x).to_degrees()),
        }
    }
}

/// Wrap a longitude into [-180, 180).
pub fn normalize_lon(lon: f64) -> f64 {
    let l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l >= 180.0 {
        l - 360.0
    } else {
        l
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub(crate) fn dot(self, o: Vec3) -> f64 {
        self.0.iter().zip(o.0).map(|(a, b)| a * b).sum()
    }

    pub(crate) fn cross(self, o: Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub(crate) fn scale(self, k: f64) -> Vec3 {
        Vec3(self.0.map(|c| c * k))
    }

    pub(crate) fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub(crate) fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub(crate) fn unit(self) -> Vec3 {
        self.scale(1.0 / self.norm())
    }
}

/// Central angle between two points, radians.
fn central_angle(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

/// Haversine distance, km.
pub fn gc_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    central_angle(a, b) * EARTH_RADIUS_KM
}

/// Spherical linear interpolation from `a` (f = 0) to `b` (f = 1).
pub fn gc_interpolate(a: GeoPoint, b: GeoPoint, f: f64) -> Result<GeoPoint> {
    if f == 0.0 {
        return Ok(a);
    }
    if f == 1.0 {
        return Ok(b);
    }
    let (va, vb) = (a.to_vec(), b.to_vec());
    let sin_omega = va.cross(vb).norm();
    let cos_omega = va.dot(vb);
    if sin_omega < 1e-12 {
        if cos_omega > 0.0 {
            return Ok(a);
        }
        return Err(GeoError::AntipodalAmbiguity);
    }
    let omega = sin_omega.atan2(cos_omega);
    let wa = ((1.0 - f) * omega).sin() / sin_omega;
    let wb = (f * omega).sin() / sin_omega;
    Ok(GeoPoint::from_vec(va.scale(wa).add(vb.scale(wb)).unit()))
}

/// Initial true bearing from `a` towards `b`, degrees in [0, 360).
pub fn initial_bearing(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlon = (b.lon - a.lon).to_radians();
    let y = dlon.sin() * lat2.cos();
    let x = lat1.cos() * lat2.sin() - lat1.sin() * lat2.cos() * dlon.cos();
    y.atan2(x).to_degrees().rem_euclid(360.0)
}

/// Point reached from `start` after `distance_km` along `bearing_deg`.
pub fn destination(start: GeoPoint, bearing_deg: f64, distance_km: f64) -> GeoPoint {
    let delta = distance_km / EARTH_RADIUS_KM;
    let theta = bearing_deg.to_radians();
    let lat1 = start.lat.to_radians();
    let lon1 = start.lon.to_radians();
    let lat2 = (lat1.sin() * delta.cos() + lat1.cos() * delta.sin() * theta.cos()).asin();
    let lon2 = lon1 + (theta.sin() * delta.sin() * lat1.cos()).atan2(delta.cos() - lat1.sin() * lat2.sin());
    GeoPoint::new(lat2.to_degrees(), normalize_lon(lon2.to_degrees()))
}

/// Signed distance from `p` to the great circle through `a` and `b`, km.
/// Positive to the left of the direction of travel.
pub fn cross_track_km(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let n = a.to_vec().cross(b.to_vec());
    let len = n.norm();
    if len < 1e-15 {
        return gc_distance(p, a);
    }
    (p.to_vec().dot(n.scale(1.0 / len))).clamp(-1.0, 1.0).asin() * EARTH_RADIUS_KM
}

/// Shortest distance from `p` to the arc between `a` and `b`, km.
pub fn distance_to_arc_km(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let (va, vb, vp) = (a.to_vec(), b.to_vec(), p.to_vec());
    let n = va.cross(vb);
    if n.norm() < 1e-15 {
        return gc_distance(p, a);
    }
    let n = n.unit();
    // foot of the perpendicular on the great circle
    let foot = vp.add(n.scale(-vp.dot(n)));
    if foot.norm() > 1e-15 {
        let foot = foot.unit();
        // inside the arc iff foot is on the a->b side of both endpoints
        if va.cross(foot).dot(n) >= 0.0 && foot.cross(vb).dot(n) >= 0.0 {
            return vp.dot(n).clamp(-1.0, 1.0).asin().abs() * EARTH_RADIUS_KM;
        }
    }
    gc_distance(p, a).min(gc_distance(p, b))
}

/// Position, altitude and time of one baseline anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub t: f64,
    pub point: GeoPoint,
    pub alt_ft: Option<f64>,
}

/// Great-circle stand-in between two anchors, sampled every `dt` seconds
/// with altitude interpolated linearly in time. The endpoints are kept as
/// ADS-B samples; everything between is marked interpolated.
pub fn baseline_trajectory(first: Anchor, last: Anchor, dt: f64) -> Result<FusedTrajectory> {
    if last.t <= first.t || dt <= 0.0 {
        return Err(GeoError::NonMonotonicTime {
            start: first.t,
            end: last.t,
        });
    }
    let span = last.t - first.t;
    let mut samples = vec![FusedSample {
        t: first.t,
        lat: first.point.lat,
        lon: first.point.lon,
        alt_ft: first.alt_ft,
        provenance: Provenance::Adsb,
    }];
    for k in 1.. {
        let t = first.t + k as f64 * dt;
        if t >= last.t - 1e-9 {
            break;
        }
        let f = (t - first.t) / span;
        let p = gc_interpolate(first.point, last.point, f)?;
        let alt_ft = match (first.alt_ft, last.alt_ft) {
            (Some(a), Some(b)) => Some(a + (b - a) * f),
            _ => None,
        };
        samples.push(FusedSample {
            t,
            lat: p.lat,
            lon: p.lon,
            alt_ft,
            provenance: Provenance::Interpolated,
        });
    }
    // reject antipodal anchors even when dt skips every interior point
    gc_interpolate(first.point, last.point, 0.5)?;
    samples.push(FusedSample {
        t: last.t,
        lat: last.point.lat,
        lon: last.point.lon,
        alt_ft: last.alt_ft,
        provenance: Provenance::Adsb,
    });
    Ok(FusedTrajectory::new(samples))
}
