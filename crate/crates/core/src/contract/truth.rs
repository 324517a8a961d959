//! Dense ground-truth trajectories that drive the simulator.

use serde::{Deserialize, Serialize};

use super::{Result, SimError};
use crate::geo::{destination, gc_distance, gc_interpolate, initial_bearing, GeoPoint, EARTH_RADIUS_KM};
use crate::trajectory::KM_PER_NM;

/// Largest allowed spacing between truth fixes, seconds.
pub const MAX_TRUTH_STEP_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFix {
    pub t: f64,
    pub lat: f64,
    pub lon: f64,
    pub alt_ft: f64,
    pub ground_speed_kn: f64,
    pub track_deg: f64,
}

impl TruthFix {
    pub fn point(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

impl Waypoint {
    pub fn point(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTrajectory {
    fixes: Vec<TruthFix>,
    waypoints: Vec<Waypoint>,
}

impl TruthTrajectory {
    pub fn new(fixes: Vec<TruthFix>, waypoints: Vec<Waypoint>) -> Result<Self> {
        if fixes.len() < 2 {
            return Err(SimError::InvalidTruth("need at least two fixes".into()));
        }
        for w in fixes.windows(2) {
            let dt = w[1].t - w[0].t;
            if dt <= 0.0 {
                return Err(SimError::InvalidTruth(format!(
                    "timestamps not strictly increasing at t={}",
                    w[1].t
                )));
            }
            if dt > MAX_TRUTH_STEP_S {
                return Err(SimError::InvalidTruth(format!(
                    "gap of {dt} s at t={} exceeds {MAX_TRUTH_STEP_S} s",
                    w[0].t
                )));
            }
        }
        for f in &fixes {
            if !(-90.0..=90.0).contains(&f.lat) || !(-180.0..=180.0).contains(&f.lon) {
                return Err(SimError::InvalidTruth(format!(
                    "position ({}, {}) out of range",
                    f.lat, f.lon
                )));
            }
        }
        for w in &waypoints {
            let ok = !w.name.is_empty()
                && w.name.len() <= 5
                && w.name.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
            if !ok {
                return Err(SimError::InvalidTruth(format!("bad waypoint name {:?}", w.name)));
            }
        }
        Ok(TruthTrajectory { fixes, waypoints })
    }

    pub fn fixes(&self) -> &[TruthFix] {
        &self.fixes
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn start(&self) -> f64 {
        self.fixes[0].t
    }

    pub fn end(&self) -> f64 {
        self.fixes[self.fixes.len() - 1].t
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// Index `i` with `fixes[i].t <= t < fixes[i + 1].t`, clamped to the
    /// last segment.
    pub(crate) fn segment_index(&self, t: f64) -> usize {
        let i = self.fixes.partition_point(|f| f.t <= t);
        i.saturating_sub(1).min(self.fixes.len() - 2)
    }

    /// Position and altitude at `t`, interpolated along the great circle
    /// between bracketing fixes. `None` outside the covered span.
    pub fn state_at(&self, t: f64) -> Option<(GeoPoint, f64)> {
        if t < self.start() || t > self.end() {
            return None;
        }
        let i = self.segment_index(t);
        let (a, b) = (&self.fixes[i], &self.fixes[i + 1]);
        let f = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        let p = gc_interpolate(a.point(), b.point(), f).ok()?;
        Some((p, a.alt_ft + (b.alt_ft - a.alt_ft) * f))
    }

    /// Ground speed and track of the segment containing `t`.
    pub fn kinematics_at(&self, t: f64) -> (f64, f64) {
        let f = &self.fixes[self.segment_index(t)];
        (f.ground_speed_kn, f.track_deg)
    }

    /// Vertical rate of the segment containing `t`, ft/min.
    pub fn vertical_rate_at(&self, t: f64) -> f64 {
        let i = self.segment_index(t);
        let (a, b) = (&self.fixes[i], &self.fixes[i + 1]);
        (b.alt_ft - a.alt_ft) / (b.t - a.t) * 60.0
    }

    /// Build a constant-ground-speed truth along a great circle bent
    /// sideways by `lateral_offset_deg` at mid-route.
    pub fn from_route(spec: &RouteSpec) -> Result<Self> {
        spec.validate()?;
        let path = offset_path(spec)?;
        let mut cumulative = Vec::with_capacity(path.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in path.windows(2) {
            acc += gc_distance(w[0], w[1]);
            cumulative.push(acc);
        }
        let total_km = acc;
        let speed_kms = spec.speed_kn * KM_PER_NM / 3600.0;
        let duration = total_km / speed_kms;
        if duration < spec.step_s {
            return Err(SimError::InvalidTruth("route shorter than one step".into()));
        }

        let point_at = |s: f64| -> GeoPoint {
            let s = s.clamp(0.0, total_km);
            let j = cumulative.partition_point(|&c| c <= s).clamp(1, path.len() - 1);
            let (c0, c1) = (cumulative[j - 1], cumulative[j]);
            let f = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.0 };
            gc_interpolate(path[j - 1], path[j], f).unwrap_or(path[j - 1])
        };

        let climb_s = (spec.cruise_alt_ft - spec.initial_alt_ft).max(0.0) / spec.climb_rate_fpm * 60.0;
        let alt_at = |elapsed: f64| -> f64 {
            spec.initial_alt_ft
                + (spec.cruise_alt_ft - spec.initial_alt_ft)
                    * (elapsed.min(duration - elapsed) / climb_s.max(1e-9)).clamp(0.0, 1.0)
        };

        let steps = (duration / spec.step_s).ceil() as usize;
        let mut fixes = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let elapsed = (k as f64 * spec.step_s).min(duration);
            let p = point_at(elapsed * speed_kms);
            let ahead = point_at(elapsed * speed_kms + 1.0);
            let track = if elapsed * speed_kms + 1.0 <= total_km {
                initial_bearing(p, ahead)
            } else {
                let behind = point_at(elapsed * speed_kms - 1.0);
                initial_bearing(behind, p)
            };
            fixes.push(TruthFix {
                t: spec.start_t + elapsed,
                lat: p.lat,
                lon: p.lon,
                alt_ft: alt_at(elapsed),
                ground_speed_kn: spec.speed_kn,
                track_deg: track,
            });
            if elapsed >= duration {
                break;
            }
        }

        let waypoints = (1..=spec.waypoints)
            .map(|i| {
                let s = total_km * i as f64 / (spec.waypoints + 1) as f64;
                let p = point_at(s);
                Waypoint {
                    name: format!("WPT{i:02}"),
                    lat: p.lat,
                    lon: p.lon,
                }
            })
            .collect();
        TruthTrajectory::new(fixes, waypoints)
    }
}

/// Great-circle route description used to synthesize truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    /// `[lat, lon]` degrees.
    pub origin: [f64; 2],
    pub destination: [f64; 2],
    /// Epoch seconds of the first fix.
    pub start_t: f64,
    #[serde(default = "default_cruise")]
    pub cruise_alt_ft: f64,
    #[serde(default = "default_speed")]
    pub speed_kn: f64,
    /// Peak sideways displacement at mid-route, degrees of arc. Positive is
    /// left of the direction of travel.
    #[serde(default)]
    pub lateral_offset_deg: f64,
    #[serde(default = "default_step")]
    pub step_s: f64,
    #[serde(default)]
    pub waypoints: usize,
    #[serde(default)]
    pub initial_alt_ft: f64,
    #[serde(default = "default_climb")]
    pub climb_rate_fpm: f64,
}

fn default_cruise() -> f64 {
    36_000.0
}
fn default_speed() -> f64 {
    480.0
}
fn default_step() -> f64 {
    30.0
}
fn default_climb() -> f64 {
    2_000.0
}

impl RouteSpec {
    pub fn new(origin: GeoPoint, destination: GeoPoint, start_t: f64) -> Self {
        RouteSpec {
            origin: [origin.lat, origin.lon],
            destination: [destination.lat, destination.lon],
            start_t,
            cruise_alt_ft: default_cruise(),
            speed_kn: default_speed(),
            lateral_offset_deg: 0.0,
            step_s: default_step(),
            waypoints: 0,
            initial_alt_ft: 0.0,
            climb_rate_fpm: default_climb(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidTruth(m.into()));
        if !(self.step_s > 0.0 && self.step_s <= MAX_TRUTH_STEP_S) {
            return bad("step_s must be in (0, 60]");
        }
        if self.speed_kn <= 0.0 {
            return bad("speed_kn must be positive");
        }
        if self.climb_rate_fpm <= 0.0 {
            return bad("climb_rate_fpm must be positive");
        }
        if self.waypoints > 99 {
            return bad("at most 99 generated waypoints");
        }
        Ok(())
    }
}

/// Dense polyline of the displaced route.
fn offset_path(spec: &RouteSpec) -> Result<Vec<GeoPoint>> {
    const N: usize = 2000;
    let o = GeoPoint::new(spec.origin[0], spec.origin[1]);
    let d = GeoPoint::new(spec.destination[0], spec.destination[1]);
    let peak_km = spec.lateral_offset_deg.to_radians() * EARTH_RADIUS_KM;
    (0..=N)
        .map(|i| {
            let f = i as f64 / N as f64;
            let base = gc_interpolate(o, d, f)?;
            let offset = peak_km * (std::f64::consts::PI * f).sin();
            if offset.abs() < 1e-9 {
                return Ok(base);
            }
            let course = if f < 1.0 {
                initial_bearing(base, d)
            } else {
                (initial_bearing(d, o) + 180.0) % 360.0
            };
            // left of track is course - 90
            Ok(destination(base, course - 90.0, offset))
        })
        .collect::<std::result::Result<Vec<_>, crate::geo::GeoError>>()
        .map_err(SimError::from)
}
