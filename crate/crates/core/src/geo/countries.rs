//! Country boundaries, trajectory crossings and the per-country crossing
//! table.
//!
//! Polygons are planar in (lon, lat) degrees, the usual convention for
//! boundary files. Rings must already be split at the antimeridian.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use geojson::{FeatureCollection, GeoJson, Value};
use serde::Serialize;

use super::{gc_distance, gc_interpolate, GeoError, GeoPoint, Result};
use crate::trajectory::FusedTrajectory;

/// Property names tried, in order, for the country code of a feature.
pub const DEFAULT_CODE_KEYS: [&str; 5] = ["ISO_A3", "iso_a3", "ADM0_A3", "adm0_a3", "code"];

/// Longest chord, in degrees of arc, used to approximate a great-circle
/// segment in the (lon, lat) plane.
const MAX_CHORD_DEG: f64 = 0.1;

type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct BBox {
    min_lon: f64,
    min_lat: f64,
    max_lon: f64,
    max_lat: f64,
}

impl BBox {
    fn of(ring: &[[f64; 2]]) -> Self {
        let mut b = BBox {
            min_lon: f64::INFINITY,
            min_lat: f64::INFINITY,
            max_lon: f64::NEG_INFINITY,
            max_lat: f64::NEG_INFINITY,
        };
        for &[lon, lat] in ring {
            b.min_lon = b.min_lon.min(lon);
            b.max_lon = b.max_lon.max(lon);
            b.min_lat = b.min_lat.min(lat);
            b.max_lat = b.max_lat.max(lat);
        }
        b
    }

    fn contains(&self, lon: f64, lat: f64) -> bool {
        lon >= self.min_lon && lon <= self.max_lon && lat >= self.min_lat && lat <= self.max_lat
    }

    fn overlaps(&self, o: &BBox) -> bool {
        self.min_lon <= o.max_lon && o.min_lon <= self.max_lon && self.min_lat <= o.max_lat && o.min_lat <= self.max_lat
    }
}

/// One polygon: an exterior ring and optional holes, coordinates `[lon, lat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Ring,
    holes: Vec<Ring>,
    bbox: BBox,
}

impl Polygon {
    /// Validates ring closure, coordinate ranges, antimeridian splitting and
    /// self-intersection.
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> std::result::Result<Self, String> {
        validate_ring(&exterior).map_err(|e| format!("exterior ring: {e}"))?;
        for (i, h) in holes.iter().enumerate() {
            validate_ring(h).map_err(|e| format!("hole {i}: {e}"))?;
        }
        let bbox = BBox::of(&exterior);
        Ok(Polygon { exterior, holes, bbox })
    }

    /// Axis-aligned rectangle, handy for fixtures.
    pub fn rectangle(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Self {
        Polygon::new(
            vec![
                [min_lon, min_lat],
                [max_lon, min_lat],
                [max_lon, max_lat],
                [min_lon, max_lat],
                [min_lon, min_lat],
            ],
            vec![],
        )
        .expect("rectangle is a valid ring")
    }

    /// Even-odd containment. Points on the boundary count as inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        if !self.bbox.contains(p.lon, p.lat) {
            return false;
        }
        if on_ring(&self.exterior, p) || self.holes.iter().any(|h| on_ring(h, p)) {
            return true;
        }
        ray_cast(&self.exterior, p) && !self.holes.iter().any(|h| ray_cast(h, p))
    }

    fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    /// Whether the planar segment `a`-`b` touches any ring edge.
    fn boundary_intersects(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let seg_box = BBox::of(&[a, b]);
        if !self.bbox.overlaps(&seg_box) {
            return false;
        }
        self.rings()
            .any(|ring| ring.windows(2).any(|e| segments_intersect(a, b, e[0], e[1])))
    }
}

fn validate_ring(ring: &[[f64; 2]]) -> std::result::Result<(), String> {
    if ring.len() < 4 {
        return Err(format!("{} positions, need at least 4", ring.len()));
    }
    if ring.first() != ring.last() {
        return Err("ring is not closed".into());
    }
    for &[lon, lat] in ring {
        if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
            return Err(format!("coordinate ({lon}, {lat}) out of range"));
        }
    }
    for e in ring.windows(2) {
        if (e[1][0] - e[0][0]).abs() > 180.0 {
            return Err("edge crosses the antimeridian; split the ring at ±180".into());
        }
    }
    let n = ring.len() - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[i + 1]);
        let ebox = BBox::of(&[a, b]);
        for j in i + 2..n {
            // first and last edges share the closing vertex
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (ring[j], ring[j + 1]);
            if !ebox.overlaps(&BBox::of(&[c, d])) {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
    }
    Ok(())
}

fn ray_cast(ring: &[[f64; 2]], p: GeoPoint) -> bool {
    let (x, y) = (p.lon, p.lat);
    let mut inside = false;
    for e in ring.windows(2) {
        let ([xi, yi], [xj, yj]) = (e[0], e[1]);
        // half-open in y so a vertex on the ray is counted once
        if (yi > y) != (yj > y) {
            let x_cross = xi + (y - yi) * (xj - xi) / (yj - yi);
            if x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_ring(ring: &[[f64; 2]], p: GeoPoint) -> bool {
    let q = [p.lon, p.lat];
    ring.windows(2)
        .any(|e| orient(e[0], e[1], q) == 0.0 && within_box(e[0], e[1], q))
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn within_box(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> bool {
    c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching counts.
fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && within_box(c, d, a))
        || (d2 == 0.0 && within_box(c, d, b))
        || (d3 == 0.0 && within_box(a, b, c))
        || (d4 == 0.0 && within_box(a, b, d))
}

/// Country code to polygons. Immutable once loaded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryPolygons {
    countries: BTreeMap<String, Vec<Polygon>>,
}

impl CountryPolygons {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, code: impl Into<String>, polygon: Polygon) {
        self.countries.entry(code.into()).or_default().push(polygon);
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.countries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    /// Codes of every country whose polygons contain `p`.
    pub fn locate(&self, p: GeoPoint) -> impl Iterator<Item = &str> {
        self.countries
            .iter()
            .filter(move |(_, polys)| polys.iter().any(|poly| poly.contains(p)))
            .map(|(code, _)| code.as_str())
    }

    /// Load a GeoJSON feature collection. `code_key` overrides the property
    /// used for the country code; otherwise [`DEFAULT_CODE_KEYS`] are tried.
    pub fn from_geojson_str(text: &str, code_key: Option<&str>) -> Result<Self> {
        let gj: GeoJson = text
            .parse()
            .map_err(|e: geojson::Error| GeoError::Boundaries(e.to_string()))?;
        let fc = FeatureCollection::try_from(gj)
            .map_err(|e| GeoError::Boundaries(format!("not a feature collection: {e}")))?;
        let mut out = CountryPolygons::new();
        for (idx, feature) in fc.features.iter().enumerate() {
            let code = feature_code(feature, code_key)
                .ok_or_else(|| GeoError::Boundaries(format!("feature {idx} has no country code")))?;
            let Some(geometry) = &feature.geometry else {
                continue;
            };
            let polygons: Vec<&Vec<Vec<Vec<f64>>>> = match &geometry.value {
                Value::Polygon(rings) => vec![rings],
                Value::MultiPolygon(polys) => polys.iter().collect(),
                _ => continue,
            };
            for rings in polygons {
                let mut rings = rings.iter().map(|ring| {
                    ring.iter()
                        .map(|pos| match pos.as_slice() {
                            [lon, lat, ..] => Ok([*lon, *lat]),
                            _ => Err(GeoError::InvalidPolygon {
                                code: code.clone(),
                                reason: "position with fewer than two coordinates".into(),
                            }),
                        })
                        .collect::<Result<Ring>>()
                });
                let exterior = match rings.next() {
                    Some(r) => r?,
                    None => continue,
                };
                let holes = rings.collect::<Result<Vec<_>>>()?;
                let polygon = Polygon::new(exterior, holes).map_err(|reason| GeoError::InvalidPolygon {
                    code: code.clone(),
                    reason,
                })?;
                out.insert(code.clone(), polygon);
            }
        }
        Ok(out)
    }

    pub fn from_geojson_file(path: &Path, code_key: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_geojson_str(&text, code_key)
    }
}

fn feature_code(feature: &geojson::Feature, key: Option<&str>) -> Option<String> {
    let keys: Vec<&str> = match key {
        Some(k) => vec![k],
        None => DEFAULT_CODE_KEYS.to_vec(),
    };
    keys.iter().find_map(|k| match feature.property(k)? {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    })
}

/// Countries containing at least one trajectory sample.
pub fn crossings_by_samples(traj: &FusedTrajectory, polygons: &CountryPolygons) -> BTreeSet<String> {
    let mut hit = BTreeSet::new();
    for (code, polys) in &polygons.countries {
        if traj.samples.iter().any(|s| polys.iter().any(|p| p.contains(s.point()))) {
            hit.insert(code.clone());
        }
    }
    hit
}

/// Countries touched by a trajectory: any sample inside a polygon, or any
/// great-circle segment between consecutive samples meeting a boundary.
pub fn country_crossings(traj: &FusedTrajectory, polygons: &CountryPolygons) -> BTreeSet<String> {
    let mut hit = crossings_by_samples(traj, polygons);
    let chords: Vec<([f64; 2], [f64; 2])> = traj
        .samples
        .windows(2)
        .flat_map(|w| planar_chords(w[0].point(), w[1].point()))
        .collect();
    for (code, polys) in &polygons.countries {
        if hit.contains(code) {
            continue;
        }
        if chords
            .iter()
            .any(|(a, b)| polys.iter().any(|p| p.boundary_intersects(*a, *b)))
        {
            hit.insert(code.clone());
        }
    }
    hit
}

/// Approximate the arc `a`-`b` by short (lon, lat) chords, splitting at
/// the antimeridian.
fn planar_chords(a: GeoPoint, b: GeoPoint) -> Vec<([f64; 2], [f64; 2])> {
    let arc_deg = (gc_distance(a, b) / super::EARTH_RADIUS_KM).to_degrees();
    let n = ((arc_deg / MAX_CHORD_DEG).ceil() as usize).max(1);
    let mut pts = Vec::with_capacity(n + 1);
    pts.push(a);
    for i in 1..n {
        // antipodal consecutive samples cannot occur in a speed-gated trajectory
        pts.push(gc_interpolate(a, b, i as f64 / n as f64).unwrap_or(a));
    }
    pts.push(b);
    let mut out = Vec::with_capacity(n);
    for w in pts.windows(2) {
        let (p, q) = (w[0], w[1]);
        let dlon = q.lon - p.lon;
        if dlon.abs() <= 180.0 {
            out.push(([p.lon, p.lat], [q.lon, q.lat]));
            continue;
        }
        // crossing ±180: unwrap q next to p, cut at the meridian
        let edge = if dlon < 0.0 { 180.0 } else { -180.0 };
        let q_lon = q.lon + if dlon < 0.0 { 360.0 } else { -360.0 };
        let f = (edge - p.lon) / (q_lon - p.lon);
        let lat = p.lat + f * (q.lat - p.lat);
        out.push(([p.lon, p.lat], [edge, lat]));
        out.push(([-edge, lat], [q.lon, q.lat]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossingRow {
    pub code: String,
    pub count: u64,
    /// Percentage of all flights, in hundredths of a percent.
    pub percent_hundredths: u64,
}

impl CrossingRow {
    pub fn percentage(&self) -> f64 {
        self.percent_hundredths as f64 / 100.0
    }

    /// Two-decimal rendering, e.g. `33.50`.
    pub fn percentage_text(&self) -> String {
        format!("{}.{:02}", self.percent_hundredths / 100, self.percent_hundredths % 100)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossingTable {
    pub rows: Vec<CrossingRow>,
    pub total_flights: u64,
}

impl CrossingTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("code,flights,percentage\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.code, r.count, r.percentage_text()));
        }
        s
    }
}

/// `100 * count / total` rounded half-up to two decimals, in hundredths.
pub fn percent_hundredths(count: u64, total: u64) -> u64 {
    let (c, t) = (count as u128, total as u128);
    ((20_000 * c + t) / (2 * t)) as u64
}

pub fn crossing_table_from_counts(counts: &BTreeMap<String, u64>, total: u64) -> Result<CrossingTable> {
    let mut rows = Vec::with_capacity(counts.len());
    for (code, &count) in counts {
        if count > total || total == 0 {
            return Err(GeoError::TotalTooSmall {
                code: code.clone(),
                count,
                total,
            });
        }
        rows.push(CrossingRow {
            code: code.clone(),
            count,
            percent_hundredths: percent_hundredths(count, total),
        });
    }
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.code.cmp(&b.code)));
    Ok(CrossingTable {
        rows,
        total_flights: total,
    })
}

/// Count, per country, the flights whose crossing set includes it.
pub fn crossing_table<S: AsRef<str>>(flights: &[(S, BTreeSet<String>)], total: u64) -> Result<CrossingTable> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (_, codes) in flights {
        for code in codes {
            *counts.entry(code.clone()).or_default() += 1;
        }
    }
    crossing_table_from_counts(&counts, total)
}

/// Every total `N` for which each `(count, hundredths)` row reproduces its
/// published percentage.
pub fn solve_total(rows: &[(u64, u64)]) -> Vec<u64> {
    let lower = rows.iter().map(|r| r.0).max().unwrap_or(0).max(1);
    // pct >= p - 0.005 bounds N from above for every nonzero row
    let upper = rows
        .iter()
        .filter(|r| r.1 > 0)
        .map(|&(c, p)| (20_000 * c as u128 / (2 * p as u128 - 1)) as u64)
        .min()
        .unwrap_or(lower);
    (lower..=upper.max(lower))
        .filter(|&n| rows.iter().all(|&(c, p)| percent_hundredths(c, n) == p))
        .collect()
}
