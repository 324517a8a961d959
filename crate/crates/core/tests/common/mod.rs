//! Shared generators for integration tests.
#![allow(dead_code)]

use adsc_core::codec::{
    AdscReport, AirReferenceData, BasicReport, EarthReferenceData, EmergencyBasicReport, EmergencyStatus, EventPayload,
    EventReport, FigureOfMerit, IntentGroup, MeteorologicalData, PredictedRoute, ProtocolGroup, RoutePoint, Tag,
    TaggedGroup,
};
use rand::seq::SliceRandom;
use rand::Rng;

// Grid values computed from raw integers with the same formulas the wire
// format documents; any value produced here is exactly representable.
pub fn lat<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-(1i64 << 19)..=(1 << 19)) as f64 * 180.0 / 1_048_576.0
}

pub fn lon<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-(1i64 << 20)..(1 << 20)) as f64 * 180.0 / 1_048_576.0
}

pub fn alt<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0..=16_750i64) as f64 * 4.0 - 1000.0
}

fn angle<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0..=u16::MAX as i64) as f64 * 360.0 / 65_536.0
}

fn half_knots<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0..=u16::MAX as i64) as f64 / 2.0
}

fn vertical_speed<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(i16::MIN as i64..=i16::MAX as i64) as f64 * 16.0
}

fn text<R: Rng>(rng: &mut R, max: usize) -> String {
    const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| *ALPHABET.choose(rng).unwrap() as char).collect()
}

pub fn basic<R: Rng>(rng: &mut R) -> BasicReport {
    BasicReport {
        latitude: lat(rng),
        longitude: lon(rng),
        altitude_ft: alt(rng),
        time_of_report: rng.gen_range(0..3600),
        figure_of_merit: FigureOfMerit {
            accuracy: rng.gen_range(0..8),
            tcas_operational: rng.gen(),
        },
    }
}

fn route_point<R: Rng>(rng: &mut R) -> RoutePoint {
    RoutePoint {
        latitude: lat(rng),
        longitude: lon(rng),
        eta_s: rng.gen(),
        altitude_ft: alt(rng),
    }
}

pub fn group<R: Rng>(rng: &mut R, tag: Tag) -> TaggedGroup {
    let contract = rng.gen_range(1..=255u8);
    match tag {
        Tag::Acknowledgement => TaggedGroup::Protocol(ProtocolGroup::Ack { contract }),
        Tag::NegativeAcknowledgement => TaggedGroup::Protocol(ProtocolGroup::Nack {
            contract,
            reason: rng.gen(),
        }),
        Tag::Noncompliance => TaggedGroup::Protocol(ProtocolGroup::Noncompliance { contract }),
        Tag::Basic => TaggedGroup::Basic(basic(rng)),
        Tag::EmergencyBasic => TaggedGroup::Emergency(EmergencyBasicReport {
            report: basic(rng),
            status: *EmergencyStatus::ALL.choose(rng).unwrap(),
        }),
        Tag::LateralDeviation => TaggedGroup::Event(EventReport {
            position: basic(rng),
            payload: EventPayload::LateralDeviation(rng.gen_range(i16::MIN as i64..=i16::MAX as i64) as f64 / 8.0),
        }),
        Tag::VerticalRateChange => TaggedGroup::Event(EventReport {
            position: basic(rng),
            payload: EventPayload::VerticalRateChange(vertical_speed(rng)),
        }),
        Tag::AltitudeRange => TaggedGroup::Event(EventReport {
            position: basic(rng),
            payload: EventPayload::AltitudeRange(rng.gen_range(i16::MIN as i64..=i16::MAX as i64) as f64 * 4.0),
        }),
        Tag::WaypointChange => TaggedGroup::Event(EventReport {
            position: basic(rng),
            payload: EventPayload::WaypointChange(text(rng, 5)),
        }),
        Tag::FlightId => TaggedGroup::FlightId { callsign: text(rng, 8) },
        Tag::PredictedRoute => TaggedGroup::PredictedRoute(PredictedRoute {
            next: route_point(rng),
            next_plus_one: route_point(rng),
        }),
        Tag::EarthReference => TaggedGroup::EarthReference(EarthReferenceData {
            true_track_deg: angle(rng),
            ground_speed_kn: half_knots(rng),
            vertical_speed_fpm: vertical_speed(rng),
        }),
        Tag::AirReference => TaggedGroup::AirReference(AirReferenceData {
            true_heading_deg: angle(rng),
            mach: rng.gen_range(1..=2400i64) as f64 / 2000.0,
            vertical_speed_fpm: vertical_speed(rng),
        }),
        Tag::Meteorological => TaggedGroup::Meteorological(MeteorologicalData {
            wind_speed_kn: half_knots(rng),
            wind_direction_deg: angle(rng),
            temperature_c: rng.gen_range(-396..=240i64) as f64 / 4.0,
        }),
        Tag::AirframeId => TaggedGroup::AirframeId {
            icao24: rng.gen_range(0..=0xFF_FFFF),
        },
        Tag::IntermediateIntent => TaggedGroup::Intent(IntentGroup::Intermediate {
            distance_nm: rng.gen_range(0..=u16::MAX as i64) as f64 / 8.0,
            true_track_deg: angle(rng),
            altitude_ft: alt(rng),
            eta_s: rng.gen(),
        }),
        Tag::FixedIntent => TaggedGroup::Intent(IntentGroup::Fixed {
            latitude: lat(rng),
            longitude: lon(rng),
            altitude_ft: alt(rng),
            eta_s: rng.gen(),
        }),
    }
}

/// A report of 1 to 6 groups with distinct tags in random order.
pub fn report<R: Rng>(rng: &mut R) -> AdscReport {
    let n = rng.gen_range(1..=6);
    let tags: Vec<Tag> = Tag::ALL.choose_multiple(rng, n).copied().collect();
    AdscReport::new(tags.into_iter().map(|t| group(rng, t)).collect())
}

use adsc_core::geo::{crossings_by_samples, gc_interpolate, CountryPolygons, Polygon};
use adsc_core::trajectory::{FusedSample, FusedTrajectory, Provenance};
use std::collections::BTreeSet;

/// Countries hit by the trajectory sampled every second along each
/// great-circle leg.
pub fn dense_crossings(traj: &FusedTrajectory, polygons: &CountryPolygons) -> BTreeSet<String> {
    let mut dense = Vec::new();
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let steps = (b.t - a.t).ceil() as usize;
        for k in 0..steps {
            let f = k as f64 / steps as f64;
            let p = gc_interpolate(a.point(), b.point(), f).unwrap();
            dense.push(sample(a.t + f * (b.t - a.t), p.lat, p.lon));
        }
    }
    dense.extend(traj.samples.last().cloned());
    crossings_by_samples(&FusedTrajectory::new(dense), polygons)
}

pub fn sample(t: f64, lat: f64, lon: f64) -> FusedSample {
    FusedSample {
        t,
        lat,
        lon,
        alt_ft: Some(36_000.0),
        provenance: Provenance::Adsc,
    }
}

/// Abutting 5 x 5 degree cells over [-20, 20] x [-10, 10], plus cells
/// either side of the antimeridian.
pub fn grid_atlas() -> CountryPolygons {
    let mut atlas = CountryPolygons::new();
    for i in 0..8 {
        for j in 0..4 {
            let lon0 = -20.0 + 5.0 * i as f64;
            let lat0 = -10.0 + 5.0 * j as f64;
            atlas.insert(
                format!("G{i}{j}"),
                Polygon::rectangle(lon0, lat0, lon0 + 5.0, lat0 + 5.0),
            );
        }
    }
    for j in 0..4 {
        let lat0 = -10.0 + 5.0 * j as f64;
        atlas.insert(format!("E{j}"), Polygon::rectangle(172.0, lat0, 180.0, lat0 + 5.0));
        atlas.insert(format!("W{j}"), Polygon::rectangle(-180.0, lat0, -172.0, lat0 + 5.0));
    }
    atlas
}
