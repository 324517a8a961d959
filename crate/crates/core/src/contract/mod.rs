//! ADS-C contract simulator.
//!
//! Contracts are negotiated against a [`TruthTrajectory`]; running the
//! simulation yields the downlink frames an aircraft flying that truth would
//! send. The output is the ground-truth oracle for the fusion pipeline.

pub mod scenario;
pub mod truth;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atmosphere::{isa_temperature_k, mach_from_tas};
use crate::codec::quantize::{
    quantize_altitude, quantize_latitude, quantize_longitude, snap, ALT_DEVIATION, ANGLE, EIGHTH_NM, HALF_KNOT, MACH,
    TEMPERATURE, VERTICAL_SPEED,
};
use crate::codec::{
    encode_report, AdscReport, AirReferenceData, BasicReport, CodecError, EarthReferenceData, EmergencyBasicReport,
    EmergencyStatus, EventPayload, EventReport, FigureOfMerit, IntentGroup, MeteorologicalData, PredictedRoute,
    ProtocolGroup, RawFrame, RoutePoint, TaggedGroup,
};
use crate::geo::{cross_track_km, distance_to_arc_km, gc_distance, initial_bearing, GeoError, GeoPoint};
use crate::trajectory::KM_PER_NM;

pub use truth::{RouteSpec, TruthFix, TruthTrajectory, Waypoint};

pub const DEFAULT_PERIODIC_INTERVAL_S: f64 = 900.0;
pub const DEFAULT_EMERGENCY_INTERVAL_S: f64 = 300.0;
/// Distance within which a waypoint counts as sequenced when passed.
pub const WAYPOINT_CAPTURE_NM: f64 = 25.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("contract number {0} already in use")]
    DuplicateContractNumber(u8),
    #[error("invalid contract: {0}")]
    InvalidContract(String),
    #[error("truth spans {duration} s, shorter than the {needed} s interval")]
    TruthTooShort { duration: f64, needed: f64 },
    #[error("invalid truth trajectory: {0}")]
    InvalidTruth(String),
    #[error("no contract with number {0}")]
    UnknownContract(u8),
    #[error("contract {0} is not a demand contract")]
    NotDemand(u8),
    #[error("demand contract {0} was already polled")]
    AlreadyPolled(u8),
    #[error("poll time {0} outside the truth trajectory")]
    PollOutOfRange(f64),
    #[error("invalid degradation parameters: {0}")]
    InvalidDegradation(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventTrigger {
    AltitudeRange { low_ft: f64, high_ft: f64 },
    WaypointChange,
    VerticalRateChange { threshold_fpm: f64 },
    LateralDeviation { threshold_nm: f64 },
}

impl EventTrigger {
    fn is_supported(&self) -> bool {
        match *self {
            EventTrigger::AltitudeRange { low_ft, high_ft } => low_ft < high_ft,
            EventTrigger::WaypointChange => true,
            EventTrigger::VerticalRateChange { threshold_fpm } => threshold_fpm > 0.0,
            EventTrigger::LateralDeviation { threshold_nm } => threshold_nm > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContractKind {
    Periodic { interval_s: f64 },
    Event { triggers: Vec<EventTrigger> },
    Demand,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractMode {
    #[default]
    Normal,
    /// Reports every `interval_s` from `from_offset_s` after truth start.
    Emergency { interval_s: f64, from_offset_s: f64 },
}

/// Optional groups appended to every report a contract produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportContent {
    pub flight_id: bool,
    pub airframe_id: bool,
    pub predicted_route: bool,
    pub earth_reference: bool,
    pub air_reference: bool,
    pub meteorological: bool,
    pub intent: bool,
}

impl Default for ReportContent {
    fn default() -> Self {
        ReportContent {
            flight_id: true,
            airframe_id: true,
            predicted_route: true,
            earth_reference: true,
            air_reference: false,
            meteorological: false,
            intent: false,
        }
    }
}

impl ReportContent {
    pub fn all() -> Self {
        ReportContent {
            flight_id: true,
            airframe_id: true,
            predicted_route: true,
            earth_reference: true,
            air_reference: true,
            meteorological: true,
            intent: true,
        }
    }

    pub fn minimal() -> Self {
        ReportContent {
            flight_id: false,
            airframe_id: false,
            predicted_route: false,
            earth_reference: false,
            air_reference: false,
            meteorological: false,
            intent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub contract_number: u8,
    #[serde(flatten)]
    pub kind: ContractKind,
    pub atsu: String,
    #[serde(default)]
    pub mode: ContractMode,
    #[serde(default)]
    pub content: ReportContent,
}

impl Contract {
    pub fn periodic(number: u8, atsu: &str, interval_s: f64) -> Self {
        Contract {
            contract_number: number,
            kind: ContractKind::Periodic { interval_s },
            atsu: atsu.into(),
            mode: ContractMode::Normal,
            content: ReportContent::default(),
        }
    }

    pub fn event(number: u8, atsu: &str, triggers: Vec<EventTrigger>) -> Self {
        Contract {
            contract_number: number,
            kind: ContractKind::Event { triggers },
            atsu: atsu.into(),
            mode: ContractMode::Normal,
            content: ReportContent::default(),
        }
    }

    pub fn demand(number: u8, atsu: &str) -> Self {
        Contract {
            contract_number: number,
            kind: ContractKind::Demand,
            atsu: atsu.into(),
            mode: ContractMode::Normal,
            content: ReportContent::default(),
        }
    }

    pub fn with_emergency(mut self, interval_s: f64, from_offset_s: f64) -> Self {
        self.mode = ContractMode::Emergency {
            interval_s,
            from_offset_s,
        };
        self
    }

    pub fn with_content(mut self, content: ReportContent) -> Self {
        self.content = content;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidContract(m));
        if self.contract_number == 0 {
            return bad("contract number must be positive".into());
        }
        let normal = match self.kind {
            ContractKind::Periodic { interval_s } if !(interval_s > 0.0) => {
                return bad(format!("periodic interval {interval_s} must be positive"));
            }
            ContractKind::Periodic { interval_s } => Some(interval_s),
            _ => None,
        };
        if let ContractMode::Emergency { interval_s, .. } = self.mode {
            let Some(normal) = normal else {
                return bad("emergency mode requires a periodic contract".into());
            };
            if !(interval_s > 0.0 && interval_s < normal) {
                return bad(format!(
                    "emergency interval {interval_s} must be positive and below {normal}"
                ));
            }
        }
        Ok(())
    }
}

/// Identity the simulated aircraft reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aircraft {
    pub callsign: String,
    pub icao24: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContractHandle {
    pub contract_number: u8,
    /// False when the aircraft answered with a noncompliance notification.
    pub accepted: bool,
}

/// One downlink frame and the instant it left the aircraft.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Emission {
    pub frame: RawFrame,
    pub emission_time: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationOutput {
    pub emissions: Vec<Emission>,
    /// Number of frames carrying each tag, counted as groups were built.
    pub ledger: BTreeMap<u8, u64>,
}

struct Registered {
    contract: Contract,
    accepted: bool,
    polled_at: Option<f64>,
}

struct Pending {
    t: f64,
    order: usize,
    atsu: String,
    groups: Vec<TaggedGroup>,
}

pub struct Simulator {
    truth: TruthTrajectory,
    aircraft: Aircraft,
    contracts: Vec<Registered>,
    protocol: Vec<Pending>,
}

impl Simulator {
    pub fn new(truth: TruthTrajectory, aircraft: Aircraft) -> Self {
        Simulator {
            truth,
            aircraft,
            contracts: Vec::new(),
            protocol: Vec::new(),
        }
    }

    pub fn truth(&self) -> &TruthTrajectory {
        &self.truth
    }

    /// Register a contract. Queues an acknowledgement, or a noncompliance
    /// notification when the aircraft cannot honor the requested triggers.
    pub fn establish_contract(&mut self, contract: Contract) -> Result<ContractHandle> {
        contract.validate()?;
        let number = contract.contract_number;
        if self.contracts.iter().any(|c| c.contract.contract_number == number) {
            return Err(SimError::DuplicateContractNumber(number));
        }
        let accepted = match &contract.kind {
            ContractKind::Event { triggers } => !triggers.is_empty() && triggers.iter().all(EventTrigger::is_supported),
            _ => true,
        };
        let group = if accepted {
            ProtocolGroup::Ack { contract: number }
        } else {
            ProtocolGroup::Noncompliance { contract: number }
        };
        self.protocol.push(Pending {
            t: self.truth.start(),
            order: self.protocol.len(),
            atsu: contract.atsu.clone(),
            groups: vec![TaggedGroup::Protocol(group)],
        });
        self.contracts.push(Registered {
            contract,
            accepted,
            polled_at: None,
        });
        Ok(ContractHandle {
            contract_number: number,
            accepted,
        })
    }

    /// Request the single report of a demand contract at time `t`.
    pub fn poll(&mut self, handle: ContractHandle, t: f64) -> Result<()> {
        let (start, end) = (self.truth.start(), self.truth.end());
        let reg = self
            .contracts
            .iter_mut()
            .find(|c| c.contract.contract_number == handle.contract_number)
            .ok_or(SimError::UnknownContract(handle.contract_number))?;
        if reg.contract.kind != ContractKind::Demand {
            return Err(SimError::NotDemand(handle.contract_number));
        }
        if reg.polled_at.is_some() {
            return Err(SimError::AlreadyPolled(handle.contract_number));
        }
        if t < start || t > end {
            return Err(SimError::PollOutOfRange(t));
        }
        reg.polled_at = Some(t);
        Ok(())
    }

    /// Generate every frame the registered contracts produce over the truth.
    pub fn run(self) -> Result<SimulationOutput> {
        let duration = self.truth.duration();
        for reg in &self.contracts {
            if let ContractKind::Periodic { interval_s } = reg.contract.kind {
                if duration < interval_s {
                    return Err(SimError::TruthTooShort {
                        duration,
                        needed: interval_s,
                    });
                }
            }
        }
        let builder = ReportBuilder::new(&self.truth, &self.aircraft);
        let mut pending: Vec<Pending> = self.protocol;
        let mut order = pending.len();
        for reg in self.contracts.iter().filter(|r| r.accepted) {
            let c = &reg.contract;
            let mut push = |t: f64, groups: Vec<TaggedGroup>| {
                pending.push(Pending {
                    t,
                    order,
                    atsu: c.atsu.clone(),
                    groups,
                });
                order += 1;
            };
            match &c.kind {
                ContractKind::Periodic { interval_s } => {
                    for (t, emergency) in periodic_schedule(self.truth.start(), self.truth.end(), *interval_s, c.mode) {
                        push(t, builder.periodic(t, emergency, &c.content));
                    }
                }
                ContractKind::Event { triggers } => {
                    let mut events: Vec<(f64, EventPayload)> = triggers
                        .iter()
                        .flat_map(|trig| detect_events(&self.truth, trig))
                        .collect();
                    events.sort_by(|a, b| a.0.total_cmp(&b.0));
                    for (t, payload) in events {
                        push(t, builder.event(t, payload, &c.content));
                    }
                }
                ContractKind::Demand => {
                    if let Some(t) = reg.polled_at {
                        push(t, builder.periodic(t, false, &c.content));
                    }
                }
            }
        }
        pending.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.order.cmp(&b.order)));

        let mut out = SimulationOutput::default();
        for p in pending {
            let report = AdscReport::new(p.groups);
            for tag in report.tags() {
                *out.ledger.entry(tag.number()).or_default() += 1;
            }
            let payload = encode_report(&report)?;
            out.emissions.push(Emission {
                frame: RawFrame::new(payload, p.t, p.atsu),
                emission_time: p.t,
            });
        }
        Ok(out)
    }
}

/// Establish every contract and run. Demand contracts stay silent since
/// nothing polls them.
pub fn run_simulation(
    truth: TruthTrajectory,
    aircraft: Aircraft,
    contracts: Vec<Contract>,
) -> Result<SimulationOutput> {
    let mut sim = Simulator::new(truth, aircraft);
    for c in contracts {
        sim.establish_contract(c)?;
    }
    sim.run()
}

/// Emission instants of a periodic contract, each flagged with whether the
/// contract is in emergency mode at that instant.
pub fn periodic_schedule(start: f64, end: f64, interval_s: f64, mode: ContractMode) -> Vec<(f64, bool)> {
    const EPS: f64 = 1e-6;
    let switch_at = match mode {
        ContractMode::Normal => f64::INFINITY,
        ContractMode::Emergency { from_offset_s, .. } => start + from_offset_s.max(0.0),
    };
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = start + k as f64 * interval_s;
        if t >= switch_at || t > end + EPS {
            break;
        }
        out.push((t, false));
        k += 1;
    }
    if let ContractMode::Emergency { interval_s: e, .. } = mode {
        let mut k = 0u64;
        loop {
            let t = switch_at + k as f64 * e;
            if t > end + EPS {
                break;
            }
            out.push((t, true));
            k += 1;
        }
    }
    out
}

/// Emission instants for one trigger, evaluated at truth-fix granularity
/// with sub-step crossing times interpolated linearly. Fires only on a
/// false-to-true transition.
pub fn detect_events(truth: &TruthTrajectory, trigger: &EventTrigger) -> Vec<(f64, EventPayload)> {
    let fixes = truth.fixes();
    let mut out = Vec::new();
    match *trigger {
        EventTrigger::AltitudeRange { low_ft, high_ft } => {
            let outside = |a: f64| a < low_ft || a > high_ft;
            for w in fixes.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                if outside(a.alt_ft) || !outside(b.alt_ft) {
                    continue;
                }
                let bound = if b.alt_ft > high_ft { high_ft } else { low_ft };
                let f = (bound - a.alt_ft) / (b.alt_ft - a.alt_ft);
                let t = a.t + f.clamp(0.0, 1.0) * (b.t - a.t);
                let (_, alt) = truth
                    .state_at(t.floor().max(truth.start()))
                    .unwrap_or((a.point(), a.alt_ft));
                out.push((t, EventPayload::AltitudeRange(snap(ALT_DEVIATION, alt - bound))));
            }
        }
        EventTrigger::VerticalRateChange { threshold_fpm } => {
            let rates: Vec<f64> = fixes
                .windows(2)
                .map(|w| (w[1].alt_ft - w[0].alt_ft) / (w[1].t - w[0].t) * 60.0)
                .collect();
            for i in 1..rates.len() {
                if rates[i - 1].abs() <= threshold_fpm && rates[i].abs() > threshold_fpm {
                    let rate = snap(VERTICAL_SPEED, rates[i]).clamp(-32768.0 * 16.0, 32767.0 * 16.0);
                    out.push((fixes[i].t, EventPayload::VerticalRateChange(rate)));
                }
            }
        }
        EventTrigger::LateralDeviation { threshold_nm } => {
            let route = reference_route(truth);
            let dev: Vec<f64> = fixes.iter().map(|f| lateral_deviation_nm(&route, f.point())).collect();
            for i in 1..fixes.len() {
                let (da, db) = (dev[i - 1], dev[i]);
                if da.abs() > threshold_nm || db.abs() <= threshold_nm {
                    continue;
                }
                let target = threshold_nm * db.signum();
                let f = if db != da { (target - da) / (db - da) } else { 1.0 };
                let t = fixes[i - 1].t + f.clamp(0.0, 1.0) * (fixes[i].t - fixes[i - 1].t);
                let (p, _) = truth
                    .state_at(t.floor().max(truth.start()))
                    .unwrap_or((fixes[i].point(), 0.0));
                let nm = snap(EIGHTH_NM, lateral_deviation_nm(&route, p)).clamp(-4096.0, 4095.875);
                out.push((t, EventPayload::LateralDeviation(nm)));
            }
        }
        EventTrigger::WaypointChange => {
            let mut active = 0usize;
            let waypoints = truth.waypoints();
            let mut prev_ahead: Option<f64> = None;
            for (i, f) in fixes.iter().enumerate() {
                let Some(wp) = waypoints.get(active) else {
                    break;
                };
                let d_km = gc_distance(f.point(), wp.point());
                let rel = (initial_bearing(f.point(), wp.point()) - f.track_deg).to_radians();
                let along = d_km * rel.cos();
                if let Some(prev) = prev_ahead {
                    if prev > 0.0 && along <= 0.0 && d_km <= WAYPOINT_CAPTURE_NM * KM_PER_NM {
                        let frac = prev / (prev - along);
                        let t = fixes[i - 1].t + frac.clamp(0.0, 1.0) * (f.t - fixes[i - 1].t);
                        out.push((t, EventPayload::WaypointChange(wp.name.clone())));
                        active += 1;
                        prev_ahead = None;
                        continue;
                    }
                }
                prev_ahead = Some(along);
            }
        }
    }
    out
}

/// Origin, generated waypoints, destination.
fn reference_route(truth: &TruthTrajectory) -> Vec<GeoPoint> {
    let fixes = truth.fixes();
    let mut route = vec![fixes[0].point()];
    route.extend(truth.waypoints().iter().map(Waypoint::point));
    route.push(fixes[fixes.len() - 1].point());
    route
}

/// Signed distance to the nearest leg of `route`, NM.
fn lateral_deviation_nm(route: &[GeoPoint], p: GeoPoint) -> f64 {
    route
        .windows(2)
        .map(|leg| {
            let d = distance_to_arc_km(p, leg[0], leg[1]);
            let sign = cross_track_km(p, leg[0], leg[1]).signum();
            (d, sign * d)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(0.0, |(_, signed)| signed / KM_PER_NM)
}

struct ReportBuilder<'a> {
    truth: &'a TruthTrajectory,
    aircraft: &'a Aircraft,
    waypoint_times: Vec<f64>,
}

impl<'a> ReportBuilder<'a> {
    fn new(truth: &'a TruthTrajectory, aircraft: &'a Aircraft) -> Self {
        // time of closest approach to each waypoint
        let waypoint_times = truth
            .waypoints()
            .iter()
            .map(|w| {
                truth
                    .fixes()
                    .iter()
                    .min_by(|a, b| gc_distance(a.point(), w.point()).total_cmp(&gc_distance(b.point(), w.point())))
                    .map_or(truth.end(), |f| f.t)
            })
            .collect();
        ReportBuilder {
            truth,
            aircraft,
            waypoint_times,
        }
    }

    /// Whole-second report time inside the truth span.
    fn report_time(&self, t: f64) -> f64 {
        t.floor().clamp(self.truth.start(), self.truth.end())
    }

    fn position(&self, t: f64) -> BasicReport {
        let rt = self.report_time(t);
        let (p, alt) = self.truth.state_at(rt).expect("report time clamped into truth span");
        BasicReport {
            latitude: quantize_latitude(p.lat),
            longitude: quantize_longitude(p.lon),
            altitude_ft: quantize_altitude(alt),
            time_of_report: (rt as i64).rem_euclid(3600) as u16,
            figure_of_merit: FigureOfMerit {
                accuracy: 7,
                tcas_operational: true,
            },
        }
    }

    fn periodic(&self, t: f64, emergency: bool, content: &ReportContent) -> Vec<TaggedGroup> {
        let basic = self.position(t);
        let mut groups = vec![if emergency {
            TaggedGroup::Emergency(EmergencyBasicReport {
                report: basic,
                status: EmergencyStatus::General,
            })
        } else {
            TaggedGroup::Basic(basic)
        }];
        self.extend(&mut groups, t, content);
        groups
    }

    fn event(&self, t: f64, payload: EventPayload, content: &ReportContent) -> Vec<TaggedGroup> {
        let mut groups = vec![TaggedGroup::Event(EventReport {
            position: self.position(t),
            payload,
        })];
        let identity = ReportContent {
            flight_id: content.flight_id,
            airframe_id: content.airframe_id,
            ..ReportContent::minimal()
        };
        self.extend(&mut groups, t, &identity);
        groups
    }

    fn extend(&self, groups: &mut Vec<TaggedGroup>, t: f64, content: &ReportContent) {
        let rt = self.report_time(t);
        let (p, alt) = self.truth.state_at(rt).expect("clamped");
        let (gs, track) = self.truth.kinematics_at(rt);
        let vs = self.truth.vertical_rate_at(rt);
        let vs_q = snap(VERTICAL_SPEED, vs).clamp(-32768.0 * 16.0, 32767.0 * 16.0);
        if content.flight_id {
            groups.push(TaggedGroup::FlightId {
                callsign: self.aircraft.callsign.clone(),
            });
        }
        if content.predicted_route {
            groups.push(TaggedGroup::PredictedRoute(self.predicted_route(rt)));
        }
        if content.earth_reference {
            groups.push(TaggedGroup::EarthReference(EarthReferenceData {
                true_track_deg: snap_angle(track),
                ground_speed_kn: snap(HALF_KNOT, gs).clamp(0.0, 32767.5),
                vertical_speed_fpm: vs_q,
            }));
        }
        if content.air_reference {
            let mach = snap(MACH, mach_from_tas(gs, alt)).clamp(0.0005, 1.2);
            groups.push(TaggedGroup::AirReference(AirReferenceData {
                true_heading_deg: snap_angle(track),
                mach,
                vertical_speed_fpm: vs_q,
            }));
        }
        if content.meteorological {
            let temp_c = isa_temperature_k(alt) - 273.15;
            groups.push(TaggedGroup::Meteorological(MeteorologicalData {
                wind_speed_kn: 0.0,
                wind_direction_deg: 0.0,
                temperature_c: snap(TEMPERATURE, temp_c).clamp(-99.0, 60.0),
            }));
        }
        if content.airframe_id {
            groups.push(TaggedGroup::AirframeId {
                icao24: self.aircraft.icao24 & 0xFF_FFFF,
            });
        }
        if content.intent {
            // ten minutes ahead, or the end of the flight
            let ahead_t = (rt + 600.0).min(self.truth.end());
            let (q, q_alt) = self.truth.state_at(ahead_t).expect("clamped");
            let eta_s = (ahead_t - rt) as u16;
            groups.push(TaggedGroup::Intent(IntentGroup::Intermediate {
                distance_nm: snap(EIGHTH_NM, gc_distance(p, q) / KM_PER_NM).min(8191.875),
                true_track_deg: snap_angle(initial_bearing(p, q)),
                altitude_ft: quantize_altitude(q_alt),
                eta_s,
            }));
        }
    }

    fn predicted_route(&self, rt: f64) -> PredictedRoute {
        let mut upcoming: Vec<(GeoPoint, f64)> = self
            .truth
            .waypoints()
            .iter()
            .zip(&self.waypoint_times)
            .filter(|(_, &wt)| wt > rt)
            .map(|(w, &wt)| (w.point(), wt))
            .collect();
        let last = self.truth.fixes().last().expect("non-empty truth");
        upcoming.push((last.point(), last.t));
        upcoming.push((last.point(), last.t));
        let point = |(p, wt): (GeoPoint, f64)| {
            let alt = self.truth.state_at(wt).map_or(last.alt_ft, |s| s.1);
            RoutePoint {
                latitude: quantize_latitude(p.lat),
                longitude: quantize_longitude(p.lon),
                eta_s: (wt - rt).clamp(0.0, u16::MAX as f64) as u16,
                altitude_ft: quantize_altitude(alt),
            }
        };
        PredictedRoute {
            next: point(upcoming[0]),
            next_plus_one: point(upcoming[1]),
        }
    }
}

fn snap_angle(deg: f64) -> f64 {
    let v = snap(ANGLE, deg.rem_euclid(360.0));
    if v >= 360.0 {
        0.0
    } else {
        v
    }
}

/// Drop and jitter frames to mimic imperfect satellite reception.
///
/// Each frame survives with probability `1 - loss_rate`; survivors get a
/// uniform time offset in `[-jitter_s, jitter_s]`. Output is re-sorted by
/// time and fully determined by `seed`.
pub fn degrade_stream(emissions: &[Emission], loss_rate: f64, jitter_s: f64, seed: u64) -> Result<Vec<Emission>> {
    if !(0.0..1.0).contains(&loss_rate) {
        return Err(SimError::InvalidDegradation(format!(
            "loss_rate {loss_rate} not in [0, 1)"
        )));
    }
    if !(jitter_s >= 0.0) {
        return Err(SimError::InvalidDegradation(format!("jitter_s {jitter_s} is negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(emissions.len());
    for e in emissions {
        let keep = rng.gen::<f64>() >= loss_rate;
        let offset = if jitter_s > 0.0 {
            rng.gen_range(-jitter_s..=jitter_s)
        } else {
            0.0
        };
        if keep {
            let mut e = e.clone();
            e.emission_time += offset;
            e.frame.received_at += offset;
            out.push(e);
        }
    }
    out.sort_by(|a, b| a.emission_time.total_cmp(&b.emission_time));
    Ok(out)
}
