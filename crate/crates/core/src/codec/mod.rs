//! ADS-C downlink report codec.
//!
//! A report is an ordered list of tagged groups. The byte layout is
//! documented in `FORMAT.md` at the repository root; this module holds the
//! decoded representation, [`wire`] does the byte work and [`quantize`]
//! exposes the position grid.

pub mod quantize;
pub mod wire;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use quantize::{quantize_position, ALT_STEP_FT, LATLON_STEP_DEG};
pub use wire::{decode_frame, decode_payload, encode_report};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("empty payload")]
    EmptyPayload,
    #[error("unknown tag {0:02}")]
    UnknownTag(u8),
    #[error("truncated group {tag:02}: needed {needed} bytes, {available} available")]
    TruncatedGroup { tag: u8, needed: usize, available: usize },
    #[error("field {field} of group {tag:02} out of range")]
    FieldOutOfRange { tag: u8, field: &'static str },
    #[error("tag {0:02} appears more than once")]
    DuplicateTag(u8),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("{field} out of range: {value}")]
    OutOfRange { field: &'static str, value: f64 },
}

impl CodecError {
    /// Stable short name, used for per-class error counters.
    pub fn class(&self) -> &'static str {
        match self {
            CodecError::EmptyPayload => "empty_payload",
            CodecError::UnknownTag(_) => "unknown_tag",
            CodecError::TruncatedGroup { .. } => "truncated_group",
            CodecError::FieldOutOfRange { .. } => "field_out_of_range",
            CodecError::DuplicateTag(_) => "duplicate_tag",
            CodecError::InvariantViolation(_) => "invariant_violation",
            CodecError::OutOfRange { .. } => "out_of_range",
        }
    }
}

pub type Result<T> = std::result::Result<T, CodecError>;

/// The closed set of downlink group tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Tag {
    Acknowledgement = 3,
    NegativeAcknowledgement = 4,
    Noncompliance = 5,
    Basic = 7,
    EmergencyBasic = 9,
    LateralDeviation = 10,
    FlightId = 12,
    PredictedRoute = 13,
    EarthReference = 14,
    AirReference = 15,
    Meteorological = 16,
    AirframeId = 17,
    VerticalRateChange = 18,
    AltitudeRange = 19,
    WaypointChange = 20,
    IntermediateIntent = 22,
    FixedIntent = 23,
}

impl Tag {
    pub const ALL: [Tag; 17] = [
        Tag::Acknowledgement,
        Tag::NegativeAcknowledgement,
        Tag::Noncompliance,
        Tag::Basic,
        Tag::EmergencyBasic,
        Tag::LateralDeviation,
        Tag::FlightId,
        Tag::PredictedRoute,
        Tag::EarthReference,
        Tag::AirReference,
        Tag::Meteorological,
        Tag::AirframeId,
        Tag::VerticalRateChange,
        Tag::AltitudeRange,
        Tag::WaypointChange,
        Tag::IntermediateIntent,
        Tag::FixedIntent,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    /// Body length in bytes, excluding the tag byte.
    pub fn body_len(self) -> usize {
        match self {
            Tag::Acknowledgement | Tag::Noncompliance => 1,
            Tag::NegativeAcknowledgement => 2,
            Tag::Basic => POSITION_LEN,
            Tag::EmergencyBasic => POSITION_LEN + 1,
            Tag::LateralDeviation | Tag::VerticalRateChange | Tag::AltitudeRange => POSITION_LEN + 2,
            Tag::WaypointChange => POSITION_LEN + WAYPOINT_LEN,
            Tag::FlightId => CALLSIGN_LEN,
            Tag::PredictedRoute => 20,
            Tag::EarthReference | Tag::AirReference | Tag::Meteorological => 6,
            Tag::AirframeId => 3,
            Tag::IntermediateIntent => 8,
            Tag::FixedIntent => 10,
        }
    }

    /// Whether groups with this tag carry an aircraft position fix.
    pub fn carries_position(self) -> bool {
        matches!(
            self,
            Tag::Basic
                | Tag::EmergencyBasic
                | Tag::LateralDeviation
                | Tag::VerticalRateChange
                | Tag::AltitudeRange
                | Tag::WaypointChange
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::Acknowledgement => "acknowledgement",
            Tag::NegativeAcknowledgement => "negative_acknowledgement",
            Tag::Noncompliance => "noncompliance",
            Tag::Basic => "basic_report",
            Tag::EmergencyBasic => "emergency_basic_report",
            Tag::LateralDeviation => "lateral_deviation_event",
            Tag::FlightId => "flight_id",
            Tag::PredictedRoute => "predicted_route",
            Tag::EarthReference => "earth_reference",
            Tag::AirReference => "air_reference",
            Tag::Meteorological => "meteorological",
            Tag::AirframeId => "airframe_id",
            Tag::VerticalRateChange => "vertical_rate_change_event",
            Tag::AltitudeRange => "altitude_range_event",
            Tag::WaypointChange => "waypoint_change_event",
            Tag::IntermediateIntent => "intermediate_intent",
            Tag::FixedIntent => "fixed_intent",
        }
    }
}

impl TryFrom<u8> for Tag {
    type Error = CodecError;

    fn try_from(n: u8) -> Result<Self> {
        Tag::ALL
            .iter()
            .copied()
            .find(|t| t.number() == n)
            .ok_or(CodecError::UnknownTag(n))
    }
}

pub(crate) const POSITION_LEN: usize = 11;
pub(crate) const CALLSIGN_LEN: usize = 8;
pub(crate) const WAYPOINT_LEN: usize = 5;

/// Transport the frame arrived over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    #[default]
    Satellite,
    Other,
}

/// An undecoded downlink as captured at the ground side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFrame {
    pub payload: Vec<u8>,
    /// Reception time, epoch seconds.
    pub received_at: f64,
    pub atsu: String,
    pub channel: Channel,
}

/// 2000-01-01T00:00:00Z
pub const EPOCH_MIN: f64 = 946_684_800.0;
/// 2100-01-01T00:00:00Z
pub const EPOCH_MAX: f64 = 4_102_444_800.0;

impl RawFrame {
    pub fn new(payload: Vec<u8>, received_at: f64, atsu: impl Into<String>) -> Self {
        RawFrame {
            payload,
            received_at,
            atsu: atsu.into(),
            channel: Channel::Satellite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.payload.is_empty() {
            return Err(CodecError::EmptyPayload);
        }
        if !(EPOCH_MIN..EPOCH_MAX).contains(&self.received_at) {
            return Err(CodecError::OutOfRange {
                field: "received_at",
                value: self.received_at,
            });
        }
        Ok(())
    }
}

/// Positional accuracy class (0-7) and TCAS status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FigureOfMerit {
    pub accuracy: u8,
    pub tcas_operational: bool,
}

/// Position fix shared by the basic report and all event reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicReport {
    pub latitude: f64,
    pub longitude: f64,
    pub altitude_ft: f64,
    /// Seconds past the hour.
    pub time_of_report: u16,
    pub figure_of_merit: FigureOfMerit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EmergencyStatus {
    General = 0,
    Medical = 1,
    MinimumFuel = 2,
    CommunicationsFailure = 3,
    UnlawfulInterference = 4,
    Downed = 5,
}

impl EmergencyStatus {
    pub const ALL: [EmergencyStatus; 6] = [
        EmergencyStatus::General,
        EmergencyStatus::Medical,
        EmergencyStatus::MinimumFuel,
        EmergencyStatus::CommunicationsFailure,
        EmergencyStatus::UnlawfulInterference,
        EmergencyStatus::Downed,
    ];

    pub fn from_raw(raw: u8) -> Option<Self> {
        Self::ALL.get(raw as usize).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergencyBasicReport {
    pub report: BasicReport,
    pub status: EmergencyStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LateralDeviation,
    VerticalRateChange,
    AltitudeRange,
    WaypointChange,
}

impl EventKind {
    pub fn tag(self) -> Tag {
        match self {
            EventKind::LateralDeviation => Tag::LateralDeviation,
            EventKind::VerticalRateChange => Tag::VerticalRateChange,
            EventKind::AltitudeRange => Tag::AltitudeRange,
            EventKind::WaypointChange => Tag::WaypointChange,
        }
    }
}

/// Kind-specific value carried by an event report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EventPayload {
    /// Signed deviation from the cleared route, NM.
    LateralDeviation(f64),
    /// Vertical rate, ft/min.
    VerticalRateChange(f64),
    /// Deviation outside the contracted altitude band, ft.
    AltitudeRange(f64),
    /// Name of the waypoint that triggered the change.
    WaypointChange(String),
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::LateralDeviation(_) => EventKind::LateralDeviation,
            EventPayload::VerticalRateChange(_) => EventKind::VerticalRateChange,
            EventPayload::AltitudeRange(_) => EventKind::AltitudeRange,
            EventPayload::WaypointChange(_) => EventKind::WaypointChange,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub position: BasicReport,
    pub payload: EventPayload,
}

impl EventReport {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePoint {
    pub latitude: f64,
    pub longitude: f64,
    pub eta_s: u16,
    pub altitude_ft: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedRoute {
    pub next: RoutePoint,
    pub next_plus_one: RoutePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarthReferenceData {
    pub true_track_deg: f64,
    pub ground_speed_kn: f64,
    pub vertical_speed_fpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirReferenceData {
    pub true_heading_deg: f64,
    pub mach: f64,
    pub vertical_speed_fpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteorologicalData {
    pub wind_speed_kn: f64,
    pub wind_direction_deg: f64,
    pub temperature_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntentGroup {
    Intermediate {
        distance_nm: f64,
        true_track_deg: f64,
        altitude_ft: f64,
        eta_s: u16,
    },
    Fixed {
        latitude: f64,
        longitude: f64,
        altitude_ft: f64,
        eta_s: u16,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolGroup {
    Ack { contract: u8 },
    Nack { contract: u8, reason: u8 },
    Noncompliance { contract: u8 },
}

/// One decoded group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "group", rename_all = "snake_case")]
pub enum TaggedGroup {
    Protocol(ProtocolGroup),
    Basic(BasicReport),
    Emergency(EmergencyBasicReport),
    Event(EventReport),
    FlightId { callsign: String },
    PredictedRoute(PredictedRoute),
    EarthReference(EarthReferenceData),
    AirReference(AirReferenceData),
    Meteorological(MeteorologicalData),
    AirframeId { icao24: u32 },
    Intent(IntentGroup),
}

impl TaggedGroup {
    pub fn tag(&self) -> Tag {
        match self {
            TaggedGroup::Protocol(ProtocolGroup::Ack { .. }) => Tag::Acknowledgement,
            TaggedGroup::Protocol(ProtocolGroup::Nack { .. }) => Tag::NegativeAcknowledgement,
            TaggedGroup::Protocol(ProtocolGroup::Noncompliance { .. }) => Tag::Noncompliance,
            TaggedGroup::Basic(_) => Tag::Basic,
            TaggedGroup::Emergency(_) => Tag::EmergencyBasic,
            TaggedGroup::Event(e) => e.kind().tag(),
            TaggedGroup::FlightId { .. } => Tag::FlightId,
            TaggedGroup::PredictedRoute(_) => Tag::PredictedRoute,
            TaggedGroup::EarthReference(_) => Tag::EarthReference,
            TaggedGroup::AirReference(_) => Tag::AirReference,
            TaggedGroup::Meteorological(_) => Tag::Meteorological,
            TaggedGroup::AirframeId { .. } => Tag::AirframeId,
            TaggedGroup::Intent(IntentGroup::Intermediate { .. }) => Tag::IntermediateIntent,
            TaggedGroup::Intent(IntentGroup::Fixed { .. }) => Tag::FixedIntent,
        }
    }

    /// The position fix carried by this group, if any.
    pub fn position(&self) -> Option<&BasicReport> {
        match self {
            TaggedGroup::Basic(b) => Some(b),
            TaggedGroup::Emergency(e) => Some(&e.report),
            TaggedGroup::Event(e) => Some(&e.position),
            _ => None,
        }
    }
}

/// A decoded downlink report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdscReport {
    pub groups: Vec<TaggedGroup>,
}

impl AdscReport {
    pub fn new(groups: Vec<TaggedGroup>) -> Self {
        AdscReport { groups }
    }

    /// ICAO address from the airframe identification group.
    pub fn icao24(&self) -> Option<u32> {
        self.groups.iter().find_map(|g| match g {
            TaggedGroup::AirframeId { icao24 } => Some(*icao24),
            _ => None,
        })
    }

    /// Callsign from the flight ID group.
    pub fn callsign(&self) -> Option<&str> {
        self.groups.iter().find_map(|g| match g {
            TaggedGroup::FlightId { callsign } => Some(callsign.as_str()),
            _ => None,
        })
    }

    pub fn tags(&self) -> impl Iterator<Item = Tag> + '_ {
        self.groups.iter().map(TaggedGroup::tag)
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags().any(|t| t == tag)
    }

    /// Groups carrying a position, in report order.
    pub fn positions(&self) -> impl Iterator<Item = (Tag, &BasicReport)> + '_ {
        self.groups.iter().filter_map(|g| g.position().map(|p| (g.tag(), p)))
    }
}

/// Render an ICAO address as six lowercase hex digits.
pub fn icao_to_hex(icao: u32) -> String {
    format!("{:06x}", icao & 0xFF_FFFF)
}

pub fn icao_from_hex(s: &str) -> Option<u32> {
    let s = s.trim();
    if s.is_empty() || s.len() > 6 {
        return None;
    }
    u32::from_str_radix(s, 16).ok()
}
