//! Byte-level encoding of ADS-C reports.

use super::quantize::{
    Scale, ALTITUDE, ALT_DEVIATION, ALT_RAW_MAX, ANGLE, EIGHTH_NM, HALF_KNOT, LATLON, LAT_RAW_MAX, LAT_RAW_MIN,
    LON_RAW_MAX, LON_RAW_MIN, MACH, TEMPERATURE, VERTICAL_SPEED,
};
use super::*;

const MACH_RAW_MAX: i64 = 2400;
const TEMP_RAW_MIN: i64 = -396;
const TEMP_RAW_MAX: i64 = 240;

/// Decode a received frame into a report.
pub fn decode_frame(frame: &RawFrame) -> Result<AdscReport> {
    frame.validate()?;
    decode_payload(&frame.payload)
}

pub fn decode_payload(payload: &[u8]) -> Result<AdscReport> {
    if payload.is_empty() {
        return Err(CodecError::EmptyPayload);
    }
    let mut groups = Vec::new();
    let mut seen = [false; 32];
    let mut rest = payload;
    while let Some((&tag_byte, after)) = rest.split_first() {
        let tag = Tag::try_from(tag_byte)?;
        let needed = tag.body_len();
        if after.len() < needed {
            return Err(CodecError::TruncatedGroup {
                tag: tag_byte,
                needed,
                available: after.len(),
            });
        }
        if std::mem::replace(&mut seen[tag_byte as usize], true) {
            return Err(CodecError::DuplicateTag(tag_byte));
        }
        let (body, tail) = after.split_at(needed);
        let mut r = Reader {
            buf: body,
            tag: tag_byte,
        };
        groups.push(decode_group(tag, &mut r)?);
        debug_assert!(r.buf.is_empty());
        rest = tail;
    }
    Ok(AdscReport { groups })
}

/// Encode a report. Fails if any field is off-grid or out of range, or if
/// a tag repeats.
pub fn encode_report(report: &AdscReport) -> Result<Vec<u8>> {
    if report.groups.is_empty() {
        return Err(CodecError::InvariantViolation("report has no groups".into()));
    }
    let mut seen = [false; 32];
    let mut out = Vec::with_capacity(report.groups.len() * 12);
    for group in &report.groups {
        let tag = group.tag();
        if std::mem::replace(&mut seen[tag.number() as usize], true) {
            return Err(CodecError::InvariantViolation(format!(
                "tag {:02} appears more than once",
                tag.number()
            )));
        }
        out.push(tag.number());
        let start = out.len();
        let mut w = Writer {
            out: &mut out,
            tag: tag.number(),
        };
        encode_group(group, &mut w)?;
        debug_assert_eq!(out.len() - start, tag.body_len());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    tag: u8,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let (head, tail) = self.buf.split_at(N);
        self.buf = tail;
        head.try_into().expect("length checked by caller")
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u16(&mut self) -> u16 {
        u16::from_be_bytes(self.take())
    }

    fn i16(&mut self) -> i16 {
        i16::from_be_bytes(self.take())
    }

    fn u24(&mut self) -> u32 {
        let [a, b, c] = self.take::<3>();
        u32::from_be_bytes([0, a, b, c])
    }

    fn i24(&mut self) -> i32 {
        // sign-extend from bit 23
        ((self.u24() << 8) as i32) >> 8
    }

    fn out_of_range(&self, field: &'static str) -> CodecError {
        CodecError::FieldOutOfRange { tag: self.tag, field }
    }

    fn ranged(&self, raw: i64, min: i64, max: i64, field: &'static str) -> Result<i64> {
        if (min..=max).contains(&raw) {
            Ok(raw)
        } else {
            Err(self.out_of_range(field))
        }
    }

    fn latitude(&mut self) -> Result<f64> {
        let raw = self.i24() as i64;
        let raw = self.ranged(raw, LAT_RAW_MIN, LAT_RAW_MAX, "latitude")?;
        Ok(LATLON.value(raw))
    }

    fn longitude(&mut self) -> Result<f64> {
        let raw = self.i24() as i64;
        let raw = self.ranged(raw, LON_RAW_MIN, LON_RAW_MAX, "longitude")?;
        Ok(LATLON.value(raw))
    }

    fn altitude(&mut self) -> Result<f64> {
        let raw = self.u16() as i64;
        let raw = self.ranged(raw, 0, ALT_RAW_MAX, "altitude")?;
        Ok(ALTITUDE.value(raw))
    }

    fn unsigned(&mut self, scale: Scale) -> f64 {
        scale.value(self.u16() as i64)
    }

    fn signed(&mut self, scale: Scale) -> f64 {
        scale.value(self.i16() as i64)
    }

    fn contract(&mut self) -> Result<u8> {
        match self.u8() {
            0 => Err(self.out_of_range("contract_number")),
            n => Ok(n),
        }
    }

    fn text<const N: usize>(&mut self, field: &'static str) -> Result<String> {
        let bytes = self.take::<N>();
        let len = bytes.iter().rposition(|&b| b != b' ').map_or(0, |i| i + 1);
        let body = &bytes[..len];
        if body.is_empty() || !body.iter().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit()) {
            return Err(self.out_of_range(field));
        }
        Ok(String::from_utf8(body.to_vec()).expect("ascii checked"))
    }

    fn position(&mut self) -> Result<BasicReport> {
        let latitude = self.latitude()?;
        let longitude = self.longitude()?;
        let altitude_ft = self.altitude()?;
        let time_of_report = self.u16();
        if time_of_report >= 3600 {
            return Err(self.out_of_range("time_of_report"));
        }
        let fom = self.u8();
        if fom & 0xF0 != 0 {
            return Err(self.out_of_range("figure_of_merit"));
        }
        Ok(BasicReport {
            latitude,
            longitude,
            altitude_ft,
            time_of_report,
            figure_of_merit: FigureOfMerit {
                accuracy: fom & 0x07,
                tcas_operational: fom & 0x08 != 0,
            },
        })
    }

    fn route_point(&mut self) -> Result<RoutePoint> {
        let latitude = self.latitude()?;
        let longitude = self.longitude()?;
        let eta_s = self.u16();
        let altitude_ft = self.altitude()?;
        Ok(RoutePoint {
            latitude,
            longitude,
            eta_s,
            altitude_ft,
        })
    }
}

fn decode_group(tag: Tag, r: &mut Reader<'_>) -> Result<TaggedGroup> {
    let group = match tag {
        Tag::Acknowledgement => TaggedGroup::Protocol(ProtocolGroup::Ack {
            contract: r.contract()?,
        }),
        Tag::NegativeAcknowledgement => {
            let contract = r.contract()?;
            let reason = r.u8();
            TaggedGroup::Protocol(ProtocolGroup::Nack { contract, reason })
        }
        Tag::Noncompliance => TaggedGroup::Protocol(ProtocolGroup::Noncompliance {
            contract: r.contract()?,
        }),
        Tag::Basic => TaggedGroup::Basic(r.position()?),
        Tag::EmergencyBasic => {
            let report = r.position()?;
            let status = EmergencyStatus::from_raw(r.u8()).ok_or_else(|| r.out_of_range("emergency_status"))?;
            TaggedGroup::Emergency(EmergencyBasicReport { report, status })
        }
        Tag::LateralDeviation => {
            let position = r.position()?;
            let payload = EventPayload::LateralDeviation(r.signed(EIGHTH_NM));
            TaggedGroup::Event(EventReport { position, payload })
        }
        Tag::VerticalRateChange => {
            let position = r.position()?;
            let payload = EventPayload::VerticalRateChange(r.signed(VERTICAL_SPEED));
            TaggedGroup::Event(EventReport { position, payload })
        }
        Tag::AltitudeRange => {
            let position = r.position()?;
            let payload = EventPayload::AltitudeRange(r.signed(ALT_DEVIATION));
            TaggedGroup::Event(EventReport { position, payload })
        }
        Tag::WaypointChange => {
            let position = r.position()?;
            let payload = EventPayload::WaypointChange(r.text::<WAYPOINT_LEN>("waypoint")?);
            TaggedGroup::Event(EventReport { position, payload })
        }
        Tag::FlightId => TaggedGroup::FlightId {
            callsign: r.text::<CALLSIGN_LEN>("callsign")?,
        },
        Tag::PredictedRoute => TaggedGroup::PredictedRoute(PredictedRoute {
            next: r.route_point()?,
            next_plus_one: r.route_point()?,
        }),
        Tag::EarthReference => TaggedGroup::EarthReference(EarthReferenceData {
            true_track_deg: r.unsigned(ANGLE),
            ground_speed_kn: r.unsigned(HALF_KNOT),
            vertical_speed_fpm: r.signed(VERTICAL_SPEED),
        }),
        Tag::AirReference => {
            let true_heading_deg = r.unsigned(ANGLE);
            let raw = r.u16() as i64;
            let mach = MACH.value(r.ranged(raw, 1, MACH_RAW_MAX, "mach")?);
            TaggedGroup::AirReference(AirReferenceData {
                true_heading_deg,
                mach,
                vertical_speed_fpm: r.signed(VERTICAL_SPEED),
            })
        }
        Tag::Meteorological => {
            let wind_speed_kn = r.unsigned(HALF_KNOT);
            let wind_direction_deg = r.unsigned(ANGLE);
            let raw = r.i16() as i64;
            let raw = r.ranged(raw, TEMP_RAW_MIN, TEMP_RAW_MAX, "temperature")?;
            TaggedGroup::Meteorological(MeteorologicalData {
                wind_speed_kn,
                wind_direction_deg,
                temperature_c: TEMPERATURE.value(raw),
            })
        }
        Tag::AirframeId => TaggedGroup::AirframeId { icao24: r.u24() },
        Tag::IntermediateIntent => {
            let distance_nm = r.unsigned(EIGHTH_NM);
            let true_track_deg = r.unsigned(ANGLE);
            let altitude_ft = r.altitude()?;
            let eta_s = r.u16();
            TaggedGroup::Intent(IntentGroup::Intermediate {
                distance_nm,
                true_track_deg,
                altitude_ft,
                eta_s,
            })
        }
        Tag::FixedIntent => {
            let latitude = r.latitude()?;
            let longitude = r.longitude()?;
            let altitude_ft = r.altitude()?;
            let eta_s = r.u16();
            TaggedGroup::Intent(IntentGroup::Fixed {
                latitude,
                longitude,
                altitude_ft,
                eta_s,
            })
        }
    };
    Ok(group)
}

struct Writer<'a> {
    out: &'a mut Vec<u8>,
    tag: u8,
}

impl Writer<'_> {
    fn violation(&self, field: &str, value: impl std::fmt::Display) -> CodecError {
        CodecError::InvariantViolation(format!(
            "group {:02}: {field} = {value} is off-grid or out of range",
            self.tag
        ))
    }

    fn raw(&self, scale: Scale, v: f64, min: i64, max: i64, field: &str) -> Result<i64> {
        scale
            .exact_raw(v)
            .filter(|raw| (min..=max).contains(raw))
            .ok_or_else(|| self.violation(field, v))
    }

    fn u8(&mut self, v: u8) {
        self.out.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.out.extend_from_slice(&v.to_be_bytes());
    }

    fn i16(&mut self, v: i16) {
        self.out.extend_from_slice(&v.to_be_bytes());
    }

    fn u24(&mut self, v: u32) {
        self.out.extend_from_slice(&v.to_be_bytes()[1..]);
    }

    fn latitude(&mut self, v: f64) -> Result<()> {
        let raw = self.raw(LATLON, v, LAT_RAW_MIN, LAT_RAW_MAX, "latitude")?;
        self.u24(raw as u32 & 0xFF_FFFF);
        Ok(())
    }

    fn longitude(&mut self, v: f64) -> Result<()> {
        let raw = self.raw(LATLON, v, LON_RAW_MIN, LON_RAW_MAX, "longitude")?;
        self.u24(raw as u32 & 0xFF_FFFF);
        Ok(())
    }

    fn altitude(&mut self, v: f64) -> Result<()> {
        let raw = self.raw(ALTITUDE, v, 0, ALT_RAW_MAX, "altitude")?;
        self.u16(raw as u16);
        Ok(())
    }

    fn unsigned(&mut self, scale: Scale, v: f64, field: &str) -> Result<()> {
        let raw = self.raw(scale, v, 0, u16::MAX as i64, field)?;
        self.u16(raw as u16);
        Ok(())
    }

    fn signed(&mut self, scale: Scale, v: f64, field: &str) -> Result<()> {
        let raw = self.raw(scale, v, i16::MIN as i64, i16::MAX as i64, field)?;
        self.i16(raw as i16);
        Ok(())
    }

    fn contract(&mut self, n: u8) -> Result<()> {
        if n == 0 {
            return Err(self.violation("contract_number", n));
        }
        self.u8(n);
        Ok(())
    }

    fn text<const N: usize>(&mut self, s: &str, field: &str) -> Result<()> {
        let ok = !s.is_empty() && s.len() <= N && s.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
        if !ok {
            return Err(self.violation(field, format!("{s:?}")));
        }
        let mut buf = [b' '; N];
        buf[..s.len()].copy_from_slice(s.as_bytes());
        self.out.extend_from_slice(&buf);
        Ok(())
    }

    fn position(&mut self, p: &BasicReport) -> Result<()> {
        self.latitude(p.latitude)?;
        self.longitude(p.longitude)?;
        self.altitude(p.altitude_ft)?;
        if p.time_of_report >= 3600 {
            return Err(self.violation("time_of_report", p.time_of_report));
        }
        self.u16(p.time_of_report);
        let fom = p.figure_of_merit;
        if fom.accuracy > 7 {
            return Err(self.violation("figure_of_merit.accuracy", fom.accuracy));
        }
        self.u8(fom.accuracy | if fom.tcas_operational { 0x08 } else { 0 });
        Ok(())
    }

    fn route_point(&mut self, p: &RoutePoint) -> Result<()> {
        self.latitude(p.latitude)?;
        self.longitude(p.longitude)?;
        self.u16(p.eta_s);
        self.altitude(p.altitude_ft)
    }
}

fn encode_group(group: &TaggedGroup, w: &mut Writer<'_>) -> Result<()> {
    match group {
        TaggedGroup::Protocol(ProtocolGroup::Ack { contract })
        | TaggedGroup::Protocol(ProtocolGroup::Noncompliance { contract }) => w.contract(*contract),
        TaggedGroup::Protocol(ProtocolGroup::Nack { contract, reason }) => {
            w.contract(*contract)?;
            w.u8(*reason);
            Ok(())
        }
        TaggedGroup::Basic(b) => w.position(b),
        TaggedGroup::Emergency(e) => {
            w.position(&e.report)?;
            w.u8(e.status as u8);
            Ok(())
        }
        TaggedGroup::Event(e) => {
            w.position(&e.position)?;
            match &e.payload {
                EventPayload::LateralDeviation(nm) => w.signed(EIGHTH_NM, *nm, "lateral_deviation"),
                EventPayload::VerticalRateChange(fpm) => w.signed(VERTICAL_SPEED, *fpm, "vertical_rate"),
                EventPayload::AltitudeRange(ft) => w.signed(ALT_DEVIATION, *ft, "altitude_deviation"),
                EventPayload::WaypointChange(name) => w.text::<WAYPOINT_LEN>(name, "waypoint"),
            }
        }
        TaggedGroup::FlightId { callsign } => w.text::<CALLSIGN_LEN>(callsign, "callsign"),
        TaggedGroup::PredictedRoute(p) => {
            w.route_point(&p.next)?;
            w.route_point(&p.next_plus_one)
        }
        TaggedGroup::EarthReference(d) => {
            w.unsigned(ANGLE, d.true_track_deg, "true_track")?;
            w.unsigned(HALF_KNOT, d.ground_speed_kn, "ground_speed")?;
            w.signed(VERTICAL_SPEED, d.vertical_speed_fpm, "vertical_speed")
        }
        TaggedGroup::AirReference(d) => {
            w.unsigned(ANGLE, d.true_heading_deg, "true_heading")?;
            let raw = w.raw(MACH, d.mach, 1, MACH_RAW_MAX, "mach")?;
            w.u16(raw as u16);
            w.signed(VERTICAL_SPEED, d.vertical_speed_fpm, "vertical_speed")
        }
        TaggedGroup::Meteorological(d) => {
            w.unsigned(HALF_KNOT, d.wind_speed_kn, "wind_speed")?;
            w.unsigned(ANGLE, d.wind_direction_deg, "wind_direction")?;
            let raw = w.raw(TEMPERATURE, d.temperature_c, TEMP_RAW_MIN, TEMP_RAW_MAX, "temperature")?;
            w.i16(raw as i16);
            Ok(())
        }
        TaggedGroup::AirframeId { icao24 } => {
            if *icao24 > 0xFF_FFFF {
                return Err(w.violation("icao24", icao24));
            }
            w.u24(*icao24);
            Ok(())
        }
        TaggedGroup::Intent(IntentGroup::Intermediate {
            distance_nm,
            true_track_deg,
            altitude_ft,
            eta_s,
        }) => {
            w.unsigned(EIGHTH_NM, *distance_nm, "distance")?;
            w.unsigned(ANGLE, *true_track_deg, "true_track")?;
            w.altitude(*altitude_ft)?;
            w.u16(*eta_s);
            Ok(())
        }
        TaggedGroup::Intent(IntentGroup::Fixed {
            latitude,
            longitude,
            altitude_ft,
            eta_s,
        }) => {
            w.latitude(*latitude)?;
            w.longitude(*longitude)?;
            w.altitude(*altitude_ft)?;
            w.u16(*eta_s);
            Ok(())
        }
    }
}
