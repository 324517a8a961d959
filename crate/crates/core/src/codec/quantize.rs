//! Fixed-point scales used on the wire.
//!
//! Every scale maps an integer raw value to `raw * mul / div` (+ offset).
//! Both operations are exact in `f64` for the raw ranges used here, so a
//! value produced by [`Scale::value`] re-encodes to the same raw integer and
//! decodes back to the identical `f64`.

use super::{CodecError, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Scale {
    mul: f64,
    div: f64,
    offset: f64,
}

impl Scale {
    pub(crate) const fn new(mul: f64, div: f64) -> Self {
        Scale { mul, div, offset: 0.0 }
    }

    pub(crate) const fn with_offset(mul: f64, div: f64, offset: f64) -> Self {
        Scale { mul, div, offset }
    }

    pub(crate) fn value(&self, raw: i64) -> f64 {
        (raw as f64 * self.mul) / self.div + self.offset
    }

    /// Nearest raw integer to `v`.
    pub(crate) fn nearest_raw(&self, v: f64) -> i64 {
        ((v - self.offset) * self.div / self.mul).round() as i64
    }

    /// Raw integer for `v`, or `None` when `v` is not exactly on the grid.
    pub(crate) fn exact_raw(&self, v: f64) -> Option<i64> {
        if !v.is_finite() {
            return None;
        }
        let raw = self.nearest_raw(v);
        (self.value(raw) == v).then_some(raw)
    }
}

/// Latitude and longitude: fractions of 180 degrees over 2^20.
pub(crate) const LATLON: Scale = Scale::new(180.0, 1_048_576.0);
pub(crate) const ALTITUDE: Scale = Scale::with_offset(4.0, 1.0, -1000.0);
pub(crate) const ANGLE: Scale = Scale::new(360.0, 65_536.0);
pub(crate) const HALF_KNOT: Scale = Scale::new(1.0, 2.0);
pub(crate) const VERTICAL_SPEED: Scale = Scale::new(16.0, 1.0);
pub(crate) const MACH: Scale = Scale::new(1.0, 2000.0);
pub(crate) const TEMPERATURE: Scale = Scale::new(1.0, 4.0);
pub(crate) const EIGHTH_NM: Scale = Scale::new(1.0, 8.0);
pub(crate) const ALT_DEVIATION: Scale = Scale::new(4.0, 1.0);

pub const LATLON_STEP_DEG: f64 = 180.0 / 1_048_576.0;
pub const ALT_STEP_FT: f64 = 4.0;

pub(crate) const LAT_RAW_MIN: i64 = -(1 << 19);
pub(crate) const LAT_RAW_MAX: i64 = 1 << 19;
pub(crate) const LON_RAW_MIN: i64 = -(1 << 20);
pub(crate) const LON_RAW_MAX: i64 = (1 << 20) - 1;
pub(crate) const ALT_RAW_MAX: i64 = 16_750;

pub const ALT_MIN_FT: f64 = -1000.0;
pub const ALT_MAX_FT: f64 = 66_000.0;

/// Snap a position onto the codec grid.
///
/// Longitude is accepted on the closed interval [-180, 180]; values that
/// round to +180 wrap to -180, so the bound on `|lon - lon_q|` holds modulo
/// 360 degrees.
pub fn quantize_position(lat: f64, lon: f64, alt_ft: f64) -> Result<(f64, f64, f64)> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(CodecError::OutOfRange {
            field: "latitude",
            value: lat,
        });
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(CodecError::OutOfRange {
            field: "longitude",
            value: lon,
        });
    }
    if !(ALT_MIN_FT..=ALT_MAX_FT).contains(&alt_ft) {
        return Err(CodecError::OutOfRange {
            field: "altitude",
            value: alt_ft,
        });
    }
    Ok((
        quantize_latitude(lat),
        quantize_longitude(lon),
        quantize_altitude(alt_ft),
    ))
}

pub(crate) fn quantize_latitude(lat: f64) -> f64 {
    let raw = LATLON.nearest_raw(lat).clamp(LAT_RAW_MIN, LAT_RAW_MAX);
    LATLON.value(raw)
}

pub(crate) fn quantize_longitude(lon: f64) -> f64 {
    let mut raw = LATLON.nearest_raw(lon);
    if raw > LON_RAW_MAX {
        raw -= 1 << 21;
    }
    LATLON.value(raw.max(LON_RAW_MIN))
}

pub(crate) fn quantize_altitude(alt_ft: f64) -> f64 {
    ALTITUDE.value(ALTITUDE.nearest_raw(alt_ft).clamp(0, ALT_RAW_MAX))
}

/// Snap any value onto the grid of `scale`; used by the simulator.
pub(crate) fn snap(scale: Scale, v: f64) -> f64 {
    scale.value(scale.nearest_raw(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Full scan over every representable latitude.
    fn brute_nearest_lat(x: f64) -> f64 {
        let mut best = LATLON.value(LAT_RAW_MIN);
        for raw in LAT_RAW_MIN..=LAT_RAW_MAX {
            let v = raw as f64 * 180.0 / 1_048_576.0;
            if (v - x).abs() < (best - x).abs() {
                best = v;
            }
        }
        best
    }

    fn brute_nearest_lon(x: f64) -> f64 {
        let mut best = LATLON.value(LON_RAW_MIN);
        let mut best_d = f64::INFINITY;
        for raw in LON_RAW_MIN..=LON_RAW_MAX {
            let v = raw as f64 * 180.0 / 1_048_576.0;
            let d = (v - x).abs().min(360.0 - (v - x).abs());
            if d < best_d {
                best_d = d;
                best = v;
            }
        }
        best
    }

    fn brute_nearest_alt(x: f64) -> f64 {
        (0..=ALT_RAW_MAX)
            .map(|raw| raw as f64 * 4.0 - 1000.0)
            .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
            .unwrap()
    }

    #[test]
    fn grid_origin() {
        assert_eq!(quantize_position(0.0, 0.0, 0.0).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn range_extremes() {
        let (lat, lon, alt) = quantize_position(90.0, -180.0, 66_000.0).unwrap();
        assert_eq!((lat, lon, alt), (90.0, -180.0, 66_000.0));
        let (lat, _, alt) = quantize_position(-90.0, 0.0, -1000.0).unwrap();
        assert_eq!((lat, alt), (-90.0, -1000.0));
        // +180 is the same meridian as -180
        assert_eq!(quantize_position(0.0, 180.0, 0.0).unwrap().1, -180.0);
    }

    #[test]
    fn greenwich_latitude_matches_brute_force() {
        let (lat, _, _) = quantize_position(51.4775, 0.0, 0.0).unwrap();
        assert_eq!(lat, brute_nearest_lat(51.4775));
        assert!((lat - 51.4775).abs() <= LATLON_STEP_DEG / 2.0);
    }

    #[test]
    fn mid_ocean_point_matches_brute_force() {
        let (lat, lon, alt) = quantize_position(45.123456, -30.654321, 37001.0).unwrap();
        assert_eq!(lat, brute_nearest_lat(45.123456));
        assert_eq!(lon, brute_nearest_lon(-30.654321));
        assert_eq!(alt, brute_nearest_alt(37001.0));
        assert_eq!(alt, 37000.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(quantize_position(90.1, 0.0, 0.0).is_err());
        assert!(quantize_position(0.0, 180.5, 0.0).is_err());
        assert!(quantize_position(0.0, 0.0, 66_001.0).is_err());
        assert!(quantize_position(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn exact_raw_detects_off_grid() {
        assert_eq!(MACH.exact_raw(0.84), Some(1680));
        assert_eq!(MACH.exact_raw(0.8401), None);
        assert_eq!(LATLON.exact_raw(51.4775), None);
        assert_eq!(ALTITUDE.exact_raw(35_000.0), Some(9000));
    }
}
