//! ISA troposphere/lower stratosphere, enough for Mach conversion.

const TROPOPAUSE_FT: f64 = 36_089.0;
const SEA_LEVEL_K: f64 = 288.15;
const LAPSE_K_PER_FT: f64 = 0.001_981_2;
const GAMMA_R: f64 = 1.4 * 287.052_87;
const KN_PER_MPS: f64 = 1.943_844_5;

/// Static air temperature, kelvin.
pub fn isa_temperature_k(alt_ft: f64) -> f64 {
    SEA_LEVEL_K - LAPSE_K_PER_FT * alt_ft.min(TROPOPAUSE_FT)
}

/// Speed of sound, knots.
pub fn speed_of_sound_kn(alt_ft: f64) -> f64 {
    (GAMMA_R * isa_temperature_k(alt_ft)).sqrt() * KN_PER_MPS
}

/// Mach number for a true airspeed, ignoring wind.
pub fn mach_from_tas(tas_kn: f64, alt_ft: f64) -> f64 {
    tas_kn / speed_of_sound_kn(alt_ft)
}
