//! Physical constants, decibel arithmetic, and angle helpers shared by all modules.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default carrier frequency, Hz.
pub const CARRIER_28GHZ: f64 = 28e9;

/// Power reported for bins holding no energy.
pub const POWER_FLOOR_DBM: f64 = -200.0;

/// Friis free-space path loss in dB for distance `d_m` at `freq_hz`.
pub fn fspl_db(d_m: f64, freq_hz: f64) -> f64 {
    20.0 * (4.0 * PI * d_m * freq_hz / SPEED_OF_LIGHT).log10()
}

pub fn wavelength_m(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Linear power to dBm, clamped at [`POWER_FLOOR_DBM`].
pub fn power_to_dbm(mw: f64) -> f64 {
    if mw > 0.0 {
        lin_to_db(mw).max(POWER_FLOOR_DBM)
    } else {
        POWER_FLOOR_DBM
    }
}

/// Power sum of values given in dB. Returns `-inf` for an empty input.
pub fn db_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    lin_to_db(values.into_iter().map(db_to_lin).sum())
}

/// Wraps an angle in degrees into `[-180, 180)`.
pub fn wrap_deg(angle: f64) -> f64 {
    let a = (angle + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if a >= 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(2.0 * PI);
    if p >= 2.0 * PI {
        0.0
    } else {
        p
    }
}

/// Derives an independent 64-bit seed for `(stream, index)` from a master seed.
///
/// SplitMix64 finalizer over a combined key; results do not depend on the
/// order in which indices are visited.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
