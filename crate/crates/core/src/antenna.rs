//! Parametric directional gain patterns for the horn and the phased array.
//!
//! The main lobe is parabolic in dB: a point `Δ` away from boresight loses
//! `12·(Δ/BW)²` dB per plane, which is exactly 3 dB at half a beamwidth.
//! Beyond the lobe the pattern sits on a flat sidelobe floor.

use serde::{Deserialize, Serialize};

use crate::units::{db_to_lin, wrap_deg};

/// Solid angle of the sphere in square degrees, used for beamwidth-from-gain.
const SPHERE_SQ_DEG: f64 = 41_253.0;

/// Default sidelobe suppression below boresight, dB.
pub const DEFAULT_SIDELOBE_FLOOR_DB: f64 = 25.0;

/// Antenna pointing or arrival direction in the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub az_deg: f64,
    pub el_deg: f64,
}

impl Orientation {
    /// Builds an orientation with azimuth wrapped into `[-180, 180)`.
    pub fn new(az_deg: f64, el_deg: f64) -> Self {
        Self {
            az_deg: wrap_deg(az_deg),
            el_deg,
        }
    }

    pub const fn boresight() -> Self {
        Self {
            az_deg: 0.0,
            el_deg: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.az_deg.is_finite()
            && self.el_deg.is_finite()
            && (-180.0..180.0).contains(&self.az_deg)
            && (-90.0..=90.0).contains(&self.el_deg)
    }

    /// Orientation shifted by an offset (azimuth wraps, elevation adds).
    pub fn offset_by(&self, offset: Orientation) -> Self {
        Self::new(self.az_deg + offset.az_deg, self.el_deg + offset.el_deg)
    }

    /// Wrapped azimuth difference and plain elevation difference `other - self`.
    pub fn delta_to(&self, other: &Orientation) -> (f64, f64) {
        (
            wrap_deg(other.az_deg - self.az_deg),
            other.el_deg - self.el_deg,
        )
    }
}

/// Directional gain pattern used for `G_TX` and `G_RX`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub boresight_gain_dbi: f64,
    pub beamwidth_az_deg: f64,
    pub beamwidth_el_deg: f64,
    #[serde(default = "default_floor")]
    pub sidelobe_floor_db: f64,
    /// Electronic field of view; `None` means mechanically steered (unlimited).
    #[serde(default)]
    pub steer_limit_az_deg: Option<f64>,
    #[serde(default)]
    pub steer_limit_el_deg: Option<f64>,
}

fn default_floor() -> f64 {
    DEFAULT_SIDELOBE_FLOOR_DB
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PatternError {
    #[error("beamwidths must be positive (az {az}, el {el})")]
    Beamwidth { az: f64, el: f64 },
    #[error("sidelobe floor must be positive, got {0}")]
    Floor(f64),
    #[error("boresight gain must be finite")]
    Gain,
}

impl AntennaPattern {
    /// 17 dBi horn with 24° azimuth and 26° elevation half-power beamwidth.
    pub fn horn() -> Self {
        Self {
            boresight_gain_dbi: 17.0,
            beamwidth_az_deg: 24.0,
            beamwidth_el_deg: 26.0,
            sidelobe_floor_db: DEFAULT_SIDELOBE_FLOOR_DB,
            steer_limit_az_deg: None,
            steer_limit_el_deg: None,
        }
    }

    /// Electronically steered array whose beamwidths follow from its gain
    /// (`BW ≈ sqrt(41253 / G)` in both planes), limited to ±40° az, ±20° el.
    pub fn phased_array(boresight_gain_dbi: f64) -> Self {
        let bw = beamwidth_from_gain(boresight_gain_dbi);
        Self {
            boresight_gain_dbi,
            beamwidth_az_deg: bw,
            beamwidth_el_deg: bw,
            sidelobe_floor_db: DEFAULT_SIDELOBE_FLOOR_DB,
            steer_limit_az_deg: Some(40.0),
            steer_limit_el_deg: Some(20.0),
        }
    }

    /// Transmit side of the phased array (39 dBi).
    pub fn phased_array_tx() -> Self {
        Self::phased_array(39.0)
    }

    /// Receive side of the phased array (21.5 dBi).
    pub fn phased_array_rx() -> Self {
        Self::phased_array(21.5)
    }

    pub fn with_beamwidths(mut self, az_deg: f64, el_deg: f64) -> Self {
        self.beamwidth_az_deg = az_deg;
        self.beamwidth_el_deg = el_deg;
        self
    }

    pub fn validate(&self) -> Result<(), PatternError> {
        if !(self.beamwidth_az_deg > 0.0 && self.beamwidth_el_deg > 0.0) {
            return Err(PatternError::Beamwidth {
                az: self.beamwidth_az_deg,
                el: self.beamwidth_el_deg,
            });
        }
        if !(self.sidelobe_floor_db > 0.0) {
            return Err(PatternError::Floor(self.sidelobe_floor_db));
        }
        if !self.boresight_gain_dbi.is_finite() {
            return Err(PatternError::Gain);
        }
        Ok(())
    }

    /// Loss below boresight, in dB (≥ 0), for an angular offset.
    pub fn offset_loss_db(&self, d_az: f64, d_el: f64) -> f64 {
        let d_az = wrap_deg(d_az);
        let lobe = 12.0
            * ((d_az / self.beamwidth_az_deg).powi(2) + (d_el / self.beamwidth_el_deg).powi(2));
        lobe.min(self.sidelobe_floor_db)
    }

    /// Gain toward `arrival` when the antenna points at `pointing`.
    pub fn gain_db(&self, pointing: Orientation, arrival: Orientation) -> f64 {
        let (d_az, d_el) = pointing.delta_to(&arrival);
        self.boresight_gain_dbi - self.offset_loss_db(d_az, d_el)
    }

    /// Whether an electronic offset relative to the mount is inside the field of view.
    pub fn steerable(&self, electronic_offset: Orientation) -> bool {
        let (az, el) = (wrap_deg(electronic_offset.az_deg), electronic_offset.el_deg);
        let within = |v: f64, lim: Option<f64>| lim.is_none_or(|l| v.abs() <= l + 1e-9);
        within(az, self.steer_limit_az_deg) && within(el, self.steer_limit_el_deg)
    }

    /// Parabolic curvature of the main lobe in dB/deg² for each plane.
    pub fn curvature(&self) -> (f64, f64) {
        (
            12.0 / self.beamwidth_az_deg.powi(2),
            12.0 / self.beamwidth_el_deg.powi(2),
        )
    }
}

/// Half-power beamwidth of an idealized pencil beam with the given gain.
pub fn beamwidth_from_gain(gain_dbi: f64) -> f64 {
    (SPHERE_SQ_DEG / db_to_lin(gain_dbi)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(az: f64, el: f64) -> Orientation {
        Orientation::new(az, el)
    }

    #[test]
    fn horn_boresight_gain() {
        let h = AntennaPattern::horn();
        assert_eq!(h.gain_db(o(0.0, 0.0), o(0.0, 0.0)), 17.0);
    }

    #[test]
    fn horn_half_beamwidth_is_3db_down() {
        let h = AntennaPattern::horn();
        assert!((h.gain_db(o(0.0, 0.0), o(12.0, 0.0)) - 14.0).abs() < 1e-12);
        assert!((h.gain_db(o(0.0, 0.0), o(0.0, 13.0)) - 14.0).abs() < 1e-12);
    }

    #[test]
    fn horn_far_off_axis_hits_floor() {
        let h = AntennaPattern::horn();
        assert_eq!(h.gain_db(o(0.0, 0.0), o(90.0, 0.0)), -8.0);
    }

    #[test]
    fn azimuth_wrap_across_seam() {
        let h = AntennaPattern::horn();
        let a = h.gain_db(o(170.0, 0.0), o(-170.0, 0.0));
        let b = h.gain_db(o(0.0, 0.0), o(20.0, 0.0));
        assert!((a - b).abs() < 1e-12);
        let plus = h.offset_loss_db(350.0, 0.0);
        let minus = h.offset_loss_db(-10.0, 0.0);
        assert!((plus - minus).abs() < 1e-12);
    }

    #[test]
    fn steering_limits() {
        let pa = AntennaPattern::phased_array_rx();
        assert!(pa.steerable(o(40.0, 20.0)));
        assert!(pa.steerable(o(-40.0, -20.0)));
        assert!(!pa.steerable(o(60.0, 0.0)));
        assert!(!pa.steerable(o(0.0, 30.0)));
        assert!(AntennaPattern::horn().steerable(o(-179.0, 80.0)));
    }

    #[test]
    fn derived_array_beamwidths() {
        let rx = AntennaPattern::phased_array_rx();
        assert!((rx.beamwidth_az_deg - 17.089).abs() < 0.001, "{}", rx.beamwidth_az_deg);
        let tx = AntennaPattern::phased_array_tx();
        assert!((tx.beamwidth_az_deg - 2.279).abs() < 0.01, "{}", tx.beamwidth_az_deg);
    }

    #[test]
    fn validation_rejects_bad_patterns() {
        let mut p = AntennaPattern::horn();
        p.beamwidth_az_deg = 0.0;
        assert!(p.validate().is_err());
        let mut p = AntennaPattern::horn();
        p.sidelobe_floor_db = 0.0;
        assert_eq!(p.validate(), Err(PatternError::Floor(0.0)));
    }

    proptest! {
        #[test]
        fn gain_is_even_in_offset(d_az in -180.0f64..180.0, d_el in -60.0f64..60.0) {
            let h = AntennaPattern::horn();
            let a = h.offset_loss_db(d_az, d_el);
            let b = h.offset_loss_db(-d_az, -d_el);
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn gain_monotone_in_azimuth(a in 0.0f64..180.0, b in 0.0f64..180.0, el in -30.0f64..30.0) {
            let h = AntennaPattern::horn();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(h.offset_loss_db(lo, el) <= h.offset_loss_db(hi, el) + 1e-12);
        }

        #[test]
        fn gain_bounded_by_boresight_and_floor(d_az in -180.0f64..180.0, d_el in -90.0f64..90.0) {
            let h = AntennaPattern::horn();
            let g = h.gain_db(Orientation::boresight(), Orientation::new(d_az, d_el));
            prop_assert!(g <= 17.0 && g >= 17.0 - 25.0);
        }
    }
}
