//! Angular response of passive reflector plates.

use serde::{Deserialize, Serialize};

use super::{Point3, SceneError};
use crate::units::{fspl_db, wavelength_m};

/// Response floor relative to the reflector's peak, dB.
pub const RESPONSE_FLOOR_DB: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectorKind {
    /// Flat metal plate; reflects at the mirror angle.
    Specular,
    /// Engineered surface steering a design incidence to a design reflection angle.
    Anomalous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectorSpec {
    pub center: Point3,
    pub normal: Point3,
    pub width_m: f64,
    pub height_m: f64,
    pub kind: ReflectorKind,
    #[serde(default)]
    pub design_incident_deg: Option<f64>,
    #[serde(default)]
    pub design_reflect_deg: Option<f64>,
    #[serde(default = "default_efficiency")]
    pub peak_efficiency_db: f64,
    #[serde(default = "default_width")]
    pub angular_width_deg: f64,
}

fn default_efficiency() -> f64 {
    -1.0
}

fn default_width() -> f64 {
    10.0
}

/// Angles of a direction pair in the reflector's local frame, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalAngles {
    /// Incidence angle from the normal, always ≥ 0.
    pub incidence_deg: f64,
    /// Reflection angle from the normal, positive on the far side of the normal.
    pub reflection_deg: f64,
    /// Elevation mismatch from the vertical mirror direction.
    pub elevation_error_deg: f64,
}

impl ReflectorSpec {
    /// Flat plate with no extra loss.
    pub fn specular(center: Point3, normal: Point3, width_m: f64, height_m: f64) -> Self {
        Self {
            center,
            normal,
            width_m,
            height_m,
            kind: ReflectorKind::Specular,
            design_incident_deg: None,
            design_reflect_deg: None,
            peak_efficiency_db: 0.0,
            angular_width_deg: default_width(),
        }
    }

    /// Anomalous reflector with default efficiency and roll-off width.
    pub fn anomalous(
        center: Point3,
        normal: Point3,
        width_m: f64,
        height_m: f64,
        design_incident_deg: f64,
        design_reflect_deg: f64,
    ) -> Self {
        Self {
            center,
            normal,
            width_m,
            height_m,
            kind: ReflectorKind::Anomalous,
            design_incident_deg: Some(design_incident_deg),
            design_reflect_deg: Some(design_reflect_deg),
            peak_efficiency_db: default_efficiency(),
            angular_width_deg: default_width(),
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |why: &str| Err(SceneError::Reflector(why.to_string()));
        if !self.center.is_finite() {
            return bad("center not finite");
        }
        if (self.normal.norm() - 1.0).abs() > 1e-6 {
            return bad("normal must be a unit vector");
        }
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return bad("dimensions must be positive");
        }
        if !(self.angular_width_deg > 0.0) {
            return bad("angular width must be positive");
        }
        if !(self.peak_efficiency_db <= 0.0) {
            return bad("peak efficiency must be <= 0 dB");
        }
        if self.kind == ReflectorKind::Anomalous
            && (self.design_incident_deg.is_none() || self.design_reflect_deg.is_none())
        {
            return bad("anomalous reflector needs both design angles");
        }
        Ok(())
    }

    /// Horizontal tangent `u` and vertical tangent `v` of the plate.
    fn tangents(&self) -> (Point3, Point3) {
        let n = self.normal;
        let up = Point3::new(0.0, 0.0, 1.0);
        let u = up
            .cross(n)
            .normalized()
            .unwrap_or_else(|| Point3::new(0.0, 1.0, 0.0).cross(n).normalized().unwrap());
        (u, n.cross(u))
    }

    /// Local angles for a propagation direction onto the plate and an
    /// observation direction away from it. `None` if either side is not illuminated.
    pub fn local_angles(&self, incident_dir: Point3, observe_dir: Point3) -> Option<LocalAngles> {
        let n = self.normal;
        let toward_source = -incident_dir;
        if toward_source.dot(n) <= 0.0 || observe_dir.dot(n) <= 0.0 {
            return None;
        }
        let (u, v) = self.tangents();
        let az = |d: Point3| d.dot(u).atan2(d.dot(n)).to_degrees();
        let el = |d: Point3| (d.dot(v) / d.norm()).clamp(-1.0, 1.0).asin().to_degrees();
        let az_src = az(toward_source);
        let side = if az_src >= 0.0 { 1.0 } else { -1.0 };
        Some(LocalAngles {
            incidence_deg: side * az_src,
            reflection_deg: -side * az(observe_dir),
            elevation_error_deg: el(observe_dir) + el(toward_source),
        })
    }

    /// Half-power lobe widths (horizontal, vertical) of a specular plate,
    /// never narrower than the plate's diffraction limit.
    pub fn specular_widths_deg(&self, carrier_hz: f64) -> (f64, f64) {
        let lambda = wavelength_m(carrier_hz);
        let diffraction = |dim: f64| (0.886 * lambda / dim).to_degrees();
        (
            self.angular_width_deg.max(diffraction(self.width_m)),
            self.angular_width_deg.max(diffraction(self.height_m)),
        )
    }

    /// Far-field bistatic aperture gain `20·log10(4πA/λ²)` at peak.
    pub fn aperture_gain_db(&self, carrier_hz: f64) -> f64 {
        let lambda = wavelength_m(carrier_hz);
        20.0 * (4.0 * std::f64::consts::PI * self.width_m * self.height_m / lambda.powi(2)).log10()
    }

    /// Aperture gain for segment lengths `d1`, `d2`, capped so the path never
    /// beats an ideal mirror (`FSPL(d1 + d2)`).
    pub fn capped_aperture_gain_db(&self, d1: f64, d2: f64, carrier_hz: f64) -> f64 {
        let mirror = fspl_db(d1, carrier_hz) + fspl_db(d2, carrier_hz) - fspl_db(d1 + d2, carrier_hz);
        self.aperture_gain_db(carrier_hz).min(mirror)
    }
}

/// Reflection gain in dB (≤ 0) for a ray travelling along `incident_dir`
/// onto the plate and leaving along `observe_dir`.
///
/// Returns `-inf` when either direction is on the back side of the plate.
pub fn reflector_response(
    spec: &ReflectorSpec,
    incident_dir: Point3,
    observe_dir: Point3,
    carrier_hz: f64,
) -> f64 {
    let Some(a) = spec.local_angles(incident_dir, observe_dir) else {
        return f64::NEG_INFINITY;
    };
    let rolloff = match spec.kind {
        ReflectorKind::Specular => {
            let (wh, wv) = spec.specular_widths_deg(carrier_hz);
            12.0 * (((a.reflection_deg - a.incidence_deg) / wh).powi(2)
                + (a.elevation_error_deg / wv).powi(2))
        }
        ReflectorKind::Anomalous => {
            let w = spec.angular_width_deg;
            let d_inc = a.incidence_deg - spec.design_incident_deg.unwrap_or(0.0);
            let d_obs = a.reflection_deg - spec.design_reflect_deg.unwrap_or(0.0);
            12.0 * ((d_inc / w).powi(2) + (d_obs / w).powi(2) + (a.elevation_error_deg / w).powi(2))
        }
    };
    spec.peak_efficiency_db - rolloff.min(RESPONSE_FLOOR_DB)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::CARRIER_28GHZ;

    const N: Point3 = Point3::new(1.0, 0.0, 0.0);

    /// Propagation direction of a ray arriving from in-plane angle `deg`.
    fn incoming(deg: f64) -> Point3 {
        -Point3::from_az_el_deg(deg, 0.0)
    }

    fn echo() -> ReflectorSpec {
        ReflectorSpec::anomalous(Point3::new(0.0, 0.0, 1.5), N, 0.3, 0.3, 52.0, 30.0)
    }

    #[test]
    fn specular_peak_at_mirror() {
        let mut al = ReflectorSpec::specular(Point3::new(0.0, 0.0, 1.5), N, 0.3, 0.3);
        al.peak_efficiency_db = 0.0;
        let g = reflector_response(&al, incoming(40.0), Point3::from_az_el_deg(-40.0, 0.0), CARRIER_28GHZ);
        assert!(g.abs() < 1e-9, "{g}");
        let off = reflector_response(&al, incoming(40.0), Point3::from_az_el_deg(-30.0, 0.0), CARRIER_28GHZ);
        assert!(off < -5.0);
    }

    #[test]
    fn specular_mirror_with_elevation() {
        let al = ReflectorSpec::specular(Point3::new(0.0, 0.0, 0.0), N, 0.3, 0.3);
        let src = Point3::from_az_el_deg(25.0, 10.0);
        let mirror = Point3::new(src.x, -src.y, -src.z);
        let g = reflector_response(&al, -src, mirror, CARRIER_28GHZ);
        assert!(g.abs() < 1e-9, "{g}");
    }

    #[test]
    fn echo_peak_at_design_pair() {
        let spec = echo();
        let g = reflector_response(&spec, incoming(52.0), Point3::from_az_el_deg(-30.0, 0.0), CARRIER_28GHZ);
        assert!((g - spec.peak_efficiency_db).abs() < 1e-9);
    }

    #[test]
    fn echo_one_width_off_is_12db_down() {
        let spec = echo();
        let obs = Point3::from_az_el_deg(-(30.0 + spec.angular_width_deg), 0.0);
        let g = reflector_response(&spec, incoming(52.0), obs, CARRIER_28GHZ);
        let oracle = spec.peak_efficiency_db - 12.0;
        assert!((g - oracle).abs() < 1e-9, "{g} vs {oracle}");
    }

    #[test]
    fn floor_is_40db_below_peak() {
        let spec = echo();
        let g = reflector_response(&spec, incoming(52.0), Point3::from_az_el_deg(80.0, 0.0), CARRIER_28GHZ);
        assert!((g - (spec.peak_efficiency_db - 40.0)).abs() < 1e-12);
    }

    #[test]
    fn back_side_is_blocked() {
        let spec = echo();
        let g = reflector_response(&spec, -incoming(52.0), Point3::from_az_el_deg(-30.0, 0.0), CARRIER_28GHZ);
        assert_eq!(g, f64::NEG_INFINITY);
        let g = reflector_response(&spec, incoming(52.0), Point3::from_az_el_deg(150.0, 0.0), CARRIER_28GHZ);
        assert_eq!(g, f64::NEG_INFINITY);
    }

    #[test]
    fn diffraction_limit_widens_small_plates() {
        let tiny = ReflectorSpec {
            angular_width_deg: 1.0,
            ..ReflectorSpec::specular(Point3::new(0.0, 0.0, 0.0), N, 0.05, 0.3)
        };
        let (wh, wv) = tiny.specular_widths_deg(CARRIER_28GHZ);
        let lambda = wavelength_m(CARRIER_28GHZ);
        assert!((wh - (0.886 * lambda / 0.05).to_degrees()).abs() < 1e-12);
        assert!((wv - (0.886 * lambda / 0.3).to_degrees()).abs() < 1e-12);
        assert!(wh > wv);
    }

    #[test]
    fn anomalous_needs_design_angles() {
        let mut spec = echo();
        spec.design_reflect_deg = None;
        assert!(spec.validate().is_err());
        let mut spec = echo();
        spec.normal = Point3::new(2.0, 0.0, 0.0);
        assert!(spec.validate().is_err());
    }
}
