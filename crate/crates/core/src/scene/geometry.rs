use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Point or vector in the global frame, meters. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Self) -> f64 {
        (self - o).norm()
    }

    /// Unit vector along `self`; `None` for (near) zero length.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 1e-12 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Azimuth (deg, `[-180, 180)`) and elevation (deg) of this direction.
    pub fn az_el_deg(self) -> (f64, f64) {
        let az = crate::units::wrap_deg(self.y.atan2(self.x).to_degrees());
        let el = (self.z / self.norm()).clamp(-1.0, 1.0).asin().to_degrees();
        (az, el)
    }

    /// Unit direction with the given azimuth/elevation in degrees.
    pub fn from_az_el_deg(az: f64, el: f64) -> Self {
        let (a, e) = (az.to_radians(), el.to_radians());
        Self::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin())
    }
}

impl Add for Point3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Point3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Planar convex quad given by its corners in order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Quad {
    pub corners: [Point3; 4],
    pub normal: Point3,
}

const PARAM_EPS: f64 = 1e-9;

impl Quad {
    pub fn new(corners: [Point3; 4]) -> Option<Self> {
        let normal = (corners[1] - corners[0])
            .cross(corners[2] - corners[0])
            .normalized()?;
        Some(Self { corners, normal })
    }

    /// Largest distance of any corner from the plane through the first three.
    pub fn planarity_error(&self) -> f64 {
        (self.corners[3] - self.corners[0]).dot(self.normal).abs()
    }

    /// Signed distance of `p` from the plane.
    pub fn signed_distance(&self, p: Point3) -> f64 {
        (p - self.corners[0]).dot(self.normal)
    }

    /// Mirror image of `p` across the plane.
    pub fn image_of(&self, p: Point3) -> Point3 {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point already on the plane lies inside the quad.
    pub fn contains_coplanar(&self, p: Point3) -> bool {
        let scale = (self.corners[2] - self.corners[0]).norm().max(1.0);
        let mut sign = 0.0f64;
        for i in 0..4 {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 4];
            let s = (b - a).cross(p - a).dot(self.normal);
            if s.abs() <= 1e-12 * scale * scale {
                continue;
            }
            if sign == 0.0 {
                sign = s.signum();
            } else if s.signum() != sign {
                return false;
            }
        }
        true
    }

    /// Intersection of the open segment `p0 → p1` with the quad interior.
    pub fn segment_hit(&self, p0: Point3, p1: Point3) -> Option<Point3> {
        let d = p1 - p0;
        let denom = self.normal.dot(d);
        if denom.abs() < 1e-15 {
            return None;
        }
        let t = self.normal.dot(self.corners[0] - p0) / denom;
        if t <= PARAM_EPS || t >= 1.0 - PARAM_EPS {
            return None;
        }
        let hit = p0 + d * t;
        self.contains_coplanar(hit).then_some(hit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_x0() -> Quad {
        Quad::new([
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 1.0),
            Point3::new(0.0, 0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn segment_through_square() {
        let q = unit_square_x0();
        let hit = q
            .segment_hit(Point3::new(-1.0, 0.5, 0.5), Point3::new(1.0, 0.5, 0.5))
            .unwrap();
        assert!(hit.distance(Point3::new(0.0, 0.5, 0.5)) < 1e-12);
        assert!(q
            .segment_hit(Point3::new(-1.0, 1.5, 0.5), Point3::new(1.0, 1.5, 0.5))
            .is_none());
        assert!(q
            .segment_hit(Point3::new(0.5, 0.5, 0.5), Point3::new(1.0, 0.5, 0.5))
            .is_none());
    }

    #[test]
    fn image_is_mirror() {
        let q = unit_square_x0();
        let im = q.image_of(Point3::new(2.0, 0.3, 0.1));
        assert!(im.distance(Point3::new(-2.0, 0.3, 0.1)) < 1e-12);
    }

    #[test]
    fn az_el_round_trip() {
        let d = Point3::from_az_el_deg(-120.0, 15.0);
        let (az, el) = d.az_el_deg();
        assert!((az + 120.0).abs() < 1e-9 && (el - 15.0).abs() < 1e-9);
    }

    #[test]
    fn point_serializes_as_array() {
        let s = serde_json::to_string(&Point3::new(1.0, 2.0, 3.5)).unwrap();
        assert_eq!(s, "[1.0,2.0,3.5]");
    }
}
