//! Measurement scenes and deterministic path enumeration.
//!
//! [`enumerate_paths`] turns a [`Scene`] into the ground-truth [`Padp`]: the
//! line-of-sight ray, one image-method bounce per wall, one path through the
//! passive reflector, and one through the active repeater. Blockage is a
//! binary segment/quad intersection test.

mod geometry;
pub mod reflector;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use geometry::Point3;
pub(crate) use geometry::Quad;
pub use reflector::{reflector_response, ReflectorKind, ReflectorSpec};

use crate::units::{
    db_to_lin, derive_seed, fspl_db, lin_to_db, wrap_deg, wrap_phase, CARRIER_28GHZ,
    SPEED_OF_LIGHT,
};

/// Delay resolution used when merging ground-truth paths (one sounder bin).
pub const MERGE_DELAY_S: f64 = 2.0 / 3.072e9;
/// Angular resolution used when merging ground-truth paths (horn azimuth beamwidth).
pub const MERGE_ANGLE_DEG: f64 = 24.0;
/// Default wall reflection loss per bounce.
pub const DEFAULT_WALL_LOSS_DB: f64 = 10.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SceneError {
    #[error("TX and RX positions coincide")]
    Colocated,
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("invalid surface {index}: {why}")]
    Surface { index: usize, why: String },
    #[error("invalid reflector: {0}")]
    Reflector(String),
    #[error("invalid repeater: {0}")]
    Repeater(String),
    #[error("invalid arc: {0}")]
    Arc(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpcTag {
    Los,
    WallReflection,
    PassiveReflector,
    Repeater,
    /// Recovered by the extractor; the mechanism is not known.
    Unknown,
}

impl MpcTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MpcTag::Los => "los",
            MpcTag::WallReflection => "wall_reflection",
            MpcTag::PassiveReflector => "passive_reflector",
            MpcTag::Repeater => "repeater",
            MpcTag::Unknown => "unknown",
        }
    }
}

/// One multipath component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub path_gain_db: f64,
    pub delay_s: f64,
    pub aod_az_deg: f64,
    pub aod_el_deg: f64,
    pub aoa_az_deg: f64,
    pub aoa_el_deg: f64,
    pub phase_rad: f64,
    pub tag: MpcTag,
}

impl Mpc {
    pub fn aod(&self) -> crate::Orientation {
        crate::Orientation::new(self.aod_az_deg, self.aod_el_deg)
    }

    pub fn aoa(&self) -> crate::Orientation {
        crate::Orientation::new(self.aoa_az_deg, self.aoa_el_deg)
    }

    pub fn is_valid(&self) -> bool {
        self.delay_s > 0.0
            && self.path_gain_db.is_finite()
            && crate::Orientation::new(self.aod_az_deg, self.aod_el_deg).is_valid()
            && crate::Orientation::new(self.aoa_az_deg, self.aoa_el_deg).is_valid()
            && (0.0..2.0 * std::f64::consts::PI).contains(&self.phase_rad)
    }

    fn close_to(&self, o: &Mpc, delay_res_s: f64, angle_res_deg: f64) -> bool {
        let near = |a: f64, b: f64| wrap_deg(a - b).abs() < angle_res_deg;
        (self.delay_s - o.delay_s).abs() < delay_res_s
            && near(self.aod_az_deg, o.aod_az_deg)
            && (self.aod_el_deg - o.aod_el_deg).abs() < angle_res_deg
            && near(self.aoa_az_deg, o.aoa_az_deg)
            && (self.aoa_el_deg - o.aoa_el_deg).abs() < angle_res_deg
    }
}

/// Sparse power angular-delay profile, sorted by delay.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Padp {
    pub mpcs: Vec<Mpc>,
}

impl Padp {
    /// Sorts paths by delay and power-sums pairs that share a delay bin and a
    /// beamwidth in all four angles. The stronger member keeps its geometry.
    pub fn from_paths(mut mpcs: Vec<Mpc>, delay_res_s: f64, angle_res_deg: f64) -> Self {
        // strongest first so that merges keep the dominant geometry
        mpcs.sort_by(|a, b| {
            b.path_gain_db
                .total_cmp(&a.path_gain_db)
                .then(a.delay_s.total_cmp(&b.delay_s))
                .then(a.tag.cmp(&b.tag))
        });
        let mut kept: Vec<Mpc> = Vec::with_capacity(mpcs.len());
        for m in mpcs {
            match kept
                .iter_mut()
                .find(|k| k.close_to(&m, delay_res_s, angle_res_deg))
            {
                Some(k) => {
                    k.path_gain_db = lin_to_db(db_to_lin(k.path_gain_db) + db_to_lin(m.path_gain_db))
                }
                None => kept.push(m),
            }
        }
        kept.sort_by(|a, b| {
            a.delay_s
                .total_cmp(&b.delay_s)
                .then(b.path_gain_db.total_cmp(&a.path_gain_db))
                .then(a.tag.cmp(&b.tag))
        });
        Self { mpcs: kept }
    }

    pub fn len(&self) -> usize {
        self.mpcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mpcs.is_empty()
    }

    pub fn with_tag(&self, tag: MpcTag) -> impl Iterator<Item = &Mpc> {
        self.mpcs.iter().filter(move |m| m.tag == tag)
    }

    pub fn max_gain_db(&self) -> Option<f64> {
        self.mpcs.iter().map(|m| m.path_gain_db).reduce(f64::max)
    }
}

/// Planar quad wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub corners: [Point3; 4],
    #[serde(default = "default_wall_loss")]
    pub reflection_loss_db: f64,
}

fn default_wall_loss() -> f64 {
    DEFAULT_WALL_LOSS_DB
}

impl Surface {
    /// Vertical wall between two floor points spanning heights `z0..z1`.
    pub fn vertical(a: (f64, f64), b: (f64, f64), z0: f64, z1: f64, loss_db: f64) -> Self {
        Self {
            corners: [
                Point3::new(a.0, a.1, z0),
                Point3::new(b.0, b.1, z0),
                Point3::new(b.0, b.1, z1),
                Point3::new(a.0, a.1, z1),
            ],
            reflection_loss_db: loss_db,
        }
    }

    /// Horizontal rectangle at height `z` spanning `x0..x1`, `y0..y1`.
    pub fn horizontal(x: (f64, f64), y: (f64, f64), z: f64, loss_db: f64) -> Self {
        Self {
            corners: [
                Point3::new(x.0, y.0, z),
                Point3::new(x.1, y.0, z),
                Point3::new(x.1, y.1, z),
                Point3::new(x.0, y.1, z),
            ],
            reflection_loss_db: loss_db,
        }
    }

    pub(crate) fn quad(&self) -> Option<Quad> {
        Quad::new(self.corners)
    }

    fn validate(&self, index: usize) -> Result<(), SceneError> {
        let err = |why: &str| SceneError::Surface {
            index,
            why: why.to_string(),
        };
        if !self.corners.iter().all(|c| c.is_finite()) {
            return Err(err("non-finite corner"));
        }
        if !(self.reflection_loss_db >= 0.0) {
            return Err(err("reflection loss must be >= 0 dB"));
        }
        let q = self.quad().ok_or_else(|| err("collinear corners"))?;
        let scale = (self.corners[2] - self.corners[0]).norm().max(1.0);
        if q.planarity_error() > 1e-6 * scale {
            return Err(err("corners are not coplanar"));
        }
        Ok(())
    }
}

/// Amplify-and-forward repeater.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeaterSpec {
    pub position: Point3,
    /// Boresight of the donor (receive) side, facing the TX.
    pub rx_boresight: Point3,
    /// Boresight of the service (transmit) side, facing the coverage area.
    pub tx_boresight: Point3,
    pub gain_db: f64,
    #[serde(default)]
    pub internal_delay_s: f64,
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn yes() -> bool {
    true
}

impl RepeaterSpec {
    fn validate(&self) -> Result<(), SceneError> {
        let bad = |why: &str| Err(SceneError::Repeater(why.to_string()));
        if !self.position.is_finite() {
            return bad("position not finite");
        }
        if (self.rx_boresight.norm() - 1.0).abs() > 1e-6 || (self.tx_boresight.norm() - 1.0).abs() > 1e-6 {
            return bad("boresights must be unit vectors");
        }
        if self.enabled && !self.gain_db.is_finite() {
            return bad("gain must be finite when enabled");
        }
        if !(self.internal_delay_s >= 0.0) {
            return bad("internal delay must be >= 0");
        }
        Ok(())
    }
}

/// Phase assignment for enumerated paths.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PhaseMode {
    /// `φ = (-2π f_c τ) mod 2π`.
    #[default]
    Deterministic,
    /// Independent uniform phase per path drawn from `seed`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub tx_pos: Point3,
    pub rx_pos: Point3,
    #[serde(default)]
    pub surfaces: Vec<Surface>,
    #[serde(default)]
    pub reflector: Option<ReflectorSpec>,
    #[serde(default)]
    pub repeater: Option<RepeaterSpec>,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    #[serde(default)]
    pub phase_mode: PhaseMode,
}

fn default_carrier() -> f64 {
    CARRIER_28GHZ
}

impl Scene {
    /// Free-space scene with no surfaces.
    pub fn free_space(tx_pos: Point3, rx_pos: Point3) -> Self {
        Self {
            tx_pos,
            rx_pos,
            surfaces: Vec::new(),
            reflector: None,
            repeater: None,
            carrier_hz: CARRIER_28GHZ,
            phase_mode: PhaseMode::Deterministic,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !self.tx_pos.is_finite() || !self.rx_pos.is_finite() {
            return Err(SceneError::Degenerate("non-finite TX/RX position".into()));
        }
        if self.tx_pos.distance(self.rx_pos) < 1e-9 {
            return Err(SceneError::Colocated);
        }
        if !(self.carrier_hz > 0.0) {
            return Err(SceneError::Degenerate("carrier must be positive".into()));
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            s.validate(i)?;
        }
        if let Some(r) = &self.reflector {
            r.validate()?;
        }
        if let Some(r) = &self.repeater {
            r.validate()?;
        }
        Ok(())
    }

    fn blocked(&self, a: Point3, b: Point3, skip: Option<usize>) -> bool {
        self.surfaces
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .filter_map(|(_, s)| s.quad())
            .any(|q| q.segment_hit(a, b).is_some())
    }

    /// Total length of the reflector path, if a reflector is configured.
    pub fn reflector_path_length(&self) -> Option<f64> {
        self.reflector.as_ref().map(|r| {
            self.tx_pos.distance(r.center) + r.center.distance(self.rx_pos)
        })
    }
}

/// Geometric description of one path before gains are attached.
struct Ray {
    first_hop: Point3,
    last_hop: Point3,
    length_m: f64,
    extra_delay_s: f64,
    gain_db: f64,
    tag: MpcTag,
}

fn segment(a: Point3, b: Point3, what: &str) -> Result<f64, SceneError> {
    let d = a.distance(b);
    if d < 1e-9 {
        return Err(SceneError::Degenerate(format!("zero-length {what} segment")));
    }
    Ok(d)
}

/// Enumerates LOS, single-bounce wall, reflector, and repeater paths.
pub fn enumerate_paths(scene: &Scene) -> Result<Padp, SceneError> {
    scene.validate()?;
    let f = scene.carrier_hz;
    let (tx, rx) = (scene.tx_pos, scene.rx_pos);
    let mut rays = Vec::new();

    let los = segment(tx, rx, "LOS")?;
    if !scene.blocked(tx, rx, None) {
        rays.push(Ray {
            first_hop: rx,
            last_hop: tx,
            length_m: los,
            extra_delay_s: 0.0,
            gain_db: -fspl_db(los, f),
            tag: MpcTag::Los,
        });
    }

    for (i, s) in scene.surfaces.iter().enumerate() {
        let Some(q) = s.quad() else { continue };
        let (dt, dr) = (q.signed_distance(tx), q.signed_distance(rx));
        // both ends strictly on the same side of the wall
        if dt * dr <= 0.0 {
            continue;
        }
        let image = q.image_of(tx);
        let Some(bounce) = q.segment_hit(image, rx) else { continue };
        let d1 = segment(tx, bounce, "wall incidence")?;
        let d2 = segment(bounce, rx, "wall reflection")?;
        if scene.blocked(tx, bounce, Some(i)) || scene.blocked(bounce, rx, Some(i)) {
            continue;
        }
        rays.push(Ray {
            first_hop: bounce,
            last_hop: bounce,
            length_m: d1 + d2,
            extra_delay_s: 0.0,
            gain_db: -fspl_db(d1 + d2, f) - s.reflection_loss_db,
            tag: MpcTag::WallReflection,
        });
    }

    if let Some(r) = &scene.reflector {
        let c = r.center;
        let d1 = segment(tx, c, "reflector incidence")?;
        let d2 = segment(c, rx, "reflector observation")?;
        let incident = (c - tx) * (1.0 / d1);
        let observe = (rx - c) * (1.0 / d2);
        let response = reflector_response(r, incident, observe, f);
        if response.is_finite() && !scene.blocked(tx, c, None) && !scene.blocked(c, rx, None) {
            let gain = -fspl_db(d1, f) - fspl_db(d2, f) + r.capped_aperture_gain_db(d1, d2, f) + response;
            rays.push(Ray {
                first_hop: c,
                last_hop: c,
                length_m: d1 + d2,
                extra_delay_s: 0.0,
                gain_db: gain,
                tag: MpcTag::PassiveReflector,
            });
        }
    }

    if let Some(rep) = scene.repeater.as_ref().filter(|r| r.enabled) {
        let p = rep.position;
        let d1 = segment(tx, p, "repeater donor")?;
        let d2 = segment(p, rx, "repeater service")?;
        let faces_tx = (tx - p).dot(rep.rx_boresight) > 0.0;
        let faces_rx = (rx - p).dot(rep.tx_boresight) > 0.0;
        if faces_tx && faces_rx && !scene.blocked(tx, p, None) && !scene.blocked(p, rx, None) {
            rays.push(Ray {
                first_hop: p,
                last_hop: p,
                length_m: d1 + d2,
                extra_delay_s: rep.internal_delay_s,
                gain_db: -fspl_db(d1, f) - fspl_db(d2, f) + rep.gain_db,
                tag: MpcTag::Repeater,
            });
        }
    }

    let mut phase_rng = match scene.phase_mode {
        PhaseMode::Random { seed } => Some(ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5048, 0))),
        PhaseMode::Deterministic => None,
    };
    let mpcs = rays
        .into_iter()
        .map(|ray| {
            let delay_s = ray.length_m / SPEED_OF_LIGHT + ray.extra_delay_s;
            let (aod_az, aod_el) = (ray.first_hop - tx).az_el_deg();
            let (aoa_az, aoa_el) = (ray.last_hop - rx).az_el_deg();
            let phase = match phase_rng.as_mut() {
                Some(rng) => wrap_phase(rng.random::<f64>() * 2.0 * std::f64::consts::PI),
                None => wrap_phase(-2.0 * std::f64::consts::PI * f * delay_s),
            };
            Mpc {
                path_gain_db: ray.gain_db,
                delay_s,
                aod_az_deg: aod_az,
                aod_el_deg: aod_el,
                aoa_az_deg: aoa_az,
                aoa_el_deg: aoa_el,
                phase_rad: phase,
                tag: ray.tag,
            }
        })
        .collect();
    Ok(Padp::from_paths(mpcs, MERGE_DELAY_S, MERGE_ANGLE_DEG))
}

/// Points on a horizontal circle around `center`, `step_deg` apart as seen
/// from the center, starting at global azimuth `start_angle_deg`.
pub fn arc_positions(
    center: Point3,
    radius: f64,
    start_angle_deg: f64,
    step_deg: f64,
    count: usize,
) -> Result<Vec<Point3>, SceneError> {
    if !(radius > 0.0) {
        return Err(SceneError::Arc(format!("radius must be positive, got {radius}")));
    }
    if count == 0 {
        return Err(SceneError::Arc("count must be >= 1".into()));
    }
    Ok((0..count)
        .map(|k| {
            let a = (start_angle_deg + step_deg * k as f64).to_radians();
            center + Point3::new(radius * a.cos(), radius * a.sin(), 0.0)
        })
        .collect())
}
