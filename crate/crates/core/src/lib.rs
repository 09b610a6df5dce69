//! Simulator for a 28 GHz rotated-directional-antenna channel sounder.
//!
//! The crate runs both directions of a PADP measurement campaign:
//!
//! * forward: [`scene`] enumerates geometric paths into a ground-truth
//!   [`scene::Padp`], [`scan`] produces the orientation schedule, and
//!   [`sounder`] synthesizes one directional CIR per scan step;
//! * inverse: [`analysis`] turns the CIRs back into PDPs, path gains,
//!   CDFs, and a recovered list of multipath components.
//!
//! [`runner`] wires the pieces into the hall, reflector-arc, and repeater
//! hallway experiments and writes CSV/JSON/SVG artifacts.

pub mod analysis;
pub mod antenna;
pub mod runner;
pub mod scan;
pub mod scene;
pub mod sounder;
pub mod units;

pub use analysis::{ExtractionConfig, MeasurementRecord, RecoveredPadp};
pub use antenna::{AntennaPattern, Orientation};
pub use scan::{ScanMode, ScanSchedule, ScanStep, TimingModel};
pub use scene::{Mpc, MpcTag, Padp, Point3, ReflectorKind, ReflectorSpec, RepeaterSpec, Scene, Surface};
pub use sounder::{Cir, SounderConfig};
