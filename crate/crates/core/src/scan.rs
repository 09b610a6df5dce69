//! Scan schedules for horn-on-gimbal and phased-array-on-gimbal sounding,
//! plus the measurement-time model.

use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaPattern, Orientation};
use crate::units::wrap_deg;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScanError {
    #[error("{0} angle set is empty")]
    EmptySet(&'static str),
    #[error("{set} angle set contains {angle}° twice")]
    Duplicate { set: &'static str, angle: f64 },
    #[error("electronic offset ({az}°, {el}°) exceeds the steering limit")]
    NotSteerable { az: f64, el: f64 },
    #[error("invalid span/step: {0}")]
    Span(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    HornGimbal,
    PhasedArrayHybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanStep {
    pub tx: Orientation,
    pub rx: Orientation,
    pub dwell_s: f64,
    /// Index into [`ScanSchedule::gimbal_positions`] (hybrid mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gimbal: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSchedule {
    pub mode: ScanMode,
    pub steps: Vec<ScanStep>,
    /// `(tx mount, rx mount)` per gimbal configuration, in visit order.
    #[serde(default)]
    pub gimbal_positions: Vec<(Orientation, Orientation)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingModel {
    pub horn_step_s: f64,
    pub array_switch_s: f64,
    pub gimbal_reposition_s: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            horn_step_s: 1.0,
            array_switch_s: 0.015,
            gimbal_reposition_s: 10.0,
        }
    }
}

/// Measurement time split into the headline switching/stepping time and the
/// separately reported gimbal repositioning time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanTime {
    pub measurement_s: f64,
    pub repositioning_s: f64,
}

/// Dwell per fine alignment step (1° gimbal moves at one measurement per 100 ms).
pub const ALIGNMENT_DWELL_S: f64 = 0.1;

fn check_set(name: &'static str, set: &[f64]) -> Result<Vec<f64>, ScanError> {
    if set.is_empty() {
        return Err(ScanError::EmptySet(name));
    }
    let mut seen: Vec<f64> = Vec::with_capacity(set.len());
    for &a in set {
        let w = if name.ends_with("az") { wrap_deg(a) } else { a };
        if seen.iter().any(|s| (s - w).abs() < 1e-9) {
            return Err(ScanError::Duplicate { set: name, angle: a });
        }
        seen.push(w);
    }
    Ok(seen)
}

/// Full Cartesian product of TX and RX grids, RX azimuth innermost.
pub fn horn_schedule(
    tx_az: &[f64],
    tx_el: &[f64],
    rx_az: &[f64],
    rx_el: &[f64],
) -> Result<ScanSchedule, ScanError> {
    let tx_az = check_set("tx_az", tx_az)?;
    let tx_el = check_set("tx_el", tx_el)?;
    let rx_az = check_set("rx_az", rx_az)?;
    let rx_el = check_set("rx_el", rx_el)?;
    let dwell = TimingModel::default().horn_step_s;
    let mut steps = Vec::with_capacity(tx_az.len() * tx_el.len() * rx_az.len() * rx_el.len());
    for &te in &tx_el {
        for &ta in &tx_az {
            for &re in &rx_el {
                for &ra in &rx_az {
                    steps.push(ScanStep {
                        tx: Orientation::new(ta, te),
                        rx: Orientation::new(ra, re),
                        dwell_s: dwell,
                        gimbal: None,
                    });
                }
            }
        }
    }
    Ok(ScanSchedule {
        mode: ScanMode::HornGimbal,
        steps,
        gimbal_positions: Vec::new(),
    })
}

/// Gimbal-mounted phased arrays: for every `(tx mount, rx mount)` pair the
/// arrays sweep the full electronic product of azimuth offsets × elevations.
pub fn phased_array_schedule(
    tx_gimbal_az: &[f64],
    rx_gimbal_az: &[f64],
    electronic_az: &[f64],
    el_set: &[f64],
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
) -> Result<ScanSchedule, ScanError> {
    let tx_g = check_set("tx_gimbal_az", tx_gimbal_az)?;
    let rx_g = check_set("rx_gimbal_az", rx_gimbal_az)?;
    let e_az = check_set("electronic_az", electronic_az)?;
    let els = check_set("el", el_set)?;
    for &a in &e_az {
        for &e in &els {
            let off = Orientation::new(a, e);
            if !tx_pattern.steerable(off) || !rx_pattern.steerable(off) {
                return Err(ScanError::NotSteerable { az: a, el: e });
            }
        }
    }
    let dwell = TimingModel::default().array_switch_s;
    let mut steps = Vec::new();
    let mut gimbal_positions = Vec::new();
    for &tg in &tx_g {
        for &rg in &rx_g {
            let g = gimbal_positions.len();
            let (tx_mount, rx_mount) = (Orientation::new(tg, 0.0), Orientation::new(rg, 0.0));
            gimbal_positions.push((tx_mount, rx_mount));
            for &te in &els {
                for &ta in &e_az {
                    for &re in &els {
                        for &ra in &e_az {
                            steps.push(ScanStep {
                                tx: tx_mount.offset_by(Orientation::new(ta, te)),
                                rx: rx_mount.offset_by(Orientation::new(ra, re)),
                                dwell_s: dwell,
                                gimbal: Some(g),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ScanSchedule {
        mode: ScanMode::PhasedArrayHybrid,
        steps,
        gimbal_positions,
    })
}

/// `{-span, -span+step, …, span}`; a zero span yields `{0}`.
pub fn symmetric_offsets(span_deg: f64, step_deg: f64) -> Result<Vec<f64>, ScanError> {
    if !(span_deg >= 0.0) {
        return Err(ScanError::Span(format!("span {span_deg} must be >= 0")));
    }
    if span_deg == 0.0 {
        return Ok(vec![0.0]);
    }
    if !(step_deg > 0.0) {
        return Err(ScanError::Span(format!("step {step_deg} must be > 0")));
    }
    let n = (span_deg / step_deg + 1e-9).floor() as i64;
    Ok((-n..=n).map(|k| k as f64 * step_deg).collect())
}

/// `{start, start+step, …}` covering `span_deg` (inclusive), e.g. a 340° sweep
/// at 20° gives 18 angles.
pub fn sweep(start_deg: f64, span_deg: f64, step_deg: f64) -> Result<Vec<f64>, ScanError> {
    if !(span_deg >= 0.0 && step_deg > 0.0) {
        return Err(ScanError::Span(format!("span {span_deg} / step {step_deg}")));
    }
    let n = (span_deg / step_deg + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| wrap_deg(start_deg + k as f64 * step_deg)).collect())
}

/// Fine alignment grid around the nominal pointing: offsets only, relative to
/// the TX and RX aligned orientations (see [`ScanSchedule::offset_by`]).
pub fn alignment_scan(
    tx_span_deg: f64,
    tx_step_deg: f64,
    rx_span_deg: f64,
    rx_step_deg: f64,
) -> Result<ScanSchedule, ScanError> {
    let tx = symmetric_offsets(tx_span_deg, tx_step_deg)?;
    let rx = symmetric_offsets(rx_span_deg, rx_step_deg)?;
    let mut sched = horn_schedule(&tx, &[0.0], &rx, &[0.0])?;
    sched.steps.iter_mut().for_each(|s| s.dwell_s = ALIGNMENT_DWELL_S);
    Ok(sched)
}

impl ScanSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Schedule with every step shifted by the given nominal orientations.
    pub fn offset_by(&self, tx_nominal: Orientation, rx_nominal: Orientation) -> Self {
        let mut out = self.clone();
        for s in out.steps.iter_mut() {
            s.tx = tx_nominal.offset_by(s.tx);
            s.rx = rx_nominal.offset_by(s.rx);
        }
        out
    }

    /// Number of gimbal moves between consecutive mount configurations.
    pub fn gimbal_repositions(&self) -> usize {
        self.gimbal_positions.len().saturating_sub(1)
    }

    /// Distinct absolute azimuths visited on each side, sorted.
    pub fn azimuth_union(&self) -> (Vec<f64>, Vec<f64>) {
        let collect = |f: &dyn Fn(&ScanStep) -> f64| {
            let mut v: Vec<f64> = Vec::new();
            for s in &self.steps {
                let a = f(s);
                if !v.iter().any(|x| (x - a).abs() < 1e-9) {
                    v.push(a);
                }
            }
            v.sort_by(f64::total_cmp);
            v
        };
        (collect(&|s| s.tx.az_deg), collect(&|s| s.rx.az_deg))
    }

    /// Writes `step_index,tx_az,tx_el,rx_az,rx_el,dwell_s` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step_index", "tx_az", "tx_el", "rx_az", "rx_el", "dwell_s"])?;
        for (i, s) in self.steps.iter().enumerate() {
            out.write_record([
                i.to_string(),
                format!("{}", s.tx.az_deg),
                format!("{}", s.tx.el_deg),
                format!("{}", s.rx.az_deg),
                format!("{}", s.rx.el_deg),
                format!("{}", s.dwell_s),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Measurement time of a schedule under a timing model.
pub fn total_time(schedule: &ScanSchedule, timing: &TimingModel) -> ScanTime {
    let m = schedule.steps.len() as f64;
    match schedule.mode {
        ScanMode::HornGimbal => ScanTime {
            measurement_s: m * timing.horn_step_s,
            repositioning_s: 0.0,
        },
        ScanMode::PhasedArrayHybrid => ScanTime {
            measurement_s: m * timing.array_switch_s,
            repositioning_s: schedule.gimbal_repositions() as f64 * timing.gimbal_reposition_s,
        },
    }
}

/// The seminar-hall azimuth grid: −180°…160° in 20° steps, minus `skip`.
pub fn hall_azimuths(skip: Option<f64>) -> Vec<f64> {
    (0..18)
        .map(|k| -180.0 + 20.0 * k as f64)
        .filter(|a| skip.is_none_or(|s| (a - s).abs() > 1e-9))
        .collect()
}

/// Elevation grid shared by both antenna types.
pub const HALL_ELEVATIONS: [f64; 3] = [-20.0, 0.0, 20.0];
/// Gimbal mount azimuths used with the phased array.
pub const HALL_GIMBAL_AZ: [f64; 5] = [-160.0, -100.0, 0.0, 100.0, 160.0];
/// Electronic azimuth offsets of the phased array.
pub const HALL_ELECTRONIC_AZ: [f64; 5] = [-40.0, -20.0, 0.0, 20.0, 40.0];

#[cfg(test)]
mod tests {
    use super::*;

    fn hall_horn() -> ScanSchedule {
        horn_schedule(
            &hall_azimuths(Some(0.0)),
            &HALL_ELEVATIONS,
            &hall_azimuths(Some(-180.0)),
            &HALL_ELEVATIONS,
        )
        .unwrap()
    }

    fn hall_array(tx_g: &[f64], rx_g: &[f64]) -> ScanSchedule {
        phased_array_schedule(
            tx_g,
            rx_g,
            &HALL_ELECTRONIC_AZ,
            &HALL_ELEVATIONS,
            &AntennaPattern::phased_array_tx(),
            &AntennaPattern::phased_array_rx(),
        )
        .unwrap()
    }

    #[test]
    fn horn_count_2601() {
        assert_eq!(hall_horn().len(), 2601);
    }

    #[test]
    fn horn_degenerate_and_ordering() {
        assert_eq!(horn_schedule(&[0.0], &[0.0], &[0.0], &[0.0]).unwrap().len(), 1);
        let s = horn_schedule(&[10.0, 20.0], &[0.0], &[-10.0, -20.0], &[0.0]).unwrap();
        let pairs: Vec<_> = s.steps.iter().map(|s| (s.tx.az_deg, s.rx.az_deg)).collect();
        assert_eq!(pairs, vec![(10.0, -10.0), (10.0, -20.0), (20.0, -10.0), (20.0, -20.0)]);
    }

    #[test]
    fn horn_rejects_duplicates_and_empty() {
        assert_eq!(
            horn_schedule(&[10.0, 10.0], &[0.0], &[0.0], &[0.0]),
            Err(ScanError::Duplicate { set: "tx_az", angle: 10.0 })
        );
        // 180 and -180 are the same azimuth
        assert!(horn_schedule(&[0.0], &[0.0], &[180.0, -180.0], &[0.0]).is_err());
        assert_eq!(
            horn_schedule(&[], &[0.0], &[0.0], &[0.0]),
            Err(ScanError::EmptySet("tx_az"))
        );
    }

    #[test]
    fn phased_array_counts() {
        let full = hall_array(&HALL_GIMBAL_AZ, &HALL_GIMBAL_AZ);
        assert_eq!(full.len(), 5625);
        assert_eq!(full.gimbal_positions.len(), 25);
        let one = hall_array(&[0.0], &[0.0]);
        assert_eq!(one.len(), 225);
    }

    #[test]
    fn phased_array_azimuth_union() {
        let full = hall_array(&HALL_GIMBAL_AZ, &HALL_GIMBAL_AZ);
        let (tx, rx) = full.azimuth_union();
        // gimbal + offset sums, wrapped, computed independently
        let mut oracle: Vec<f64> = Vec::new();
        for g in HALL_GIMBAL_AZ {
            for e in HALL_ELECTRONIC_AZ {
                let a = ((g + e + 180.0) % 360.0 + 360.0) % 360.0 - 180.0;
                if !oracle.contains(&a) {
                    oracle.push(a);
                }
            }
        }
        oracle.sort_by(f64::total_cmp);
        assert_eq!(tx, oracle);
        assert_eq!(rx, oracle);
        assert_eq!(tx, hall_azimuths(None));
        for a in hall_azimuths(Some(0.0)) {
            assert!(tx.contains(&a));
        }
    }

    #[test]
    fn phased_array_steering_enforced() {
        let err = phased_array_schedule(
            &[0.0],
            &[0.0],
            &[-60.0, 0.0],
            &[0.0],
            &AntennaPattern::phased_array_tx(),
            &AntennaPattern::phased_array_rx(),
        );
        assert_eq!(err, Err(ScanError::NotSteerable { az: -60.0, el: 0.0 }));
        let full = hall_array(&HALL_GIMBAL_AZ, &HALL_GIMBAL_AZ);
        let pa = AntennaPattern::phased_array_rx();
        for s in &full.steps {
            let (tx_mount, rx_mount) = full.gimbal_positions[s.gimbal.unwrap()];
            let (ta, te) = tx_mount.delta_to(&s.tx);
            let (ra, re) = rx_mount.delta_to(&s.rx);
            assert!(pa.steerable(Orientation::new(ta, te)) && pa.steerable(Orientation::new(ra, re)));
        }
    }

    #[test]
    fn no_duplicate_pairs_within_gimbal_config() {
        let full = hall_array(&HALL_GIMBAL_AZ, &HALL_GIMBAL_AZ);
        for g in 0..full.gimbal_positions.len() {
            let mut keys: Vec<(i64, i64, i64, i64)> = full
                .steps
                .iter()
                .filter(|s| s.gimbal == Some(g))
                .map(|s| {
                    let k = |v: f64| (v * 1000.0).round() as i64;
                    (k(s.tx.az_deg), k(s.tx.el_deg), k(s.rx.az_deg), k(s.rx.el_deg))
                })
                .collect();
            let n = keys.len();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), n);
        }
    }

    #[test]
    fn timing_headlines() {
        let t = TimingModel::default();
        let horn = total_time(&hall_horn(), &t);
        assert_eq!(horn.measurement_s, 2601.0);
        assert!((horn.measurement_s / 60.0 - 43.35).abs() < 1e-9);
        let arr = total_time(&hall_array(&HALL_GIMBAL_AZ, &HALL_GIMBAL_AZ), &t);
        assert!((arr.measurement_s - 84.375).abs() < 1e-9);
        assert!((arr.measurement_s / 60.0 - 1.40625).abs() < 1e-9);
        assert_eq!(arr.repositioning_s, 24.0 * 10.0);
        let empty = ScanSchedule {
            mode: ScanMode::HornGimbal,
            steps: vec![],
            gimbal_positions: vec![],
        };
        assert_eq!(total_time(&empty, &t).measurement_s, 0.0);
    }

    #[test]
    fn alignment_counts() {
        assert_eq!(alignment_scan(5.0, 1.0, 15.0, 1.0).unwrap().len(), 341);
        assert_eq!(alignment_scan(0.0, 1.0, 0.0, 1.0).unwrap().len(), 1);
        assert_eq!(alignment_scan(1.0, 1.0, 0.0, 1.0).unwrap().len(), 3);
        assert!(alignment_scan(-1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn hallway_sweep_is_18_angles() {
        let s = sweep(0.0, 340.0, 20.0).unwrap();
        assert_eq!(s.len(), 18);
        let sched = horn_schedule(&s, &[0.0], &s, &[0.0]).unwrap();
        assert_eq!(sched.len(), 324);
    }

    #[test]
    fn time_is_linear_in_steps() {
        let t = TimingModel::default();
        let a = horn_schedule(&[0.0, 10.0], &[0.0], &[0.0], &[0.0]).unwrap();
        let b = horn_schedule(&[0.0, 10.0, 20.0, 30.0], &[0.0], &[0.0], &[0.0]).unwrap();
        assert_eq!(2.0 * total_time(&a, &t).measurement_s, total_time(&b, &t).measurement_s);
    }

    #[test]
    fn schedule_csv_header() {
        let s = alignment_scan(1.0, 1.0, 0.0, 1.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step_index,tx_az,tx_el,rx_az,rx_el,dwell_s\n0,-1,0,0,0,0.1\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
