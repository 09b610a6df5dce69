//! Inverse pipeline: PDPs, de-embedded path gains, MPC extraction, CDFs.
//!
//! The extractor is a peak-group-assign procedure over the scan grid:
//!
//! 1. every record contributes the local maxima of its PDP that clear
//!    `noise_floor + detection_margin`;
//! 2. detections are visited strongest first (ties broken by schedule step
//!    index, then bin) and grouped by delay;
//! 3. a detection opens a new component only when it is not within one
//!    angular merge distance of an existing component at that delay, is not
//!    explained by the antenna-pattern leakage of the components already
//!    found there, and is an angular local maximum on the grid;
//! 4. the opening record fixes the component's delay, phase, and grid angles;
//!    with `refine_angles` the known parabolic main lobe is fitted through
//!    the neighbouring grid records to recover off-grid angles and the
//!    boresight-equivalent power;
//! 5. the path gain follows from `P_RX − P_TX − G_TX − G_RX`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaPattern, Orientation};
use crate::scene::{Mpc, MpcTag};
use crate::sounder::Cir;
use crate::units::{db_to_lin, lin_to_db, power_to_dbm, wrap_deg, wrap_phase, POWER_FLOOR_DBM};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AnalysisError {
    #[error("no measurement records")]
    NoRecords,
    #[error("no values for CDF")]
    EmptyCdf,
    #[error("reflector delay {delay_s:e} s (bin {bin} ± {window}) outside the {bins}-bin tap window")]
    DelayOutsideWindow {
        delay_s: f64,
        bin: i64,
        window: usize,
        bins: usize,
    },
}

/// One scan position: the CIR and the powers derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub cir: Cir,
    pub total_rx_power_dbm: f64,
    pub path_gain_db: f64,
    pub step_index: usize,
}

impl MeasurementRecord {
    /// Builds a record, de-embedding boresight gains from the total power.
    pub fn new(cir: Cir, step_index: usize, p_tx_dbm: f64, g_tx_dbi: f64, g_rx_dbi: f64) -> Self {
        let total = cir.total_power_dbm();
        Self {
            cir,
            total_rx_power_dbm: total,
            path_gain_db: total - p_tx_dbm - g_tx_dbi - g_rx_dbi,
            step_index,
        }
    }
}

/// Per-bin power in dBm, clamped at −200 dBm.
pub fn pdp(cir: &Cir) -> Vec<f64> {
    cir.taps.iter().map(|t| power_to_dbm(t.norm_sqr())).collect()
}

/// `P_RX − P_TX − G_TX − G_RX` for one record.
pub fn path_gain(record: &MeasurementRecord, p_tx_dbm: f64, g_tx_dbi: f64, g_rx_dbi: f64) -> f64 {
    record.total_rx_power_dbm - p_tx_dbm - g_tx_dbi - g_rx_dbi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub detection_margin_db: f64,
    pub delay_merge_bins: usize,
    pub angle_merge_deg: f64,
    /// Noise floor per tap used for the detection threshold.
    pub noise_floor_dbm: f64,
    /// Replace `noise_floor_dbm` with [`estimate_noise_floor`] of the records.
    pub estimate_noise_floor: bool,
    /// Slack when deciding that a detection is sidelobe leakage of a known path.
    pub explain_margin_db: f64,
    pub refine_angles: bool,
    /// A new component must also clear the threshold in at least one
    /// adjacent grid record at the same delay. Suppresses isolated noise
    /// spikes, which are independent from record to record.
    pub require_neighbour_support: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            detection_margin_db: 10.0,
            delay_merge_bins: 1,
            angle_merge_deg: 24.0,
            noise_floor_dbm: -100.0,
            estimate_noise_floor: false,
            explain_margin_db: 6.0,
            refine_angles: true,
            require_neighbour_support: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPadp {
    pub mpcs: Vec<Mpc>,
    /// Power (dBm) summed over all bins that were not detected as peaks.
    pub residual_power_db: f64,
}

/// Median of the lowest decile of non-empty bins across all records.
pub fn estimate_noise_floor(records: &[MeasurementRecord]) -> Option<f64> {
    let mut p: Vec<f64> = records
        .iter()
        .flat_map(|r| r.cir.taps.iter().map(|t| t.norm_sqr()))
        .filter(|&v| v > 0.0)
        .collect();
    if p.is_empty() {
        return None;
    }
    p.sort_by(f64::total_cmp);
    let decile = &p[..(p.len() / 10).max(1)];
    Some(lin_to_db(decile[decile.len() / 2]))
}

#[derive(Debug, Clone, Copy)]
struct Detection {
    record: usize,
    step_index: usize,
    bin: usize,
    power_mw: f64,
}

#[derive(Debug, Clone)]
struct Cluster {
    bin: usize,
    grid_tx: Orientation,
    grid_rx: Orientation,
    est_tx: Orientation,
    est_rx: Orientation,
    /// Received power a boresight-aligned antenna pair would see, dBm.
    boresight_dbm: f64,
    phase: f64,
}

type GridKey = [i64; 4];

fn grid_key(tx: Orientation, rx: Orientation) -> GridKey {
    let q = |v: f64| (v * 1000.0).round() as i64;
    [q(tx.az_deg), q(tx.el_deg), q(rx.az_deg), q(rx.el_deg)]
}

/// Orientation grid spanned by a set of records.
struct Grid<'a> {
    records: &'a [MeasurementRecord],
    index: HashMap<GridKey, usize>,
    /// Sorted distinct values for tx az, tx el, rx az, rx el.
    axes: [Vec<f64>; 4],
}

impl<'a> Grid<'a> {
    fn new(records: &'a [MeasurementRecord]) -> Self {
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by_key(|&i| records[i].step_index);
        let mut index = HashMap::with_capacity(records.len());
        let mut axes: [Vec<f64>; 4] = Default::default();
        for i in order {
            let c = &records[i].cir;
            index.entry(grid_key(c.tx_orientation, c.rx_orientation)).or_insert(i);
            let vals = [
                c.tx_orientation.az_deg,
                c.tx_orientation.el_deg,
                c.rx_orientation.az_deg,
                c.rx_orientation.el_deg,
            ];
            for (axis, v) in axes.iter_mut().zip(vals) {
                if !axis.iter().any(|a| (a - v).abs() < 1e-6) {
                    axis.push(v);
                }
            }
        }
        axes.iter_mut().for_each(|a| a.sort_by(f64::total_cmp));
        Self {
            records,
            index,
            axes,
        }
    }

    fn coords(o: (Orientation, Orientation)) -> [f64; 4] {
        [o.0.az_deg, o.0.el_deg, o.1.az_deg, o.1.el_deg]
    }

    fn orient(c: [f64; 4]) -> (Orientation, Orientation) {
        (Orientation::new(c[0], c[1]), Orientation::new(c[2], c[3]))
    }

    /// Grid neighbours of `value` along `axis` (azimuth axes wrap around).
    fn neighbours(&self, axis: usize, value: f64) -> [Option<f64>; 2] {
        let vals = &self.axes[axis];
        let Some(pos) = vals.iter().position(|v| (v - value).abs() < 1e-6) else {
            return [None, None];
        };
        let circular = axis % 2 == 0 && vals.len() > 2;
        let lower = if pos > 0 {
            Some(vals[pos - 1])
        } else if circular {
            vals.last().copied()
        } else {
            None
        };
        let upper = if pos + 1 < vals.len() {
            Some(vals[pos + 1])
        } else if circular {
            vals.first().copied()
        } else {
            None
        };
        [lower, upper]
    }

    fn record_at(&self, c: [f64; 4]) -> Option<&'a MeasurementRecord> {
        let (tx, rx) = Self::orient(c);
        self.index.get(&grid_key(tx, rx)).map(|&i| &self.records[i])
    }

    /// `(coordinate value, power at bin)` of the two neighbours along `axis`.
    fn neighbour_powers(&self, at: [f64; 4], axis: usize, bin: usize) -> Vec<(f64, f64)> {
        self.neighbours(axis, at[axis])
            .into_iter()
            .flatten()
            .filter_map(|v| {
                let mut c = at;
                c[axis] = v;
                self.record_at(c).map(|r| (v, r.cir.tap_power_mw(bin)))
            })
            .collect()
    }
}

fn axis_delta(axis: usize, a: f64, b: f64) -> f64 {
    if axis % 2 == 0 {
        wrap_deg(a - b)
    } else {
        a - b
    }
}

fn curvatures(tx: &AntennaPattern, rx: &AntennaPattern) -> [f64; 4] {
    let (ta, te) = tx.curvature();
    let (ra, re) = rx.curvature();
    [ta, te, ra, re]
}

/// Collects every PDP local maximum above the detection threshold.
fn detect(records: &[MeasurementRecord], threshold_mw: f64) -> Vec<Detection> {
    records
        .par_iter()
        .enumerate()
        .map(|(ri, r)| {
            let p: Vec<f64> = r.cir.taps.iter().map(|t| t.norm_sqr()).collect();
            let n = p.len();
            (0..n)
                .filter(|&k| {
                    let left = if k > 0 { p[k - 1] } else { 0.0 };
                    let right = if k + 1 < n { p[k + 1] } else { 0.0 };
                    p[k] > threshold_mw && p[k] >= left && p[k] > right
                })
                .map(|k| Detection {
                    record: ri,
                    step_index: r.step_index,
                    bin: k,
                    power_mw: p[k],
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

struct Extractor<'a> {
    grid: Grid<'a>,
    tx_pattern: &'a AntennaPattern,
    rx_pattern: &'a AntennaPattern,
    cfg: &'a ExtractionConfig,
    threshold_mw: f64,
}

impl Extractor<'_> {
    fn predicted_dbm(&self, c: &Cluster, tx: Orientation, rx: Orientation) -> f64 {
        let (ta, te) = c.est_tx.delta_to(&tx);
        let (ra, re) = c.est_rx.delta_to(&rx);
        c.boresight_dbm - self.tx_pattern.offset_loss_db(ta, te) - self.rx_pattern.offset_loss_db(ra, re)
    }

    fn angularly_close(&self, c: &Cluster, tx: Orientation, rx: Orientation) -> bool {
        let (ta, te) = c.grid_tx.delta_to(&tx);
        let (ra, re) = c.grid_rx.delta_to(&rx);
        [ta, te, ra, re]
            .iter()
            .all(|d| d.abs() <= self.cfg.angle_merge_deg + 1e-9)
    }

    fn is_angular_peak(&self, at: [f64; 4], bin: usize, power_mw: f64) -> bool {
        (0..4).all(|axis| {
            self.grid
                .neighbour_powers(at, axis, bin)
                .iter()
                .all(|&(_, p)| power_mw >= p)
        })
    }

    fn has_support(&self, at: [f64; 4], bin: usize) -> bool {
        let m = self.cfg.delay_merge_bins;
        let lo = bin.saturating_sub(m);
        (0..4).any(|axis| {
            self.grid.neighbours(axis, at[axis]).into_iter().flatten().any(|v| {
                let mut c = at;
                c[axis] = v;
                self.grid.record_at(c).is_some_and(|r| {
                    let hi = (bin + m).min(r.cir.taps.len() - 1);
                    (lo..=hi).any(|k| r.cir.tap_power_mw(k) > self.threshold_mw)
                })
            })
        })
    }

    /// Fits the parabolic main lobe through the peak and its strongest grid
    /// neighbour on each axis. Returns refined coordinates and the
    /// boresight-equivalent power in dBm.
    fn refine(&self, at: [f64; 4], bin: usize, peak_dbm: f64) -> ([f64; 4], f64) {
        let k = curvatures(self.tx_pattern, self.rx_pattern);
        let mut est = at;
        let mut used: [Option<f64>; 4] = [None; 4];
        for axis in 0..4 {
            let best = self
                .grid
                .neighbour_powers(at, axis, bin)
                .into_iter()
                .filter(|&(_, p)| p > self.threshold_mw)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let Some((xn, pn)) = best else { continue };
            let step = axis_delta(axis, xn, at[axis]);
            if step.abs() < 1e-9 {
                continue;
            }
            let drop = peak_dbm - lin_to_db(pn);
            // P(x) = A − k(x − x0)²; solve for x0 relative to the peak
            let shift = (step / 2.0 - drop / (2.0 * k[axis] * step)).clamp(-step.abs(), step.abs());
            est[axis] = at[axis] + shift;
            used[axis] = Some(xn);
        }

        let floors = [
            self.tx_pattern.sidelobe_floor_db,
            self.tx_pattern.sidelobe_floor_db,
            self.rx_pattern.sidelobe_floor_db,
            self.rx_pattern.sidelobe_floor_db,
        ];
        let loss = |axis: usize, x: f64, e: &[f64; 4]| k[axis] * axis_delta(axis, x, e[axis]).powi(2);
        // a fit is only trusted when peak and neighbour both sit in the main lobe
        for axis in 0..4 {
            let Some(xn) = used[axis] else { continue };
            let side = if axis < 2 { [0, 1] } else { [2, 3] };
            let other = side.into_iter().find(|&a| a != axis).unwrap();
            let at_peak = loss(axis, at[axis], &est) + loss(other, at[other], &est);
            let at_nb = loss(axis, xn, &est) + loss(other, at[other], &est);
            if at_peak.max(at_nb) >= floors[axis] - 0.5 {
                est[axis] = at[axis];
            }
        }
        let gain_back: f64 = (0..4).map(|axis| loss(axis, at[axis], &est)).sum();
        (est, peak_dbm + gain_back)
    }

    fn open_cluster(&self, d: &Detection) -> Cluster {
        let rec = &self.grid.records[d.record];
        let (grid_tx, grid_rx) = (rec.cir.tx_orientation, rec.cir.rx_orientation);
        let at = Grid::coords((grid_tx, grid_rx));
        let peak_dbm = lin_to_db(d.power_mw);
        let (est, boresight_dbm) = if self.cfg.refine_angles {
            self.refine(at, d.bin, peak_dbm)
        } else {
            (at, peak_dbm)
        };
        let (est_tx, est_rx) = Grid::orient(est);
        Cluster {
            bin: d.bin,
            grid_tx,
            grid_rx,
            est_tx,
            est_rx,
            boresight_dbm,
            phase: rec.cir.taps[d.bin].arg(),
        }
    }
}

/// Recovers a PADP from a full scan of records.
pub fn extract_mpcs(
    records: &[MeasurementRecord],
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    tx_power_dbm: f64,
    cfg: &ExtractionConfig,
) -> Result<RecoveredPadp, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::NoRecords);
    }
    let floor = if cfg.estimate_noise_floor {
        estimate_noise_floor(records).unwrap_or(cfg.noise_floor_dbm)
    } else {
        cfg.noise_floor_dbm
    };
    let threshold_mw = db_to_lin(floor + cfg.detection_margin_db);
    let ex = Extractor {
        grid: Grid::new(records),
        tx_pattern,
        rx_pattern,
        cfg,
        threshold_mw,
    };

    let mut dets = detect(records, threshold_mw);
    dets.sort_by(|a, b| {
        b.power_mw
            .total_cmp(&a.power_mw)
            .then(a.step_index.cmp(&b.step_index))
            .then(a.bin.cmp(&b.bin))
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for d in &dets {
        let rec = &records[d.record];
        let (tx, rx) = (rec.cir.tx_orientation, rec.cir.rx_orientation);
        let near: Vec<&Cluster> = clusters
            .iter()
            .filter(|c| c.bin.abs_diff(d.bin) <= cfg.delay_merge_bins)
            .collect();
        if near.iter().any(|c| ex.angularly_close(c, tx, rx)) {
            continue;
        }
        let predicted: f64 = near.iter().map(|c| db_to_lin(ex.predicted_dbm(c, tx, rx))).sum();
        // noise adds in amplitude, so allow a threshold-level noise amplitude
        // on top of the (margin-scaled) predicted leakage
        let bound = predicted.sqrt() * db_to_lin(cfg.explain_margin_db / 2.0) + threshold_mw.sqrt();
        if predicted > 0.0 && d.power_mw.sqrt() <= bound {
            continue;
        }
        let at = Grid::coords((tx, rx));
        if !ex.is_angular_peak(at, d.bin, d.power_mw) {
            continue;
        }
        if cfg.require_neighbour_support && !ex.has_support(at, d.bin) {
            continue;
        }
        clusters.push(ex.open_cluster(d));
    }

    let mut detected: HashMap<(usize, usize), ()> = HashMap::with_capacity(dets.len());
    for d in &dets {
        detected.insert((d.record, d.bin), ());
    }
    let residual_mw: f64 = records
        .iter()
        .enumerate()
        .flat_map(|(ri, r)| {
            let detected = &detected;
            r.cir
                .taps
                .iter()
                .enumerate()
                .filter(move |(k, _)| !detected.contains_key(&(ri, *k)))
                .map(|(_, t)| t.norm_sqr())
        })
        .sum();

    let bw = records[0].cir.bin_width_s;
    let g0 = tx_pattern.boresight_gain_dbi + rx_pattern.boresight_gain_dbi;
    let mut mpcs: Vec<Mpc> = clusters
        .iter()
        .map(|c| Mpc {
            path_gain_db: c.boresight_dbm - tx_power_dbm - g0,
            delay_s: c.bin as f64 * bw,
            aod_az_deg: c.est_tx.az_deg,
            aod_el_deg: c.est_tx.el_deg,
            aoa_az_deg: c.est_rx.az_deg,
            aoa_el_deg: c.est_rx.el_deg,
            phase_rad: wrap_phase(c.phase),
            tag: MpcTag::Unknown,
        })
        .collect();
    mpcs.sort_by(|a, b| {
        a.delay_s
            .total_cmp(&b.delay_s)
            .then(b.path_gain_db.total_cmp(&a.path_gain_db))
    });
    Ok(RecoveredPadp {
        mpcs,
        residual_power_db: power_to_dbm(residual_mw),
    })
}

/// Empirical CDF: sorted `(value, P[X ≤ value])` pairs with step `1/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    pub points: Vec<(f64, f64)>,
}

impl EmpiricalCdf {
    /// `P[X ≤ x]`.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.points.len();
        let below = self.points.partition_point(|(v, _)| *v <= x);
        below as f64 / n as f64
    }

    /// Smallest sample `v` with `P[X ≤ v] ≥ q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.points.len();
        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.points[idx].0
    }

    /// Kolmogorov–Smirnov distance `sup_x |F(x) − G(x)|`.
    pub fn sup_distance(&self, other: &EmpiricalCdf) -> f64 {
        self.points
            .iter()
            .chain(&other.points)
            .map(|(x, _)| (self.eval(*x) - other.eval(*x)).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every quantile of `self` is at least the matching quantile of
    /// `other` minus `slack_db` (first-order stochastic dominance up to slack).
    pub fn dominates(&self, other: &EmpiricalCdf, slack_db: f64) -> bool {
        let grid = 200;
        (1..=grid).all(|i| {
            let q = i as f64 / grid as f64;
            self.quantile(q) >= other.quantile(q) - slack_db
        })
    }
}

pub fn path_gain_cdf(values: &[f64]) -> Result<EmpiricalCdf, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::EmptyCdf);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(EmpiricalCdf {
        points: v
            .into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / n))
            .collect(),
    })
}

/// Best-alignment reflector power and total power over a set of records.
///
/// Reflector power is the power summed over bins within `window_bins` of
/// the reflector delay; both figures are maxima over the records.
pub fn reflector_vs_total(
    records: &[MeasurementRecord],
    reflector_delay_s: f64,
    window_bins: usize,
) -> Result<(f64, f64), AnalysisError> {
    let first = records.first().ok_or(AnalysisError::NoRecords)?;
    let n = first.cir.taps.len();
    let bin = (reflector_delay_s / first.cir.bin_width_s).round() as i64;
    if bin - (window_bins as i64) < 0 || bin + window_bins as i64 >= n as i64 {
        return Err(AnalysisError::DelayOutsideWindow {
            delay_s: reflector_delay_s,
            bin,
            window: window_bins,
            bins: n,
        });
    }
    let lo = bin as usize - window_bins;
    let hi = bin as usize + window_bins;
    let reflector = records
        .iter()
        .map(|r| power_to_dbm(r.cir.taps[lo..=hi].iter().map(|t| t.norm_sqr()).sum()))
        .fold(POWER_FLOOR_DBM, f64::max);
    let total = records
        .iter()
        .map(|r| r.total_rx_power_dbm)
        .fold(POWER_FLOOR_DBM, f64::max);
    Ok((reflector, total))
}

/// One cell of an azimuth path-gain heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub tx_az_deg: f64,
    pub rx_az_deg: f64,
    pub path_gain_db: f64,
}

/// Path gains at fixed TX/RX elevations, restricted to the given azimuth
/// grids, sorted by `(tx_az, rx_az)`. Repeated visits of the same absolute
/// orientation pair keep the earliest schedule step.
pub fn azimuth_heatmap(
    records: &[MeasurementRecord],
    tx_el_deg: f64,
    rx_el_deg: f64,
    tx_az_grid: &[f64],
    rx_az_grid: &[f64],
) -> Vec<HeatmapCell> {
    let on = |grid: &[f64], v: f64| grid.iter().any(|g| wrap_deg(g - v).abs() < 1e-6);
    let mut best: HashMap<GridKey, (usize, HeatmapCell)> = HashMap::new();
    for r in records {
        let (tx, rx) = (r.cir.tx_orientation, r.cir.rx_orientation);
        if (tx.el_deg - tx_el_deg).abs() > 1e-6
            || (rx.el_deg - rx_el_deg).abs() > 1e-6
            || !on(tx_az_grid, tx.az_deg)
            || !on(rx_az_grid, rx.az_deg)
        {
            continue;
        }
        let cell = HeatmapCell {
            tx_az_deg: tx.az_deg,
            rx_az_deg: rx.az_deg,
            path_gain_db: r.path_gain_db,
        };
        best.entry(grid_key(tx, rx))
            .and_modify(|e| {
                if r.step_index < e.0 {
                    *e = (r.step_index, cell)
                }
            })
            .or_insert((r.step_index, cell));
    }
    let mut cells: Vec<HeatmapCell> = best.into_values().map(|(_, c)| c).collect();
    cells.sort_by(|a, b| {
        a.tx_az_deg
            .total_cmp(&b.tx_az_deg)
            .then(a.rx_az_deg.total_cmp(&b.rx_az_deg))
    });
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{hall_azimuths, horn_schedule, HALL_ELEVATIONS};
    use crate::scene::Padp;
    use crate::sounder::{synthesize_measurement, SounderConfig};
    use num_complex::Complex64;

    fn cir_with(taps: &[(usize, f64)], n: usize) -> Cir {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for &(k, dbm) in taps {
            v[k] = Complex64::new(db_to_lin(dbm).sqrt(), 0.0);
        }
        Cir {
            taps: v,
            bin_width_s: 0.651e-9,
            tx_orientation: Orientation::boresight(),
            rx_orientation: Orientation::boresight(),
            noise_realization_seed: 0,
        }
    }

    fn mpc(gain: f64, delay: f64, aod: (f64, f64), aoa: (f64, f64)) -> Mpc {
        Mpc {
            path_gain_db: gain,
            delay_s: delay,
            aod_az_deg: aod.0,
            aod_el_deg: aod.1,
            aoa_az_deg: aoa.0,
            aoa_el_deg: aoa.1,
            phase_rad: 1.0,
            tag: MpcTag::Los,
        }
    }

    fn scan_records(padp: &Padp, cfg: &SounderConfig) -> Vec<MeasurementRecord> {
        let horn = AntennaPattern::horn();
        let sched = horn_schedule(
            &hall_azimuths(Some(0.0)),
            &HALL_ELEVATIONS,
            &hall_azimuths(Some(-180.0)),
            &HALL_ELEVATIONS,
        )
        .unwrap();
        sched
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let cir = synthesize_measurement(padp, s.tx, s.rx, &horn, &horn, cfg, i as u64).unwrap();
                MeasurementRecord::new(cir, i, cfg.tx_power_dbm, 17.0, 17.0)
            })
            .collect()
    }

    #[test]
    fn pdp_unit_tap_and_empty() {
        let c = cir_with(&[(3, 0.0)], 8);
        let p = pdp(&c);
        assert!(p[3].abs() < 1e-12);
        assert!(p.iter().enumerate().all(|(k, v)| k == 3 || *v == -200.0));
        assert!(pdp(&cir_with(&[], 8)).iter().all(|v| *v == -200.0));
    }

    #[test]
    fn path_gain_identity() {
        let rec = MeasurementRecord::new(cir_with(&[(0, 34.0)], 4), 0, 0.0, 17.0, 17.0);
        assert!(path_gain(&rec, 0.0, 17.0, 17.0).abs() < 1e-12);
        assert_eq!(rec.path_gain_db, path_gain(&rec, 0.0, 17.0, 17.0));
    }

    #[test]
    fn total_power_at_least_any_bin() {
        let rec = MeasurementRecord::new(cir_with(&[(0, -50.0), (5, -60.0)], 8), 0, 0.0, 0.0, 0.0);
        assert!(pdp(&rec.cir).iter().all(|&p| rec.total_rx_power_dbm >= p));
        assert!((rec.total_rx_power_dbm - crate::units::db_sum([-50.0, -60.0])).abs() < 1e-9);
    }

    #[test]
    fn cdf_counting() {
        let cdf = path_gain_cdf(&[-80.0, -90.0, -90.0, -100.0]).unwrap();
        assert_eq!(cdf.eval(-90.0), 0.75);
        assert_eq!(cdf.eval(-101.0), 0.0);
        assert_eq!(cdf.eval(-80.0), 1.0);
        assert_eq!(cdf.points.len(), 4);
        let single = path_gain_cdf(&[-70.0]).unwrap();
        assert_eq!(single.points, vec![(-70.0, 1.0)]);
        assert_eq!(single.eval(-70.1), 0.0);
        assert_eq!(path_gain_cdf(&[]), Err(AnalysisError::EmptyCdf));
    }

    #[test]
    fn cdf_distance_and_dominance() {
        let a = path_gain_cdf(&[-80.0, -70.0, -60.0]).unwrap();
        let b = path_gain_cdf(&[-90.0, -80.0, -70.0]).unwrap();
        assert!((a.sup_distance(&b) - 1.0 / 3.0).abs() < 1e-12);
        assert!(a.dominates(&b, 0.0));
        assert!(!b.dominates(&a, 0.0));
        assert!(b.dominates(&a, 10.0));
    }

    #[test]
    fn reflector_only_scene_identity() {
        let recs = vec![
            MeasurementRecord::new(cir_with(&[(40, -70.0)], 64), 0, 0.0, 0.0, 0.0),
            MeasurementRecord::new(cir_with(&[(40, -60.0)], 64), 1, 0.0, 0.0, 0.0),
        ];
        let (refl, total) = reflector_vs_total(&recs, 40.0 * 0.651e-9, 1).unwrap();
        assert!((refl - total).abs() < 1e-12);
        assert!((refl + 60.0).abs() < 1e-9);
        assert!(matches!(
            reflector_vs_total(&recs, 100.0 * 0.651e-9, 1),
            Err(AnalysisError::DelayOutsideWindow { .. })
        ));
        assert_eq!(reflector_vs_total(&[], 1e-9, 1), Err(AnalysisError::NoRecords));
    }

    #[test]
    fn empty_records_rejected() {
        let h = AntennaPattern::horn();
        assert_eq!(
            extract_mpcs(&[], &h, &h, 0.0, &ExtractionConfig::default()),
            Err(AnalysisError::NoRecords)
        );
    }

    #[test]
    fn all_noise_yields_nothing() {
        let cfg = SounderConfig::default();
        let recs = scan_records(&Padp::default(), &cfg);
        let h = AntennaPattern::horn();
        let out = extract_mpcs(&recs, &h, &h, 0.0, &ExtractionConfig::default()).unwrap();
        assert!(out.mpcs.is_empty(), "{:?}", out.mpcs);
        let lone = ExtractionConfig {
            require_neighbour_support: false,
            ..Default::default()
        };
        let spurious = extract_mpcs(&recs, &h, &h, 0.0, &lone).unwrap();
        assert!(!spurious.mpcs.is_empty());
        let floor = estimate_noise_floor(&recs).unwrap();
        assert!(floor < -100.0 && floor > -125.0, "{floor}");
    }

    #[test]
    fn two_paths_same_delay_120_apart() {
        let cfg = SounderConfig {
            tx_power_dbm: 20.0,
            ..SounderConfig::default().noiseless()
        };
        let padp = Padp {
            mpcs: vec![
                mpc(-80.0, 30e-9, (40.0, 0.0), (-100.0, 0.0)),
                mpc(-83.0, 30e-9, (-80.0, 0.0), (20.0, 0.0)),
            ],
        };
        let recs = scan_records(&padp, &cfg);
        let h = AntennaPattern::horn();
        let out = extract_mpcs(&recs, &h, &h, cfg.tx_power_dbm, &ExtractionConfig::default()).unwrap();
        assert_eq!(out.mpcs.len(), 2, "{:?}", out.mpcs);
        for truth in &padp.mpcs {
            let hit = out
                .mpcs
                .iter()
                .find(|m| wrap_deg(m.aoa_az_deg - truth.aoa_az_deg).abs() < 20.0)
                .unwrap();
            assert!(wrap_deg(hit.aod_az_deg - truth.aod_az_deg).abs() < 20.0);
            assert!((hit.path_gain_db - truth.path_gain_db).abs() < 3.0);
        }
    }

    #[test]
    fn refinement_recovers_off_grid_path() {
        let cfg = SounderConfig {
            tx_power_dbm: 20.0,
            ..SounderConfig::default().noiseless()
        };
        let truth = mpc(-75.0, 25e-9, (31.0, 7.0), (-143.0, -4.0));
        let recs = scan_records(&Padp { mpcs: vec![truth.clone()] }, &cfg);
        let h = AntennaPattern::horn();
        let out = extract_mpcs(&recs, &h, &h, cfg.tx_power_dbm, &ExtractionConfig::default()).unwrap();
        assert_eq!(out.mpcs.len(), 1);
        let m = &out.mpcs[0];
        assert!((m.aod_az_deg - 31.0).abs() < 1e-6, "{m:?}");
        assert!((m.aod_el_deg - 7.0).abs() < 1e-6);
        assert!((m.aoa_az_deg + 143.0).abs() < 1e-6);
        assert!((m.aoa_el_deg + 4.0).abs() < 1e-6);
        assert!((m.path_gain_db + 75.0).abs() < 1e-6);
        assert!((m.phase_rad - 1.0).abs() < 1e-9);

        let plain = ExtractionConfig {
            refine_angles: false,
            ..Default::default()
        };
        let coarse = extract_mpcs(&recs, &h, &h, cfg.tx_power_dbm, &plain).unwrap();
        assert_eq!(coarse.mpcs.len(), 1);
        let c = &coarse.mpcs[0];
        assert_eq!((c.aod_az_deg, c.aoa_az_deg), (40.0, -140.0));
        assert!(c.path_gain_db < -75.0);
    }

    #[test]
    fn extraction_ignores_record_order() {
        let cfg = SounderConfig {
            tx_power_dbm: 20.0,
            ..SounderConfig::default()
        };
        let padp = Padp {
            mpcs: vec![
                mpc(-72.0, 20e-9, (12.0, 0.0), (-170.0, 0.0)),
                mpc(-85.0, 36e-9, (-60.0, 5.0), (110.0, 0.0)),
            ],
        };
        let recs = scan_records(&padp, &cfg);
        let h = AntennaPattern::horn();
        let a = extract_mpcs(&recs, &h, &h, 20.0, &ExtractionConfig::default()).unwrap();
        let mut shuffled = recs.clone();
        shuffled.reverse();
        shuffled.swap(3, 900);
        let b = extract_mpcs(&shuffled, &h, &h, 20.0, &ExtractionConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mpcs.len(), 2);
    }

    #[test]
    fn heatmap_keeps_first_visit() {
        let mut r0 = MeasurementRecord::new(cir_with(&[(0, -50.0)], 4), 5, 0.0, 0.0, 0.0);
        r0.cir.tx_orientation = Orientation::new(20.0, 0.0);
        let mut r1 = r0.clone();
        r1.step_index = 2;
        r1.path_gain_db = -10.0;
        let cells = azimuth_heatmap(&[r0, r1], 0.0, 0.0, &[20.0], &[0.0]);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].path_gain_db, -10.0);
    }
}
