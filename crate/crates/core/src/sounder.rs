//! Directional CIR synthesis and ZC correlation sounding.
//!
//! Two routes produce a [`Cir`]:
//!
//! * [`synthesize_measurement`] places every path directly on the delay-bin
//!   grid, adds per-tap noise, and applies the ADC dynamic-range clip and
//!   the maximum-measurable-path-loss cut. This is the fast route the scan
//!   pipelines use.
//! * [`propagate`] + [`correlate`] run the actual sounding waveform (ZC
//!   burst, RRC shaping, band-limited fractional delays) through the channel
//!   and recover taps with a matched filter.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::antenna::{AntennaPattern, Orientation};
use crate::scene::Padp;
use crate::units::{db_to_lin, power_to_dbm, CARRIER_28GHZ};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SounderError {
    #[error("ZC root {root} is not coprime with length {length}")]
    NonCoprimeRoot { root: usize, length: usize },
    #[error("invalid sounder configuration: {0}")]
    Config(String),
    #[error("path delay {delay_s:e} s falls outside the {window_s:e} s tap window")]
    DelayOutsideWindow { delay_s: f64, window_s: f64 },
    #[error("received waveform has {got} samples, reference has {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Sounder hardware parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SounderConfig {
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    pub zc_length: usize,
    pub zc_root: usize,
    pub oversample: usize,
    pub rrc_rolloff: f64,
    pub tx_power_dbm: f64,
    /// Per-tap complex Gaussian noise power; `None` disables noise.
    pub noise_floor_dbm_per_tap: Option<f64>,
    pub adc_dynamic_range_db: f64,
    pub max_path_loss_db: f64,
    /// Number of noise realizations averaged per measurement.
    pub averaging: u32,
}

impl Default for SounderConfig {
    fn default() -> Self {
        Self {
            carrier_hz: CARRIER_28GHZ,
            sample_rate_hz: 3.072e9,
            zc_length: 2048,
            zc_root: 1,
            oversample: 2,
            rrc_rolloff: 0.22,
            tx_power_dbm: 0.0,
            noise_floor_dbm_per_tap: Some(-100.0),
            adc_dynamic_range_db: 60.0,
            max_path_loss_db: 185.0,
            averaging: 1,
        }
    }
}

impl SounderConfig {
    pub fn noiseless(mut self) -> Self {
        self.noise_floor_dbm_per_tap = None;
        self
    }

    /// Delay-bin spacing: one ZC chip.
    pub fn bin_width_s(&self) -> f64 {
        self.oversample as f64 / self.sample_rate_hz
    }

    /// Number of taps in one CIR (one ZC period).
    pub fn num_bins(&self) -> usize {
        self.zc_length
    }

    pub fn window_s(&self) -> f64 {
        self.num_bins() as f64 * self.bin_width_s()
    }

    pub fn validate(&self) -> Result<(), SounderError> {
        let bad = |why: String| Err(SounderError::Config(why));
        if !self.zc_length.is_power_of_two() || self.zc_length < 2 {
            return bad(format!("ZC length {} must be a power of two", self.zc_length));
        }
        if gcd(self.zc_root, self.zc_length) != 1 {
            return Err(SounderError::NonCoprimeRoot {
                root: self.zc_root,
                length: self.zc_length,
            });
        }
        if self.oversample < 1 {
            return bad("oversample must be >= 1".into());
        }
        if !(self.rrc_rolloff > 0.0 && self.rrc_rolloff <= 1.0) {
            return bad(format!("RRC roll-off {} outside (0, 1]", self.rrc_rolloff));
        }
        if !(self.sample_rate_hz > 0.0 && self.carrier_hz > 0.0) {
            return bad("rates must be positive".into());
        }
        if !(self.adc_dynamic_range_db > 0.0) || !(self.max_path_loss_db > 0.0) {
            return bad("dynamic range and max path loss must be positive".into());
        }
        if self.averaging < 1 {
            return bad("averaging must be >= 1".into());
        }
        if !self.tx_power_dbm.is_finite() {
            return bad("TX power must be finite".into());
        }
        Ok(())
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Complex channel impulse response at one TX/RX orientation pair.
/// Tap amplitudes are in √mW, so `|tap|²` is power in mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cir {
    pub taps: Vec<Complex64>,
    pub bin_width_s: f64,
    pub tx_orientation: Orientation,
    pub rx_orientation: Orientation,
    pub noise_realization_seed: u64,
}

impl Cir {
    pub fn tap_power_mw(&self, bin: usize) -> f64 {
        self.taps[bin].norm_sqr()
    }

    pub fn tap_power_dbm(&self, bin: usize) -> f64 {
        power_to_dbm(self.tap_power_mw(bin))
    }

    /// Sum of all tap powers in dBm.
    pub fn total_power_dbm(&self) -> f64 {
        power_to_dbm(self.taps.iter().map(|t| t.norm_sqr()).sum())
    }

    /// Bin holding `delay_s` on this CIR's grid.
    pub fn bin_of(&self, delay_s: f64) -> usize {
        (delay_s / self.bin_width_s).round() as usize
    }

    /// Writes `bin,power_dbm,phase_rad` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["bin", "power_dbm", "phase_rad"])?;
        for (k, t) in self.taps.iter().enumerate() {
            out.write_record([
                k.to_string(),
                format!("{:.6}", power_to_dbm(t.norm_sqr())),
                format!("{:.6}", t.arg()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Narrowband contribution of every visible path at one orientation pair:
/// `(delay_s, complex amplitude in √mW)`.
pub fn directional_taps(
    padp: &Padp,
    tx_orient: Orientation,
    rx_orient: Orientation,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    cfg: &SounderConfig,
) -> Vec<(f64, Complex64)> {
    padp.mpcs
        .iter()
        .filter_map(|m| {
            let g_tx = tx_pattern.gain_db(tx_orient, m.aod());
            let g_rx = rx_pattern.gain_db(rx_orient, m.aoa());
            // loss seen after de-embedding boresight gains
            let loss = -(m.path_gain_db + g_tx - tx_pattern.boresight_gain_dbi + g_rx
                - rx_pattern.boresight_gain_dbi);
            if loss > cfg.max_path_loss_db {
                return None;
            }
            let p_dbm = m.path_gain_db + g_tx + g_rx + cfg.tx_power_dbm;
            Some((m.delay_s, Complex64::from_polar(db_to_lin(p_dbm).sqrt(), m.phase_rad)))
        })
        .collect()
}

/// Simulates the CIR one scan position would measure.
pub fn synthesize_measurement(
    padp: &Padp,
    tx_orient: Orientation,
    rx_orient: Orientation,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    cfg: &SounderConfig,
    seed: u64,
) -> Result<Cir, SounderError> {
    let n = cfg.num_bins();
    let bw = cfg.bin_width_s();
    let mut taps = vec![Complex64::new(0.0, 0.0); n];
    for (delay, amp) in directional_taps(padp, tx_orient, rx_orient, tx_pattern, rx_pattern, cfg) {
        let bin = (delay / bw).round();
        if !(bin >= 0.0 && (bin as usize) < n) {
            return Err(SounderError::DelayOutsideWindow {
                delay_s: delay,
                window_s: cfg.window_s(),
            });
        }
        taps[bin as usize] += amp;
    }

    let peak = taps.iter().map(|t| t.norm_sqr()).fold(0.0, f64::max);
    let keep: Option<Vec<bool>> = (peak > 0.0).then(|| {
        let thr = peak * db_to_lin(-cfg.adc_dynamic_range_db);
        taps.iter().map(|t| t.norm_sqr() >= thr && t.norm_sqr() > 0.0).collect()
    });

    if let Some(floor) = cfg.noise_floor_dbm_per_tap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let avg = cfg.averaging as usize;
        let sigma = (db_to_lin(floor) / 2.0).sqrt() / avg as f64;
        for t in taps.iter_mut() {
            let mut acc = Complex64::new(0.0, 0.0);
            for _ in 0..avg {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                acc += Complex64::new(re, im);
            }
            *t += acc * sigma;
        }
    }

    if let Some(keep) = keep {
        for (t, k) in taps.iter_mut().zip(keep) {
            if !k {
                *t = Complex64::new(0.0, 0.0);
            }
        }
    }

    Ok(Cir {
        taps,
        bin_width_s: bw,
        tx_orientation: tx_orient,
        rx_orientation: rx_orient,
        noise_realization_seed: seed,
    })
}

/// Unfiltered Zadoff-Chu sequence.
///
/// Even lengths use `exp(-jπ·u·n²/N)`, odd lengths `exp(-jπ·u·n(n+1)/N)`.
pub fn zc_sequence(length: usize, root: usize) -> Result<Vec<Complex64>, SounderError> {
    if length == 0 || gcd(root, length) != 1 {
        return Err(SounderError::NonCoprimeRoot { root, length });
    }
    let (nn, u) = (length as u128, root as u128);
    let modulus = 2 * nn;
    Ok((0..nn)
        .map(|n| {
            let q = if nn % 2 == 0 { n * n } else { n * (n + 1) };
            // reduce before converting so the phase stays exact for long sequences
            let k = (u * (q % modulus)) % modulus;
            Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / nn as f64)
        })
        .collect())
}

/// Oversampled, RRC-shaped periodic sounding burst.
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub oversample: usize,
    pub chips: Vec<Complex64>,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Square root of the raised-cosine spectrum at `f` cycles per chip.
fn rrc_amplitude(f: f64, beta: f64) -> f64 {
    let f = f.abs();
    let lo = (1.0 - beta) / 2.0;
    let hi = (1.0 + beta) / 2.0;
    if f <= lo {
        1.0
    } else if f <= hi {
        (0.5 * (1.0 + (std::f64::consts::PI / beta * (f - lo)).cos())).sqrt()
    } else {
        0.0
    }
}

/// Signed normalized frequency (cycles/sample) of FFT bin `k` out of `m`.
fn bin_freq(k: usize, m: usize) -> f64 {
    let k = if k >= m.div_ceil(2) { k as f64 - m as f64 } else { k as f64 };
    k / m as f64
}

struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }
}

/// Builds the sounding burst: ZC chips, zero-stuffed by `oversample`, then
/// circularly filtered with a root-raised-cosine response.
pub fn generate_zc(
    length: usize,
    root: usize,
    oversample: usize,
    rrc_rolloff: f64,
) -> Result<Waveform, SounderError> {
    if oversample < 1 {
        return Err(SounderError::Config("oversample must be >= 1".into()));
    }
    if !(rrc_rolloff > 0.0 && rrc_rolloff <= 1.0) {
        return Err(SounderError::Config(format!("RRC roll-off {rrc_rolloff} outside (0, 1]")));
    }
    let chips = zc_sequence(length, root)?;
    let m = length * oversample;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, c) in chips.iter().enumerate() {
        buf[i * oversample] = *c;
    }
    let sp = Spectral::new(m);
    sp.fwd.process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        *b *= rrc_amplitude(bin_freq(k, m) * oversample as f64, rrc_rolloff);
    }
    sp.inv.process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter_mut().for_each(|b| *b *= scale);
    Ok(Waveform {
        samples: buf,
        oversample,
        chips,
    })
}

/// Burst for a sounder configuration.
pub fn sounding_waveform(cfg: &SounderConfig) -> Result<Waveform, SounderError> {
    cfg.validate()?;
    generate_zc(cfg.zc_length, cfg.zc_root, cfg.oversample, cfg.rrc_rolloff)
}

/// Passes the periodic burst through a sum of delayed, scaled copies.
/// Fractional delays are exact band-limited (linear-phase) shifts.
pub fn propagate(
    waveform: &Waveform,
    taps: &[(f64, Complex64)],
    sample_rate_hz: f64,
) -> Vec<Complex64> {
    let m = waveform.len();
    let sp = Spectral::new(m);
    let mut spec = waveform.samples.clone();
    sp.fwd.process(&mut spec);
    for (k, s) in spec.iter_mut().enumerate() {
        let f_hz = bin_freq(k, m) * sample_rate_hz;
        let h: Complex64 = taps
            .iter()
            .map(|(tau, g)| g * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f_hz * tau))
            .sum();
        *s *= h;
    }
    sp.inv.process(&mut spec);
    let scale = 1.0 / m as f64;
    spec.iter_mut().for_each(|s| *s *= scale);
    spec
}

/// Matched-filter correlation of a received period against the reference
/// burst, decimated to one tap per chip and normalized to unit gain.
pub fn correlate(
    received: &[Complex64],
    reference: &Waveform,
    cfg: &SounderConfig,
) -> Result<Cir, SounderError> {
    let m = reference.len();
    if received.len() != m {
        return Err(SounderError::LengthMismatch {
            got: received.len(),
            want: m,
        });
    }
    let sp = Spectral::new(m);
    let mut r = received.to_vec();
    let mut x = reference.samples.clone();
    sp.fwd.process(&mut r);
    sp.fwd.process(&mut x);
    for (a, b) in r.iter_mut().zip(&x) {
        *a *= b.conj();
    }
    sp.inv.process(&mut r);
    let norm = 1.0 / (m as f64 * reference.energy());
    let taps = r
        .iter()
        .step_by(reference.oversample)
        .map(|c| c * norm)
        .collect();
    Ok(Cir {
        taps,
        bin_width_s: reference.oversample as f64 / cfg.sample_rate_hz,
        tx_orientation: Orientation::boresight(),
        rx_orientation: Orientation::boresight(),
        noise_realization_seed: 0,
    })
}

/// Waveform-level counterpart of [`synthesize_measurement`]: transmits the
/// burst through the directional channel, optionally adds white noise scaled
/// so the correlator output carries the configured per-tap floor, and
/// correlates. No dynamic-range clip is applied.
#[allow(clippy::too_many_arguments)]
pub fn sound_waveform(
    padp: &Padp,
    tx_orient: Orientation,
    rx_orient: Orientation,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    cfg: &SounderConfig,
    reference: &Waveform,
    seed: u64,
) -> Result<Cir, SounderError> {
    let taps = directional_taps(padp, tx_orient, rx_orient, tx_pattern, rx_pattern, cfg);
    if let Some((d, _)) = taps.iter().find(|(d, _)| *d < 0.0 || *d >= cfg.window_s()) {
        return Err(SounderError::DelayOutsideWindow {
            delay_s: *d,
            window_s: cfg.window_s(),
        });
    }
    let mut rx = propagate(reference, &taps, cfg.sample_rate_hz);
    if let Some(floor) = cfg.noise_floor_dbm_per_tap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = (db_to_lin(floor) * reference.energy() / 2.0).sqrt();
        for s in rx.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(re, im) * sigma;
        }
    }
    let mut cir = correlate(&rx, reference, cfg)?;
    cir.tx_orientation = tx_orient;
    cir.rx_orientation = rx_orient;
    cir.noise_realization_seed = seed;
    Ok(cir)
}
