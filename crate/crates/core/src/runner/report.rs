//! Report types and artifact emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::svg;
use super::RunnerError;
use crate::analysis::{EmpiricalCdf, HeatmapCell, RecoveredPadp};
use crate::scan::ScanTime;
use crate::scene::{Mpc, Padp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElevationCdf {
    pub tx_el_deg: f64,
    pub rx_el_deg: f64,
    pub cdf: EmpiricalCdf,
}

/// Everything one antenna type produced in the hall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaRun {
    pub label: String,
    pub steps: usize,
    pub scan_time: ScanTime,
    /// Path gain per `(tx_az, rx_az)` at 0°/0° elevation.
    pub heatmap: Vec<HeatmapCell>,
    /// One CDF per `(tx_el, rx_el)` pair.
    pub cdfs: Vec<ElevationCdf>,
    pub mpcs: RecoveredPadp,
}

impl AntennaRun {
    pub fn cdf_at(&self, tx_el: f64, rx_el: f64) -> Option<&EmpiricalCdf> {
        self.cdfs
            .iter()
            .find(|c| (c.tx_el_deg - tx_el).abs() < 1e-9 && (c.rx_el_deg - rx_el).abs() < 1e-9)
            .map(|c| &c.cdf)
    }

    /// Whether the 0°/0° CDF dominates every other elevation pair.
    pub fn zero_elevation_dominates(&self, slack_db: f64) -> bool {
        let Some(zero) = self.cdf_at(0.0, 0.0) else {
            return false;
        };
        self.cdfs
            .iter()
            .filter(|c| c.tx_el_deg != 0.0 || c.rx_el_deg != 0.0)
            .all(|c| zero.dominates(&c.cdf, slack_db))
    }

    pub fn timing_line(&self) -> String {
        let t = self.scan_time;
        if t.repositioning_s > 0.0 {
            format!(
                "{}: {} steps, {:.1} s switching (+{:.0} s gimbal repositioning)",
                self.label, self.steps, t.measurement_s, t.repositioning_s
            )
        } else {
            format!(
                "{}: {} steps, {:.2} min",
                self.label,
                self.steps,
                t.measurement_s / 60.0
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallComparison {
    /// RMS of per-`(tx_az, rx_az)` path-gain differences at 0°/0° elevation.
    pub heatmap_rms_db: f64,
    pub heatmap_pairs: usize,
    /// Kolmogorov–Smirnov distance per elevation pair, in CDF order.
    pub cdf_sup_distance: Vec<f64>,
    pub max_cdf_sup_distance: f64,
    pub horn_zero_el_dominates: bool,
    pub array_zero_el_dominates: bool,
    pub timing: Vec<String>,
}

impl HallComparison {
    pub fn between(horn: &AntennaRun, array: &AntennaRun, slack_db: f64) -> Result<Self, RunnerError> {
        if horn.heatmap.len() != array.heatmap.len() || horn.cdfs.len() != array.cdfs.len() {
            return Err(RunnerError::Config("horn and array grids differ".into()));
        }
        let mut sq = 0.0;
        for (a, b) in horn.heatmap.iter().zip(&array.heatmap) {
            if a.tx_az_deg != b.tx_az_deg || a.rx_az_deg != b.rx_az_deg {
                return Err(RunnerError::Config("horn and array heatmap cells differ".into()));
            }
            sq += (a.path_gain_db - b.path_gain_db).powi(2);
        }
        let n = horn.heatmap.len();
        let d: Vec<f64> = horn
            .cdfs
            .iter()
            .zip(&array.cdfs)
            .map(|(a, b)| a.cdf.sup_distance(&b.cdf))
            .collect();
        Ok(Self {
            heatmap_rms_db: if n == 0 { 0.0 } else { (sq / n as f64).sqrt() },
            heatmap_pairs: n,
            max_cdf_sup_distance: d.iter().copied().fold(0.0, f64::max),
            cdf_sup_distance: d,
            horn_zero_el_dominates: horn.zero_elevation_dominates(slack_db),
            array_zero_el_dominates: array.zero_elevation_dominates(slack_db),
            timing: vec![horn.timing_line(), array.timing_line()],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallReport {
    pub name: String,
    pub ground_truth: Padp,
    pub horn: AntennaRun,
    pub array: AntennaRun,
    pub comparison: HallComparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint {
    pub point: String,
    pub reflector_power_dbm: f64,
    pub total_power_dbm: f64,
    pub reflector_path_m: f64,
    pub los_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeaterPoint {
    pub point: String,
    pub repeater_distance_m: f64,
    pub max_power_on_dbm: f64,
    pub max_power_off_dbm: f64,
    pub gain_db: f64,
}

/// Per-point coverage of a reflector arc or a repeater hallway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverageReport {
    Reflector {
        reflector: String,
        points: Vec<ArcPoint>,
    },
    Repeater {
        repeater_gain_db: f64,
        points: Vec<RepeaterPoint>,
    },
}

impl CoverageReport {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        match self {
            CoverageReport::Reflector { points, .. } => {
                out.write_record(["point", "reflector_power_dbm", "total_power_dbm"])?;
                for p in points {
                    out.write_record([p.point.clone(), num(p.reflector_power_dbm), num(p.total_power_dbm)])?;
                }
            }
            CoverageReport::Repeater { points, .. } => {
                out.write_record(["point", "max_power_on_dbm", "max_power_off_dbm", "gain_db"])?;
                for p in points {
                    out.write_record([
                        p.point.clone(),
                        num(p.max_power_on_dbm),
                        num(p.max_power_off_dbm),
                        num(p.gain_db),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcReport {
    pub name: String,
    pub design_point: String,
    pub steps_per_point: usize,
    /// One coverage report per reflector, in config order.
    pub reports: Vec<CoverageReport>,
}

impl ArcReport {
    pub fn points(&self, reflector: &str) -> Option<&[ArcPoint]> {
        self.reports.iter().find_map(|r| match r {
            CoverageReport::Reflector { reflector: l, points } if l == reflector => Some(points.as_slice()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HallwayReport {
    pub name: String,
    pub steps_per_point: usize,
    pub calibrated: bool,
    pub report: CoverageReport,
}

impl HallwayReport {
    pub fn points(&self) -> &[RepeaterPoint] {
        match &self.report {
            CoverageReport::Repeater { points, .. } => points,
            CoverageReport::Reflector { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleReport {
    pub name: String,
    pub ground_truth: Padp,
    pub horn: AntennaRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum RunOutput {
    Hall(HallReport),
    Arc(ArcReport),
    Hallway(HallwayReport),
    Single(SingleReport),
}

impl RunOutput {
    /// Short human-readable summary lines.
    pub fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            RunOutput::Hall(h) => {
                out.push(format!("{}: hall comparison", h.name));
                out.extend(h.comparison.timing.iter().cloned());
                out.push(format!(
                    "heatmap RMS difference {:.2} dB over {} pairs",
                    h.comparison.heatmap_rms_db, h.comparison.heatmap_pairs
                ));
                out.push(format!("max CDF sup-distance {:.3}", h.comparison.max_cdf_sup_distance));
                out.push(format!(
                    "MPCs: horn {}, phased array {}, ground truth {}",
                    h.horn.mpcs.mpcs.len(),
                    h.array.mpcs.mpcs.len(),
                    h.ground_truth.len()
                ));
            }
            RunOutput::Arc(a) => {
                out.push(format!("{}: reflector arc (design point {})", a.name, a.design_point));
                for r in &a.reports {
                    if let CoverageReport::Reflector { reflector, points } = r {
                        for p in points {
                            out.push(format!(
                                "{reflector} {}: reflector {:.2} dBm, total {:.2} dBm",
                                p.point, p.reflector_power_dbm, p.total_power_dbm
                            ));
                        }
                    }
                }
            }
            RunOutput::Hallway(h) => {
                out.push(format!("{}: repeater hallway", h.name));
                if let CoverageReport::Repeater { repeater_gain_db, points } = &h.report {
                    out.push(format!(
                        "repeater gain {repeater_gain_db:.2} dB{}",
                        if h.calibrated { " (calibrated)" } else { "" }
                    ));
                    for p in points {
                        out.push(format!(
                            "{} ({:.2} m): OFF {:.2} dBm, ON {:.2} dBm, gain {:.2} dB",
                            p.point, p.repeater_distance_m, p.max_power_off_dbm, p.max_power_on_dbm, p.gain_db
                        ));
                    }
                }
            }
            RunOutput::Single(s) => {
                out.push(format!("{}: single horn scan", s.name));
                out.push(format!(
                    "recovered {} MPCs (ground truth {})",
                    s.horn.mpcs.mpcs.len(),
                    s.ground_truth.len()
                ));
            }
        }
        out
    }
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct Sink<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Sink<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn csv(
        &mut self,
        name: &str,
        f: impl FnOnce(fs::File) -> Result<(), csv::Error>,
    ) -> Result<(), RunnerError> {
        let p = self.path(name);
        let file = fs::File::create(&p).map_err(io_err(&p))?;
        f(file).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => RunnerError::Io {
                path: p.display().to_string(),
                source,
            },
            other => RunnerError::Config(format!("{}: {other:?}", p.display())),
        })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunnerError> {
        let p = self.path(name);
        fs::write(&p, body).map_err(io_err(&p))
    }
}

fn heatmap_csv(cells: &[HeatmapCell], w: fs::File) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tx_az", "rx_az", "path_gain_db"])?;
    for c in cells {
        out.write_record([num(c.tx_az_deg), num(c.rx_az_deg), num(c.path_gain_db)])?;
    }
    out.flush()?;
    Ok(())
}

fn cdf_csv(cdfs: &[ElevationCdf], w: fs::File) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["tx_el", "rx_el", "value", "prob"])?;
    for c in cdfs {
        for (v, p) in &c.cdf.points {
            out.write_record([num(c.tx_el_deg), num(c.rx_el_deg), num(*v), num(*p)])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn mpc_csv(mpcs: &[Mpc], w: fs::File) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["gain_db", "delay_s", "aod_az", "aod_el", "aoa_az", "aoa_el", "phase_rad", "tag"])?;
    for m in mpcs {
        out.write_record([
            num(m.path_gain_db),
            format!("{:.6e}", m.delay_s),
            num(m.aod_az_deg),
            num(m.aod_el_deg),
            num(m.aoa_az_deg),
            num(m.aoa_el_deg),
            num(m.phase_rad),
            m.tag.as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn antenna_files(sink: &mut Sink, run: &AntennaRun, formats: &[OutputFormat]) -> Result<(), RunnerError> {
    let l = &run.label;
    if formats.contains(&OutputFormat::Csv) {
        sink.csv(&format!("{l}_heatmap.csv"), |f| heatmap_csv(&run.heatmap, f))?;
        sink.csv(&format!("{l}_cdf.csv"), |f| cdf_csv(&run.cdfs, f))?;
        sink.csv(&format!("{l}_mpcs.csv"), |f| mpc_csv(&run.mpcs.mpcs, f))?;
    }
    if formats.contains(&OutputFormat::Svg) {
        sink.text(&format!("{l}_heatmap.svg"), &svg::heatmap(&run.heatmap, &format!("{l} path gain (dB), el 0°/0°")))?;
        let series: Vec<svg::Series> = run
            .cdfs
            .iter()
            .map(|c| svg::Series {
                name: format!("TX {}° / RX {}°", c.tx_el_deg, c.rx_el_deg),
                points: c.cdf.points.clone(),
            })
            .collect();
        sink.text(&format!("{l}_cdf.svg"), &svg::lines(&series, &format!("{l} path gain CDF"), "path gain (dB)", "CDF"))?;
    }
    Ok(())
}

fn coverage_svg(report: &CoverageReport) -> (String, Vec<svg::Series>) {
    let idx = |i: usize| i as f64;
    match report {
        CoverageReport::Reflector { reflector, points } => (
            reflector.clone(),
            vec![
                svg::Series {
                    name: format!("{reflector} reflector"),
                    points: points.iter().enumerate().map(|(i, p)| (idx(i), p.reflector_power_dbm)).collect(),
                },
                svg::Series {
                    name: format!("{reflector} total"),
                    points: points.iter().enumerate().map(|(i, p)| (idx(i), p.total_power_dbm)).collect(),
                },
            ],
        ),
        CoverageReport::Repeater { points, .. } => (
            "repeater".into(),
            vec![
                svg::Series {
                    name: "ON".into(),
                    points: points.iter().map(|p| (p.repeater_distance_m, p.max_power_on_dbm)).collect(),
                },
                svg::Series {
                    name: "OFF".into(),
                    points: points.iter().map(|p| (p.repeater_distance_m, p.max_power_off_dbm)).collect(),
                },
            ],
        ),
    }
}

/// Writes the requested artifacts into `dir` and returns their paths.
pub fn emit(output: &RunOutput, dir: &Path, formats: &[OutputFormat]) -> Result<Vec<PathBuf>, RunnerError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut sink = Sink {
        dir,
        written: Vec::new(),
    };
    let csv = formats.contains(&OutputFormat::Csv);
    match output {
        RunOutput::Hall(h) => {
            antenna_files(&mut sink, &h.horn, formats)?;
            antenna_files(&mut sink, &h.array, formats)?;
            if csv {
                sink.csv("ground_truth_mpcs.csv", |f| mpc_csv(&h.ground_truth.mpcs, f))?;
            }
        }
        RunOutput::Single(s) => {
            antenna_files(&mut sink, &s.horn, formats)?;
            if csv {
                sink.csv("ground_truth_mpcs.csv", |f| mpc_csv(&s.ground_truth.mpcs, f))?;
            }
        }
        RunOutput::Arc(a) => {
            let mut series = Vec::new();
            for r in &a.reports {
                let (label, s) = coverage_svg(r);
                if csv {
                    sink.csv(&format!("coverage_{label}.csv"), |f| r.write_csv(f))?;
                }
                series.extend(s);
            }
            if formats.contains(&OutputFormat::Svg) {
                sink.text("coverage.svg", &svg::lines(&series, &a.name, "arc point index", "power (dBm)"))?;
            }
        }
        RunOutput::Hallway(h) => {
            if csv {
                sink.csv("coverage.csv", |f| h.report.write_csv(f))?;
            }
            if formats.contains(&OutputFormat::Svg) {
                let (_, series) = coverage_svg(&h.report);
                sink.text("coverage.svg", &svg::lines(&series, &h.name, "repeater–RX distance (m)", "max power (dBm)"))?;
            }
        }
    }
    if formats.contains(&OutputFormat::Json) {
        let body = serde_json::to_string_pretty(output).map_err(|source| RunnerError::Parse {
            path: "report.json".into(),
            source,
        })?;
        sink.text("report.json", &(body + "\n"))?;
    }
    Ok(sink.written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_csv_header_and_rows() {
        let r = CoverageReport::Reflector {
            reflector: "echo".into(),
            points: vec![ArcPoint {
                point: "c1".into(),
                reflector_power_dbm: -70.5,
                total_power_dbm: -60.25,
                reflector_path_m: 8.36,
                los_m: 5.6,
            }],
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("point,reflector_power_dbm,total_power_dbm"));
        assert_eq!(lines.next(), Some("c1,-70.500000,-60.250000"));
    }

    #[test]
    fn repeater_gain_column_is_on_minus_off() {
        let r = CoverageReport::Repeater {
            repeater_gain_db: 50.0,
            points: vec![RepeaterPoint {
                point: "1m".into(),
                repeater_distance_m: 1.0,
                max_power_on_dbm: -56.5,
                max_power_off_dbm: -96.25,
                gain_db: 39.75,
            }],
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert!((row[0] - row[1] - row[2]).abs() < 1e-9);
    }

    #[test]
    fn emit_to_unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("blocker");
        fs::write(&file, "x").unwrap();
        let out = RunOutput::Hallway(HallwayReport {
            name: "h".into(),
            steps_per_point: 0,
            calibrated: false,
            report: CoverageReport::Repeater {
                repeater_gain_db: 0.0,
                points: vec![],
            },
        });
        let err = emit(&out, &file.join("sub"), &[OutputFormat::Csv]).unwrap_err();
        assert!(err.is_io(), "{err}");
    }
}
