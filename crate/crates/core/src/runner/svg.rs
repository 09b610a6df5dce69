//! Minimal static SVG rendering of heatmaps and line series.

use std::fmt::Write;

use crate::analysis::HeatmapCell;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Dark blue (low) to yellow (high).
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(40.0, 250.0), lerp(20.0, 230.0), lerp(120.0, 30.0))
}

pub fn heatmap(cells: &[HeatmapCell], title: &str) -> String {
    let mut xs: Vec<f64> = cells.iter().map(|c| c.tx_az_deg).collect();
    let mut ys: Vec<f64> = cells.iter().map(|c| c.rx_az_deg).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let (lo, hi) = range(cells.iter().map(|c| c.path_gain_db));
    let cw = (W - 2.0 * MARGIN) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * MARGIN) / ys.len().max(1) as f64;
    let mut s = header(title);
    for c in cells {
        let i = xs.iter().position(|x| *x == c.tx_az_deg).unwrap_or(0);
        let j = ys.iter().position(|y| *y == c.rx_az_deg).unwrap_or(0);
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{}\"><title>{} {} {:.2}</title></rect>",
            MARGIN + i as f64 * cw,
            H - MARGIN - (j + 1) as f64 * ch,
            cw,
            ch,
            color((c.path_gain_db - lo) / (hi - lo)),
            c.tx_az_deg,
            c.rx_az_deg,
            c.path_gain_db
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">TX azimuth (°)</text>\n\
         <text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">RX azimuth (°)</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1} … {:.1} dB</text>",
        W / 2.0,
        H - 20.0,
        H / 2.0,
        H / 2.0,
        W - MARGIN,
        MARGIN - 8.0,
        lo,
        hi
    );
    s.push_str("</svg>\n");
    s
}

pub fn lines(series: &[Series], title: &str, xlabel: &str, ylabel: &str) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = header(title);
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    for (k, ser) in series.iter().enumerate() {
        let c = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>", pts.join(" "));
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{}</text>",
            MARGIN + 8.0,
            MARGIN + 14.0 + 13.0 * k as f64,
            escape(&ser.name)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"{MARGIN}\" y=\"{}\">{:.1}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.1}</text>",
        W / 2.0,
        H - 20.0,
        escape(xlabel),
        H / 2.0,
        H / 2.0,
        escape(ylabel),
        H - MARGIN + 14.0,
        x0,
        W - MARGIN,
        H - MARGIN + 14.0,
        x1,
        MARGIN - 4.0,
        H - MARGIN,
        y0,
        MARGIN - 4.0,
        MARGIN + 4.0,
        y1
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_has_one_rect_per_cell() {
        let cells: Vec<HeatmapCell> = (0..4)
            .map(|k| HeatmapCell {
                tx_az_deg: (k % 2) as f64,
                rx_az_deg: (k / 2) as f64,
                path_gain_db: -(k as f64),
            })
            .collect();
        let s = heatmap(&cells, "t");
        assert_eq!(s.matches("<title>").count(), 4);
        assert!(s.ends_with("</svg>\n"));
    }

    #[test]
    fn escapes_labels() {
        let s = lines(&[Series { name: "a<b".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }], "x & y", "", "");
        assert!(s.contains("a&lt;b") && s.contains("x &amp; y"));
    }
}
