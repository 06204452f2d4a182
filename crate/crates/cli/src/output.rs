//! Flat-file writers: diagnostics CSV, polyline SVG and pretty JSON.

use std::io::Write;
use std::path::Path;

use dglab_core::functionals::DiagnosticsRow;
use serde::Serialize;

use crate::CliError;

/// Shortest round-trip decimal; NaN and infinities as `NaN`, `inf`, `-inf`.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Fixed column order; the `Q` and `B` blocks repeat per configured exponent.
pub fn diagnostics_header(betas: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "ux0", "uxhalf", "l1", "linf", "A", "E", "U"]
        .map(String::from)
        .into();
    cols.extend(betas.iter().map(|b| format!("Q[{}]", fmt_float(*b))));
    cols.extend(betas.iter().map(|b| format!("B[{}]", fmt_float(*b))));
    cols.extend(
        [
            "D",
            "c_omega",
            "res_imp",
            "res_ux0",
            "res_Q",
            "B_dual_rel",
            "A_degenerate",
        ]
        .map(String::from),
    );
    cols
}

pub fn diagnostics_record(row: &DiagnosticsRow) -> Vec<String> {
    let mut rec: Vec<String> = [
        row.t,
        row.ux0,
        row.uxhalf,
        row.l1,
        row.linf,
        row.a,
        row.e,
        row.u_integral,
    ]
    .map(fmt_float)
    .into();
    rec.extend(row.q.iter().map(|v| fmt_opt(*v)));
    rec.extend(row.b.iter().map(|v| fmt_opt(*v)));
    rec.push(fmt_float(row.d));
    rec.extend([row.c_omega, row.res_imp, row.res_ux0, row.res_q, row.b_dual_rel].map(fmt_opt));
    rec.push(row.a_degenerate.to_string());
    rec
}

pub fn write_csv<W: Write>(out: W, header: &[String], records: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| CliError::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[String], records: &[Vec<String>]) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_csv(file, header, records)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::Json)?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// One named curve of a line plot.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Hand-written SVG line plot; non-finite points are dropped and the y range
/// always includes 0 when `with_zero` is set.
pub fn line_plot(title: &str, x_label: &str, series: &[Series], with_zero: bool) -> String {
    let (w, h, margin) = (720.0, 420.0, 60.0);
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if with_zero {
        y0 = y0.min(0.0);
        y1 = y1.max(0.0);
    }
    // No finite points, or a single value: fall back to a unit range.
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n\
         <rect x=\"{margin}\" y=\"{margin}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        w / 2.0,
        escape(title),
        w - 2.0 * margin,
        h - 2.0 * margin
    );
    if y0 < 0.0 && y1 > 0.0 {
        svg += &format!(
            "<line x1=\"{margin}\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
            py(0.0),
            w - margin
        );
    }
    let label = |x: f64, y: f64, anchor: &str, text: String| {
        format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{anchor}\">{text}</text>\n"
        )
    };
    svg += &label(margin, h - margin + 16.0, "start", short(x0));
    svg += &label(w - margin, h - margin + 16.0, "end", short(x1));
    svg += &label(w / 2.0, h - 16.0, "middle", escape(x_label));
    svg += &label(margin - 6.0, h - margin, "end", short(y0));
    svg += &label(margin - 6.0, margin + 4.0, "end", short(y1));
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        svg += &format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        );
        svg += &format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            w - margin - 140.0,
            margin + 18.0 + 16.0 * i as f64,
            escape(s.name)
        );
    }
    svg + "</svg>\n"
}

fn short(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 6.02214076e23, 0.0] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert_eq!(fmt_float(1.0), "1.0");
    }

    #[test]
    fn header_lists_each_exponent() {
        let h = diagnostics_header(&[1.9, 2.0]);
        assert_eq!(h[8..12], ["Q[1.9]", "Q[2.0]", "B[1.9]", "B[2.0]"]);
        assert_eq!(h.last().unwrap(), "A_degenerate");
    }

    #[test]
    fn plot_is_well_formed() {
        let svg = line_plot(
            "G",
            "xi",
            &[Series {
                name: "lower",
                points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 0.5)],
            }],
            true,
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
