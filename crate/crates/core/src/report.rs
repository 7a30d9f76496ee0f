//! CSV tables and self-contained SVG log-log plots.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::family::FamilyReport;

/// Column names of the family table.
pub const FAMILY_COLUMNS: [&str; 6] = ["t", "H0", "dev_Lr", "gap", "vol_dev", "per_dev"];

/// Renders with 17 significant digits, enough to round-trip every `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// The numeric columns of one family row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyRow {
    pub t: f64,
    pub h0: f64,
    pub dev_lr: f64,
    pub gap: f64,
    pub vol_dev: f64,
    pub per_dev: f64,
}

impl From<&FamilyReport> for FamilyRow {
    fn from(r: &FamilyReport) -> Self {
        Self {
            t: r.t,
            h0: r.h0,
            dev_lr: r.dev_lr,
            gap: r.gap,
            vol_dev: r.vol_dev,
            per_dev: r.per_dev,
        }
    }
}

impl FamilyRow {
    fn values(&self) -> [f64; 6] {
        [
            self.t,
            self.h0,
            self.dev_lr,
            self.gap,
            self.vol_dev,
            self.per_dev,
        ]
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Writes a table with a header row; `rows` are rendered with [`format_f64`].
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Mismatch {
                expected: header.len(),
                got: row.len(),
            });
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_family_csv<W: Write>(out: W, rows: &[FamilyRow]) -> Result<()> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.values().iter().map(|v| format_f64(*v)).collect())
        .collect();
    write_table(out, &FAMILY_COLUMNS, &body)
}

pub fn read_family_csv<R: Read>(input: R) -> Result<Vec<FamilyRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != FAMILY_COLUMNS {
        return Err(Error::Io(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let mut v = [0.0; 6];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field
                .parse()
                .map_err(|e| Error::Io(format!("bad number {field:?}: {e}")))?;
        }
        if record.len() != 6 {
            return Err(Error::Mismatch {
                expected: 6,
                got: record.len(),
            });
        }
        rows.push(FamilyRow {
            t: v[0],
            h0: v[1],
            dev_lr: v[2],
            gap: v[3],
            vol_dev: v[4],
            per_dev: v[5],
        });
    }
    Ok(rows)
}

/// A straight line `log10 y = slope·log10 x + intercept` drawn over the data.
#[derive(Debug, Clone)]
pub struct PlotLine {
    pub label: String,
    pub slope: f64,
    /// Intercept in natural logarithms, as returned by the fits.
    pub ln_intercept: f64,
    pub dashed: bool,
}

#[derive(Debug, Clone)]
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub lines: Vec<PlotLine>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

impl LogLogPlot {
    /// Self-contained SVG document. Nonpositive points are skipped.
    pub fn to_svg(&self) -> Result<String> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
            .map(|(x, y)| (x.log10(), y.log10()))
            .collect();
        if pts.is_empty() {
            return Err(Error::Empty);
        }
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(x), b.max(x))
            });
            let pad = ((hi - lo) * 0.05).max(0.1);
            (lo - pad, hi + pad)
        };
        let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        s.push_str(&format!(
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        s.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>\n"
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));
        for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
            let x = sx(d as f64);
            s.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{d}</text>\n",
                MARGIN_TOP + ph,
                MARGIN_TOP + ph + 5.0,
                MARGIN_TOP + ph + 18.0
            ));
        }
        for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
            let y = sy(d as f64);
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN_LEFT}\" y2=\"{y:.2}\" stroke=\"black\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>\n",
                MARGIN_LEFT - 5.0,
                MARGIN_LEFT - 8.0,
                y + 4.0
            ));
        }
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + pw / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        ));
        s.push_str(&format!(
            "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>\n",
            MARGIN_TOP + ph / 2.0,
            MARGIN_TOP + ph / 2.0,
            escape(&self.y_label)
        ));
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
        for (i, line) in self.lines.iter().enumerate() {
            let b = line.ln_intercept / std::f64::consts::LN_10;
            let (ya, yb) = (line.slope * x0 + b, line.slope * x1 + b);
            let dash = if line.dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            let color = colors[i % colors.len()];
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"{dash} clip-path=\"url(#plot)\"/>\n",
                sx(x0),
                sy(ya),
                sx(x1),
                sy(yb)
            ));
            let ly = MARGIN_TOP + 16.0 + 16.0 * i as f64;
            s.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\"{dash}/>\n<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
                MARGIN_LEFT + 10.0,
                MARGIN_LEFT + 40.0,
                MARGIN_LEFT + 46.0,
                ly + 4.0,
                escape(&line.label)
            ));
        }
        s.push_str(&format!(
            "<defs><clipPath id=\"plot\"><rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{pw}\" height=\"{ph}\"/></clipPath></defs>\n"
        ));
        for (x, y) in &pts {
            s.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"black\"/>\n",
                sx(*x),
                sy(*y)
            ));
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_csv_round_trip_is_exact() {
        let rows: Vec<FamilyRow> = (1..6)
            .map(|i| {
                let t = 0.1f64.powf(i as f64 / 3.0);
                FamilyRow {
                    t,
                    h0: 1.0 + t.powi(7) / 3.0,
                    dev_lr: t.sqrt() * std::f64::consts::PI,
                    gap: t.powf(2.5),
                    vol_dev: 1e-300 * t,
                    per_dev: 0.0,
                }
            })
            .collect();
        let mut buf = Vec::new();
        write_family_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,H0,dev_Lr,gap,vol_dev,per_dev\n"));
        assert!(!text.contains('\r'));
        let back = read_family_csv(buf.as_slice()).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn read_rejects_bad_tables() {
        assert!(read_family_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(
            read_family_csv("t,H0,dev_Lr,gap,vol_dev,per_dev\n1,2,x,4,5,6\n".as_bytes()).is_err()
        );
    }

    #[test]
    fn svg_is_self_contained() {
        let plot = LogLogPlot {
            title: "gap vs deviation".into(),
            x_label: "||H-H0||_Lr".into(),
            y_label: "rho_e - rho_i".into(),
            points: vec![(1e-4, 1e-3), (1e-3, 6e-3), (1e-2, 4e-2), (0.0, 1.0)],
            lines: vec![PlotLine {
                label: "fit <0.8>".into(),
                slope: 0.8,
                ln_intercept: 0.0,
                dashed: false,
            }],
        };
        let svg = plot.to_svg().unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("||H-H0||_Lr") && svg.contains("rho_e - rho_i"));
        assert!(svg.contains("fit &lt;0.8&gt;"));
        assert!(!svg.contains("href"));
        assert_eq!(svg.matches("<circle").count(), 3);
        let empty = LogLogPlot {
            points: vec![],
            ..plot
        };
        assert!(empty.to_svg().is_err());
    }
}
