//! Text outputs: CSV and JSON tables, dimension-table rows and SVG charts. Every
//! writer is a pure function of its input, so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::analysis::{ContourSet, HeatmapData};
use crate::basis::PartitionStats;
use crate::darkstates::{DarkBasis, DarkReport};
use crate::dynamics::TimeSeries;
use crate::error::Result;

/// `x` with 12 significant digits, in the shorter of fixed or exponent
/// notation, trailing zeros removed.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `t,P0..Pm,n_hyd,n_dist,trace,min_eig`.
pub fn time_series_csv(ts: &TimeSeries) -> String {
    let mut out = String::from("t");
    for k in 0..=ts.m {
        write!(out, ",P{k}").unwrap();
    }
    out.push_str(",n_hyd,n_dist,trace,min_eig\n");
    for i in 0..ts.len() {
        let mut row = vec![fmt12(ts.times[i])];
        row.extend(ts.distributions[i].iter().map(|&p| fmt12(p)));
        row.extend([ts.n_hyd[i], ts.n_dist[i], ts.trace[i], ts.min_eig[i]].map(fmt12));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// `mu_hyd,mu_dist,P0..Pm,converged`.
pub fn heatmap_csv(h: &HeatmapData) -> String {
    let mut out = String::from("mu_hyd,mu_dist");
    for k in 0..=h.m {
        write!(out, ",P{k}").unwrap();
    }
    out.push_str(",converged\n");
    for (x, y, p, ok) in h.cells() {
        let mut row = vec![fmt12(x), fmt12(y)];
        row.extend(p.iter().map(|&v| fmt12(v)));
        row.push(ok.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn contours_json(c: &ContourSet) -> String {
    serde_json::to_string_pretty(c).expect("plain data serializes") + "\n"
}

fn int_value(x: &num_bigint::BigInt) -> Value {
    x.to_i64()
        .map_or_else(|| Value::String(x.to_string()), Value::from)
}

/// `{"m", "sectors": [{"n2", "dimension", "basis"}], "verification"}`;
/// each basis vector is a list of `[ket-label, coefficient]` pairs.
pub fn dark_json(basis: &DarkBasis, reports: &[DarkReport]) -> Value {
    let sectors: Vec<Value> = basis
        .sectors
        .iter()
        .map(|s| {
            let vectors: Vec<Value> = s
                .basis
                .iter()
                .map(|v| {
                    Value::Array(
                        v.terms()
                            .iter()
                            .map(|(label, c)| json!([label, int_value(c)]))
                            .collect(),
                    )
                })
                .collect();
            json!({"n2": s.n2, "dimension": s.dimension(), "basis": vectors})
        })
        .collect();
    json!({
        "m": basis.m,
        "sectors": sectors,
        "verification": reports,
    })
}

/// Non-zero entries as `row,col,re,im`.
pub fn block_csv(matrix: &DMatrix<f64>) -> String {
    let mut out = String::from("row,col,re,im\n");
    for r in 0..matrix.nrows() {
        for c in 0..matrix.ncols() {
            let v = matrix[(r, c)];
            if v != 0.0 {
                writeln!(out, "{r},{c},{},0", fmt12(v)).unwrap();
            }
        }
    }
    out
}

pub const TABLE_HEADER: &str = "coupling      org_dim  num_bls  max_dim_bl  memory";

/// One row of the dimension table.
pub fn table_row(label: &str, stats: &PartitionStats) -> String {
    format!(
        "{label:<12} {:>8} {:>8} {:>11}  {}",
        stats.org_dim,
        stats.num_blocks,
        stats.max_block_dim,
        stats.memory_percent()
    )
}

/// Write `contents` to `path` through a temporary file in the same
/// directory and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 7] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf",
];

/// Contour styles by level index: purple dashed, green solid, red dotted.
const CONTOUR_STYLES: [(&str, &str); 3] =
    [("#7b3294", "6 3"), ("#1a9641", "none"), ("#d7191c", "2 2")];

fn num(x: f64) -> String {
    format!("{:.2}", x)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 {
            self.x1 - self.x0
        } else {
            1.0
        };
        LEFT + (x - self.x0) / span * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 {
            self.y1 - self.y0
        } else {
            1.0
        };
        H - BOTTOM - (y - self.y0) / span * (H - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        writeln!(
            out,
            r#"<path d="M{} {} L{} {} L{} {}" fill="none" stroke="black"/>"#,
            num(l),
            num(t),
            num(l),
            num(b),
            num(r),
            num(b)
        )
        .unwrap();
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let x = self.x0 + f * (self.x1 - self.x0);
            let y = self.y0 + f * (self.y1 - self.y0);
            let (px, py) = (self.px(x), self.py(y));
            writeln!(
                out,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" font-size="11" text-anchor="middle">{4}</text>"#,
                num(px),
                num(b),
                num(b + 5.0),
                num(b + 18.0),
                fmt_tick(x)
            )
            .unwrap();
            writeln!(
                out,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" font-size="11" text-anchor="end">{5}</text>"#,
                num(l - 5.0),
                num(py),
                num(l),
                num(l - 8.0),
                num(py + 4.0),
                fmt_tick(y)
            )
            .unwrap();
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
            num((l + r) / 2.0),
            num(H - 12.0)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="14" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {0})">{ylabel}</text>"#,
            num((t + b) / 2.0)
        )
        .unwrap();
    }
}

fn fmt_tick(x: f64) -> String {
    let s = format!("{x:.3}");
    trim(&s).to_string()
}

fn open_svg() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
}

fn polyline(out: &mut String, points: &[(f64, f64)], color: &str, dash: &str, width: f64) {
    let pts: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{},{}", num(*x), num(*y)))
        .collect();
    let dash = if dash == "none" {
        String::new()
    } else {
        format!(r#" stroke-dasharray="{dash}""#)
    };
    writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
        pts.join(" ")
    )
    .unwrap();
}

/// Line chart of `P_0..P_m` against time, y-axis fixed to `[0, 1]`.
pub fn svg_time_series(ts: &TimeSeries) -> String {
    let frame = Frame {
        x0: ts.times.first().copied().unwrap_or(0.0),
        x1: ts.times.last().copied().unwrap_or(1.0),
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = open_svg();
    frame.axes(&mut out, "t", "probability");
    if !ts.is_empty() {
        for k in 0..=ts.m {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = ts
                .times
                .iter()
                .zip(&ts.distributions)
                .map(|(&t, p)| (frame.px(t), frame.py(p[k])))
                .collect();
            polyline(&mut out, &pts, color, "none", 1.5);
            let ly = TOP + 10.0 + 18.0 * k as f64;
            writeln!(
                out,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}" font-size="12">P{k}</text>"#,
                num(W - RIGHT + 15.0),
                num(ly),
                num(W - RIGHT + 35.0),
                num(W - RIGHT + 40.0),
                num(ly + 4.0)
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Blue-to-yellow ramp over `[0, 1]`.
fn ramp(v: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 4] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.33, [49.0, 104.0, 142.0]),
        (0.66, [53.0, 183.0, 121.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let v = if v.is_finite() {
        v.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let i = STOPS.iter().position(|(s, _)| *s >= v).unwrap_or(3).max(1);
    let (a, ca) = STOPS[i - 1];
    let (b, cb) = STOPS[i];
    let f = (v - a) / (b - a);
    let c: Vec<u8> = (0..3)
        .map(|k| (ca[k] + f * (cb[k] - ca[k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heatmap of `P_k` with optional contour overlays. Cells are centred on
/// grid points; unconverged cells are hatched grey.
pub fn svg_heatmap(h: &HeatmapData, k: usize, contours: Option<&ContourSet>) -> String {
    let (xs, ys) = (&h.mu_hyd, &h.mu_dist);
    let half = |v: &[f64], i: usize| -> (f64, f64) {
        let lo = if i == 0 {
            v[0]
        } else {
            (v[i - 1] + v[i]) / 2.0
        };
        let hi = if i + 1 == v.len() {
            v[i]
        } else {
            (v[i] + v[i + 1]) / 2.0
        };
        (lo, hi)
    };
    let frame = Frame {
        x0: xs.first().copied().unwrap_or(0.0),
        x1: xs.last().copied().unwrap_or(1.0),
        y0: ys.first().copied().unwrap_or(0.0),
        y1: ys.last().copied().unwrap_or(1.0),
    };
    let mut out = open_svg();
    let values = h.values(k);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (xa, xb) = half(xs, i);
            let (ya, yb) = half(ys, j);
            let fill = if h.converged[i][j] {
                ramp(v)
            } else {
                "#999999".into()
            };
            writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                num(frame.px(xa)),
                num(frame.py(yb)),
                num(frame.px(xb) - frame.px(xa)),
                num(frame.py(ya) - frame.py(yb))
            )
            .unwrap();
        }
    }
    frame.axes(&mut out, "mu_hyd", "mu_dist");
    if let Some(c) = contours {
        for (n, level) in c.contours.iter().enumerate() {
            let (color, dash) = CONTOUR_STYLES[n % CONTOUR_STYLES.len()];
            for line in &level.polylines {
                let pts: Vec<(f64, f64)> = line
                    .iter()
                    .map(|p| (frame.px(p[0]), frame.py(p[1])))
                    .collect();
                polyline(&mut out, &pts, color, dash, 2.0);
            }
            let ly = TOP + 60.0 + 18.0 * n as f64;
            let dash_attr = if dash == "none" {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{dash}""#)
            };
            writeln!(
                out,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"{dash_attr}/><text x="{3}" y="{4}" font-size="12">{5}</text>"#,
                num(W - RIGHT + 15.0),
                num(ly),
                num(W - RIGHT + 35.0),
                num(W - RIGHT + 40.0),
                num(ly + 4.0),
                fmt_tick(level.level)
            )
            .unwrap();
        }
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">P{k}</text>"#,
        num(W - RIGHT + 15.0),
        num(TOP + 30.0)
    )
    .unwrap();
    out.push_str("</svg>\n");
    out
}
