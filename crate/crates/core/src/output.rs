//! CSV, JSON and SVG emission for sweep datasets. Output is byte-deterministic
//! for a given dataset.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reconstruct::Provenance;
use crate::sweep::{Dataset, RowVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::Usage(format!("unknown output format {other:?}"))),
        }
    }
}

/// Comma-separated list; an empty string yields no formats.
pub fn parse_formats(s: &str) -> Result<Vec<Format>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let f: Format = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    M,
    C2,
    C3,
    S,
    #[serde(rename = "logZ")]
    LogZ,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::M => "M",
            Quantity::C2 => "C2",
            Quantity::C3 => "C3",
            Quantity::S => "S",
            Quantity::LogZ => "logZ",
        }
    }

    fn axis_title(self) -> &'static str {
        match self {
            Quantity::M => "M = <Z1+Z2+Z3>",
            Quantity::C2 => "C2 = <Z1Z2+Z2Z3+Z1Z3>",
            Quantity::C3 => "C3 = <Z1Z2Z3>",
            Quantity::S => "S (nats)",
            Quantity::LogZ => "ln Z",
        }
    }

    pub fn of(self, v: &RowVariant) -> f64 {
        match self {
            Quantity::M => v.magnetization,
            Quantity::C2 => v.pair_correlation,
            Quantity::C3 => v.triple_correlation,
            Quantity::S => v.entropy,
            Quantity::LogZ => v.log_partition,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "M" => Some(Quantity::M),
            "C2" => Some(Quantity::C2),
            "C3" => Some(Quantity::C3),
            "S" => Some(Quantity::S),
            "logZ" => Some(Quantity::LogZ),
            _ => None,
        }
    }
}

/// `<Q>-vs-h` line plot or `<Q>-heatmap` over the `(h, beta)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line(Quantity),
    Heatmap(Quantity),
}

impl PlotKind {
    pub fn name(self) -> String {
        match self {
            PlotKind::Line(q) => format!("{}-vs-h", q.label()),
            PlotKind::Heatmap(q) => format!("{}-heatmap", q.label()),
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("unknown plot {s:?} (expected e.g. M-vs-h, S-heatmap)"));
        if let Some(q) = s.strip_suffix("-vs-h") {
            Quantity::parse(q).map(PlotKind::Line).ok_or_else(bad)
        } else if let Some(q) = s.strip_suffix("-heatmap") {
            Quantity::parse(q).map(PlotKind::Heatmap).ok_or_else(bad)
        } else {
            Err(bad())
        }
    }
}

impl Serialize for PlotKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for PlotKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const CSV_HEADER: &str = "beta,h,J,M,C2,C3,S,logZ,provenance";

/// Shortest representation that round-trips; `-0.0` prints as `0.0`.
fn num(x: f64) -> String {
    format!("{:?}", x + 0.0)
}

pub fn csv_string(ds: &Dataset) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &ds.rows {
        for v in &row.variants {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                num(row.beta),
                num(row.h),
                num(row.coupling),
                num(v.magnetization),
                num(v.pair_correlation),
                num(v.triple_correlation),
                num(v.entropy),
                num(v.log_partition),
                v.provenance.as_str()
            );
        }
    }
    out
}

pub fn json_string(ds: &Dataset) -> Result<String> {
    let mut s = serde_json::to_string_pretty(ds)
        .map_err(|e| Error::NumericConsistency(format!("dataset not serializable: {e}")))?;
    s.push('\n');
    Ok(s)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                out,
                r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{xv:.2}</text>"#,
                y0 + 5.0,
                y0 + 18.0
            );
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{yv:.2}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

const PROVENANCES: [Provenance; 3] = [Provenance::Ideal, Provenance::Noisy, Provenance::Recovered];

/// One polyline per `(beta, provenance)` pair, against `h`.
pub fn svg_line(ds: &Dataset, q: Quantity) -> Result<String> {
    if ds.is_empty() {
        return Err(Error::Domain("cannot plot an empty dataset".into()));
    }
    let frame = Frame {
        x: span(ds.fields.iter().copied()),
        y: span(ds.rows.iter().flat_map(|r| r.variants.iter().map(move |v| q.of(v)))),
    };
    let mut out = svg_open();
    let title = if ds.betas.len() == 1 {
        format!("{} vs h, beta = {}", q.label(), ds.betas[0])
    } else {
        format!("{} vs h", q.label())
    };
    frame.axes(&mut out, &title, "h (units of J)", q.axis_title());

    let mut series = 0usize;
    for (bi, beta) in ds.betas.iter().enumerate() {
        for prov in PROVENANCES {
            let pts: Vec<String> = (0..ds.fields.len())
                .filter_map(|hi| {
                    let row = ds.row(bi, hi);
                    row.variant(prov).map(|v| format!("{:.2},{:.2}", frame.px(row.h), frame.py(q.of(v))))
                })
                .collect();
            if pts.is_empty() {
                continue;
            }
            let colour = PALETTE[series % PALETTE.len()];
            let dash = match prov {
                Provenance::Ideal => "",
                Provenance::Noisy => r#" stroke-dasharray="6 3""#,
                Provenance::Recovered => r#" stroke-dasharray="2 2""#,
            };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            let ly = TOP + 14.0 + 16.0 * series as f64;
            let lx = WIDTH - RIGHT + 10.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}" font-size="10">b={beta} {}</text>"#,
                lx + 18.0,
                lx + 22.0,
                ly + 3.5,
                prov.as_str()
            );
            series += 1;
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Viridis-like ramp sampled at five stops.
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (STOPS.len() - 1) as f64;
    let i = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Colour map of the quantity over `h` (x) and `beta` (y), using the most
/// processed provenance available at each point.
pub fn svg_heatmap(ds: &Dataset, q: Quantity) -> Result<String> {
    if ds.is_empty() {
        return Err(Error::Domain("cannot plot an empty dataset".into()));
    }
    let value = |bi: usize, hi: usize| {
        let row = ds.row(bi, hi);
        let v = row.variants.last().expect("row has variants");
        q.of(v)
    };
    let (lo, hi_v) = span(ds.rows.iter().map(|r| q.of(r.variants.last().unwrap())));
    let cell = |axis: &[f64]| -> (f64, f64) {
        let (a, b) = span(axis.iter().copied());
        let half = if axis.len() > 1 { (b - a) / (axis.len() - 1) as f64 / 2.0 } else { 0.5 };
        (a - half, b + half)
    };
    let frame = Frame {
        x: cell(&ds.fields),
        y: cell(&ds.betas),
    };
    let mut out = svg_open();
    let prov = ds.rows[0].variants.last().unwrap().provenance.as_str();
    frame.axes(
        &mut out,
        &format!("{} ({prov}) over h and beta", q.label()),
        "h (units of J)",
        "beta (1/J)",
    );
    let dx = (frame.x.1 - frame.x.0) / ds.fields.len() as f64;
    let dy = (frame.y.1 - frame.y.0) / ds.betas.len() as f64;
    for bi in 0..ds.betas.len() {
        for hi in 0..ds.fields.len() {
            let x0 = frame.px(frame.x.0 + hi as f64 * dx);
            let x1 = frame.px(frame.x.0 + (hi + 1) as f64 * dx);
            let y0 = frame.py(frame.y.0 + (bi + 1) as f64 * dy);
            let y1 = frame.py(frame.y.0 + bi as f64 * dy);
            let t = (value(bi, hi) - lo) / (hi_v - lo);
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x1 - x0,
                y1 - y0,
                ramp(t)
            );
        }
    }
    // colour bar
    let bx = WIDTH - RIGHT + 20.0;
    let steps = 32;
    let h = (HEIGHT - TOP - BOTTOM) / steps as f64;
    for i in 0..steps {
        let y = HEIGHT - BOTTOM - (i + 1) as f64 * h;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.2}" y="{y:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            h + 0.5,
            ramp((i as f64 + 0.5) / steps as f64)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="10">{lo:.3}</text><text x="{:.2}" y="{:.2}" font-size="10">{hi_v:.3}</text>"#,
        bx + 20.0,
        HEIGHT - BOTTOM,
        bx + 20.0,
        TOP + 8.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn svg_plot(ds: &Dataset, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::Line(q) => svg_line(ds, q),
        PlotKind::Heatmap(q) => svg_heatmap(ds, q),
    }
}

/// Line plot for a single temperature, entropy heatmap otherwise.
pub fn default_plot(ds: &Dataset) -> PlotKind {
    if ds.betas.len() == 1 {
        PlotKind::Line(Quantity::M)
    } else {
        PlotKind::Heatmap(Quantity::S)
    }
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `sweep.csv`, `sweep.json` and `<plot>.svg` into `dir` as requested.
pub fn emit_outputs(ds: &Dataset, formats: &[Format], dir: &Path, plot: Option<PlotKind>) -> Result<Vec<PathBuf>> {
    if formats.is_empty() {
        return Ok(Vec::new());
    }
    if ds.is_empty() {
        return Err(Error::Domain("nothing to write: dataset is empty".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for f in formats {
        written.push(match f {
            Format::Csv => write(dir.join("sweep.csv"), &csv_string(ds))?,
            Format::Json => write(dir.join("sweep.json"), &json_string(ds)?)?,
            Format::Svg => {
                let kind = plot.unwrap_or_else(|| default_plot(ds));
                write(dir.join(format!("{}.svg", kind.name())), &svg_plot(ds, kind)?)?
            }
        });
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, Axis, SweepSpec};

    fn small() -> Dataset {
        run_sweep(&SweepSpec {
            beta: Axis::List(vec![1.0, 11.0]),
            h: Axis::Range { min: -2.0, max: 2.0, steps: 5 },
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn formats_parse() {
        assert_eq!(parse_formats("csv,svg,csv").unwrap(), vec![Format::Csv, Format::Svg]);
        assert!(parse_formats("").unwrap().is_empty());
        assert!(matches!(parse_formats("csv,xml"), Err(Error::Usage(_))));
    }

    #[test]
    fn plot_kinds_parse() {
        assert_eq!("M-vs-h".parse::<PlotKind>().unwrap(), PlotKind::Line(Quantity::M));
        assert_eq!("S-heatmap".parse::<PlotKind>().unwrap(), PlotKind::Heatmap(Quantity::S));
        assert!("Q-vs-h".parse::<PlotKind>().is_err());
        assert!("M".parse::<PlotKind>().is_err());
    }

    #[test]
    fn csv_layout() {
        let ds = small();
        let csv = csv_string(&ds);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 10);
        assert!(lines[1].starts_with("1.0,-2.0,1.0,"));
        assert!(lines[1].ends_with(",ideal"));
        let m: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(m, ds.rows[0].ideal().magnetization);
    }

    #[test]
    fn json_round_trips() {
        let ds = small();
        let back: Dataset = serde_json::from_str(&json_string(&ds).unwrap()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn svg_is_deterministic() {
        let ds = small();
        for kind in ["M-vs-h", "S-heatmap", "C2-vs-h", "M-heatmap"] {
            let k: PlotKind = kind.parse().unwrap();
            let a = svg_plot(&ds, k).unwrap();
            assert_eq!(a, svg_plot(&small(), k).unwrap());
            assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        }
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
        assert_eq!(ramp(f64::NAN), "#440154");
    }

    #[test]
    fn emit_writes_requested_files() {
        let dir = tempfile::tempdir().unwrap();
        let ds = small();
        assert!(emit_outputs(&ds, &[], dir.path(), None).unwrap().is_empty());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        let files = emit_outputs(&ds, &[Format::Csv, Format::Json, Format::Svg], dir.path(), None).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["sweep.csv", "sweep.json", "S-heatmap.svg"]);
    }
}
