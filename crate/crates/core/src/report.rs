//! Static SVG charts from sweep results.
//!
//! Output is plain SVG 1.1 built from lines, polylines, circles and text,
//! with every coordinate printed at two decimals, so equal input gives
//! byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::OutputError;
use crate::experiment::{aggregate, read_meta, read_results, SweepRow};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];
const LINEAR_GAIN: &str = "#f4b183";
const REFERENCE: &str = "#ff7f0e";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Benefit,
    Composition,
    Equilibrium,
    HireRates,
}

impl ChartKind {
    pub const ALL: [ChartKind; 4] = [
        ChartKind::Benefit,
        ChartKind::Composition,
        ChartKind::Equilibrium,
        ChartKind::HireRates,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            ChartKind::Benefit => "benefit.svg",
            ChartKind::Composition => "composition.svg",
            ChartKind::Equilibrium => "equilibrium.svg",
            ChartKind::HireRates => "hire_rates.svg",
        }
    }
}

/// One scenario's rows, labelled for the legend.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub rows: Vec<SweepRow>,
    pub n_employers: u32,
}

impl Series {
    /// Loads a results CSV. The employer count comes from the metadata
    /// sibling, or the highest level present when there is none.
    pub fn load(path: &Path) -> Result<Self, OutputError> {
        let rows = read_results(path)?;
        let n_employers = match read_meta(path) {
            Ok(meta) => meta.spec.base.n_employers,
            Err(_) => rows.iter().map(|r| r.n_compliant).max().unwrap_or(0),
        };
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .map(|s| s.trim_end_matches("_sweep").to_string())
            .unwrap_or_else(|| "series".into());
        Ok(Self { name, rows, n_employers })
    }

    fn x_max(&self) -> f64 {
        f64::from(self.n_employers.max(1))
    }

    /// Compliance as a share of employers.
    fn x(&self, k: u32) -> f64 {
        f64::from(k) / self.x_max()
    }
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + x.clamp(0.0, 1.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        let t = ((y - self.y_min) / (self.y_max - self.y_min)).clamp(0.0, 1.0);
        self.top + (1.0 - t) * self.height
    }
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64, dash: Option<&str>) {
        let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\" stroke-width=\"{width:.2}\"{dash}/>"
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64, dash: Option<&str>) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width:.2}\"{dash}/>",
            coords.join(" ")
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<circle class=\"marker\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"{fill}\" fill-opacity=\"0.45\"/>"
        );
    }

    fn text(&mut self, x: f64, y: f64, s: &str, size: f64, anchor: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"{size:.1}\" text-anchor=\"{anchor}\">{}</text>",
            esc(s)
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }

    fn axes(&mut self, f: &Frame, title: &str, y_label: &str) {
        self.text(f.left + f.width / 2.0, f.top - 12.0, title, 13.0, "middle");
        for i in 0..=5 {
            let x = f64::from(i) / 5.0;
            let px = f.px(x);
            self.line(px, f.top, px, f.top + f.height, "#e6e6e6", 1.0, None);
            self.text(px, f.top + f.height + 15.0, &format!("{:.0}%", x * 100.0), 10.0, "middle");
        }
        for i in 0..=4 {
            let y = f.y_min + (f.y_max - f.y_min) * f64::from(i) / 4.0;
            let py = f.py(y);
            self.line(f.left, py, f.left + f.width, py, "#e6e6e6", 1.0, None);
            self.text(f.left - 6.0, py + 3.5, &format!("{y:.2}"), 10.0, "end");
        }
        self.line(f.left, f.top + f.height, f.left + f.width, f.top + f.height, "#333", 1.0, None);
        self.line(f.left, f.top, f.left, f.top + f.height, "#333", 1.0, None);
        self.text(f.left + f.width / 2.0, f.top + f.height + 32.0, "compliant employers", 11.0, "middle");
        let _ = writeln!(
            self.body,
            "<text transform=\"translate({:.2},{:.2}) rotate(-90)\" font-family=\"sans-serif\" font-size=\"11.0\" text-anchor=\"middle\">{}</text>",
            f.left - 40.0,
            f.top + f.height / 2.0,
            esc(y_label)
        );
    }

    fn legend(&mut self, x: f64, y: f64, entries: &[(String, String, Option<&str>)]) {
        for (i, (label, color, dash)) in entries.iter().enumerate() {
            let yy = y + 16.0 * i as f64;
            self.line(x, yy, x + 22.0, yy, color, 2.0, *dash);
            self.text(x + 28.0, yy + 4.0, label, 10.5, "start");
        }
    }
}

fn y_range(values: impl Iterator<Item = f64>, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    for v in values.filter(|v| v.is_finite()) {
        a = a.min(v);
        b = b.max(v);
    }
    let pad = (b - a) * 0.04;
    (a - pad, b + pad)
}

/// Scatter of `column` per row plus a polyline through per-level means.
fn scatter_with_means(svg: &mut Svg, f: &Frame, s: &Series, column: &str, color: &str, dash: Option<&str>) {
    for r in &s.rows {
        if let Some(v) = r.metric(column) {
            svg.circle(f.px(s.x(r.n_compliant)), f.py(v), 2.2, color);
        }
    }
    let pts: Vec<(f64, f64)> = aggregate(&s.rows)
        .iter()
        .filter_map(|a| a.mean(column).map(|m| (f.px(s.x(a.n_compliant)), f.py(m))))
        .collect();
    svg.polyline(&pts, color, 1.8, dash);
}

const W: f64 = 640.0;
const H: f64 = 420.0;

fn main_frame(y_min: f64, y_max: f64) -> Frame {
    Frame {
        left: 70.0,
        top: 40.0,
        width: 400.0,
        height: 320.0,
        y_min,
        y_max,
    }
}

fn benefit_chart(series: &[Series]) -> String {
    let (lo, hi) = y_range(
        series.iter().flat_map(|s| s.rows.iter().filter_map(|r| r.scaled_benefit)),
        0.0,
        1.0,
    );
    let f = main_frame(lo, hi);
    let mut svg = Svg::new(W, H);
    svg.axes(&f, "Benefit as scaled demographic parity", "scaled benefit");
    svg.line(f.px(0.0), f.py(0.0), f.px(1.0), f.py(1.0), LINEAR_GAIN, 2.5, None);
    let mut legend = vec![("linear gain".to_string(), LINEAR_GAIN.to_string(), None)];
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        scatter_with_means(&mut svg, &f, s, "scaled_benefit", color, None);
        legend.push((s.name.clone(), color.to_string(), None));
    }
    svg.legend(f.left + f.width + 20.0, f.top + 10.0, &legend);
    svg.finish()
}

fn composition_chart(series: &[Series]) -> String {
    let f = main_frame(0.0, 1.0);
    let mut svg = Svg::new(W, H);
    svg.axes(&f, "Group B share of hires by employer type", "B share of hires");
    let mut legend = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        scatter_with_means(&mut svg, &f, s, "b_share_hires_compliant", color, None);
        scatter_with_means(&mut svg, &f, s, "b_share_hires_noncompliant", color, Some("6 4"));
        legend.push((format!("{} compliant", s.name), color.to_string(), None));
        legend.push((format!("{} non-compliant", s.name), color.to_string(), Some("6 4")));
    }
    svg.legend(f.left + f.width + 20.0, f.top + 10.0, &legend);
    svg.finish()
}

fn equilibrium_chart(series: &[Series]) -> String {
    let f = main_frame(0.0, 1.0);
    let mut svg = Svg::new(W, H);
    svg.axes(&f, "Probability of applying to a compliant employer", "p_compliant");
    svg.line(f.px(0.0), f.py(0.0), f.px(1.0), f.py(1.0), REFERENCE, 2.0, None);
    let mut legend = vec![("no preference".to_string(), REFERENCE.to_string(), None)];
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        scatter_with_means(&mut svg, &f, s, "p_compliant_a", color, Some("6 4"));
        scatter_with_means(&mut svg, &f, s, "p_compliant_b", color, None);
        legend.push((format!("{} group A", s.name), color.to_string(), Some("6 4")));
        legend.push((format!("{} group B", s.name), color.to_string(), None));
    }
    svg.legend(f.left + f.width + 20.0, f.top + 10.0, &legend);
    svg.finish()
}

fn hire_rate_chart(series: &[Series]) -> String {
    let cells = [
        ("rate_a_compliant", "group A, compliant"),
        ("rate_a_noncompliant", "group A, non-compliant"),
        ("rate_b_compliant", "group B, compliant"),
        ("rate_b_noncompliant", "group B, non-compliant"),
    ];
    let (_, hi) = y_range(
        series
            .iter()
            .flat_map(|s| s.rows.iter().flat_map(|r| cells.iter().filter_map(|(c, _)| r.metric(c)))),
        0.0,
        0.0,
    );
    let hi = if hi > 0.0 { hi } else { 1.0 };
    let (width, height) = (820.0, 640.0);
    let mut svg = Svg::new(width, height);
    svg.text(width / 2.0, 20.0, "Hire rate per application by group and employer type", 14.0, "middle");
    for (i, (col, title)) in cells.iter().enumerate() {
        let f = Frame {
            left: 70.0 + (i % 2) as f64 * 330.0,
            top: 60.0 + (i / 2) as f64 * 280.0,
            width: 250.0,
            height: 200.0,
            y_min: 0.0,
            y_max: hi,
        };
        svg.axes(&f, title, "hire rate");
        for (j, s) in series.iter().enumerate() {
            scatter_with_means(&mut svg, &f, s, col, PALETTE[j % PALETTE.len()], None);
        }
    }
    let legend: Vec<(String, String, Option<&str>)> = series
        .iter()
        .enumerate()
        .map(|(j, s)| (s.name.clone(), PALETTE[j % PALETTE.len()].to_string(), None))
        .collect();
    svg.legend(width - 150.0, 50.0, &legend);
    svg.finish()
}

/// Renders one chart over all series.
pub fn render(kind: ChartKind, series: &[Series]) -> String {
    match kind {
        ChartKind::Benefit => benefit_chart(series),
        ChartKind::Composition => composition_chart(series),
        ChartKind::Equilibrium => equilibrium_chart(series),
        ChartKind::HireRates => hire_rate_chart(series),
    }
}

/// Writes each requested chart into `out_dir`, returning the paths written.
pub fn write_report(series: &[Series], kinds: &[ChartKind], out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(out_dir).map_err(|source| OutputError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for &kind in kinds {
        let path = out_dir.join(kind.file_name());
        std::fs::write(&path, render(kind, series)).map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
