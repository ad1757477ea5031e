//! Self-contained SVG figures: publication timeline, per-topic keyword
//! trajectories and the intertopic distance map.
//!
//! Output is a pure function of the inputs. Coordinates are printed with
//! three decimals and nothing time-dependent is embedded, so identical
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::dtm::TrajectorySeries;
use crate::eval::IntertopicMap;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("nothing to plot: {0}")]
    EmptySeries(&'static str),
    #[error("timeline dates must be strictly ascending (at {0})")]
    Unordered(NaiveDate),
    #[error("figure size must be positive, got {width}x{height}")]
    BadSize { width: u32, height: u32 },
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Line colours, assigned by rank.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub title: String,
    pub width: u32,
    pub height: u32,
    pub output: PathBuf,
}

impl FigureSpec {
    pub fn new(title: impl Into<String>, output: impl Into<PathBuf>) -> Self {
        FigureSpec {
            title: title.into(),
            width: 800,
            height: 450,
            output: output.into(),
        }
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    fn check(&self) -> Result<(), VizError> {
        if self.width == 0 || self.height == 0 {
            return Err(VizError::BadSize {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    fn write(&self, svg: &str) -> Result<PathBuf, VizError> {
        write_file(&self.output, svg)?;
        Ok(self.output.clone())
    }
}

fn write_file(path: &Path, svg: &str) -> Result<(), VizError> {
    let io = |source| VizError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, svg).map_err(io)
}

/// Fixed three-decimal formatting without negative zero.
fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Canvas {
    svg: String,
}

impl Canvas {
    fn new(spec: &FigureSpec) -> Self {
        let mut svg = String::new();
        let _ = write!(
            svg,
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n\
             <text x=\"{cx}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>\n",
            w = spec.width,
            h = spec.height,
            cx = num(spec.width as f64 / 2.0),
            title = escape(&spec.title),
        );
        Canvas { svg }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"1\"/>",
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: u32, content: &str) {
        let _ = writeln!(
            self.svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"{size}\">{}</text>",
            num(x),
            num(y),
            escape(content)
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, extra: &str) {
        let pts: Vec<String> = points.iter().map(|&(x, y)| format!("{},{}", num(x), num(y))).collect();
        let _ = writeln!(
            self.svg,
            "<polyline{extra} fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

/// Plot rectangle inside the margins.
#[derive(Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    right: f64,
    bottom: f64,
}

impl Frame {
    fn x(&self, frac: f64) -> f64 {
        self.left + frac * (self.right - self.left)
    }

    /// SVG y grows downward, so larger values sit higher.
    fn y(&self, frac: f64) -> f64 {
        self.bottom - frac * (self.bottom - self.top)
    }

    fn axes(&self, canvas: &mut Canvas) {
        canvas.line(self.left, self.bottom, self.right, self.bottom, "#000000");
        canvas.line(self.left, self.top, self.left, self.bottom, "#000000");
    }
}

fn y_ticks(canvas: &mut Canvas, frame: &Frame, max: f64, decimals: usize) {
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let y = frame.y(frac);
        canvas.line(frame.left - 4.0, y, frame.left, y, "#000000");
        canvas.text(frame.left - 6.0, y + 4.0, "end", 10, &format!("{:.*}", decimals, max * frac));
    }
}

/// Articles per day as one polyline over the date axis.
pub fn render_timeline(series: &[(NaiveDate, usize)], spec: &FigureSpec) -> Result<String, VizError> {
    spec.check()?;
    if series.is_empty() {
        return Err(VizError::EmptySeries("timeline has no days"));
    }
    if let Some(w) = series.windows(2).find(|w| w[1].0 <= w[0].0) {
        return Err(VizError::Unordered(w[1].0));
    }
    let (first, last) = (series[0].0, series[series.len() - 1].0);
    let span = (last - first).num_days().max(1) as f64;
    let max = series.iter().map(|&(_, c)| c).max().unwrap_or(0).max(1) as f64;
    let frame = Frame {
        left: 60.0,
        top: 40.0,
        right: spec.width as f64 - 20.0,
        bottom: spec.height as f64 - 50.0,
    };
    let mut canvas = Canvas::new(spec);
    frame.axes(&mut canvas);
    y_ticks(&mut canvas, &frame, max, 0);

    // Month ticks, thinned so at most about a dozen are labelled.
    let months = (last.year() - first.year()) * 12 + last.month() as i32 - first.month() as i32 + 1;
    let step = (months / 12 + 1) as u32;
    let mut month_index = 0u32;
    let mut tick = NaiveDate::from_ymd_opt(first.year(), first.month(), 1).expect("valid month");
    while tick <= last {
        if tick >= first && month_index.is_multiple_of(step) {
            let x = frame.x((tick - first).num_days() as f64 / span);
            canvas.line(x, frame.bottom, x, frame.bottom + 4.0, "#000000");
            canvas.text(x, frame.bottom + 16.0, "middle", 10, &tick.format("%Y-%m").to_string());
        }
        if tick >= first {
            month_index += 1;
        }
        tick = tick.checked_add_months(chrono::Months::new(1)).expect("date in range");
    }
    canvas.text((frame.left + frame.right) / 2.0, spec.height as f64 - 12.0, "middle", 12, "date");
    canvas.text(16.0, (frame.top + frame.bottom) / 2.0, "middle", 12, "articles");

    let points: Vec<(f64, f64)> = series
        .iter()
        .map(|&(d, c)| (frame.x((d - first).num_days() as f64 / span), frame.y(c as f64 / max)))
        .collect();
    canvas.polyline(&points, PALETTE[0], " class=\"series\"");
    Ok(canvas.finish())
}

pub fn plot_timeline(series: &[(NaiveDate, usize)], spec: &FigureSpec) -> Result<PathBuf, VizError> {
    spec.write(&render_timeline(series, spec)?)
}

/// Word indices ordered by final-slice probability, highest first; ties
/// keep input order.
pub fn legend_order(series: &TrajectorySeries) -> Vec<usize> {
    let mut order: Vec<usize> = (0..series.words.len()).collect();
    let last = |i: usize| series.series[i].last().copied().unwrap_or(0.0);
    order.sort_by(|&a, &b| last(b).total_cmp(&last(a)).then(a.cmp(&b)));
    order
}

/// One polyline per tracked word over the slices, with a legend ranked
/// by final-slice probability. Colours follow legend rank.
pub fn render_trajectories(series: &TrajectorySeries, spec: &FigureSpec) -> Result<String, VizError> {
    spec.check()?;
    if series.words.is_empty() || series.slice_labels.is_empty() {
        return Err(VizError::EmptySeries("trajectory tracks no words"));
    }
    let n_slices = series.slice_labels.len();
    let max = series
        .series
        .iter()
        .flatten()
        .copied()
        .fold(0.0f64, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    let frame = Frame {
        left: 60.0,
        top: 40.0,
        right: spec.width as f64 - 170.0,
        bottom: spec.height as f64 - 50.0,
    };
    let mut canvas = Canvas::new(spec);
    frame.axes(&mut canvas);
    y_ticks(&mut canvas, &frame, max, 4);
    let x_of = |t: usize| {
        if n_slices == 1 {
            frame.x(0.5)
        } else {
            frame.x(t as f64 / (n_slices - 1) as f64)
        }
    };
    for (t, label) in series.slice_labels.iter().enumerate() {
        let x = x_of(t);
        canvas.line(x, frame.bottom, x, frame.bottom + 4.0, "#000000");
        canvas.text(x, frame.bottom + 16.0, "middle", 9, label);
    }
    canvas.text(16.0, (frame.top + frame.bottom) / 2.0, "middle", 12, "p(w|k)");

    for (rank, &i) in legend_order(series).iter().enumerate() {
        let colour = PALETTE[rank % PALETTE.len()];
        let points: Vec<(f64, f64)> = series.series[i]
            .iter()
            .enumerate()
            .map(|(t, &p)| (x_of(t), frame.y(p / max)))
            .collect();
        let attr = format!(" class=\"series\" data-word=\"{}\"", escape(&series.words[i]));
        canvas.polyline(&points, colour, &attr);
        let ly = frame.top + 14.0 * rank as f64 + 6.0;
        canvas.line(frame.right + 12.0, ly - 4.0, frame.right + 30.0, ly - 4.0, colour);
        canvas.text(frame.right + 34.0, ly, "start", 11, &series.words[i]);
    }
    Ok(canvas.finish())
}

pub fn plot_trajectories(series: &TrajectorySeries, spec: &FigureSpec) -> Result<PathBuf, VizError> {
    spec.write(&render_trajectories(series, spec)?)
}

/// One circle per topic at its map coordinate, area proportional to
/// prevalence. Raw coordinates are kept in `data-x`/`data-y`.
pub fn render_intertopic(map: &IntertopicMap, spec: &FigureSpec) -> Result<String, VizError> {
    spec.check()?;
    if map.coords.is_empty() {
        return Err(VizError::EmptySeries("intertopic map has no topics"));
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let r_max = 0.12 * w.min(h);
    let frame = Frame {
        left: r_max + 10.0,
        top: 40.0 + r_max,
        right: w - r_max - 10.0,
        bottom: h - r_max - 10.0,
    };
    let (lo_x, hi_x) = extent(map.coords.iter().map(|c| c[0]));
    let (lo_y, hi_y) = extent(map.coords.iter().map(|c| c[1]));
    // Equal scale on both axes keeps distances faithful.
    let range = (hi_x - lo_x).max(hi_y - lo_y);
    let scale = if range > 0.0 {
        ((frame.right - frame.left) / range).min((frame.bottom - frame.top) / range)
    } else {
        0.0
    };
    let (cx0, cy0) = ((frame.left + frame.right) / 2.0, (frame.top + frame.bottom) / 2.0);
    let (mx, my) = ((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);

    let mut canvas = Canvas::new(spec);
    canvas.line(frame.left - r_max, cy0, frame.right + r_max, cy0, "#cccccc");
    canvas.line(cx0, frame.top - r_max, cx0, frame.bottom + r_max, "#cccccc");
    for (k, (&[x, y], &p)) in map.coords.iter().zip(&map.prevalence).enumerate() {
        let px = cx0 + (x - mx) * scale;
        let py = cy0 - (y - my) * scale;
        let r = r_max * p.max(0.0).sqrt();
        let _ = writeln!(
            canvas.svg,
            "<circle class=\"topic\" data-topic=\"{k}\" data-x=\"{x}\" data-y=\"{y}\" data-prevalence=\"{p}\" \
             cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" fill-opacity=\"0.35\" stroke=\"#333333\"/>",
            num(px),
            num(py),
            num(r),
            PALETTE[0]
        );
        canvas.text(px, py + 4.0, "middle", 11, &k.to_string());
    }
    Ok(canvas.finish())
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

pub fn plot_intertopic(map: &IntertopicMap, spec: &FigureSpec) -> Result<PathBuf, VizError> {
    spec.write(&render_intertopic(map, spec)?)
}
