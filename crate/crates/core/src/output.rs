//! CSV and SVG emission for experiment traces.
//!
//! Floats are written with Rust's shortest round-trip representation, so a
//! re-imported CSV reproduces the in-memory statistics bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::Trace;

/// Per-round aggregate statistics of one algorithm, as written to CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub algorithm: String,
    pub venues: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Row-major, `venues` entries per round.
    pub allocation: Vec<f64>,
}

impl TraceSummary {
    pub fn from_trace(trace: &Trace) -> Self {
        let t = trace.horizon();
        let mut allocation = Vec::with_capacity(t * trace.venues());
        for r in 0..t {
            allocation.extend_from_slice(trace.mean_allocation(r));
        }
        Self {
            algorithm: trace.algorithm().name().to_string(),
            venues: trace.venues(),
            mean: (0..t).map(|r| trace.mean_cum_reward(r)).collect(),
            stderr: (0..t).map(|r| trace.stderr(r)).collect(),
            allocation,
        }
    }

    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn allocation_at(&self, t: usize) -> &[f64] {
        &self.allocation[t * self.venues..(t + 1) * self.venues]
    }
}

pub fn csv_header(venues: usize) -> String {
    let mut h = String::from("round,algorithm,mean_cum_reward,stderr");
    for i in 1..=venues {
        write!(h, ",mean_alloc_venue_{i}").unwrap();
    }
    h
}

/// CSV text for a set of summaries sharing one venue count.
pub fn to_csv(summaries: &[TraceSummary]) -> Result<String> {
    let first = summaries.first().ok_or(Error::EmptyTrace)?;
    let k = first.venues;
    let mut out = csv_header(k);
    out.push('\n');
    for s in summaries {
        if s.venues != k {
            return Err(Error::DimensionMismatch { expected: k, got: s.venues });
        }
        if s.horizon() == 0 {
            return Err(Error::EmptyTrace);
        }
        for t in 0..s.horizon() {
            write!(out, "{},{},{},{}", t + 1, s.algorithm, s.mean[t], s.stderr[t]).unwrap();
            for a in s.allocation_at(t) {
                write!(out, ",{a}").unwrap();
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn emit_csv(traces: &[Trace], path: &Path) -> Result<()> {
    let summaries: Vec<TraceSummary> = traces.iter().map(TraceSummary::from_trace).collect();
    fs::write(path, to_csv(&summaries)?)?;
    Ok(())
}

fn csv_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

/// Parses CSV written by [`to_csv`], one summary per algorithm in order of
/// first appearance.
pub fn parse_csv(text: &str) -> Result<Vec<TraceSummary>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyTrace)?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 {
        return Err(csv_error(1, "header needs at least one venue column"));
    }
    let k = cols.len() - 4;
    if header != csv_header(k) {
        return Err(csv_error(1, format!("unexpected header `{header}`")));
    }
    let mut out: Vec<TraceSummary> = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(csv_error(n, format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| csv_error(n, format!("bad number `{s}`")));
        let round: usize = fields[0].parse().map_err(|_| csv_error(n, format!("bad round `{}`", fields[0])))?;
        let name = fields[1];
        if out.last().is_none_or(|s| s.algorithm != name) {
            if out.iter().any(|s| s.algorithm == name) {
                return Err(csv_error(n, format!("rows of `{name}` are not contiguous")));
            }
            out.push(TraceSummary {
                algorithm: name.to_string(),
                venues: k,
                mean: Vec::new(),
                stderr: Vec::new(),
                allocation: Vec::new(),
            });
        }
        let s = out.last_mut().unwrap();
        if round != s.mean.len() + 1 {
            return Err(csv_error(n, format!("expected round {}, got {round}", s.mean.len() + 1)));
        }
        s.mean.push(num(fields[2])?);
        s.stderr.push(num(fields[3])?);
        for f in &fields[4..] {
            s.allocation.push(num(f)?);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceSummary>> {
    parse_csv(&fs::read_to_string(path)?)
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Rounds (0-based) that carry error bars: every `T/20` rounds.
pub fn error_bar_rounds(horizon: usize) -> Vec<usize> {
    let step = (horizon / 20).max(1);
    (1..=horizon / step).map(|j| j * step - 1).collect()
}

/// Self-contained SVG of mean cumulative reward per algorithm.
pub fn to_svg(summaries: &[TraceSummary], title: &str) -> Result<String> {
    let horizon = summaries.iter().map(TraceSummary::horizon).max().ok_or(Error::EmptyTrace)?;
    if horizon == 0 {
        return Err(Error::EmptyTrace);
    }
    let (w, h) = (800.0, 500.0);
    let (left, right, top, bottom) = (80.0, 160.0, 40.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let ymax = summaries
        .iter()
        .flat_map(|s| s.mean.iter().zip(&s.stderr).map(|(m, e)| m + e))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x = |t: usize| left + pw * (t + 1) as f64 / horizon as f64;
    let y = |v: f64| top + ph * (1.0 - v / ymax);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(title)).unwrap();
    writeln!(
        svg,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    )
    .unwrap();
    for j in 0..=4 {
        let v = ymax * j as f64 / 4.0;
        writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.0}</text>"#,
            left - 6.0,
            y(v) + 4.0,
            v
        )
        .unwrap();
        let t = horizon * j / 4;
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{t}</text>"#,
            left + pw * t as f64 / horizon as f64,
            top + ph + 18.0
        )
        .unwrap();
    }
    writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">round</text>"#, left + pw / 2.0, h - 16.0).unwrap();
    writeln!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">mean cumulative reward</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    )
    .unwrap();

    // Polylines are thinned to at most ~1000 points per series.
    let stride = (horizon / 1000).max(1);
    for (j, s) in summaries.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let mut pts = String::new();
        let n = s.horizon();
        for t in (0..n).step_by(stride).chain(std::iter::once(n - 1)) {
            write!(pts, "{:.2},{:.2} ", x(t), y(s.mean[t])).unwrap();
        }
        writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.trim_end()).unwrap();
        for t in error_bar_rounds(n) {
            let (cx, lo, hi) = (x(t), y(s.mean[t] - s.stderr[t]), y(s.mean[t] + s.stderr[t]));
            writeln!(
                svg,
                r#"<path d="M{cx:.2},{lo:.2} V{hi:.2} M{:.2},{lo:.2} h6 M{:.2},{hi:.2} h6" stroke="{color}"/>"#,
                cx - 3.0,
                cx - 3.0
            )
            .unwrap();
        }
        let ly = top + 16.0 * j as f64 + 8.0;
        writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            left + pw + 12.0,
            left + pw + 32.0,
            left + pw + 38.0,
            ly + 4.0,
            escape(&s.algorithm)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_plot(traces: &[Trace], title: &str, path: &Path) -> Result<()> {
    let summaries: Vec<TraceSummary> = traces.iter().map(TraceSummary::from_trace).collect();
    fs::write(path, to_svg(&summaries, title)?)?;
    Ok(())
}
