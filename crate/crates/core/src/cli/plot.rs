//! Hand-written SVG line plots.
//!
//! Every public renderer takes a parsed [`Table`], so a figure can always be
//! regenerated from its CSV file.

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::table::{Table, TableError};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
    pub markers: bool,
    pub width: f64,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self {
            label: label.into(),
            points,
            color: color.to_string(),
            dashed: false,
            markers: false,
            width: 1.5,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }

    pub fn thin(mut self) -> Self {
        self.width = 0.8;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Same scale on both axes.
    pub equal_aspect: bool,
    /// Show a legend of labelled series.
    pub legend: bool,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y0) / (self.y1 - self.y0) * self.height
    }
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{:.*}", decimals, v);
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(panel: &Panel) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in &panel.series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let span = hi - lo;
        if span <= 0.0 {
            let d = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            (lo - d, hi + d)
        } else {
            (lo - 0.05 * span, hi + 0.05 * span)
        }
    };
    let (x0, x1) = pad(b.0, b.1);
    let (y0, y1) = pad(b.2, b.3);
    (x0, x1, y0, y1)
}

fn draw_panel(out: &mut String, panel: &Panel, left: f64, top: f64, width: f64, height: f64) {
    let (mut x0, mut x1, mut y0, mut y1) = bounds(panel);
    let (w, h) = (width, height);
    let (l, t) = (left, top);
    if panel.equal_aspect {
        let sx = (x1 - x0) / width;
        let sy = (y1 - y0) / height;
        if sx > sy {
            let extra = sx * height - (y1 - y0);
            y0 -= extra / 2.0;
            y1 += extra / 2.0;
        } else {
            let extra = sy * width - (x1 - x0);
            x0 -= extra / 2.0;
            x1 += extra / 2.0;
        }
    }
    let f = Frame {
        left: l,
        top: t,
        width: w,
        height: h,
        x0,
        x1,
        y0,
        y1,
    };
    let _ = writeln!(out, r##"<rect x="{l:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#333"/>"##);

    let xs = nice_step(x1 - x0);
    let mut v = (x0 / xs).ceil() * xs;
    while v <= x1 + 1e-9 * xs {
        let p = f.px(v);
        let _ = writeln!(out, r##"<line x1="{p:.2}" y1="{:.2}" x2="{p:.2}" y2="{:.2}" stroke="#ddd"/>"##, t, t + h);
        let _ = writeln!(out, r#"<text x="{p:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, t + h + 14.0, fmt_tick(v, xs));
        v += xs;
    }
    let ys = nice_step(y1 - y0);
    let mut v = (y0 / ys).ceil() * ys;
    while v <= y1 + 1e-9 * ys {
        let p = f.py(v);
        let _ = writeln!(out, r##"<line x1="{:.2}" y1="{p:.2}" x2="{:.2}" y2="{p:.2}" stroke="#ddd"/>"##, l, l + w);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, l - 4.0, p + 4.0, fmt_tick(v, ys));
        v += ys;
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#, l + w / 2.0, t - 8.0, escape(&panel.title));
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#, l + w / 2.0, t + h + 32.0, escape(&panel.x_label));
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        l - 44.0,
        t + h / 2.0,
        l - 44.0,
        t + h / 2.0,
        escape(&panel.y_label)
    );

    let _ = writeln!(out, r#"<g clip-path="none">"#);
    for s in &panel.series {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        if pts.len() > 1 {
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="{}"{} points="{}"/>"#,
                s.color,
                s.width,
                dash,
                pts.join(" ")
            );
        }
        if s.markers || pts.len() == 1 {
            for &(x, y) in &s.points {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#, f.px(x), f.py(y), s.color);
            }
        }
    }
    let _ = writeln!(out, "</g>");

    if panel.legend {
        let mut row = 0.0;
        for s in panel.series.iter().filter(|s| !s.label.is_empty()) {
            let y = t + 14.0 + row * 16.0;
            let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#, l + 8.0, l + 28.0, s.color);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, l + 32.0, y + 4.0, escape(&s.label));
            row += 1.0;
        }
    }
}

/// Lays panels out side by side.
pub fn render(panels: &[Panel], panel_width: f64, panel_height: f64) -> String {
    let margin_l = 70.0;
    let margin_r = 20.0;
    let margin_t = 40.0;
    let margin_b = 50.0;
    let cell_w = margin_l + panel_width + margin_r;
    let total_w = cell_w * panels.len() as f64;
    let total_h = margin_t + panel_height + margin_b;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.0} {total_h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, i as f64 * cell_w + margin_l, margin_t, panel_width, panel_height);
    }
    out.push_str("</svg>\n");
    out
}

/// Inertial paths and range history of one encounter.
pub fn encounter_svg(t: &Table, title: &str, length_unit: &str, time_unit: &str) -> Result<String, TableError> {
    let zip = |a: Vec<f64>, b: Vec<f64>| a.into_iter().zip(b).collect::<Vec<_>>();
    let aircraft = zip(t.numbers("x_a")?, t.numbers("y_a")?);
    let hazard = zip(t.numbers("x_h")?, t.numbers("y_h")?);
    let range = zip(t.numbers("t")?, t.numbers("r")?);
    let mut start = Vec::new();
    if let (Some(a), Some(h)) = (aircraft.first(), hazard.first()) {
        start.push(Series::line("start", vec![*a], PALETTE[0]).with_markers());
        start.push(Series::line("", vec![*h], PALETTE[1]).with_markers());
    }
    let mut paths = vec![Series::line("aircraft", aircraft, PALETTE[0]), Series::line("hazard", hazard, PALETTE[1])];
    paths.extend(start);
    let panels = [
        Panel {
            title: format!("{title}: trajectories"),
            x_label: format!("x ({length_unit})"),
            y_label: format!("y ({length_unit})"),
            series: paths,
            equal_aspect: true,
            legend: true,
        },
        Panel {
            title: format!("{title}: range"),
            x_label: format!("t ({time_unit})"),
            y_label: format!("r ({length_unit})"),
            series: vec![Series::line("range", range, PALETTE[2])],
            equal_aspect: false,
            legend: false,
        },
    ];
    Ok(render(&panels, 420.0, 380.0))
}

/// Miss-distance against initial range, with the NMAC radius as reference.
pub fn min_range_svg(t: &Table, title: &str, nmac_m: f64) -> Result<String, TableError> {
    let r0 = t.numbers("r0_m")?;
    let miss = t.numbers("miss_m")?;
    let pts: Vec<(f64, f64)> = r0.iter().copied().zip(miss).collect();
    let lo = r0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let panel = Panel {
        title: title.to_string(),
        x_label: "initial range r(0) (m)".into(),
        y_label: "minimum range r(T) (m)".into(),
        series: vec![
            Series::line("r(T)", pts, PALETTE[0]).with_markers(),
            Series::line("NMAC", vec![(lo, nmac_m), (hi, nmac_m)], PALETTE[1]).dashed(),
        ],
        equal_aspect: false,
        legend: true,
    };
    Ok(render(&[panel], 480.0, 360.0))
}

type Groups = Vec<(String, Vec<(f64, f64)>)>;

fn grouped(t: &Table) -> Result<Groups, TableError> {
    let family = t.text("family")?;
    let r_t = t.text("rT")?;
    let x = t.numbers("x")?;
    let y = t.numbers("y")?;
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for i in 0..x.len() {
        let key = format!("{}:{}", family[i], r_t[i]);
        match out.last_mut() {
            Some((k, pts)) if *k == key => pts.push((x[i], y[i])),
            _ => out.push((key, vec![(x[i], y[i])])),
        }
    }
    Ok(out)
}

fn terminal_rays(groups: &[(String, Vec<(f64, f64)>)], reach: f64) -> Vec<Series> {
    let mut angles: Vec<f64> = Vec::new();
    for (_, pts) in groups {
        if let Some(&(x, y)) = pts.first() {
            if x.hypot(y) > 0.0 {
                let a = x.atan2(y);
                if !angles.iter().any(|b| (a - b).abs() < 1e-9) {
                    angles.push(a);
                }
            }
        }
    }
    angles
        .into_iter()
        .map(|a| Series::line("", vec![(0.0, 0.0), (reach * a.sin(), reach * a.cos())], "#444").dashed())
        .collect()
}

/// Optimal trajectory field with the lines of minimum range.
pub fn field_svg(t: &Table, title: &str) -> Result<String, TableError> {
    let groups = grouped(t)?;
    let reach = groups
        .iter()
        .flat_map(|(_, p)| p.first())
        .map(|(x, y)| x.hypot(*y))
        .fold(0.0, f64::max);
    let mut series: Vec<Series> = groups
        .iter()
        .map(|(k, pts)| {
            let color = if k.starts_with("right") { PALETTE[0] } else { PALETTE[1] };
            Series::line("", pts.clone(), color).thin()
        })
        .collect();
    series.extend(terminal_rays(&groups, reach));
    series.push(Series::line("aircraft", vec![(0.0, 0.0)], "#000").with_markers());
    let panel = Panel {
        title: title.to_string(),
        x_label: "x".into(),
        y_label: "y".into(),
        series,
        equal_aspect: true,
        legend: false,
    };
    Ok(render(&[panel], 520.0, 520.0))
}

/// Barrier branches, capture arc and lines of minimum range.
pub fn barrier_svg(t: &Table, title: &str) -> Result<String, TableError> {
    let groups = grouped(t)?;
    let rho = t.numbers("rT")?.first().copied().unwrap_or(0.0);
    let mut series: Vec<Series> = groups
        .iter()
        .map(|(k, pts)| {
            let color = if k.starts_with("right") { PALETTE[0] } else { PALETTE[1] };
            Series::line(k.split(':').next().unwrap_or(""), pts.clone(), color)
        })
        .collect();
    let theta_t = groups
        .first()
        .and_then(|(_, p)| p.first())
        .map(|&(x, y)| x.atan2(y).abs())
        .unwrap_or(PI);
    let arc: Vec<(f64, f64)> = (0..=64)
        .map(|i| {
            let a = theta_t + 2.0 * (PI - theta_t) * i as f64 / 64.0;
            (rho * a.sin(), rho * a.cos())
        })
        .collect();
    series.push(Series::line("capture arc", arc, PALETTE[2]));
    let reach = groups.iter().flat_map(|(_, p)| p.iter()).map(|(x, y)| x.hypot(*y)).fold(0.0, f64::max);
    series.extend(terminal_rays(&groups, reach));
    let panel = Panel {
        title: title.to_string(),
        x_label: "x".into(),
        y_label: "y".into(),
        series,
        equal_aspect: true,
        legend: true,
    };
    Ok(render(&[panel], 520.0, 520.0))
}
