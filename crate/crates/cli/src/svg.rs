//! Minimal self-contained SVG plotting: line panels with shaded phase
//! bands, a log-log scatter with a fitted dashed line, and the polar
//! degree-string snapshot. Coordinates are rounded to fixed precision so
//! identical data always renders to identical bytes.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 420.0;
const ML: f64 = 64.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 34.0;
const MB: f64 = 46.0;

fn fx(v: f64) -> String {
    format!("{:.2}", v)
}

pub struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    body: String,
    timestamp: bool,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str, timestamp: bool) -> Panel {
        Panel {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            body: String::new(),
            timestamp,
        }
    }

    pub fn finish(self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\">\n"
        ));
        if self.timestamp {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::SystemTime::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let _ = writeln!(s, "<!-- generated at unix:{now} -->");
        }
        s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
             text-anchor=\"middle\">{}</text>",
            W / 2.0,
            xml_escape(&self.title)
        );
        s.push_str(&self.body);
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>",
            ML + (W - ML - MR) / 2.0,
            H - 8.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
            MT + (H - MT - MB) / 2.0,
            MT + (H - MT - MB) / 2.0,
            xml_escape(&self.y_label)
        );
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Mapper {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Mapper {
    fn from_ranges(x: (f64, f64), y: (f64, f64)) -> Mapper {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        let (x0, x1) = pad(x.0, x.1);
        let (y0, y1) = pad(y.0, y.1);
        Mapper { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)
    }
}

fn axes(body: &mut String, m: &Mapper, log_log: bool) {
    let _ = writeln!(
        body,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>",
        fx(ML),
        fx(MT),
        fx(W - ML - MR),
        fx(H - MT - MB)
    );
    for i in 0..=4 {
        let xv = m.x0 + (m.x1 - m.x0) * i as f64 / 4.0;
        let yv = m.y0 + (m.y1 - m.y0) * i as f64 / 4.0;
        let xl = if log_log { format!("{:.3e}", 10f64.powf(xv)) } else { format!("{:.3e}", xv) };
        let yl = if log_log { format!("{:.3e}", 10f64.powf(yv)) } else { format!("{:.3e}", yv) };
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{}</text>",
            fx(m.px(xv)),
            fx(H - MB + 14.0),
            xl
        );
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"end\">{}</text>",
            fx(ML - 4.0),
            fx(m.py(yv) + 3.0),
            yl
        );
    }
}

fn polyline(body: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", fx(*x), fx(*y))).collect();
    let dash = if dashed { " stroke-dasharray=\"6,4\"" } else { "" };
    let _ = writeln!(
        body,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
        coords.join(" ")
    );
}

/// A shaded x-interval with a label (phase bands, plateau, impulses).
pub struct Band {
    pub from: f64,
    pub to: f64,
    pub color: String,
    pub label: String,
}

/// Line panel over time with optional gaps (None y-values) and bands.
pub fn line_panel(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[Option<f64>],
    bands: &[Band],
    annotations: &[String],
    timestamp: bool,
) -> String {
    let defined: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter_map(|(x, y)| y.map(|v| (*x, v)))
        .collect();
    let (ymin, ymax) = defined
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), (_, y)| (lo.min(*y), hi.max(*y)));
    let (xmin, xmax) = (
        xs.first().copied().unwrap_or(0.0),
        xs.last().copied().unwrap_or(1.0),
    );
    let m = Mapper::from_ranges((xmin, xmax), (ymin.min(ymax), ymax.max(ymin)));
    let mut panel = Panel::new(title, x_label, y_label, timestamp);
    let body = &mut panel.body;

    for b in bands {
        let x = m.px(b.from.max(m.x0));
        let w = (m.px(b.to.min(m.x1)) - x).max(0.0);
        let _ = writeln!(
            body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" opacity=\"0.25\"/>",
            fx(x),
            fx(MT),
            fx(w),
            fx(H - MT - MB),
            b.color
        );
        if !b.label.is_empty() {
            let _ = writeln!(
                body,
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">{}</text>",
                fx(x + w / 2.0),
                fx(MT + 14.0),
                xml_escape(&b.label)
            );
        }
    }
    axes(body, &m, false);

    // draw segments between gaps
    let mut run: Vec<(f64, f64)> = Vec::new();
    for (x, y) in xs.iter().zip(ys) {
        match y {
            Some(v) => run.push((m.px(*x), m.py(*v))),
            None => {
                polyline(body, &run, "#1f77b4", false);
                run.clear();
            }
        }
    }
    polyline(body, &run, "#1f77b4", false);

    for (i, note) in annotations.iter().enumerate() {
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" \
             fill=\"#555\">{}</text>",
            fx(ML + 8.0),
            fx(MT + 16.0 + 14.0 * i as f64),
            xml_escape(note)
        );
    }
    panel.finish()
}

/// Log-log scatter of (rate, xi) with the fitted dashed line.
pub fn scaling_panel(
    points: &[(f64, f64)],
    excluded: usize,
    fit: &crackle::kzm::ScalingFit,
    timestamp: bool,
) -> String {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.log10(), y.log10())).collect();
    let (xmin, xmax) = logs
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), (x, _)| (lo.min(*x), hi.max(*x)));
    let (ymin, ymax) = logs
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), (_, y)| (lo.min(*y), hi.max(*y)));
    let m = Mapper::from_ranges((xmin, xmax), (ymin, ymax));
    let mut panel = Panel::new(
        "Frozen correlation length vs ramp rate",
        "ramp rate (1/s)",
        "xi (nodes)",
        timestamp,
    );
    let body = &mut panel.body;
    axes(body, &m, true);
    for (lx, ly) in &logs {
        let _ = writeln!(
            body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#1f77b4\"/>",
            fx(m.px(*lx)),
            fx(m.py(*ly))
        );
    }
    // fitted line: log10 xi = log10 A - b log10 rate
    let a = fit.amplitude.log10();
    let line: Vec<(f64, f64)> = [m.x0, m.x1]
        .iter()
        .map(|&lx| (m.px(lx), m.py(a - fit.exponent * lx)))
        .collect();
    polyline(body, &line, "#d62728", true);
    let legend = format!(
        "b = {:.4} +- {:.4} (R2 {:.3}, n = {}{})",
        fit.exponent,
        fit.stderr_b,
        fit.r_squared,
        fit.n_points,
        if excluded > 0 {
            format!(", {excluded} excluded")
        } else {
            String::new()
        }
    );
    let _ = writeln!(
        body,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">{}</text>",
        fx(ML + 8.0),
        fx(MT + 16.0),
        xml_escape(&legend)
    );
    panel.finish()
}

/// Polar snapshot: radius k_i at angle theta_i, tick outward for +1,
/// inward for -1.
pub fn polar_panel(
    title: &str,
    thetas: &[f64],
    radii: &[u32],
    signs: &[i8],
    timestamp: bool,
) -> String {
    let cx = W / 2.0;
    let cy = MT + (H - MT - MB) / 2.0;
    let rmax_px = ((H - MT - MB) / 2.0) - 14.0;
    let kmax = radii.iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut panel = Panel::new(title, "", "", timestamp);
    let body = &mut panel.body;
    let _ = writeln!(
        body,
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#ccc\"/>",
        fx(cx),
        fx(cy),
        fx(rmax_px)
    );
    let mut pts = Vec::with_capacity(thetas.len() + 1);
    for i in 0..thetas.len() {
        let r = radii[i] as f64 / kmax * rmax_px;
        let (sin, cos) = thetas[i].sin_cos();
        pts.push((cx + r * cos, cy - r * sin));
    }
    if let Some(&first) = pts.first() {
        pts.push(first);
    }
    polyline(body, &pts, "#1f77b4", false);
    for i in 0..thetas.len() {
        let r = radii[i] as f64 / kmax * rmax_px;
        let (sin, cos) = thetas[i].sin_cos();
        let tick = 8.0 * signs[i] as f64;
        let (x0, y0) = (cx + r * cos, cy - r * sin);
        let (x1, y1) = (cx + (r + tick) * cos, cy - (r + tick) * sin);
        let color = if signs[i] > 0 { "#2ca02c" } else { "#d62728" };
        let _ = writeln!(
            body,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            fx(x0),
            fx(y0),
            fx(x1),
            fx(y1)
        );
    }
    panel.finish()
}
