//! Deterministic SVG rendering of a sweep: filled certificate ellipse,
//! converged trajectories in black, diverged ones in red.

use std::fmt::Write as _;

use rdsat::roa::ellipsoid_boundary_samples;
use rdsat::sim::{Classification, SweepResult};

const SIZE: f64 = 640.0;
const PAD: f64 = 56.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = SIZE - 2.0 * PAD;
        let u = PAD + (x - self.x.0) / (self.x.1 - self.x.0) * w;
        let v = SIZE - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * w;
        // keep far-away points finite and short in the file
        (u.clamp(-SIZE, 2.0 * SIZE), v.clamp(-SIZE, 2.0 * SIZE))
    }
}

fn path_data(frame: &Frame, pts: &[(f64, f64)], close: bool) -> String {
    let mut d = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        let (u, v) = frame.px(*x, *y);
        let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, u, v);
    }
    if close {
        d.push_str(" Z");
    }
    d
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn render(result: &SweepResult) -> String {
    let frame = Frame {
        x: result.spec.x,
        y: result.spec.y,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let inner = SIZE - 2.0 * PAD;
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot"><rect x="{PAD}" y="{PAD}" width="{inner}" height="{inner}"/></clipPath></defs>"#
    );
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(out, r#"<g clip-path="url(#plot)">"#);
    if let Some((p, level)) = &result.overlay {
        if let Ok(pts) = ellipsoid_boundary_samples(p, *level, 240) {
            let pts: Vec<(f64, f64)> = pts.iter().map(|z| (z[0], z[1])).collect();
            let _ = writeln!(
                out,
                r##"<path d="{}" fill="#9ecae1" fill-opacity="0.7" stroke="#2171b5" stroke-width="1.5"/>"##,
                path_data(&frame, &pts, true)
            );
        }
    }
    for (label, colour) in [
        (Classification::Undecided, "#888888"),
        (Classification::Converged, "black"),
        (Classification::Diverged, "#d62728"),
    ] {
        for p in result.points.iter().filter(|p| p.label == label) {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="0.6"/>"#,
                path_data(&frame, &p.path, false)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<rect x="{PAD}" y="{PAD}" width="{inner}" height="{inner}" fill="none" stroke="black"/>"#
    );
    let font = r#"font-family="sans-serif" font-size="12""#;
    let (x0, x1) = frame.x;
    let (y0, y1) = frame.y;
    let bottom = SIZE - PAD + 16.0;
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{bottom}" {font} text-anchor="start">{}</text>"#,
        tick(x0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{bottom}" {font} text-anchor="end">{}</text>"#,
        SIZE - PAD,
        tick(x1)
    );
    let left = PAD - 6.0;
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="{}" {font} text-anchor="end">{}</text>"#,
        SIZE - PAD,
        tick(y0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="{}" {font} text-anchor="end">{}</text>"#,
        PAD + 10.0,
        tick(y1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" {font} text-anchor="middle">w1</text>"#,
        SIZE / 2.0,
        SIZE - PAD / 3.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" {font} text-anchor="middle" transform="rotate(-90 {} {})">w2</text>"#,
        PAD / 3.0,
        SIZE / 2.0,
        PAD / 3.0,
        SIZE / 2.0
    );
    out.push_str("</svg>\n");
    out
}
