//! Static overlay of barriers, samples and flagged elements.
//!
//! The viewBox is in data coordinates with y flipped by a group transform,
//! so element coordinates are the raw values.

use std::fmt::Write;

use snapout::estimators::{EstimateSet, Regime};
use snapout::geometry::{Environment, Point};

/// At most this many samples are drawn per path.
const MAX_DOTS: usize = 4000;

pub fn render(env: Option<&Environment>, paths: &[&[Point]], est: &EstimateSet) -> String {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Point| {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    };
    if let Some(env) = env {
        let (a, b) = env.outer().bounding_box();
        grow(a);
        grow(b);
    }
    for path in paths {
        path.iter().copied().for_each(&mut grow);
    }
    for e in &est.elements {
        grow(e.point);
        grow(e.point + Point::new(est.cell, est.cell));
    }
    if !lo.x.is_finite() {
        lo = Point::new(-1.0, -1.0);
        hi = Point::new(1.0, 1.0);
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-9);
    let pad = 0.02 * span;
    let stroke = 0.003 * span;
    let (x0, y0, w, h) = (lo.x - pad, lo.y - pad, hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0} {} {w} {h}" width="800" height="{}">"#,
        -(y0 + h),
        (800.0 * h / w).round()
    );
    s.push_str("<g transform=\"scale(1,-1)\">\n");
    let r = stroke;
    for path in paths {
        let every = path.len().div_ceil(MAX_DOTS).max(1);
        s.push_str("<g fill=\"#7a7a7a\" fill-opacity=\"0.5\">\n");
        for p in path.iter().step_by(every) {
            let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="{r}"/>"#, p.x, p.y);
        }
        s.push_str("</g>\n");
    }
    if let Some(env) = env {
        for (i, c) in env.curves().enumerate() {
            let colour = if i == 0 { "#000000" } else { "#1f5fbf" };
            let mut d = String::new();
            for (k, v) in c.vertices().iter().enumerate() {
                let _ = write!(d, "{}{} {} ", if k == 0 { "M" } else { "L" }, v.x, v.y);
            }
            d.push('Z');
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="{stroke}"/>"#);
        }
    }
    s.push_str("<g fill=\"#d62728\" fill-opacity=\"0.6\">\n");
    for e in &est.elements {
        match est.regime {
            Regime::FixedFreq => {
                let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{c}" height="{c}"/>"#, e.point.x, e.point.y, c = est.cell);
            }
            _ => {
                let c = est.cell.max(2.0 * stroke);
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{c}" height="{c}"/>"#,
                    e.point.x - 0.5 * c,
                    e.point.y - 0.5 * c
                );
            }
        }
    }
    s.push_str("</g>\n</g>\n</svg>\n");
    s
}
