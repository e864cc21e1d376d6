//! SVG charts of a page: x is the topological degree, y the filtration.

use std::fmt::Write;

use crate::engine::PageData;

#[derive(Clone, Debug, PartialEq)]
pub struct ChartStyle {
    /// Pixels per unit of t.
    pub x_scale: f64,
    /// Pixels per filtration step.
    pub y_scale: f64,
    pub dot_radius: f64,
    /// Degree of v, used to draw v-multiplication lines.
    pub v_degree: i64,
    pub x_tick: i64,
    pub title: String,
}

impl ChartStyle {
    pub fn new(v_degree: i64) -> Self {
        ChartStyle { x_scale: 12.0, y_scale: 12.0, dot_radius: 2.5, v_degree, x_tick: 4, title: String::new() }
    }
}

const MARGIN: f64 = 40.0;

/// One `<circle>` per class (offset sideways within a bidegree), a line along each
/// v-multiplication between consecutive nonzero bidegrees, and an arrow per nonzero d_r.
pub fn emit_svg(page: &PageData, style: &ChartStyle) -> String {
    let t_max = page.cells.keys().map(|&(t, _)| t).max().unwrap_or(0).max(0);
    let t_min = page.cells.keys().map(|&(t, _)| t).min().unwrap_or(0).min(0);
    let s_max = page.cells.keys().map(|&(_, s)| s).max().unwrap_or(0).max(0);
    let s_min = page.cells.keys().map(|&(_, s)| s).min().unwrap_or(0).min(0);
    let width = (t_max - t_min) as f64 * style.x_scale + 2.0 * MARGIN;
    let height = (s_max - s_min) as f64 * style.y_scale + 2.0 * MARGIN;
    let x = |t: i64| MARGIN + (t - t_min) as f64 * style.x_scale;
    let y = |s: i64| height - MARGIN - (s - s_min) as f64 * style.y_scale;
    let dot_x = |t: i64, k: usize, n: usize| x(t) + (k as f64 - (n as f64 - 1.0) / 2.0) * style.dot_radius * 2.2;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        out,
        r##"<defs><marker id="arrow" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="#b22"/></marker></defs>"##
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let title = if style.title.is_empty() { format!("E_{}", page.r) } else { style.title.clone() };
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#, escape(&title));

    // axes and ticks
    let _ = writeln!(
        out,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        x(t_min),
        y(s_min) + 6.0,
        x(t_max),
        y(s_min) + 6.0
    );
    let tick = style.x_tick.max(1);
    let mut t = t_min.div_euclid(tick) * tick;
    while t <= t_max {
        if t >= t_min {
            let _ = writeln!(
                out,
                r#"<text class="tick" x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="9" text-anchor="middle">{t}</text>"#,
                x(t),
                y(s_min) + 20.0
            );
        }
        t += tick;
    }

    // v-multiplication lines
    for (&(t, s), cell) in &page.cells {
        if cell.reps.is_empty() {
            continue;
        }
        let next = (t + style.v_degree, s + 1);
        if page.cells.get(&next).is_some_and(|c| !c.reps.is_empty()) {
            let _ = writeln!(
                out,
                r##"<line class="vmul" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#555" stroke-width="1"/>"##,
                x(t),
                y(s),
                x(next.0),
                y(next.1)
            );
        }
    }

    // differentials
    for (&(t, s), cell) in &page.cells {
        let Some(((tt, ts), m)) = &cell.differential else { continue };
        if m.iter().all(|row| row.iter().all(|&c| c == 0)) {
            continue;
        }
        let _ = writeln!(
            out,
            r##"<line class="diff" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#b22" stroke-width="1" marker-end="url(#arrow)"><title>d{}</title></line>"##,
            x(t),
            y(s),
            x(*tt),
            y(*ts),
            page.r
        );
        let _ = writeln!(
            out,
            r##"<text class="diff-label" x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="8" fill="#b22">d{}</text>"##,
            (x(t) + x(*tt)) / 2.0 + 2.0,
            (y(s) + y(*ts)) / 2.0,
            page.r
        );
    }

    // classes
    for (&(t, s), cell) in &page.cells {
        let n = cell.reps.len();
        let fill = if cell.indeterminate { "#999" } else { "black" };
        for k in 0..n {
            let _ = writeln!(
                out,
                r#"<circle class="class" data-t="{t}" data-s="{s}" cx="{:.1}" cy="{:.1}" r="{}" fill="{fill}"/>"#,
                dot_x(t, k, n),
                y(s),
                style.dot_radius
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Number of class dots per column `t`, read back from an emitted chart.
pub fn dots_per_column(svg: &str) -> std::collections::BTreeMap<i64, usize> {
    let mut out = std::collections::BTreeMap::new();
    for line in svg.lines().filter(|l| l.starts_with("<circle class=\"class\"")) {
        let t = line
            .split("data-t=\"")
            .nth(1)
            .and_then(|rest| rest.split('"').next())
            .and_then(|v| v.parse::<i64>().ok());
        if let Some(t) = t {
            *out.entry(t).or_insert(0) += 1;
        }
    }
    out
}
