//! Deterministic SVG drawings of circle diagrams and surgery traces.
//!
//! Every coordinate is an integer, so equal inputs give byte-identical
//! output. Vertices sit on a number line with fixed spacing, arcs are half
//! ellipses whose height grows with their span, rays are vertical segments.

use std::fmt::Write;

use crate::arcalg::TracePanel;
use crate::diagrams::{CupDiagram, Label, OrientedCircleDiagram};

const SPACING: i64 = 40;
const MARGIN: i64 = 30;
const ARC_UNIT: i64 = 12;
const RAY: i64 = 30;
const CAPTION: i64 = 24;

fn vx(i: usize) -> i64 {
    MARGIN + SPACING * i as i64
}

fn width_for(size: usize) -> i64 {
    2 * MARGIN + SPACING * (size.max(1) as i64 - 1)
}

fn max_span(d: &CupDiagram) -> i64 {
    d.cups().iter().map(|&(i, j)| (j - i) as i64).max().unwrap_or(0)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, w: i64, h: i64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<g fill="none" stroke="black" stroke-width="2" font-family="serif" font-size="18">"#);
}

fn close(out: &mut String) {
    out.push_str("</g>\n</svg>\n");
}

/// Arcs of `d` on the line at height `y`, below it if `down`.
fn arcs(out: &mut String, d: &CupDiagram, dx: i64, y: i64, down: bool, class: &str) {
    let sweep = if down { 0 } else { 1 };
    for (i, j) in d.cups() {
        let (a, b) = (dx + vx(i), dx + vx(j));
        let rx = (b - a) / 2;
        let ry = ARC_UNIT * (j - i) as i64;
        let _ = writeln!(out, r#"<path class="{class}" d="M {a} {y} A {rx} {ry} 0 0 {sweep} {b} {y}"/>"#);
    }
}

fn rays(out: &mut String, d: &CupDiagram, dx: i64, y: i64, len: i64) {
    for r in d.rays() {
        let x = dx + vx(r);
        let _ = writeln!(out, r#"<line class="ray" x1="{x}" y1="{y}" x2="{x}" y2="{}"/>"#, y + len);
    }
}

fn number_line(out: &mut String, size: usize, dx: i64, y: i64) {
    let _ = writeln!(
        out,
        r#"<line class="axis" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="gray" stroke-width="1"/>"#,
        dx + MARGIN / 2,
        dx + width_for(size) - MARGIN / 2
    );
}

fn labels(out: &mut String, ls: &[Label], dx: i64, y: i64) {
    for (i, l) in ls.iter().enumerate() {
        let x = dx + vx(i);
        let (sym, yy) = match l {
            Label::Up => ("\u{2227}", y + 6),
            Label::Down => ("\u{2228}", y + 6),
        };
        let _ = writeln!(
            out,
            r#"<text class="label" x="{x}" y="{yy}" text-anchor="middle" stroke="none" fill="black">{sym}</text>"#
        );
    }
}

fn caption(out: &mut String, text: &str, x: i64, y: i64) {
    let _ = writeln!(
        out,
        r#"<text class="caption" x="{x}" y="{y}" text-anchor="middle" stroke="none" fill="black" font-size="14">{}</text>"#,
        escape(text)
    );
}

/// One oriented circle diagram `aλb`.
pub fn render_diagram(d: &OrientedCircleDiagram) -> String {
    let size = d.weight.len();
    let below = ARC_UNIT * max_span(&d.cup).max(1) + RAY;
    let above = ARC_UNIT * max_span(&d.cap).max(1) + RAY;
    let y = MARGIN + above;
    let w = width_for(size);
    let h = y + below + MARGIN;
    let mut out = String::new();
    open(&mut out, w, h);
    number_line(&mut out, size, 0, y);
    arcs(&mut out, &d.cup, 0, y, true, "cup");
    rays(&mut out, &d.cup, 0, y, RAY + ARC_UNIT);
    arcs(&mut out, &d.cap, 0, y, false, "cap");
    rays(&mut out, &d.cap, 0, y, -(RAY + ARC_UNIT));
    labels(&mut out, d.weight.labels(), 0, y);
    close(&mut out);
    out
}

/// Geometry of one stacked diagram: two number lines, the middle section
/// between them.
struct Stacked<'a> {
    bottom: &'a CupDiagram,
    top: &'a CupDiagram,
    middle: &'a [Option<usize>],
}

impl Stacked<'_> {
    fn middle_span(&self) -> i64 {
        (0..self.middle.len())
            .filter_map(|i| self.middle[i].filter(|&j| j > i).map(|j| (j - i) as i64))
            .max()
            .unwrap_or(0)
    }

    fn height(&self) -> i64 {
        let gap = 2 * ARC_UNIT * self.middle_span() + 2 * ARC_UNIT;
        ARC_UNIT * max_span(self.top) + RAY + gap + ARC_UNIT * max_span(self.bottom) + RAY
    }

    /// Draws at horizontal offset `dx` with the top of the drawing at `y`.
    fn draw(&self, out: &mut String, dx: i64, y: i64, l0: &[Label], l1: &[Label]) {
        let gap = 2 * ARC_UNIT * self.middle_span() + 2 * ARC_UNIT;
        let y1 = y + ARC_UNIT * max_span(self.top) + RAY;
        let y0 = y1 + gap;
        let size = self.middle.len();
        number_line(out, size, dx, y0);
        number_line(out, size, dx, y1);
        arcs(out, self.bottom, dx, y0, true, "cup");
        rays(out, self.bottom, dx, y0, RAY);
        arcs(out, self.top, dx, y1, false, "cap");
        rays(out, self.top, dx, y1, -RAY);
        for i in 0..size {
            let x = dx + vx(i);
            match self.middle[i] {
                Some(j) if j > i => {
                    let b = dx + vx(j);
                    let rx = (b - x) / 2;
                    let ry = ARC_UNIT * (j - i) as i64;
                    let _ = writeln!(out, r#"<path class="mid" d="M {x} {y0} A {rx} {ry} 0 0 1 {b} {y0}"/>"#);
                    let _ = writeln!(out, r#"<path class="mid" d="M {x} {y1} A {rx} {ry} 0 0 0 {b} {y1}"/>"#);
                }
                Some(_) => {}
                None => {
                    let _ = writeln!(out, r#"<line class="mid" x1="{x}" y1="{y1}" x2="{x}" y2="{y0}"/>"#);
                }
            }
        }
        labels(out, l0, dx, y0);
        labels(out, l1, dx, y1);
    }
}

/// A surgery trace: one panel per step, left to right, followed by the
/// result with the two number lines identified. Each panel lists its
/// summands top to bottom and is captioned with the rule that produced it.
pub fn render_trace(panels: &[TracePanel]) -> String {
    let size = panels.first().map_or(1, |p| p.middle.len());
    let pw = width_for(size);
    let mut cols: Vec<(i64, String)> = Vec::new();
    let mut body = String::new();
    let mut heights = Vec::new();
    for (k, p) in panels.iter().enumerate() {
        let st = Stacked { bottom: &p.bottom, top: &p.top, middle: &p.middle };
        let dx = k as i64 * pw;
        let _ = writeln!(body, r#"<g class="panel" id="panel-{k}">"#);
        let mut y = MARGIN;
        for (l0, l1, c) in &p.terms {
            st.draw(&mut body, dx, y, l0, l1);
            caption(&mut body, &coefficient(*c), dx + MARGIN / 2, y + st.height() / 2);
            y += st.height() + MARGIN;
        }
        if p.terms.is_empty() {
            caption(&mut body, "0", dx + pw / 2, y + CAPTION);
            y += CAPTION + MARGIN;
        }
        body.push_str("</g>\n");
        heights.push(y);
        cols.push((dx + pw / 2, p.rule.clone().unwrap_or_else(|| "start".to_string())));
    }
    if let Some(last) = panels.last() {
        let k = panels.len();
        let dx = k as i64 * pw;
        let _ = writeln!(body, r#"<g class="panel" id="panel-{k}">"#);
        let below = ARC_UNIT * max_span(&last.bottom) + RAY;
        let above = ARC_UNIT * max_span(&last.top) + RAY;
        let mut y = MARGIN;
        for (l0, _, c) in &last.terms {
            let line = y + above;
            number_line(&mut body, size, dx, line);
            arcs(&mut body, &last.bottom, dx, line, true, "cup");
            rays(&mut body, &last.bottom, dx, line, RAY);
            arcs(&mut body, &last.top, dx, line, false, "cap");
            rays(&mut body, &last.top, dx, line, -RAY);
            labels(&mut body, l0, dx, line);
            caption(&mut body, &coefficient(*c), dx + MARGIN / 2, line);
            y = line + below + MARGIN;
        }
        if last.terms.is_empty() {
            caption(&mut body, "0", dx + pw / 2, y + CAPTION);
            y += CAPTION + MARGIN;
        }
        body.push_str("</g>\n");
        heights.push(y);
        cols.push((dx + pw / 2, "result".to_string()));
    }
    let h = heights.iter().copied().max().unwrap_or(MARGIN) + CAPTION;
    let w = pw * cols.len().max(1) as i64;
    let mut out = String::new();
    open(&mut out, w, h);
    out.push_str(&body);
    for (x, text) in cols {
        caption(&mut out, &text, x, h - CAPTION / 2);
    }
    close(&mut out);
    out
}

fn coefficient(c: i64) -> String {
    match c {
        1 => String::new(),
        -1 => "-".to_string(),
        c => c.to_string(),
    }
}

/// Number of panels in a rendered trace.
pub fn panel_count(svg: &str) -> usize {
    svg.matches(r#"class="panel""#).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcalg::{AlgebraElement, Block};
    use crate::diagrams::{associated_cap_diagram, associated_cup_diagram, Weight};

    fn e(w: &str) -> OrientedCircleDiagram {
        let w: Weight = w.parse().unwrap();
        OrientedCircleDiagram::new(associated_cup_diagram(&w), w.clone(), associated_cap_diagram(&w)).unwrap()
    }

    #[test]
    fn idempotent_has_one_cup_one_cap_two_labels() {
        let circle = CupDiagram::new(2, &[(0, 1)]).unwrap();
        let clockwise = OrientedCircleDiagram::new(circle.clone(), "^v".parse().unwrap(), circle).unwrap();
        for svg in [render_diagram(&e("v^")), render_diagram(&clockwise)] {
        assert_eq!(svg.matches(r#"class="cup""#).count(), 1);
        assert_eq!(svg.matches(r#"class="cap""#).count(), 1);
        assert_eq!(svg.matches(r#"class="label""#).count(), 2);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains(r#"viewBox="0 0 "#));
        }
    }

    #[test]
    fn arc_height_grows_with_span() {
        let svg = render_diagram(&e("vv^^"));
        assert!(svg.contains(" A 20 12 0 0 0 "));
        assert!(svg.contains(" A 60 36 0 0 0 "));
    }

    fn figure_trace() -> Vec<TracePanel> {
        let blk = Block::get(3, 2);
        let a = CupDiagram::new(5, &[(0, 3), (1, 2)]).unwrap();
        let b = CupDiagram::new(5, &[(1, 2), (3, 4)]).unwrap();
        let w: Weight = "vv^^v".parse().unwrap();
        let x = blk.from_diagram(&OrientedCircleDiagram::new(a.clone(), w.clone(), b.clone()).unwrap()).unwrap();
        let y = blk.from_diagram(&OrientedCircleDiagram::new(b, w, a).unwrap()).unwrap();
        assert!(!blk.multiply(&AlgebraElement::basis(x), &AlgebraElement::basis(y)).is_zero());
        blk.surgery_trace(x, y)
    }

    #[test]
    fn figure_trace_has_four_panels() {
        let svg = render_trace(&figure_trace());
        assert_eq!(panel_count(&svg), 4);
        assert!(svg.contains("merge") || svg.contains("split"));
        assert!(svg.contains(">result<"));
    }

    #[test]
    fn output_is_byte_identical() {
        assert_eq!(render_trace(&figure_trace()), render_trace(&figure_trace()));
        assert_eq!(render_diagram(&e("v^v^")), render_diagram(&e("v^v^")));
    }

    #[test]
    fn golden_idempotent() {
        let expect = r##"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="100" height="144" viewBox="0 0 100 144">
<rect x="0" y="0" width="100" height="144" fill="white"/>
<g fill="none" stroke="black" stroke-width="2" font-family="serif" font-size="18">
<line class="axis" x1="15" y1="72" x2="85" y2="72" stroke="gray" stroke-width="1"/>
<path class="cup" d="M 30 72 A 20 12 0 0 0 70 72"/>
<path class="cap" d="M 30 72 A 20 12 0 0 1 70 72"/>
<text class="label" x="30" y="78" text-anchor="middle" stroke="none" fill="black">∨</text>
<text class="label" x="70" y="78" text-anchor="middle" stroke="none" fill="black">∧</text>
</g>
</svg>
"##;
        assert_eq!(render_diagram(&e("v^")), expect);
    }
}
