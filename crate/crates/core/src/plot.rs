//! SVG rendering of the zero-level lines of noun predicates in a 2-D pixie space.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::fdsmodel::FdsParams;

/// Half-width of the visible region in pixie coordinates.
const EXTENT: f64 = 1.5;
const SCALE: f64 = 200.0;
const ARROW: f64 = 0.15;

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroLine {
    pub label: String,
    pub from: [f64; 2],
    pub to: [f64; 2],
    /// Unit normal pointing towards the true side.
    pub normal: [f64; 2],
}

/// Segment of `v·z + b = 0` inside the visible square, `None` if degenerate or outside.
pub fn zero_line(v: [f64; 2], b: f64) -> Option<([f64; 2], [f64; 2])> {
    let norm = v[0].hypot(v[1]);
    if norm < 1e-12 {
        return None;
    }
    let mut hits: Vec<[f64; 2]> = Vec::new();
    let mut push = |p: [f64; 2]| {
        let inside = p.iter().all(|c| c.abs() <= EXTENT + 1e-9);
        if inside && !hits.iter().any(|q| (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9) {
            hits.push(p);
        }
    };
    for e in [-EXTENT, EXTENT] {
        if v[1].abs() > 1e-12 {
            push([e, -(b + v[0] * e) / v[1]]);
        }
        if v[0].abs() > 1e-12 {
            push([-(b + v[1] * e) / v[0], e]);
        }
    }
    if hits.len() < 2 {
        return None;
    }
    hits.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    Some((hits[0], hits[hits.len() - 1]))
}

/// Drawable lines for every noun predicate, in vocabulary order.
pub fn zero_lines(params: &FdsParams) -> Result<Vec<ZeroLine>> {
    if params.d() != 2 {
        return Err(Error::InvalidArgument(format!("plotting needs d = 2, checkpoint has d = {}", params.d())));
    }
    let mut out = Vec::new();
    for &r in params.vocab.nouns() {
        let (v, b) = params.unary(r);
        let v = [v[0], v[1]];
        let name = params.vocab.name(r);
        let Some((from, to)) = zero_line(v, b) else {
            log::warn!("zero-level line of `{name}` is degenerate or outside the view");
            continue;
        };
        let n = v[0].hypot(v[1]);
        out.push(ZeroLine { label: name.to_string(), from, to, normal: [v[0] / n, v[1] / n] });
    }
    Ok(out)
}

fn px(p: [f64; 2]) -> (f64, f64) {
    ((p[0] + EXTENT) * SCALE, (EXTENT - p[1]) * SCALE)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(lines: &[ZeroLine]) -> String {
    let size = 2.0 * EXTENT * SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" data-lines="{}">"#,
        lines.len()
    );
    s.push_str(r#"<defs><marker id="head" markerWidth="8" markerHeight="8" refX="6" refY="4" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="black"/></marker></defs>"#);
    s.push('\n');
    let (x0, y0) = px([-1.0, 1.0]);
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{x0}" y="{y0}" width="{w}" height="{w}" fill="none" stroke="black"/>"#,
        w = 2.0 * SCALE
    );
    let (cx, cy) = px([0.0, 0.0]);
    let _ = writeln!(s, r#"<circle class="unit" cx="{cx}" cy="{cy}" r="{SCALE}" fill="none" stroke="grey"/>"#);
    for l in lines {
        let (ax, ay) = px(l.from);
        let (bx, by) = px(l.to);
        let _ = writeln!(
            s,
            r#"<line class="zero-level" x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="steelblue"/>"#
        );
        let mid = [(l.from[0] + l.to[0]) / 2.0, (l.from[1] + l.to[1]) / 2.0];
        let tip = [mid[0] + ARROW * l.normal[0], mid[1] + ARROW * l.normal[1]];
        let (mx, my) = px(mid);
        let (tx, ty) = px(tip);
        let _ = writeln!(
            s,
            r#"<path class="normal" d="M{mx:.2},{my:.2} L{tx:.2},{ty:.2}" stroke="black" marker-end="url(#head)"/>"#
        );
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{ty:.2}" font-size="12">{}</text>"#, escape(&l.label));
    }
    s.push_str("</svg>\n");
    s
}

pub fn plot2d(params: &FdsParams) -> Result<String> {
    Ok(render_svg(&zero_lines(params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpusgen::gen_dih;
    use crate::fdsmodel::EncoderConfig;
    use crate::graphdata::from_corpus;
    use crate::hierarchy::example_animals;

    fn params(d: usize) -> FdsParams {
        let (vocab, _) = from_corpus(&gen_dih(&example_animals())).unwrap();
        FdsParams::zeros(vocab, d, EncoderConfig::default())
    }

    #[test]
    fn vertical_line_through_origin() {
        let (a, b) = zero_line([1.0, 0.0], 0.0).unwrap();
        assert_eq!(a, [0.0, -EXTENT]);
        assert_eq!(b, [0.0, EXTENT]);
        let mut p = params(2);
        let dog = p.vocab.lookup("dog").unwrap();
        p.set_unary(dog, &[1.0, 0.0], 0.0);
        let lines = zero_lines(&p).unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].normal, [1.0, 0.0]);
        assert_eq!(lines[0].label, "dog");
    }

    #[test]
    fn zero_checkpoint_draws_frame_only() {
        let svg = plot2d(&params(2)).unwrap();
        assert!(svg.contains("<rect") && svg.contains("<circle"));
        assert_eq!(svg.matches("<line").count(), 0);
        assert!(svg.contains(r#"data-lines="0""#));
    }

    #[test]
    fn far_lines_and_wrong_dimension() {
        assert!(zero_line([1.0, 0.0], 5.0).is_none());
        assert!(zero_line([1.0, 1.0], 0.0).is_some());
        assert!(matches!(plot2d(&params(3)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn labels_are_escaped() {
        let l = ZeroLine { label: "a<b&c".into(), from: [0.0, -1.0], to: [0.0, 1.0], normal: [1.0, 0.0] };
        let svg = render_svg(&[l]);
        assert!(svg.contains("a&lt;b&amp;c"));
        assert_eq!(svg.matches("<line").count(), 1);
    }
}
