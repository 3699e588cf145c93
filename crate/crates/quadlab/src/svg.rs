//! Write-only SVG rendering of trace frames: the circle, the inscribed
//! quad, and the diagonals dashed. Output is deterministic (fixed-precision
//! coordinates) and newline-terminated.

use std::fmt::Write as _;

use crate::quad::CircleQuad;

/// Render one quad inscribed in its circle. `label` becomes the `<title>`.
pub fn quad_frame(q: &CircleQuad, label: &str) -> String {
    let r = q.diameter() / 2.0;
    let pad = 1.12 * r;
    let verts = q.vertices();
    let pts: Vec<(f64, f64)> = verts
        .iter()
        .map(|p| (p.x.to_f64(), -p.y.to_f64())) // flip y for SVG
        .collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="360" height="360">"#,
        -pad,
        -pad,
        2.0 * pad,
        2.0 * pad
    );
    let _ = writeln!(out, "  <title>{}</title>", xml_escape(label));
    let _ = writeln!(
        out,
        r##"  <circle cx="0" cy="0" r="{:.6}" fill="none" stroke="#888" stroke-width="{:.6}"/>"##,
        r,
        0.006 * r
    );
    let polygon = pts
        .iter()
        .map(|(x, y)| format!("{x:.6},{y:.6}"))
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(
        out,
        r##"  <polygon points="{}" fill="none" stroke="#1f5fa8" stroke-width="{:.6}"/>"##,
        polygon,
        0.012 * r
    );
    for (i, j) in [(0usize, 2usize), (1, 3)] {
        let _ = writeln!(
            out,
            r##"  <line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="#c0392b" stroke-width="{:.6}" stroke-dasharray="{:.6} {:.6}"/>"##,
            pts[i].0,
            pts[i].1,
            pts[j].0,
            pts[j].1,
            0.008 * r,
            0.05 * r,
            0.05 * r
        );
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn frame_is_wellformed_and_newline_terminated() {
        let q = CircleQuad::new(2.0, 0.1, [FRAC_PI_2; 4]).unwrap();
        let svg = quad_frame(&q, "step 0 <phi>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("&lt;phi&gt;"));
        assert_eq!(svg.matches("<line").count(), 2);
    }

    #[test]
    fn frames_are_deterministic() {
        let q = CircleQuad::random_convex(3, 0.05);
        assert_eq!(quad_frame(&q, "a"), quad_frame(&q, "a"));
    }
}
