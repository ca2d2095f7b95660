//! Minimal SVG scatter plot of return-map samples on the unit disk.

use std::fmt::Write;

use reebkit::report::format_float;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

fn to_px(u: [f64; 2]) -> (f64, f64) {
    let s = 0.5 * SIZE - MARGIN;
    (0.5 * SIZE + s * u[0], 0.5 * SIZE - s * u[1])
}

fn cartesian((r, theta): (f64, f64)) -> [f64; 2] {
    [r * theta.cos(), r * theta.sin()]
}

/// A page point and its image, both as `(r, θ)`.
pub type Pair = ((f64, f64), (f64, f64));

/// Pairs of `(start, image)` in polar page coordinates, drawn as blue starts, red
/// images and a faint segment between them.
pub fn scatter(title: &str, pairs: &[Pair]) -> String {
    let f = format_float;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        f(SIZE)
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (cx, cy) = to_px([0.0, 0.0]);
    let _ = writeln!(
        s,
        r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        f(cx),
        f(cy),
        f(0.5 * SIZE - MARGIN)
    );
    for &(a, b) in pairs {
        let (x0, y0) = to_px(cartesian(a));
        let (x1, y1) = to_px(cartesian(b));
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbbbbb" stroke-width="0.5"/>"##,
            f(x0),
            f(y0),
            f(x1),
            f(y1)
        );
    }
    for (colour, pick) in [("#1f5fbf", 0usize), ("#c8281e", 1)] {
        for &(a, b) in pairs {
            let (x, y) = to_px(cartesian(if pick == 0 { a } else { b }));
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="2.5" fill="{colour}"/>"#,
                f(x),
                f(y)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
