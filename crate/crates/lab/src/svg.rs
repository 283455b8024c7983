//! Planar outlines as standalone SVG documents.

use std::fmt::Write;

use gaussflow_core::{Error, SupportField};

const SIZE: f64 = 400.0;

fn path_data(points: &[[f64; 2]], extent: f64) -> String {
    let scale = 0.5 * SIZE / extent;
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let (x, y) = (0.5 * SIZE + scale * p[0], 0.5 * SIZE - scale * p[1]);
        let _ = write!(d, "{}{x:.3},{y:.3} ", if i == 0 { "M" } else { "L" });
    }
    d.push('Z');
    d
}

/// Boundary points `s·u + s′·u^⊥` of a planar body.
pub fn outline(field: &SupportField) -> Result<Vec<[f64; 2]>, Error> {
    if field.dimension() != 2 {
        return Err(Error::UnsupportedDimension(field.dimension()));
    }
    Ok(field.boundary_points()?.iter().map(|p| [p.0[0], p.0[1]]).collect())
}

/// Draws `field` solid and its volume-normalized copy dashed, in a square of half-width
/// `extent` around the origin.
pub fn frame(field: &SupportField, extent: f64, caption: &str) -> Result<String, Error> {
    let body = outline(field)?;
    let normalized = outline(&field.normalize()?)?;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        svg,
        r##"<path d="{}" fill="none" stroke="#999999" stroke-width="1" stroke-dasharray="4 3"/>"##,
        path_data(&normalized, extent)
    );
    let _ = writeln!(
        svg,
        r##"<path d="{}" fill="#dde8f5" stroke="#1f4e8c" stroke-width="1.5"/>"##,
        path_data(&body, extent)
    );
    let _ = writeln!(svg, r#"<text x="8" y="18" font-family="monospace" font-size="12">{caption}</text>"#);
    svg.push_str("</svg>\n");
    Ok(svg)
}
