//! CSV tables and SVG figures. Both are plain functions of their inputs so
//! identical runs give identical bytes.

use std::fmt::Write as _;

use super::{AnnealSummary, CliError, RotsetSummary};

/// First line of every anneal trace CSV.
pub const ANNEAL_CSV_HEADER: &str = "# rotset-anneal-csv v1";
/// First line of every polygon CSV (followed by the degenerate flag).
pub const ROTSET_CSV_HEADER: &str = "# rotset-polygon-csv v1";

/// Shortest round-trip text, in exponent form for very small or large values.
pub(super) fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}

pub fn anneal_csv(s: &AnnealSummary) -> Result<String, CliError> {
    let m = s.limit_rv.len();
    let mut out = format!("{ANNEAL_CSV_HEADER}\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|i| format!("rv{i}")));
    header.extend(["entropy", "pressure", "distance"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for p in &s.trace {
        let mut row = vec![num(p.t)];
        row.extend(p.rv.iter().map(|&x| num(x)));
        row.extend([p.entropy, p.pressure, p.distance].map(num));
        w.write_record(&row).map_err(csv_err)?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

pub fn rotset_csv(s: &RotsetSummary) -> Result<String, CliError> {
    let mut out = format!(
        "{ROTSET_CSV_HEADER} kind={} degenerate={}\n",
        s.kind, s.degenerate
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "x", "y", "label"])
        .map_err(csv_err)?;
    for (i, v) in s.vertices.iter().enumerate() {
        w.write_record([
            i.to_string(),
            num(v.x),
            num(v.y),
            v.label.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.push_str(&finish(w)?);
    Ok(out)
}

const SIZE: f64 = 640.0;
const MARGIN: f64 = 60.0;

/// Affine map from data coordinates to the SVG canvas (y up).
struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    fn fit(points: &[[f64; 2]]) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if points.is_empty() {
            lo = [0.0; 2];
            hi = [1.0; 2];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        // center the smaller extent
        let x0 = lo[0] - ((SIZE - 2.0 * MARGIN) / scale - (hi[0] - lo[0])) / 2.0;
        let y0 = lo[1] - ((SIZE - 2.0 * MARGIN) / scale - (hi[1] - lo[1])) / 2.0;
        Self { x0, y0, scale }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.x0) * self.scale,
            SIZE - MARGIN - (p[1] - self.y0) * self.scale,
        )
    }
}

fn open_svg(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
         viewBox=\"0 0 {SIZE} {SIZE}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn polygon_path(svg: &mut String, f: &Frame, vertices: &[[f64; 2]]) {
    let pts: Vec<String> = vertices
        .iter()
        .map(|&v| {
            let (x, y) = f.map(v);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        svg,
        "<polygon points=\"{}\" fill=\"#dde8f5\" stroke=\"#2b5d8a\" stroke-width=\"1.2\"/>",
        pts.join(" ")
    );
}

fn vertex_marks(svg: &mut String, f: &Frame, vertices: &[([f64; 2], Option<String>)]) {
    for (v, label) in vertices {
        let (x, y) = f.map(*v);
        let _ = writeln!(
            svg,
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"3\" fill=\"#2b5d8a\"/>"
        );
        if let Some(l) = label {
            let _ = writeln!(
                svg,
                "<text x=\"{:.3}\" y=\"{:.3}\">{}</text>",
                x + 5.0,
                y - 5.0,
                escape(l)
            );
        }
    }
}

pub fn rotset_svg(s: &RotsetSummary) -> String {
    let verts: Vec<[f64; 2]> = s.vertices.iter().map(|v| [v.x, v.y]).collect();
    let mut all = verts.clone();
    all.extend(s.predictions.iter().map(|p| [p.x, p.y]));
    let f = Frame::fit(&all);
    let mut svg = open_svg(&format!("rotation set, periods up to {}", s.max_period));
    polygon_path(&mut svg, &f, &verts);
    for p in &s.predictions {
        let (x, y) = f.map([p.x, p.y]);
        let _ = writeln!(
            svg,
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"5\" fill=\"none\" stroke=\"#c0392b\"/>"
        );
    }
    let marks: Vec<_> = s
        .vertices
        .iter()
        .map(|v| ([v.x, v.y], v.label.clone()))
        .collect();
    vertex_marks(&mut svg, &f, &marks);
    svg.push_str("</svg>\n");
    svg
}

pub fn anneal_svg(s: &AnnealSummary) -> String {
    let rv: Vec<[f64; 2]> = s.trace.iter().map(|p| [p.rv[0], p.rv[1]]).collect();
    let poly = s.polygon.clone().unwrap_or_default();
    let mut all = poly.clone();
    all.extend(&rv);
    let f = Frame::fit(&all);
    let mut svg = open_svg("rotation vectors of equilibrium states along the schedule");
    if !poly.is_empty() {
        polygon_path(&mut svg, &f, &poly);
    }
    let pts: Vec<String> = rv
        .iter()
        .map(|&p| {
            let (x, y) = f.map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.2\"/>",
        pts.join(" ")
    );
    // label the ends only; the tail of the trace piles up on the face
    let n = rv.len();
    let marks: Vec<_> = s
        .trace
        .iter()
        .zip(&rv)
        .enumerate()
        .map(|(k, (p, &v))| (v, (k == 0 || k + 1 == n).then(|| format!("t={}", p.t))))
        .collect();
    vertex_marks(&mut svg, &f, &marks);
    svg.push_str("</svg>\n");
    svg
}
