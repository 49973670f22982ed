//! Static line plots written as SVG documents.

use std::path::Path;

use svg::node::element::path::Data;
use svg::node::element::{Line, Path as SvgPath, Rectangle, Text};
use svg::Document;

use crate::error::{io_err, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts = series
        .iter()
        .flat_map(|s| s.x.iter().zip(s.y))
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let mut b: Option<(f64, f64, f64, f64)> = None;
    for (&x, &y) in pts {
        b = Some(match b {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        });
    }
    b.map(|(x0, x1, y0, y1)| {
        let pad = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0)) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    })
}

fn label(x: f64) -> String {
    format!("{x:.4}")
}

fn text(x: f64, y: f64, anchor: &str, content: String) -> Text {
    Text::new(content)
        .set("x", x)
        .set("y", y)
        .set("text-anchor", anchor)
        .set("font-family", "sans-serif")
        .set("font-size", 12)
}

/// Render the series on shared linear axes; non-finite points are skipped.
pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> Document {
    let (x0, x1, y0, y1) = bounds(series).unwrap_or((0.0, 1.0, 0.0, 1.0));
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut doc = Document::new()
        .set("xmlns", "http://www.w3.org/2000/svg")
        .set("width", WIDTH)
        .set("height", HEIGHT)
        .set("viewBox", (0, 0, WIDTH, HEIGHT))
        .add(Rectangle::new().set("width", WIDTH).set("height", HEIGHT).set("fill", "white"))
        .add(
            Rectangle::new()
                .set("x", MARGIN)
                .set("y", MARGIN)
                .set("width", pw)
                .set("height", ph)
                .set("fill", "none")
                .set("stroke", "black"),
        )
        .add(text(WIDTH / 2.0, MARGIN / 2.0, "middle", title.to_string()))
        .add(text(WIDTH / 2.0, HEIGHT - 15.0, "middle", xlabel.to_string()))
        .add(text(15.0, HEIGHT / 2.0, "middle", ylabel.to_string()).set("transform", format!("rotate(-90 15 {})", HEIGHT / 2.0)));

    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        doc = doc
            .add(Line::new().set("x1", sx(xv)).set("x2", sx(xv)).set("y1", HEIGHT - MARGIN).set("y2", HEIGHT - MARGIN + 5.0).set("stroke", "black"))
            .add(text(sx(xv), HEIGHT - MARGIN + 18.0, "middle", label(xv)))
            .add(Line::new().set("x1", MARGIN - 5.0).set("x2", MARGIN).set("y1", sy(yv)).set("y2", sy(yv)).set("stroke", "black"))
            .add(text(MARGIN - 8.0, sy(yv) + 4.0, "end", label(yv)));
    }

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut data = Data::new();
        let mut pen_down = false;
        for (&x, &y) in s.x.iter().zip(s.y) {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            data = if pen_down { data.line_to((sx(x), sy(y))) } else { data.move_to((sx(x), sy(y))) };
            pen_down = true;
        }
        doc = doc
            .add(SvgPath::new().set("d", data).set("fill", "none").set("stroke", color).set("stroke-width", 1.5))
            .add(text(WIDTH - MARGIN - 5.0, MARGIN + 16.0 * (i as f64 + 1.0), "end", s.label.to_string()).set("fill", color));
    }
    doc
}

pub fn save(path: &Path, doc: &Document) -> Result<()> {
    std::fs::write(path, format!("{doc}\n")).map_err(io_err(path))
}
