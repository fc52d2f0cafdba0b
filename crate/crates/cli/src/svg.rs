//! Minimal static SVG plots: axes, polylines, shaded bands and heat cells.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub const FORWARD: &str = "#1f5fa8";
pub const BACKWARD: &str = "#d1495b";
pub const NEUTRAL: &str = "#333333";
pub const BAND: &str = "#f2c14e";

#[derive(Debug, Clone)]
enum Item {
    Line {
        points: Vec<(f64, f64)>,
        color: String,
        width: f64,
    },
    Band {
        x0: f64,
        x1: f64,
        color: String,
    },
    HLine {
        y: f64,
        color: String,
    },
    Cell {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        color: String,
    },
}

#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
    comments: Vec<String>,
    items: Vec<Item>,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * (lo.abs() + hi.abs()).max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

impl Plot {
    pub fn new(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: nice_range(x_range.0, x_range.1),
            y_range: nice_range(y_range.0, y_range.1),
            comments: Vec::new(),
            items: Vec::new(),
        }
    }

    pub fn comment(&mut self, text: impl Into<String>) {
        self.comments.push(text.into().replace("--", "- -"));
    }

    pub fn line(&mut self, points: Vec<(f64, f64)>, color: &str) {
        if points.len() >= 2 {
            self.items.push(Item::Line {
                points,
                color: color.into(),
                width: 1.5,
            });
        }
    }

    /// Vertical band over `x0..x1` spanning the full height.
    pub fn band(&mut self, x0: f64, x1: f64, color: &str) {
        self.items.push(Item::Band {
            x0,
            x1,
            color: color.into(),
        });
    }

    pub fn hline(&mut self, y: f64, color: &str) {
        self.items.push(Item::HLine {
            y,
            color: color.into(),
        });
    }

    pub fn cell(&mut self, x: (f64, f64), y: (f64, f64), color: String) {
        self.items.push(Item::Cell {
            x0: x.0,
            x1: x.1,
            y0: y.0,
            y1: y.1,
            color,
        });
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN
            - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * (HEIGHT - 2.0 * MARGIN)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        for c in &self.comments {
            let _ = writeln!(s, "<!-- {c} -->");
        }
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let (top, bottom) = (self.py(self.y_range.1), self.py(self.y_range.0));
        let (left, right) = (self.px(self.x_range.0), self.px(self.x_range.1));
        for item in &self.items {
            match item {
                Item::Band { x0, x1, color } => {
                    let (a, b) = (self.px(*x0).max(left), self.px(*x1).min(right));
                    let _ = writeln!(
                        s,
                        r#"<rect class="band" x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35"/>"#,
                        (b - a).max(0.0),
                        bottom - top
                    );
                }
                Item::Cell {
                    x0,
                    x1,
                    y0,
                    y1,
                    color,
                } => {
                    let (a, b) = (self.px(*x0), self.px(*x1));
                    let (c, d) = (self.py(*y1), self.py(*y0));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{a:.2}" y="{c:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                        (b - a).abs(),
                        (d - c).abs()
                    );
                }
                _ => {}
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        );
        for i in 0..=4 {
            let u = i as f64 / 4.0;
            let xv = self.x_range.0 + u * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + u * (self.y_range.1 - self.y_range.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                self.px(xv),
                bottom + 18.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                left - 6.0,
                self.py(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        for item in &self.items {
            match item {
                Item::Line {
                    points,
                    color,
                    width,
                } => {
                    let mut d = String::new();
                    for (i, &(x, y)) in points.iter().enumerate() {
                        let _ = write!(
                            d,
                            "{}{:.2},{:.2}",
                            if i == 0 { "" } else { " " },
                            self.px(x),
                            self.py(y)
                        );
                    }
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{d}" fill="none" stroke="{color}" stroke-width="{width}"/>"#
                    );
                }
                Item::HLine { y, color } => {
                    let yy = self.py(*y);
                    let _ = writeln!(
                        s,
                        r#"<line x1="{left:.2}" y1="{yy:.2}" x2="{right:.2}" y2="{yy:.2}" stroke="{color}" stroke-dasharray="6 4"/>"#
                    );
                }
                _ => {}
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Diverging colour: blue for negative, white at zero, red for positive.
pub fn diverging(v: f64, scale: f64) -> String {
    let u = if scale > 0.0 {
        (v / scale).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let (r, g, b) = if u >= 0.0 {
        (255.0, 255.0 * (1.0 - u), 255.0 * (1.0 - u))
    } else {
        (255.0 * (1.0 + u), 255.0 * (1.0 + u), 255.0)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        r.round() as u8,
        g.round() as u8,
        b.round() as u8
    )
}
