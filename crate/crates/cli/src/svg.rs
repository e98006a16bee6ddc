//! Minimal SVG line plots and heat maps with fixed styling, so identical
//! data always produce identical bytes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

/// Colour ramp anchors from low to high.
const RAMP: [(f64, f64, f64); 5] =
    [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Finite range of the data, widened when degenerate.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn tick_label(v: f64) -> String {
    let magnitude = v.abs();
    if magnitude != 0.0 && !(1e-3..1e4).contains(&magnitude) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn color(t: f64) -> String {
    if !t.is_finite() {
        return "#bbbbbb".to_owned();
    }
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let (a, b) = (RAMP[i], RAMP[i + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    plot_right: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (self.plot_right - LEFT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - BOTTOM - TOP)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let base = HEIGHT - BOTTOM;
    let _ = writeln!(
        out,
        "<path d=\"M{LEFT:.2} {TOP:.2} V{base:.2} H{:.2}\" fill=\"none\" stroke=\"black\"/>",
        frame.plot_right
    );
    for i in 0..TICKS {
        let t = i as f64 / (TICKS - 1) as f64;
        let xv = frame.x.0 + t * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + t * (frame.y.1 - frame.y.0);
        let (x, y) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(out, "<path d=\"M{x:.2} {base:.2} v5\" stroke=\"black\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            base + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(out, "<path d=\"M{LEFT:.2} {y:.2} h-5\" stroke=\"black\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 8.0,
            y + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (LEFT + frame.plot_right) / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
        (TOP + base) / 2.0,
        (TOP + base) / 2.0,
        escape(y_label)
    );
}

/// Line through `(x, y)` with error bars where `errors` is positive.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], errors: &[f64]) -> String {
    let frame = Frame {
        x: range(xs.iter().copied()),
        y: range(ys.iter().zip(errors).flat_map(|(y, e)| [y - e, y + e])),
        plot_right: WIDTH - RIGHT,
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    let mut path = String::new();
    for (x, y) in xs.iter().zip(ys).filter(|(x, y)| x.is_finite() && y.is_finite()) {
        let cmd = if path.is_empty() { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", frame.px(*x), frame.py(*y));
    }
    let _ = writeln!(out, "<path d=\"{}\" fill=\"none\" stroke=\"#1f4e99\" stroke-width=\"1.5\"/>", path.trim_end());
    for ((x, y), e) in xs.iter().zip(ys).zip(errors) {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let (cx, cy) = (frame.px(*x), frame.py(*y));
        if *e > 0.0 {
            let _ = writeln!(
                out,
                "<path d=\"M{cx:.2} {:.2} V{:.2}\" stroke=\"#1f4e99\"/>",
                frame.py(y - e),
                frame.py(y + e)
            );
        }
        let _ = writeln!(out, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2.5\" fill=\"#1f4e99\"/>");
    }
    out.push_str("</svg>\n");
    out
}

/// Heat map of `values[i * ys.len() + j]` at `(xs[i], ys[j])`, with a colour
/// bar.
pub fn heat_map(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[f64]) -> String {
    assert_eq!(values.len(), xs.len() * ys.len());
    let bar = 60.0;
    let frame = Frame { x: range(xs.iter().copied()), y: range(ys.iter().copied()), plot_right: WIDTH - RIGHT - bar };
    let (lo, hi) = range(values.iter().copied());
    let mut out = String::new();
    open(&mut out, title);
    // Cells span half-way to their neighbours.
    let edges = |grid: &[f64], k: usize| -> (f64, f64) {
        let n = grid.len();
        if n == 1 {
            let span = 0.5 * (grid[0].abs().max(1.0));
            return (grid[0] - span, grid[0] + span);
        }
        let left = if k == 0 { grid[0] - 0.5 * (grid[1] - grid[0]) } else { 0.5 * (grid[k - 1] + grid[k]) };
        let right =
            if k + 1 == n { grid[n - 1] + 0.5 * (grid[n - 1] - grid[n - 2]) } else { 0.5 * (grid[k] + grid[k + 1]) };
        (left, right)
    };
    let frame = Frame {
        x: if xs.len() == 1 { edges(xs, 0) } else { (edges(xs, 0).0, edges(xs, xs.len() - 1).1) },
        y: if ys.len() == 1 { edges(ys, 0) } else { (edges(ys, 0).0, edges(ys, ys.len() - 1).1) },
        ..frame
    };
    for i in 0..xs.len() {
        let (x0, x1) = edges(xs, i);
        for j in 0..ys.len() {
            let (y0, y1) = edges(ys, j);
            let v = values[i * ys.len() + j];
            let (px0, px1) = (frame.px(x0), frame.px(x1));
            let (py0, py1) = (frame.py(y1), frame.py(y0));
            let _ = writeln!(
                out,
                "<rect x=\"{px0:.2}\" y=\"{py0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                (px1 - px0).abs() + 0.3,
                (py1 - py0).abs() + 0.3,
                color((v - lo) / (hi - lo))
            );
        }
    }
    axes(&mut out, &frame, x_label, y_label);
    let bar_left = WIDTH - RIGHT - bar + 20.0;
    let steps = 64;
    let span = HEIGHT - BOTTOM - TOP;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let y = HEIGHT - BOTTOM - (k + 1) as f64 * span / steps as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{bar_left:.2}\" y=\"{y:.2}\" width=\"14\" height=\"{:.2}\" fill=\"{}\"/>",
            span / steps as f64 + 0.3,
            color(t)
        );
    }
    let _ = writeln!(out, "<text x=\"{bar_left:.2}\" y=\"{:.2}\">{}</text>", TOP - 6.0, tick_label(hi));
    let _ = writeln!(out, "<text x=\"{bar_left:.2}\" y=\"{:.2}\">{}</text>", HEIGHT - BOTTOM + 16.0, tick_label(lo));
    out.push_str("</svg>\n");
    out
}
