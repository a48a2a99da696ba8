//! Static line charts, written by hand so output bytes depend only on the
//! input numbers. One fixed canvas, one fixed palette, no text escaping
//! beyond the basics (labels come from validated variant names).

use std::fmt::Write;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Trailing mean with an expanding warm-up, the usual presentation for
/// noisy RL curves.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (t, v) in values.iter().enumerate() {
        sum += v;
        if t >= window {
            sum -= values[t - window];
        }
        let n = (t + 1).min(window);
        out.push(sum / n as f64);
    }
    out
}

/// Fixed decimal places keep the byte stream independent of value
/// magnitude quirks.
fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.into()
    }
}

fn tick_label(x: f64) -> String {
    if x.abs() >= 100.0 {
        format!("{x:.0}")
    } else if x.abs() >= 1.0 {
        num((x * 100.0).round() / 100.0)
    } else {
        num((x * 10000.0).round() / 10000.0)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (mut x_min, mut x_max) = (f64::MAX, f64::MIN);
    let (mut y_min, mut y_max) = (f64::MAX, f64::MIN);
    for s in series {
        for (x, y) in &s.points {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
    }
    if x_min > x_max {
        x_min = 0.0;
        x_max = 1.0;
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    if y_max == y_min {
        y_max = y_min + 1.0;
        y_min -= 1.0;
    }
    // Five percent headroom so curves stay off the frame.
    let pad = (y_max - y_min) * 0.05;
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_T + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n",
        num(WIDTH),
        num(HEIGHT)
    );
    let _ = write!(
        svg,
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        num(WIDTH),
        num(HEIGHT)
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        num(WIDTH / 2.0),
        escape(title)
    );

    // Grid and tick labels, six stops each way.
    for k in 0..=5 {
        let fx = k as f64 / 5.0;
        let xv = x_min + fx * (x_max - x_min);
        let yv = y_min + fx * (y_max - y_min);
        let gx = sx(xv);
        let gy = sy(yv);
        let _ = write!(
            svg,
            "<line x1=\"{x}\" y1=\"{t}\" x2=\"{x}\" y2=\"{b}\" stroke=\"#ddd\"/>\n",
            x = num(gx),
            t = num(MARGIN_T),
            b = num(HEIGHT - MARGIN_B)
        );
        let _ = write!(
            svg,
            "<line x1=\"{l}\" y1=\"{y}\" x2=\"{r}\" y2=\"{y}\" stroke=\"#ddd\"/>\n",
            l = num(MARGIN_L),
            r = num(WIDTH - MARGIN_R),
            y = num(gy)
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            num(gx),
            num(HEIGHT - MARGIN_B + 18.0),
            tick_label(xv)
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            num(MARGIN_L - 8.0),
            num(gy + 4.0),
            tick_label(yv)
        );
    }
    let _ = write!(
        svg,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
        num(MARGIN_L),
        num(MARGIN_T),
        num(plot_w),
        num(plot_h)
    );
    let _ = write!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        num(MARGIN_L + plot_w / 2.0),
        num(HEIGHT - 8.0),
        escape(x_label)
    );
    let _ = write!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        num(MARGIN_T + plot_h / 2.0),
        num(MARGIN_T + plot_h / 2.0),
        escape(y_label)
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        for (x, y) in &s.points {
            if !path.is_empty() {
                path.push(' ');
            }
            let _ = write!(path, "{},{}", num(sx(*x)), num(sy(*y)));
        }
        let _ = write!(
            svg,
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        );
        let ly = MARGIN_T + 16.0 + 18.0 * k as f64;
        let _ = write!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"3\"/>\n",
            num(MARGIN_L + 10.0),
            num(ly - 4.0),
            num(MARGIN_L + 34.0),
            num(ly - 4.0),
            color
        );
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            num(MARGIN_L + 40.0),
            num(ly),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
