//! Minimal self-contained SVG line plots: polylines, a one-sigma band,
//! reference lines. No timestamps or external resources, so output bytes are
//! a pure function of the data.

pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// (x, lo, hi) band drawn behind the series.
    pub band: Option<Vec<(f64, f64, f64)>>,
    pub vlines: Vec<(f64, String)>,
    pub hlines: Vec<(f64, String)>,
}

const W: f64 = 720.0;
const H: f64 = 480.0;
const ML: f64 = 72.0;
const MR: f64 = 24.0;
const MT: f64 = 36.0;
const MB: f64 = 52.0;

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            log_y: false,
            series: Vec::new(),
            band: None,
            vlines: Vec::new(),
            hlines: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
            }
        }
        if let Some(band) = &self.band {
            for &(x, lo, hi) in band {
                xs.push(x);
                ys.push(lo);
                ys.push(hi);
            }
        }
        // positive floor for the log scale: half the smallest positive value
        let floor = if self.log_y {
            let min_pos = ys
                .iter()
                .copied()
                .filter(|y| *y > 0.0)
                .fold(f64::INFINITY, f64::min);
            if min_pos.is_finite() {
                0.5 * min_pos
            } else {
                1e-12
            }
        } else {
            0.0
        };
        let ty = |y: f64| -> f64 {
            if self.log_y {
                y.max(floor).log10()
            } else {
                y
            }
        };
        let (x_min, x_max) = span(&xs);
        let (y_min, y_max) = span(&ys.iter().map(|&y| ty(y)).collect::<Vec<_>>());
        let sx = move |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
        let sy = move |y: f64| H - MB - (ty(y) - y_min) / (y_max - y_min) * (H - MT - MB);

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
            0.5 * W,
            esc(&self.title)
        ));

        // axes box and ticks
        out.push_str(&format!(
            "<rect x=\"{ML}\" y=\"{MT}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
            W - ML - MR,
            H - MT - MB
        ));
        for i in 0..=4 {
            let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
            let px = sx(fx);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#bbb\" stroke-width=\"0.5\"/>\n",
                MT,
                H - MB
            ));
            out.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                H - MB + 16.0,
                tick_label(fx)
            ));
            let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
            let py = H - MB - (fy - y_min) / (y_max - y_min) * (H - MT - MB);
            out.push_str(&format!(
                "<line x1=\"{ML}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#bbb\" stroke-width=\"0.5\"/>\n",
                W - MR
            ));
            let label = if self.log_y {
                format!("1e{fy:.1}")
            } else {
                tick_label(fy)
            };
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
                ML - 6.0,
                py + 4.0
            ));
        }
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            0.5 * W,
            H - 14.0,
            esc(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            0.5 * H,
            0.5 * H,
            esc(&self.y_label)
        ));

        if let Some(band) = &self.band {
            let mut path = String::from("M");
            for &(x, _, hi) in band {
                path.push_str(&format!(" {:.2},{:.2}", sx(x), sy(hi)));
            }
            for &(x, lo, _) in band.iter().rev() {
                path.push_str(&format!(" {:.2},{:.2}", sx(x), sy(lo)));
            }
            path.push('Z');
            out.push_str(&format!(
                "<path d=\"{path}\" fill=\"#9ecae1\" fill-opacity=\"0.45\" stroke=\"none\"/>\n"
            ));
        }

        for (x, label) in &self.vlines {
            let px = sx(*x);
            out.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{MT}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#888\" stroke-dasharray=\"6 3\"/>\n",
                H - MB
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                px + 4.0,
                MT + 14.0,
                esc(label)
            ));
        }
        for (y, label) in &self.hlines {
            let py = sy(*y);
            out.push_str(&format!(
                "<line x1=\"{ML}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#888\" stroke-dasharray=\"6 3\"/>\n",
                W - MR
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                W - MR - 4.0,
                py - 4.0,
                esc(label)
            ));
        }

        for (i, s) in self.series.iter().enumerate() {
            if s.points.is_empty() {
                continue;
            }
            let mut path = String::from("M");
            for &(x, y) in &s.points {
                path.push_str(&format!(" {:.2},{:.2}", sx(x), sy(y)));
            }
            let dash = if s.dashed {
                " stroke-dasharray=\"7 4\""
            } else {
                ""
            };
            out.push_str(&format!(
                "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n",
                s.color
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                W - MR - 150.0,
                MT + 18.0 + 16.0 * i as f64,
                s.color,
                esc(&s.label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn span(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
