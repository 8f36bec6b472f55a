//! Dependency-free SVG line charts and heatmaps. Output is a pure function
//! of the input, so identical runs produce identical files.

use std::fmt::Write;

use pinn_core::field::SolutionField;

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 150.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
    /// Draw markers instead of connecting lines.
    pub markers: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(v: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-300 {
        Some((lo - 0.5, hi + 0.5))
    } else {
        Some((lo, hi))
    }
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }

    pub fn add(&mut self, name: &str, pts: Vec<(f64, f64)>) {
        self.series.push((name.into(), pts));
    }

    fn tx(&self, v: f64) -> f64 {
        if self.log_x {
            v.log10()
        } else {
            v
        }
    }

    fn ty(&self, v: f64) -> f64 {
        if self.log_y {
            v.log10()
        } else {
            v
        }
    }

    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|(_, p)| p.iter().map(|&(x, y)| (self.tx(x), self.ty(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (x0, x1) = range(pts.iter().map(|p| p.0)).unwrap_or((0.0, 1.0));
        let (y0, y1) = range(pts.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
        let pw = W - ML - MR;
        let ph = H - MT - MB;
        let sx = |x: f64| ML + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MT + ph - (y - y0) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = write!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = write!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, ML + pw / 2.0, esc(&self.title));
        let _ = write!(s, r#"<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let lx = if self.log_x { format!("1e{xv:.2}") } else { format!("{xv:.3}") };
            let ly = if self.log_y { format!("1e{yv:.2}") } else { format!("{yv:.3}") };
            let _ = write!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{lx}</text>"#, sx(xv), H - MB + 16.0);
            let _ = write!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{ly}</text>"#, ML - 4.0, sy(yv) + 4.0);
        }
        let _ = write!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, ML + pw / 2.0, H - 12.0, esc(&self.x_label));
        let _ = write!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            MT + ph / 2.0,
            MT + ph / 2.0,
            esc(&self.y_label)
        );
        for (k, (name, p)) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mapped: Vec<(f64, f64)> = p
                .iter()
                .map(|&(x, y)| (self.tx(x), self.ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (sx(x), sy(y)))
                .collect();
            if self.markers {
                for (x, y) in &mapped {
                    let _ = write!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            } else if !mapped.is_empty() {
                let d: Vec<String> = mapped.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = write!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.join(" "));
            }
            let ly = MT + 14.0 + 16.0 * k as f64;
            let _ = write!(s, r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, W - MR + 10.0, ly - 9.0);
            let _ = write!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, W - MR + 24.0, esc(name));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn color(v: f64) -> String {
    // Blue to white to red.
    let v = v.clamp(0.0, 1.0);
    let (r, g, b) = if v < 0.5 {
        let f = v / 0.5;
        (40.0 + 215.0 * f, 80.0 + 175.0 * f, 200.0 + 55.0 * f)
    } else {
        let f = (v - 0.5) / 0.5;
        (255.0 - 55.0 * f, 255.0 - 215.0 * f, 255.0 - 215.0 * f)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Heatmap of `u(x, t)` with `x` across and `t` upward, at most
/// `max_cells` cells per side.
pub fn heatmap(field: &SolutionField<f64>, title: &str, max_cells: usize) -> String {
    let nx = field.x.n.min(max_cells).max(2);
    let nt = field.t.n.min(max_cells).max(2);
    let pick = |k: usize, n: usize, full: usize| (k * (full - 1)) / (n - 1).max(1);
    let (lo, hi) = field.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let m = lo.abs().max(hi.abs()).max(1e-300);
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let (cw, ch) = (pw / nx as f64, ph / nt as f64);
    let mut s = String::new();
    let _ = write!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = write!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, ML + pw / 2.0, esc(title));
    for j in 0..nt {
        for i in 0..nx {
            let v = field.at(pick(i, nx, field.x.n), pick(j, nt, field.t.n));
            let x = ML + i as f64 * cw;
            let y = MT + ph - (j + 1) as f64 * ch;
            let _ = write!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                cw + 0.05,
                ch + 0.05,
                color(0.5 + 0.5 * v / m)
            );
        }
    }
    let _ = write!(s, r#"<text x="{ML}" y="{:.2}">x = {}</text>"#, H - MB + 16.0, field.x.lo);
    let _ = write!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">x = {}</text>"#, ML + pw, H - MB + 16.0, field.x.hi);
    let _ = write!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">t = {}</text>"#, ML - 4.0, MT + ph, field.t.lo);
    let _ = write!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">t = {}</text>"#, ML - 4.0, MT + 10.0, field.t.hi);
    for (k, f) in [1.0, 0.5, 0.0, -0.5, -1.0].iter().enumerate() {
        let y = MT + 20.0 * k as f64;
        let _ = write!(s, r#"<rect x="{:.2}" y="{y:.2}" width="14" height="20" fill="{}"/>"#, W - MR + 10.0, color(0.5 + 0.5 * f));
        let _ = write!(s, r#"<text x="{:.2}" y="{:.2}">{:.3}</text>"#, W - MR + 30.0, y + 14.0, f * m);
    }
    s.push_str("</svg>\n");
    s
}

/// `u(·, t)` at five evenly spaced rows of `field`, with optional overlays
/// of the same rows from other fields on the same grid.
pub fn t_slices(fields: &[(&str, &SolutionField<f64>)], title: &str) -> String {
    let mut plot = LinePlot::new(title, "x", "u");
    let Some((_, first)) = fields.first() else {
        return plot.to_svg();
    };
    for k in 0..5 {
        let j = k * (first.t.n - 1) / 4;
        for (name, f) in fields {
            let pts = (0..f.x.n).map(|i| (f.x.point(i), f.at(i, j))).collect();
            plot.add(&format!("{name} t={:.2}", f.t.point(j)), pts);
        }
    }
    plot.to_svg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pinn_core::field::{FieldMeta, Grid1};

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let mut p = LinePlot::new("a < b", "x", "y").log_log();
        p.add("s", vec![(1.0, 1.0), (10.0, 0.1), (100.0, 0.0)]);
        let a = p.to_svg();
        assert_eq!(a, p.to_svg());
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("a &lt; b"));
        let g = Grid1::new(0.0, 1.0, 5).unwrap();
        let f = SolutionField::from_fn(g, g, FieldMeta::new("f"), |x: f64, t| x - t).unwrap();
        let h = heatmap(&f, "h", 100);
        assert_eq!(h.matches("<rect").count(), 1 + 25 + 5);
        assert!(t_slices(&[("f", &f)], "s").contains("polyline"));
    }
}
