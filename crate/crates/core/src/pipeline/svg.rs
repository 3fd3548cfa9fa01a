//! Minimal static SVG plotting for cohort reports.

use std::fmt::Write as _;

use super::cohort::SpeakerOutcome;
use super::manifest::Group;
use super::recording::AnalysisMethod;
use crate::features::{Estimator, Feature, Vowel, VowelRepresentatives, VowelSamples};
use crate::stats::least_squares;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn group_colour(g: Group) -> &'static str {
    match g {
        Group::Control => "#1f77b4",
        Group::Patient => "#d62728",
    }
}

fn vowel_colour(v: Vowel) -> &'static str {
    match v {
        Vowel::A => "#2ca02c",
        Vowel::I => "#9467bd",
        Vowel::U => "#ff7f0e",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// 1, 2 or 5 times a power of ten, giving roughly five intervals.
fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

struct Canvas {
    out: String,
    x: (f64, f64),
    y: (f64, f64),
    /// Reverse axes so the plot reads like a vowel chart.
    flip_x: bool,
    flip_y: bool,
}

impl Canvas {
    fn new(title: &str, x: (f64, f64), y: (f64, f64), flip_x: bool, flip_y: bool) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        Canvas {
            out,
            x,
            y,
            flip_x,
            flip_y,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let mut t = (x - self.x.0) / (self.x.1 - self.x.0);
        if self.flip_x {
            t = 1.0 - t;
        }
        MARGIN + t * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let mut t = (y - self.y.0) / (self.y.1 - self.y.0);
        if !self.flip_y {
            t = 1.0 - t;
        }
        MARGIN + t * (H - 2.0 * MARGIN)
    }

    fn axes(&mut self, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        let _ = writeln!(
            self.out,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        let xs = nice_step(self.x.1 - self.x.0);
        let mut v = (self.x.0 / xs).ceil() * xs;
        while v <= self.x.1 {
            let p = self.px(v);
            let _ = writeln!(
                self.out,
                r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/><text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#,
                b + 5.0,
                b + 18.0,
                tick_label(v, xs)
            );
            v += xs;
        }
        let ys = nice_step(self.y.1 - self.y.0);
        let mut v = (self.y.0 / ys).ceil() * ys;
        while v <= self.y.1 {
            let p = self.py(v);
            let _ = writeln!(
                self.out,
                r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                l - 5.0,
                l - 8.0,
                p + 4.0,
                tick_label(v, ys)
            );
            v += ys;
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
    }

    fn point(&mut self, x: f64, y: f64, r: f64, colour: &str, opacity: f64) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{colour}" fill-opacity="{opacity}"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    fn polygon(&mut self, pts: &[(f64, f64)], colour: &str, width: f64, opacity: f64) {
        let p: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.out,
            r#"<polygon points="{}" fill="none" stroke="{colour}" stroke-width="{width}" stroke-opacity="{opacity}"/>"#,
            p.join(" ")
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], colour: &str) {
        let p: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            p.join(" ")
        );
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (label, colour)) in entries.iter().enumerate() {
            let y = MARGIN + 14.0 + 16.0 * k as f64;
            let x = W - MARGIN - 110.0;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x}" y="{}" width="10" height="10" fill="{colour}"/><text x="{}" y="{y}">{}</text>"#,
                y - 9.0,
                x + 15.0,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    format!("{:.*}", decimals, if v.abs() < step * 1e-9 { 0.0 } else { v })
}

/// Triangle vertices in (F2, F1) plot coordinates.
fn triangle(r: &VowelRepresentatives) -> [(f64, f64); 3] {
    [(r.f2a, r.f1a), (r.f2i, r.f1i), (r.f2u, r.f1u)]
}

fn mean_reps(reps: &[VowelRepresentatives]) -> VowelRepresentatives {
    let n = reps.len() as f64;
    let s = |f: fn(&VowelRepresentatives) -> f64| reps.iter().map(f).sum::<f64>() / n;
    VowelRepresentatives {
        f1a: s(|r| r.f1a),
        f2a: s(|r| r.f2a),
        f1i: s(|r| r.f1i),
        f2i: s(|r| r.f2i),
        f1u: s(|r| r.f1u),
        f2u: s(|r| r.f2u),
    }
}

/// Frame-level points and representative triangle of one speaker.
pub fn speaker_vowel_space(
    title: &str,
    samples: &VowelSamples,
    reps: &VowelRepresentatives,
) -> String {
    let all = || {
        Vowel::ALL
            .iter()
            .flat_map(|&v| samples.get(v).iter().copied())
            .chain(triangle(reps).into_iter().map(|(f2, f1)| (f1, f2)))
    };
    let x = padded_range(all().map(|p| p.1));
    let y = padded_range(all().map(|p| p.0));
    let mut c = Canvas::new(title, x, y, true, true);
    c.axes("F2 (Hz)", "F1 (Hz)");
    for v in Vowel::ALL {
        for &(f1, f2) in samples.get(v) {
            c.point(f2, f1, 2.0, vowel_colour(v), 0.5);
        }
    }
    c.polygon(&triangle(reps), "black", 2.0, 1.0);
    c.legend(&[
        ("/a/", vowel_colour(Vowel::A)),
        ("/i/", vowel_colour(Vowel::I)),
        ("/u/", vowel_colour(Vowel::U)),
    ]);
    c.finish()
}

/// One triangle per speaker plus a mean triangle per group.
pub fn cohort_vowel_space(
    speakers: &[SpeakerOutcome],
    method: AnalysisMethod,
    est: Estimator,
) -> String {
    let reps: Vec<(Group, VowelRepresentatives)> = speakers
        .iter()
        .filter_map(|s| Some((s.group, s.get(method)?.get(est)?.representatives)))
        .collect();
    let pts = || reps.iter().flat_map(|(_, r)| triangle(r));
    let x = padded_range(pts().map(|p| p.0));
    let y = padded_range(pts().map(|p| p.1));
    let title = format!("Vowel space ({}, {est})", method.name());
    let mut c = Canvas::new(&title, x, y, true, true);
    c.axes("F2 (Hz)", "F1 (Hz)");
    for (g, r) in &reps {
        c.polygon(&triangle(r), group_colour(*g), 1.0, 0.35);
    }
    for g in Group::ALL {
        let rs: Vec<VowelRepresentatives> =
            reps.iter().filter(|(h, _)| *h == g).map(|(_, r)| *r).collect();
        if !rs.is_empty() {
            c.polygon(&triangle(&mean_reps(&rs)), group_colour(g), 3.0, 1.0);
        }
    }
    c.legend(&[
        ("control", group_colour(Group::Control)),
        ("patient", group_colour(Group::Patient)),
    ]);
    c.finish()
}

/// Feature against a metadata column with its least-squares line. Returns
/// `None` when fewer than two speakers have both values.
pub fn feature_vs_rating(
    speakers: &[SpeakerOutcome],
    column_index: usize,
    column: &str,
    method: AnalysisMethod,
    est: Estimator,
    feature: Feature,
) -> Option<String> {
    let pts: Vec<(Group, f64, f64)> = speakers
        .iter()
        .filter_map(|s| {
            let x = s.metadata.get(column_index).copied().flatten()?;
            let y = s.get(method)?.get(est)?.features.get(feature);
            Some((s.group, x, y))
        })
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
    let (slope, intercept) = least_squares(&xs, &ys).ok()?;
    let x = padded_range(xs.iter().copied());
    let fit = |v: f64| slope * v + intercept;
    let y = padded_range(ys.iter().copied().chain([fit(x.0), fit(x.1)]));
    let title = format!("{feature} ({}, {est}) vs {column}", method.name());
    let mut c = Canvas::new(&title, x, y, false, false);
    c.axes(column, feature.name());
    for &(g, px, py) in &pts {
        c.point(px, py, 4.0, group_colour(g), 0.8);
    }
    c.polyline(&[(x.0, fit(x.0)), (x.1, fit(x.1))], "black");
    c.legend(&[
        ("control", group_colour(Group::Control)),
        ("patient", group_colour(Group::Patient)),
    ]);
    Some(c.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(1000.0), 200.0);
        assert_eq!(nice_step(2.5), 0.5);
        assert_eq!(nice_step(0.07), 0.01);
    }

    #[test]
    fn speaker_plot_is_closed_svg() {
        let reps = VowelRepresentatives {
            f1a: 800.0,
            f2a: 1300.0,
            f1i: 300.0,
            f2i: 2300.0,
            f1u: 350.0,
            f2u: 800.0,
        };
        let s = VowelSamples {
            a: vec![(800.0, 1300.0)],
            i: vec![(300.0, 2300.0)],
            u: vec![(350.0, 800.0)],
        };
        let svg = speaker_vowel_space("a < b", &s, &reps);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<polygon").count(), 1);
    }
}
