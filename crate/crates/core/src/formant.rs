//! Frame-level F1/F2 estimation with Burg linear prediction.
//!
//! Each frame of an analysis copy resampled to twice the maximum formant
//! frequency is pre-emphasised, Gaussian-windowed and fitted with an
//! all-pole model by Burg's method. Formants are read off the angles of the
//! model poles.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::audio::{resample, FrameGrid, Waveform};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormantConfig {
    pub max_formant_hz: f64,
    pub lpc_order: usize,
    pub pre_emphasis_from_hz: f64,
    pub min_formant_hz: f64,
    /// Candidates wider than this are ignored when picking F1/F2.
    /// Off by default.
    pub max_bandwidth_hz: Option<f64>,
}

impl Default for FormantConfig {
    fn default() -> Self {
        FormantConfig {
            max_formant_hz: 5500.0,
            lpc_order: 10,
            pre_emphasis_from_hz: 50.0,
            min_formant_hz: 90.0,
            max_bandwidth_hz: None,
        }
    }
}

impl FormantConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lpc_order < 4 || !self.lpc_order.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "lpc_order must be even and >= 4, got {}",
                self.lpc_order
            )));
        }
        if !(self.min_formant_hz > 0.0 && self.min_formant_hz < self.max_formant_hz) {
            return Err(Error::Config(format!(
                "need 0 < min_formant_hz ({}) < max_formant_hz ({})",
                self.min_formant_hz, self.max_formant_hz
            )));
        }
        if self.pre_emphasis_from_hz < 0.0 {
            return Err(Error::Config("pre_emphasis_from_hz must be >= 0".into()));
        }
        if let Some(b) = self.max_bandwidth_hz {
            if !(b > 0.0) {
                return Err(Error::Config("max_bandwidth_hz must be positive".into()));
            }
        }
        Ok(())
    }

    /// Sample rate of the analysis copy: twice the maximum formant.
    pub fn analysis_rate_hz(&self) -> u32 {
        (2.0 * self.max_formant_hz).round() as u32
    }
}

/// Frames with F1 above `f1_max_hz` and F2 below `f2_min_hz` at the same
/// time are counted as gross estimation errors. The defaults are the most
/// extreme /a/ exemplar in a reference population of speakers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorBoundary {
    pub f1_max_hz: f64,
    pub f2_min_hz: f64,
}

impl Default for ErrorBoundary {
    fn default() -> Self {
        ErrorBoundary {
            f1_max_hz: 1002.0,
            f2_min_hz: 1688.0,
        }
    }
}

impl ErrorBoundary {
    pub fn validate(&self) -> Result<()> {
        if self.f1_max_hz < self.f2_min_hz {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "need f1_max_hz ({}) < f2_min_hz ({})",
                self.f1_max_hz, self.f2_min_hz
            )))
        }
    }

    pub fn is_error(&self, f: &FormantPair) -> bool {
        f.f1_hz > self.f1_max_hz && f.f2_hz < self.f2_min_hz
    }
}

/// Result of a Burg fit.
#[derive(Clone, Debug)]
pub struct BurgModel {
    /// Prediction coefficients `a_1..a_p` with `x_t ≈ Σ a_k x_{t-k}`.
    pub coefficients: Vec<f64>,
    /// Reflection coefficient of each lattice stage.
    pub reflection: Vec<f64>,
    /// Mean squared forward+backward error after the last stage.
    pub error: f64,
}

// Relative loading of the lattice denominator. Keeps |k| strictly below one
// for perfectly predictable input such as a Nyquist-rate square wave.
const LATTICE_LOADING: f64 = 1e-10;

/// Burg's method: order-recursive lattice fit minimising the sum of forward
/// and backward prediction errors.
pub fn burg(samples: &[f64], order: usize) -> Result<BurgModel> {
    let n = samples.len();
    if n <= order {
        return Err(Error::InvalidArgument(format!(
            "frame length {n} must exceed order {order}"
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample in frame".into()));
    }
    let mut f = samples.to_vec();
    let mut b = samples.to_vec();
    // Error filter A(z) = 1 + Σ a_k z^-k.
    let mut a = vec![1.0];
    let mut reflection = Vec::with_capacity(order);
    let mut error = samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if error <= 0.0 {
        return Err(Error::DegenerateFrame);
    }
    for m in 0..order {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in m + 1..n {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        if !(den > 0.0) {
            return Err(Error::DegenerateFrame);
        }
        let k = -2.0 * num / (den * (1.0 + LATTICE_LOADING));
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::UnstableRecursion {
                order: m + 1,
                value: k,
            });
        }
        a.push(0.0);
        let prev = a.clone();
        for j in 1..=m + 1 {
            a[j] = prev[j] + k * prev[m + 1 - j];
        }
        for i in (m + 1..n).rev() {
            let fi = f[i];
            let bi = b[i - 1];
            f[i] = fi + k * bi;
            b[i] = bi + k * fi;
        }
        reflection.push(k);
        error *= 1.0 - k * k;
    }
    Ok(BurgModel {
        coefficients: a[1..].iter().map(|v| -v).collect(),
        reflection,
        error,
    })
}

/// Prediction coefficients `a_1..a_order` by Burg's method.
pub fn burg_coefficients(samples: &[f64], order: usize) -> Result<Vec<f64>> {
    burg(samples, order).map(|m| m.coefficients)
}

fn horner(poly: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // Value and derivative of a polynomial given in descending powers.
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in poly {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn relative_residual(poly: &[f64], z: Complex64) -> f64 {
    let (p, _) = horner(poly, z);
    let r = z.norm();
    let mut scale = 0.0;
    for &c in poly {
        scale = scale * r + c.abs();
    }
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

const ROOT_RESIDUAL_TOL: f64 = 1e-6;

/// All roots of `z^p − a_1 z^{p−1} − … − a_p`, i.e. the zeros of
/// `1 − Σ a_k z^{−k}`.
///
/// Eigenvalues of the companion matrix, refined by a few Newton steps.
pub fn polynomial_roots(coefficients: &[f64]) -> Result<Vec<Complex64>> {
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coefficient".into()));
    }
    let p = coefficients.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    let mut poly = Vec::with_capacity(p + 1);
    poly.push(1.0);
    poly.extend(coefficients.iter().map(|a| -a));

    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, a) in coefficients.iter().enumerate() {
        companion[(0, j)] = *a;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    let schur = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000).ok_or(
        Error::RootsNotConverged {
            degree: p,
            residual: f64::NAN,
        },
    )?;
    let mut roots: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();

    let mut worst: f64 = 0.0;
    for z in roots.iter_mut() {
        let mut best = relative_residual(&poly, *z);
        for _ in 0..4 {
            let (v, dv) = horner(&poly, *z);
            if dv.norm() == 0.0 || best == 0.0 {
                break;
            }
            let cand = *z - v / dv;
            let res = relative_residual(&poly, cand);
            if res < best {
                *z = cand;
                best = res;
            } else {
                break;
            }
        }
        worst = worst.max(best);
    }
    if !(worst < ROOT_RESIDUAL_TOL) {
        return Err(Error::RootsNotConverged {
            degree: p,
            residual: worst,
        });
    }
    Ok(roots)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormantCandidate {
    pub freq_hz: f64,
    pub bandwidth_hz: f64,
}

/// Converts upper-half-plane poles to (frequency, bandwidth) pairs, keeps
/// those in `[min_formant_hz, rate/2 − 50]` and sorts them ascending.
///
/// Poles outside the unit circle are reflected inside first.
pub fn roots_to_formants(
    roots: &[Complex64],
    analysis_rate_hz: f64,
    cfg: &FormantConfig,
) -> Vec<FormantCandidate> {
    let fs = analysis_rate_hz;
    let upper = fs / 2.0 - 50.0;
    let mut out: Vec<FormantCandidate> = roots
        .iter()
        .filter(|z| z.im > 0.0)
        .filter_map(|&z| {
            let z = if z.norm() > 1.0 { 1.0 / z.conj() } else { z };
            let freq_hz = z.arg() * fs / (2.0 * PI);
            let bandwidth_hz = -fs / PI * z.norm().ln();
            let ok = freq_hz >= cfg.min_formant_hz
                && freq_hz <= upper
                && bandwidth_hz > 0.0
                && cfg.max_bandwidth_hz.is_none_or(|m| bandwidth_hz <= m);
            ok.then_some(FormantCandidate {
                freq_hz,
                bandwidth_hz,
            })
        })
        .collect();
    out.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormantPair {
    pub f1_hz: f64,
    pub f2_hz: f64,
    pub b1_hz: f64,
    pub b2_hz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormantFrame {
    pub center_s: f64,
    /// `None` for frames where estimation failed.
    pub formants: Option<FormantPair>,
}

impl FormantFrame {
    pub fn is_valid(&self) -> bool {
        self.formants.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormantTrack {
    pub frames: Vec<FormantFrame>,
    pub warnings: Vec<String>,
}

impl FormantTrack {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.frames.iter().filter(|f| f.is_valid()).count()
    }
}

fn pre_emphasis(x: &[f64], from_hz: f64, fs: f64) -> Vec<f64> {
    if from_hz <= 0.0 {
        return x.to_vec();
    }
    let alpha = (-2.0 * PI * from_hz / fs).exp();
    let mut out = Vec::with_capacity(x.len());
    let mut prev = 0.0;
    for &v in x {
        out.push(v - alpha * prev);
        prev = v;
    }
    out
}

/// Gaussian window with its edges pulled to zero.
fn gaussian_window(n: usize) -> Vec<f64> {
    let edge = (-12.0f64).exp();
    let mid = (n as f64 + 1.0) / 2.0;
    let denom = (n as f64 + 1.0).powi(2);
    (1..=n)
        .map(|i| {
            let d = i as f64 - mid;
            ((-48.0 * d * d / denom).exp() - edge) / (1.0 - edge)
        })
        .collect()
}

/// Per-frame F1/F2 on an analysis signal that was already resampled and
/// pre-emphasised.
struct FrameAnalyzer<'a> {
    signal: &'a [f64],
    fs: f64,
    start_s: f64,
    window: Vec<f64>,
    cfg: &'a FormantConfig,
}

impl FrameAnalyzer<'_> {
    fn analyze(&self, center_s: f64) -> Option<FormantPair> {
        let n = self.window.len();
        let first = ((center_s - self.start_s) * self.fs - n as f64 / 2.0).round();
        if first < 0.0 || first as usize + n > self.signal.len() {
            return None;
        }
        let first = first as usize;
        let frame: Vec<f64> = self.signal[first..first + n]
            .iter()
            .zip(&self.window)
            .map(|(x, w)| x * w)
            .collect();
        let model = burg(&frame, self.cfg.lpc_order).ok()?;
        let roots = polynomial_roots(&model.coefficients).ok()?;
        let cands = roots_to_formants(&roots, self.fs, self.cfg);
        match cands.as_slice() {
            [c1, c2, ..] => Some(FormantPair {
                f1_hz: c1.freq_hz,
                f2_hz: c2.freq_hz,
                b1_hz: c1.bandwidth_hz,
                b2_hz: c2.bandwidth_hz,
            }),
            _ => None,
        }
    }
}

/// Estimates F1/F2 at every centre of `grid`.
///
/// Frames that cannot be analysed (window outside the signal, silent input,
/// fewer than two in-range poles) are marked invalid. A warning is attached
/// when more than half the frames are invalid.
pub fn track_formants(
    wav: &Waveform,
    grid: &FrameGrid,
    cfg: &FormantConfig,
    exec: Execution,
) -> Result<FormantTrack> {
    cfg.validate()?;
    let analysis = resample(wav, cfg.analysis_rate_hz())?;
    let fs = analysis.sample_rate() as f64;
    let signal = pre_emphasis(analysis.samples(), cfg.pre_emphasis_from_hz, fs);
    let n = ((grid.window_s() * fs).round() as usize).max(cfg.lpc_order + 1);
    let analyzer = FrameAnalyzer {
        signal: &signal,
        fs,
        start_s: analysis.start_s(),
        window: gaussian_window(n),
        cfg,
    };
    let frames = par::map(exec, grid.centers(), |&center_s| FormantFrame {
        center_s,
        formants: analyzer.analyze(center_s),
    });
    let mut track = FormantTrack {
        frames,
        warnings: Vec::new(),
    };
    let invalid = track.len() - track.valid_count();
    if invalid * 2 > track.len() {
        track.warnings.push(format!(
            "{invalid} of {} formant frames invalid",
            track.len()
        ));
    }
    Ok(track)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorScreening {
    pub flags: Vec<bool>,
    pub flagged: usize,
    pub valid: usize,
    /// flagged / valid, 0 when no frame is valid.
    pub ratio: f64,
}

/// Flags valid frames lying beyond both boundaries at once.
pub fn screen_errors(track: &FormantTrack, boundary: &ErrorBoundary) -> ErrorScreening {
    let flags: Vec<bool> = track
        .frames
        .iter()
        .map(|f| f.formants.is_some_and(|p| boundary.is_error(&p)))
        .collect();
    let flagged = flags.iter().filter(|&&f| f).count();
    let valid = track.valid_count();
    ErrorScreening {
        flags,
        flagged,
        valid,
        ratio: if valid == 0 {
            0.0
        } else {
            flagged as f64 / valid as f64
        },
    }
}

/// Debug dump: `center_s,f1_hz,f2_hz,b1_hz,b2_hz,valid,error_flag`.
/// Invalid frames leave the formant fields empty.
pub fn write_track_csv<W: Write>(
    mut out: W,
    track: &FormantTrack,
    screening: &ErrorScreening,
) -> std::io::Result<()> {
    writeln!(out, "center_s,f1_hz,f2_hz,b1_hz,b2_hz,valid,error_flag")?;
    for (frame, flag) in track.frames.iter().zip(&screening.flags) {
        match frame.formants {
            Some(p) => writeln!(
                out,
                "{:.6},{:.3},{:.3},{:.3},{:.3},1,{}",
                frame.center_s, p.f1_hz, p.f2_hz, p.b1_hz, p.b2_hz, *flag as u8
            )?,
            None => writeln!(out, "{:.6},,,,,0,0", frame.center_s)?,
        }
    }
    Ok(())
}
