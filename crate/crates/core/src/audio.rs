//! Decoding, resampling, trimming and framing of recordings.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono signal with amplitudes in [-1, 1].
///
/// `start_s` is the time of the first sample relative to the start of the
/// original recording, so a trimmed waveform keeps absolute timestamps.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
    start_s: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::with_start(samples, sample_rate, 0.0)
    }

    pub fn with_start(samples: Vec<f64>, sample_rate: u32, start_s: f64) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample at index {i}")));
        }
        if samples.iter().any(|s| s.abs() > 1.0) {
            return Err(Error::InvalidArgument("sample amplitude exceeds 1".into()));
        }
        Ok(Waveform {
            samples,
            sample_rate,
            start_s,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s()
    }

    /// Sub-signal covering samples `[from, to)`, with `start_s` adjusted.
    pub fn slice(&self, from: usize, to: usize) -> Waveform {
        let to = to.min(self.samples.len());
        let from = from.min(to);
        Waveform {
            samples: self.samples[from..to].to_vec(),
            sample_rate: self.sample_rate,
            start_s: self.start_s + from as f64 / self.sample_rate as f64,
        }
    }
}

/// Reads a RIFF/WAVE file and mixes it down to mono.
///
/// Integer PCM is scaled by `2^(bits-1)`, so a 16-bit value of 32767 maps to
/// 32767/32768. Float samples are clamped to [-1, 1].
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let wav_err = |msg: String| Error::Wav {
        path: path.to_path_buf(),
        msg,
    };
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => wav_err(other.to_string()),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(wav_err(format!("unsupported channel count {channels}")));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_err(e.to_string()))?
        }
        (hound::SampleFormat::Float, 32) => {
            let raw: Vec<f32> = reader
                .samples::<f32>()
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_err(e.to_string()))?;
            let mut out = Vec::with_capacity(raw.len());
            for v in raw {
                if !v.is_finite() {
                    return Err(wav_err("non-finite float sample".into()));
                }
                out.push((v as f64).clamp(-1.0, 1.0));
            }
            out
        }
        (fmt, bits) => {
            return Err(wav_err(format!("unsupported encoding {fmt:?} {bits}-bit")));
        }
    };
    if interleaved.is_empty() {
        return Err(wav_err("zero-length audio".into()));
    }
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|c| 0.5 * (c[0] + c[1]))
            .collect()
    };
    Waveform::new(samples, spec.sample_rate)
}

/// Writes the waveform as 16-bit mono PCM.
pub fn write_wav(path: impl AsRef<Path>, wav: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wav.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav {
            path: path.to_path_buf(),
            msg: other.to_string(),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &wav.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

const KAISER_BETA: f64 = 8.0;
const TAPS_PER_PHASE: usize = 64;
/// -6 dB point of the anti-aliasing filter, in cycles per sample of the
/// lower of the two rates. Leaves room for the Kaiser transition band.
const CUTOFF: f64 = 0.46;
const MAX_TABLE_PHASES: u64 = 4096;

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64).powi(2);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct SincKernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    /// Half-width of the kernel support, in input samples.
    half_width: f64,
    /// Number of taps either side of the output position.
    reach: i64,
    i0_beta: f64,
}

impl SincKernel {
    fn new(src_hz: u32, dst_hz: u32) -> Self {
        let scale = (dst_hz as f64 / src_hz as f64).min(1.0);
        let half_width = TAPS_PER_PHASE as f64 / (2.0 * scale);
        SincKernel {
            cutoff: CUTOFF * scale,
            half_width,
            reach: half_width.ceil() as i64,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn weight(&self, d: f64) -> f64 {
        let r = d / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc(2.0 * self.cutoff * d) * window
    }

    /// Normalised weights for input samples `base - reach + 1 ..= base + reach`
    /// given fractional position `frac` in [0, 1) past `base`.
    fn phase_weights(&self, frac: f64) -> Vec<f64> {
        let mut w: Vec<f64> = (-self.reach + 1..=self.reach)
            .map(|k| self.weight(frac - k as f64))
            .collect();
        let sum: f64 = w.iter().sum();
        if sum.abs() > 0.0 {
            w.iter_mut().for_each(|v| *v /= sum);
        }
        w
    }
}

/// Band-limited resampling with a Kaiser-windowed sinc (beta 8, 64 taps per
/// phase at the lower of the two rates).
pub fn resample(wav: &Waveform, target_hz: u32) -> Result<Waveform> {
    if target_hz == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    if target_hz == wav.sample_rate {
        return Ok(wav.clone());
    }
    let src = wav.sample_rate as u64;
    let dst = target_hz as u64;
    let g = gcd(src, dst);
    let (up, down) = (dst / g, src / g);
    let n_out = ((wav.len() as u64 * up) as f64 / down as f64).round() as usize;
    let kernel = SincKernel::new(wav.sample_rate, target_hz);
    let table: Option<Vec<Vec<f64>>> = (up <= MAX_TABLE_PHASES).then(|| {
        (0..up)
            .map(|p| kernel.phase_weights(p as f64 / up as f64))
            .collect()
    });
    let input = &wav.samples;
    let len = input.len() as i64;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as u64 {
        let num = n * down;
        let base = (num / up) as i64;
        let phase = num % up;
        let owned;
        let weights = match &table {
            Some(t) => &t[phase as usize],
            None => {
                owned = kernel.phase_weights(phase as f64 / up as f64);
                &owned
            }
        };
        let first = base - kernel.reach + 1;
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            let k = first + j as i64;
            if (0..len).contains(&k) {
                acc += w * input[k as usize];
            }
        }
        out.push(acc.clamp(-1.0, 1.0));
    }
    Waveform::with_start(out, target_hz, wav.start_s)
}

/// Removes leading and trailing low-energy regions.
///
/// RMS is measured on 20 ms windows with a 10 ms hop; the kept region runs
/// from the start of the first window to the end of the last window whose
/// RMS is above `peak_rms * 10^(threshold_db / 20)`.
pub fn trim_edges(wav: &Waveform, threshold_db: f64) -> Result<Waveform> {
    if !(threshold_db < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "trim threshold must be negative, got {threshold_db} dB"
        )));
    }
    let fs = wav.sample_rate as f64;
    let win = ((0.020 * fs).round() as usize).max(1).min(wav.len().max(1));
    let hop = ((0.010 * fs).round() as usize).max(1);
    let samples = wav.samples();
    let mut starts = Vec::new();
    let mut rms = Vec::new();
    let mut s = 0;
    while s + win <= samples.len() {
        let e: f64 = samples[s..s + win].iter().map(|x| x * x).sum();
        starts.push(s);
        rms.push((e / win as f64).sqrt());
        s += hop;
    }
    let peak = rms.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::NoSpeech);
    }
    let floor = peak * 10f64.powf(threshold_db / 20.0);
    let first = rms.iter().position(|&r| r > floor).ok_or(Error::NoSpeech)?;
    let last = rms.iter().rposition(|&r| r > floor).ok_or(Error::NoSpeech)?;
    Ok(wav.slice(starts[first], starts[last] + win))
}

/// Frame centres on a uniform hop, each with a window of `window_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameGrid {
    window_s: f64,
    hop_s: f64,
    centers: Vec<f64>,
}

impl FrameGrid {
    /// `count` frames whose first window starts at `first_start_s`.
    pub fn uniform(first_start_s: f64, window_s: f64, hop_s: f64, count: usize) -> Result<Self> {
        if !(hop_s > 0.0 && window_s >= hop_s) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < hop ({hop_s}) <= window ({window_s})"
            )));
        }
        let centers = (0..count)
            .map(|i| first_start_s + window_s / 2.0 + i as f64 * hop_s)
            .collect();
        Ok(FrameGrid {
            window_s,
            hop_s,
            centers,
        })
    }

    pub fn window_s(&self) -> f64 {
        self.window_s
    }

    pub fn hop_s(&self) -> f64 {
        self.hop_s
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Number of fully contained windows: `floor((duration - window) / hop) + 1`.
pub fn frame_count(duration_s: f64, window_s: f64, hop_s: f64) -> usize {
    // The epsilon absorbs representation error in durations like 1.005 s.
    (((duration_s - window_s) / hop_s) + 1e-9).floor() as usize + 1
}

/// Maximal grid of windows fully inside `wav`.
pub fn build_grid(wav: &Waveform, window_s: f64, hop_s: f64) -> Result<FrameGrid> {
    if !(hop_s > 0.0 && hop_s <= window_s) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < hop ({hop_s}) <= window ({window_s})"
        )));
    }
    let duration = wav.duration_s();
    if duration + 1e-9 < window_s {
        return Err(Error::SignalTooShort {
            duration_s: duration,
            window_s,
        });
    }
    let count = frame_count(duration, window_s, hop_s);
    FrameGrid::uniform(wav.start_s, window_s, hop_s, count)
}
