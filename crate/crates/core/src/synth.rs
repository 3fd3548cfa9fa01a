//! Synthetic vowels and cohorts with known articulation.
//!
//! Vowels are an impulse train at f0 through a one-pole glottal tilt
//! (-6 dB/octave above 50 Hz) and a cascade of two-pole resonators: F1, F2
//! and fixed upper formants at 2800, 3500 and 4500 Hz. A cohort is a set of
//! speakers whose corner-vowel targets are pulled towards the centre of the
//! vowel space by a per-speaker centralization factor lambda, so the true
//! VAI of every speaker is known in closed form.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::{frame_count, write_wav, Waveform};
use crate::error::{Error, Result};
use crate::features::{vai, Vowel, VowelRepresentatives};
use crate::par::{self, Execution};
use crate::pipeline::manifest::{
    write_annotations, write_manifest, Group, Manifest, ManifestRow, SegmentAnnotation,
};
use crate::posterior::{
    phone_index, write_posteriorgram, LogitRow, Posteriorgram, FRAME_HOP_S, FRAME_WINDOW_S,
    PHONE_COUNT, SILENCE,
};

/// Fixed upper formants (Hz, bandwidth Hz). These fill the order-10
/// predictor so no spare poles land between F1 and F2.
const UPPER_FORMANTS: [(f64, f64); 3] = [(2800.0, 200.0), (3500.0, 250.0), (4500.0, 300.0)];
/// Corner of the source tilt; it cancels the analysis pre-emphasis.
const TILT_HZ: f64 = 50.0;
const PEAK: f64 = 0.9;

/// Klatt-style two-pole resonator with unity gain at DC.
#[derive(Clone, Copy, Debug, Default)]
struct Resonator {
    a: f64,
    b: f64,
    c: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn set(&mut self, freq_hz: f64, bw_hz: f64, fs: f64) {
        let r = (-PI * bw_hz / fs).exp();
        self.c = -r * r;
        self.b = 2.0 * r * (2.0 * PI * freq_hz / fs).cos();
        self.a = 1.0 - self.b - self.c;
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.a * x + self.b * self.y1 + self.c * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Source-filter renderer with continuous state across segments.
struct Voice {
    fs: f64,
    f0_hz: f64,
    phase: f64,
    tilt: f64,
    source: f64,
    r1: Resonator,
    r2: Resonator,
    upper: Vec<Resonator>,
    out: Vec<f64>,
}

impl Voice {
    fn new(fs: u32, f0_hz: f64) -> Self {
        let fs = fs as f64;
        let upper = UPPER_FORMANTS
            .iter()
            .filter(|(f, _)| *f < 0.45 * fs)
            .map(|&(f, b)| {
                let mut r = Resonator::default();
                r.set(f, b, fs);
                r
            })
            .collect();
        Voice {
            fs,
            f0_hz,
            phase: 1.0,
            tilt: (-2.0 * PI * TILT_HZ / fs).exp(),
            source: 0.0,
            r1: Resonator::default(),
            r2: Resonator::default(),
            upper,
            out: Vec::new(),
        }
    }

    fn run(&mut self, n: usize, voiced: bool) {
        for _ in 0..n {
            let mut x = 0.0;
            if voiced {
                if self.phase >= 1.0 {
                    self.phase -= 1.0;
                    x = 1.0;
                }
                self.phase += self.f0_hz / self.fs;
            }
            self.source = x + self.tilt * self.source;
            let mut y = self.r2.tick(self.r1.tick(self.source));
            for r in self.upper.iter_mut() {
                y = r.tick(y);
            }
            self.out.push(y);
        }
    }

    fn voiced(&mut self, n: usize, f1: f64, f2: f64, b1: f64, b2: f64) {
        self.r1.set(f1, b1, self.fs);
        self.r2.set(f2, b2, self.fs);
        self.run(n, true);
    }

    fn silence(&mut self, n: usize) {
        self.run(n, false);
        // Restart the pulse train on the next voiced segment.
        self.phase = 1.0;
    }

    fn finish(self) -> Result<Waveform> {
        let mut out = self.out;
        let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            out.iter_mut().for_each(|v| *v *= PEAK / peak);
        }
        Waveform::new(out, self.fs as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VowelSpec {
    pub f1_hz: f64,
    pub f2_hz: f64,
    pub b1_hz: f64,
    pub b2_hz: f64,
    pub f0_hz: f64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

impl VowelSpec {
    pub fn new(f1_hz: f64, f2_hz: f64) -> Self {
        VowelSpec {
            f1_hz,
            f2_hz,
            b1_hz: 80.0,
            b2_hz: 120.0,
            f0_hz: 120.0,
            duration_s: 0.5,
            sample_rate_hz: 16000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        let ok = self.sample_rate_hz > 0
            && self.f0_hz > 0.0
            && self.f0_hz < self.f1_hz
            && self.f1_hz < self.f2_hz
            && self.f2_hz < nyquist
            && self.b1_hz > 0.0
            && self.b2_hz > 0.0
            && self.duration_s > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid vowel spec {self:?}")))
        }
    }
}

pub fn synth_vowel(spec: &VowelSpec) -> Result<Waveform> {
    spec.validate()?;
    let mut voice = Voice::new(spec.sample_rate_hz, spec.f0_hz);
    let n = (spec.duration_s * spec.sample_rate_hz as f64).round() as usize;
    voice.voiced(n, spec.f1_hz, spec.f2_hz, spec.b1_hz, spec.b2_hz);
    voice.finish()
}

/// Corner targets pulled towards `center` by `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralizationSpec {
    pub lambda: f64,
    pub corners: VowelRepresentatives,
    pub center: (f64, f64),
    /// Standard deviation of the per-block formant jitter, Hz.
    pub jitter_hz: f64,
}

pub const DEFAULT_CORNERS: VowelRepresentatives = VowelRepresentatives {
    f1a: 800.0,
    f2a: 1300.0,
    f1i: 300.0,
    f2i: 2300.0,
    f1u: 350.0,
    f2u: 800.0,
};

impl CentralizationSpec {
    pub fn new(lambda: f64) -> Self {
        CentralizationSpec {
            lambda,
            corners: DEFAULT_CORNERS,
            center: (500.0, 1500.0),
            jitter_hz: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.jitter_hz >= 0.0) {
            return Err(Error::InvalidArgument("jitter must be >= 0".into()));
        }
        self.corners.validate()
    }

    /// Formant targets after centralization.
    pub fn targets(&self) -> VowelRepresentatives {
        let l = self.lambda;
        let (c1, c2) = self.center;
        let mix = |corner: f64, center: f64| corner + l * (center - corner);
        let r = &self.corners;
        VowelRepresentatives {
            f1a: mix(r.f1a, c1),
            f2a: mix(r.f2a, c2),
            f1i: mix(r.f1i, c1),
            f2i: mix(r.f2i, c2),
            f1u: mix(r.f1u, c1),
            f2u: mix(r.f2u, c2),
        }
    }

    pub fn analytic_vai(&self) -> f64 {
        vai(&self.targets()).expect("targets are positive")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub corners: VowelRepresentatives,
    pub center: (f64, f64),
    pub jitter_hz: f64,
    pub tokens_per_vowel: usize,
    pub sample_rate_hz: u32,
    /// Speakers with lambda at or above this are labelled `patient`.
    pub patient_from_lambda: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            lambda_min: 0.0,
            lambda_max: 0.6,
            corners: DEFAULT_CORNERS,
            center: (500.0, 1500.0),
            jitter_hz: 20.0,
            tokens_per_vowel: 3,
            sample_rate_hz: 16000,
            patient_from_lambda: 0.3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthSpeaker {
    pub speaker_id: String,
    pub lambda: f64,
    pub group: Group,
    pub severity_level: u8,
    pub targets: VowelRepresentatives,
    pub analytic_vai: f64,
    pub waveform: Waveform,
    pub posteriorgram: Posteriorgram,
    pub annotations: Vec<SegmentAnnotation>,
}

#[derive(Clone, Debug)]
pub struct SynthCohort {
    pub speakers: Vec<SynthSpeaker>,
}

const LEAD_S: f64 = 0.3;
const GAP_S: f64 = 0.12;
const ANNOTATION_S: f64 = 0.05;

fn corner_label(v: Vowel) -> &'static str {
    match v {
        Vowel::A => "AA",
        Vowel::I => "IY",
        Vowel::U => "UW",
    }
}

/// Confusable phones a recognizer might emit instead of the corner phone.
fn neighbour_labels(v: Vowel) -> &'static [&'static str] {
    match v {
        Vowel::A => &["AE", "AH", "AW", "AY"],
        Vowel::I => &["IH", "IX"],
        Vowel::U => &["UH", "OW"],
    }
}

const NON_VOWEL_LABELS: [&str; 4] = ["HH", "L", "N", "W"];

struct Token {
    vowel: Vowel,
    start_s: f64,
    end_s: f64,
}

fn speaker_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn severity_level(lambda: f64, spec: &CohortSpec) -> u8 {
    let span = spec.lambda_max - spec.lambda_min;
    if span <= 0.0 {
        return 0;
    }
    (((lambda - spec.lambda_min) / span * 4.0).floor() as i64).clamp(0, 3) as u8
}

fn synth_speaker(spec: &CohortSpec, index: usize, count: usize, seed: u64) -> Result<SynthSpeaker> {
    let mut rng = ChaCha8Rng::seed_from_u64(speaker_seed(seed, index));
    let lambda = if count > 1 {
        spec.lambda_min + (spec.lambda_max - spec.lambda_min) * index as f64 / (count - 1) as f64
    } else {
        spec.lambda_min
    };
    let cs = CentralizationSpec {
        lambda,
        corners: spec.corners,
        center: spec.center,
        jitter_hz: spec.jitter_hz,
    };
    cs.validate()?;
    let targets = cs.targets();
    let fs = spec.sample_rate_hz;
    let f0 = rng.gen_range(110.0..130.0);
    let jitter = Normal::new(0.0, spec.jitter_hz.max(1e-12))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let block = (0.010 * fs as f64).round() as usize;
    let samples = |s: f64| (s * fs as f64).round() as usize;

    let mut voice = Voice::new(fs, f0);
    let mut tokens = Vec::new();
    let mut cursor = 0usize;
    voice.silence(samples(LEAD_S));
    cursor += samples(LEAD_S);
    for _ in 0..spec.tokens_per_vowel {
        for v in Vowel::ALL {
            let (f1_target, f2_target) = targets.get(v);
            let n = samples(rng.gen_range(0.25..0.35));
            let start = cursor;
            let mut done = 0;
            while done < n {
                let len = block.min(n - done);
                let f1 = f1_target + jitter.sample(&mut rng);
                let f2 = f2_target + jitter.sample(&mut rng);
                voice.voiced(len, f1, f2, 80.0, 120.0);
                done += len;
            }
            cursor += n;
            tokens.push(Token {
                vowel: v,
                start_s: start as f64 / fs as f64,
                end_s: cursor as f64 / fs as f64,
            });
            voice.silence(samples(GAP_S));
            cursor += samples(GAP_S);
        }
    }
    voice.silence(samples(LEAD_S - GAP_S));
    let waveform = voice.finish()?;

    let n_frames = frame_count(waveform.duration_s(), FRAME_WINDOW_S, FRAME_HOP_S);
    let noise = Normal::new(0.0, 0.3).expect("valid");
    let mut times = Vec::with_capacity(n_frames);
    let mut logits = Vec::with_capacity(n_frames);
    let mut decoded = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let s = f as f64 * FRAME_HOP_S;
        let e = s + FRAME_WINDOW_S;
        let mut row: LogitRow = [0.0; PHONE_COUNT];
        row.iter_mut().for_each(|x| *x = noise.sample(&mut rng));
        let mut label = SILENCE.to_string();
        if let Some(tok) = tokens.iter().find(|t| s >= t.start_s && e <= t.end_s) {
            let corner = phone_index(corner_label(tok.vowel)).expect("inventory");
            let roll: f64 = rng.gen();
            if roll < 0.65 {
                row[corner] += 6.0;
                label = corner_label(tok.vowel).into();
            } else if roll < 0.9 {
                let nb = neighbour_labels(tok.vowel);
                let l = nb[rng.gen_range(0..nb.len())];
                row[phone_index(l).expect("inventory")] += 6.0;
                row[corner] += 2.0;
                label = l.into();
            } else {
                // Decoded as a consonant; only the posterior criterion can
                // pick this frame up.
                let l = NON_VOWEL_LABELS[rng.gen_range(0..NON_VOWEL_LABELS.len())];
                row[phone_index(l).expect("inventory")] += 5.5;
                row[corner] += 5.0;
                label = l.into();
            }
        } else {
            let c = 0.5 * (s + e);
            if let Some(tok) = tokens.iter().find(|t| c >= t.start_s && c <= t.end_s) {
                row[phone_index(corner_label(tok.vowel)).expect("inventory")] += 1.5;
            }
        }
        times.push((s, e));
        logits.push(row);
        decoded.push(label);
    }
    let posteriorgram = Posteriorgram::new(times, logits, decoded)?;

    let annotations = tokens
        .iter()
        .map(|t| {
            let mid = 0.5 * (t.start_s + t.end_s);
            SegmentAnnotation {
                start_s: mid - ANNOTATION_S / 2.0,
                end_s: mid + ANNOTATION_S / 2.0,
                vowel: t.vowel,
            }
        })
        .collect();

    Ok(SynthSpeaker {
        speaker_id: format!("syn{index:03}"),
        lambda,
        group: if lambda >= spec.patient_from_lambda {
            Group::Patient
        } else {
            Group::Control
        },
        severity_level: severity_level(lambda, spec),
        analytic_vai: cs.analytic_vai(),
        targets,
        waveform,
        posteriorgram,
        annotations,
    })
}

/// `speakers` speakers with lambda evenly spaced over
/// `[lambda_min, lambda_max]`. Deterministic in `seed`.
pub fn synth_cohort(
    spec: &CohortSpec,
    speakers: usize,
    seed: u64,
    exec: Execution,
) -> Result<SynthCohort> {
    if speakers < 2 {
        return Err(Error::InvalidArgument("a cohort needs at least 2 speakers".into()));
    }
    if spec.tokens_per_vowel == 0 {
        return Err(Error::InvalidArgument("tokens_per_vowel must be >= 1".into()));
    }
    let idx: Vec<usize> = (0..speakers).collect();
    let speakers = par::map(exec, &idx, |&i| synth_speaker(spec, i, speakers, seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SynthCohort { speakers })
}

/// Metadata columns written for synthetic cohorts.
pub const SYNTH_METADATA: [&str; 3] = ["lambda", "analytic_vai", "severity_level"];

/// Writes WAVs, posteriorgrams, annotations and `manifest.csv` into `dir`.
pub fn write_cohort(cohort: &SynthCohort, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rows = Vec::new();
    for s in &cohort.speakers {
        let wav = format!("{}.wav", s.speaker_id);
        let pg = format!("{}.pg.csv", s.speaker_id);
        let ann = format!("{}.ann.csv", s.speaker_id);
        write_wav(dir.join(&wav), &s.waveform)?;
        let pg_path = dir.join(&pg);
        let file = std::fs::File::create(&pg_path).map_err(|e| Error::io(&pg_path, e))?;
        let mut w = std::io::BufWriter::new(file);
        write_posteriorgram(&mut w, &s.posteriorgram).map_err(|e| Error::io(&pg_path, e))?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(&pg_path, e))?;
        write_annotations(dir.join(&ann), &s.annotations)?;
        rows.push(ManifestRow {
            speaker_id: s.speaker_id.clone(),
            group: s.group,
            wav_path: wav.into(),
            posteriorgram_path: pg.into(),
            annotation_path: Some(ann.into()),
            metadata: vec![
                Some(s.lambda),
                Some(s.analytic_vai),
                Some(s.severity_level as f64),
            ],
        });
    }
    let manifest = Manifest {
        metadata_columns: SYNTH_METADATA.iter().map(|s| s.to_string()).collect(),
        rows,
        base_dir: dir.to_path_buf(),
    };
    write_manifest(dir.join("manifest.csv"), &manifest)?;
    Ok(manifest)
}
