//! Single-recording analysis along the automatic and manual paths.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::manifest::{SegmentAnnotation, MIN_SEGMENT_S};
use crate::audio::{build_grid, load_wav, trim_edges, FrameGrid, Waveform};
use crate::error::{Error, Result};
use crate::features::{feature_suite_from_samples, EstimatorResult, Vowel, VowelSamples};
use crate::formant::{screen_errors, track_formants, FormantTrack};
use crate::par::Execution;
use crate::posterior::{
    read_posteriorgram_with, select_corner_frames, selection_stats, Posteriorgram, ReadOptions,
    SelectionStats,
};

/// Allowed mismatch between the posteriorgram span and the audio length.
pub const SPAN_TOLERANCE_S: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisMethod {
    /// Posteriorgram-driven frame selection.
    Auto,
    /// Hand-annotated segments.
    Manual,
}

impl AnalysisMethod {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisMethod::Auto => "auto",
            AnalysisMethod::Manual => "manual",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VowelCounts {
    pub a: usize,
    pub i: usize,
    pub u: usize,
}

impl VowelCounts {
    fn of(samples: &VowelSamples) -> Self {
        VowelCounts {
            a: samples.a.len(),
            i: samples.i.len(),
            u: samples.u.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordingResult {
    pub method: AnalysisMethod,
    /// One entry per configured estimator, in config order.
    pub estimators: Vec<EstimatorResult>,
    /// Frame selection counts. Automatic path only.
    pub selection: Option<SelectionStats>,
    /// Points that entered aggregation: valid frames (auto) or segments
    /// (manual).
    pub samples_used: VowelCounts,
    /// Analysed frames with a valid F1/F2.
    pub valid_frames: usize,
    pub flagged_frames: usize,
    /// flagged / valid.
    pub error_ratio: f64,
    /// Length of the analysed speech, seconds.
    pub duration_s: f64,
    pub warnings: Vec<String>,
    /// (F1, F2) points behind the representatives, for plotting.
    pub samples: VowelSamples,
}

impl RecordingResult {
    pub fn get(&self, est: crate::features::Estimator) -> Option<&EstimatorResult> {
        self.estimators.iter().find(|r| r.features.estimator == est)
    }
}

fn check_span(wav: &Waveform, pg: &Posteriorgram) -> Result<()> {
    let (Some(first), Some(last)) = (pg.frame_times().first(), pg.frame_times().last()) else {
        return Err(Error::InvalidArgument("posteriorgram has no frames".into()));
    };
    let dur = wav.end_s();
    if first.0 < wav.start_s() - SPAN_TOLERANCE_S || (last.1 - dur).abs() > SPAN_TOLERANCE_S {
        return Err(Error::InvalidArgument(format!(
            "posteriorgram spans {:.3}-{:.3} s but the audio is {:.3} s long",
            first.0, last.1, dur
        )));
    }
    Ok(())
}

/// Automatic path on in-memory inputs.
///
/// Frames are the posteriorgram frames whose windows lie inside the trimmed
/// speech extent; formants are estimated at the same centres so the two
/// streams align index for index.
pub fn analyze_recording(
    wav: &Waveform,
    pg: &Posteriorgram,
    cfg: &PipelineConfig,
    exec: Execution,
) -> Result<RecordingResult> {
    cfg.validate()?;
    check_span(wav, pg)?;
    let mut warnings = Vec::new();
    if pg.decoded_derived() {
        warnings.push("decoded sequence derived from logits".to_string());
    }
    let sets_cfg = cfg.effective_phone_sets();
    let unknown = sets_cfg.unknown_labels();
    if !unknown.is_empty() {
        warnings.push(format!(
            "phone set labels without a logit column: {}",
            unknown.join(",")
        ));
    }

    let (lo, hi) = if cfg.audio.trim {
        let t = trim_edges(wav, cfg.audio.trim_threshold_db)?;
        (t.start_s(), t.end_s())
    } else {
        (wav.start_s(), wav.end_s())
    };
    const EPS: f64 = 1e-6;
    let inside: Vec<usize> = (0..pg.len())
        .filter(|&i| {
            let (s, e) = pg.frame_times()[i];
            s >= lo - EPS && e <= hi + EPS
        })
        .collect();
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return Err(Error::SignalTooShort {
            duration_s: hi - lo,
            window_s: cfg.audio.window_s,
        });
    };
    let pg = pg.slice(first..last + 1);
    let (s0, e0) = pg.frame_times()[0];
    let window = e0 - s0;
    let grid = FrameGrid::uniform(s0, window, cfg.audio.hop_s, pg.len())?;

    let track = track_formants(wav, &grid, &cfg.formant, exec)?;
    warnings.extend(track.warnings.iter().cloned());
    let sets = select_corner_frames(&pg, &sets_cfg, &cfg.selection);
    let screening = screen_errors(&track, &cfg.screening.boundary());
    let exclude = cfg.screening.exclude_flagged.then_some(screening.flags.as_slice());
    let samples = crate::features::collect_samples(&track, &sets, exclude);
    let estimators = feature_suite_from_samples(&samples, &cfg.estimators)?;

    Ok(RecordingResult {
        method: AnalysisMethod::Auto,
        estimators,
        selection: Some(selection_stats(&sets)),
        samples_used: VowelCounts::of(&samples),
        valid_frames: screening.valid,
        flagged_frames: screening.flagged,
        error_ratio: screening.ratio,
        duration_s: hi - lo,
        warnings,
        samples,
    })
}

pub fn run_recording(
    wav_path: impl AsRef<Path>,
    posteriorgram_path: impl AsRef<Path>,
    cfg: &PipelineConfig,
) -> Result<RecordingResult> {
    run_recording_with(wav_path, posteriorgram_path, cfg, cfg.execution)
}

pub(crate) fn run_recording_with(
    wav_path: impl AsRef<Path>,
    posteriorgram_path: impl AsRef<Path>,
    cfg: &PipelineConfig,
    exec: Execution,
) -> Result<RecordingResult> {
    let wav_path = wav_path.as_ref();
    let pg_path = posteriorgram_path.as_ref();
    let context = format!("recording {}", wav_path.display());
    let inner = || -> Result<RecordingResult> {
        let wav = load_wav(wav_path)?;
        let opts = ReadOptions {
            allow_missing_decoded: cfg.allow_missing_decoded,
        };
        let (pg, pg_warnings) = read_posteriorgram_with(pg_path, opts)?;
        let mut res = analyze_recording(&wav, &pg, cfg, exec)?;
        res.warnings.splice(0..0, pg_warnings);
        Ok(res)
    };
    inner().map_err(|e| e.context(context))
}

/// Manual path on in-memory inputs.
///
/// Each segment is reduced to the mean of its valid frames on a dense grid;
/// every estimator then runs over the per-segment means.
pub fn analyze_manual(
    wav: &Waveform,
    segments: &[SegmentAnnotation],
    cfg: &PipelineConfig,
    exec: Execution,
) -> Result<RecordingResult> {
    cfg.validate()?;
    for v in Vowel::ALL {
        if !segments.iter().any(|s| s.vowel == v) {
            return Err(Error::EmptyVowel(v).context("no annotated segments"));
        }
    }
    let mut warnings = Vec::new();
    for s in segments {
        if s.duration_s() < MIN_SEGMENT_S - 1e-9 {
            warnings.push(format!(
                "/{}/ segment at {:.3} s is shorter than {} ms",
                s.vowel,
                s.start_s,
                (MIN_SEGMENT_S * 1000.0).round()
            ));
        }
    }
    let grid = build_grid(wav, cfg.audio.window_s, cfg.manual.hop_s)?;
    let track = track_formants(wav, &grid, &cfg.formant, exec)?;
    let screening = screen_errors(&track, &cfg.screening.boundary());

    let mut samples = VowelSamples::default();
    let (mut valid, mut flagged) = (0, 0);
    for s in segments {
        let mut sum = (0.0, 0.0);
        let mut n = 0usize;
        for (t, frame) in frames_in(&track, s).into_iter() {
            let Some(p) = frame else { continue };
            valid += 1;
            if screening.flags[t] {
                flagged += 1;
                if cfg.screening.exclude_flagged {
                    continue;
                }
            }
            sum.0 += p.f1_hz;
            sum.1 += p.f2_hz;
            n += 1;
        }
        if n == 0 {
            warnings.push(format!(
                "/{}/ segment {:.3}-{:.3} s has no valid formant frames",
                s.vowel, s.start_s, s.end_s
            ));
            continue;
        }
        samples
            .get_mut(s.vowel)
            .push((sum.0 / n as f64, sum.1 / n as f64));
    }
    let estimators = feature_suite_from_samples(&samples, &cfg.estimators)?;
    warnings.extend(track.warnings.iter().cloned());
    let duration_s = segments.iter().map(SegmentAnnotation::duration_s).sum();
    Ok(RecordingResult {
        method: AnalysisMethod::Manual,
        estimators,
        selection: None,
        samples_used: VowelCounts::of(&samples),
        valid_frames: valid,
        flagged_frames: flagged,
        error_ratio: if valid > 0 { flagged as f64 / valid as f64 } else { 0.0 },
        duration_s,
        warnings,
        samples,
    })
}

/// Frames whose centre falls inside the segment, or the nearest frame when
/// the segment is shorter than one hop.
fn frames_in(
    track: &FormantTrack,
    s: &SegmentAnnotation,
) -> Vec<(usize, Option<crate::formant::FormantPair>)> {
    let frames = &track.frames;
    let mut out: Vec<_> = frames
        .iter()
        .enumerate()
        .filter(|(_, f)| f.center_s >= s.start_s - 1e-9 && f.center_s <= s.end_s + 1e-9)
        .map(|(t, f)| (t, f.formants))
        .collect();
    if out.is_empty() && !frames.is_empty() {
        let mid = 0.5 * (s.start_s + s.end_s);
        let t = (0..frames.len())
            .min_by(|&a, &b| {
                (frames[a].center_s - mid)
                    .abs()
                    .total_cmp(&(frames[b].center_s - mid).abs())
            })
            .expect("nonempty");
        out.push((t, frames[t].formants));
    }
    out
}

pub fn run_manual(
    wav_path: impl AsRef<Path>,
    segments: &[SegmentAnnotation],
    cfg: &PipelineConfig,
) -> Result<RecordingResult> {
    run_manual_with(wav_path, segments, cfg, cfg.execution)
}

pub(crate) fn run_manual_with(
    wav_path: impl AsRef<Path>,
    segments: &[SegmentAnnotation],
    cfg: &PipelineConfig,
    exec: Execution,
) -> Result<RecordingResult> {
    let wav_path = wav_path.as_ref();
    load_wav(wav_path)
        .and_then(|wav| analyze_manual(&wav, segments, cfg, exec))
        .map_err(|e| e.context(format!("manual analysis of {}", wav_path.display())))
}
