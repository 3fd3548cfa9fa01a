//! Orchestration: per-recording analysis, cohort statistics and reports.
//!
//! The automatic path runs trim, framing, formant tracking, corner-vowel
//! selection and the feature suite on a WAV plus its posteriorgram. The
//! manual path averages formants inside hand-annotated segments. A cohort
//! run does both for every manifest row and adds group comparisons and
//! correlation analyses.

pub mod cohort;
pub mod config;
pub mod manifest;
pub mod recording;
pub mod report;
pub mod svg;

pub use cohort::{run_cohort, summarize, CohortReport, Outcome, SpeakerOutcome};
pub use config::PipelineConfig;
pub use manifest::{
    read_annotations, read_manifest, Group, Manifest, ManifestRow, SegmentAnnotation,
};
pub use recording::{
    analyze_manual, analyze_recording, run_manual, run_recording, AnalysisMethod, RecordingResult,
};
pub use report::{emit_reports, load_results};
