//! Cohort runs: per-speaker analysis followed by group statistics and
//! correlation analyses.

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::manifest::{read_annotations, Group, Manifest};
use super::recording::{run_manual_with, run_recording_with, AnalysisMethod, RecordingResult};
use crate::error::{Error, Result};
use crate::features::{Estimator, Feature};
use crate::par::{self, Execution};
use crate::stats::{
    bonferroni, group_summary, pearson, significance_stars, unpaired_t, williams_t, PairedSample,
    Summary, Tail, TestResult,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ok { result: RecordingResult },
    Failed { error: String },
}

impl Outcome {
    fn from_result(r: Result<RecordingResult>) -> Self {
        match r {
            Ok(result) => Outcome::Ok { result },
            Err(e) => Outcome::Failed {
                error: e.to_string(),
            },
        }
    }

    pub fn result(&self) -> Option<&RecordingResult> {
        match self {
            Outcome::Ok { result } => Some(result),
            Outcome::Failed { .. } => None,
        }
    }

    pub fn error(&self) -> Option<&str> {
        match self {
            Outcome::Ok { .. } => None,
            Outcome::Failed { error } => Some(error),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeakerOutcome {
    pub speaker_id: String,
    pub group: Group,
    pub metadata: Vec<Option<f64>>,
    pub auto: Outcome,
    /// Present when the manifest row names an annotation file.
    pub manual: Option<Outcome>,
}

impl SpeakerOutcome {
    pub fn get(&self, method: AnalysisMethod) -> Option<&RecordingResult> {
        match method {
            AnalysisMethod::Auto => self.auto.result(),
            AnalysisMethod::Manual => self.manual.as_ref().and_then(Outcome::result),
        }
    }

    fn value(&self, method: AnalysisMethod, est: Estimator, f: Feature) -> Option<f64> {
        self.get(method)?.get(est).map(|r| r.features.get(f))
    }

    pub fn failed(&self) -> bool {
        self.auto.error().is_some() || self.manual.as_ref().is_some_and(|m| m.error().is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub method: AnalysisMethod,
    pub estimator: Estimator,
    pub feature: Feature,
    pub control: Summary,
    pub patient: Summary,
    /// mean(control) − mean(patient).
    pub test: TestResult,
    /// Corrected across estimators of the same feature and method.
    pub p_bonferroni: f64,
    pub stars: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetadataCorrelation {
    pub method: AnalysisMethod,
    pub estimator: Estimator,
    pub feature: Feature,
    pub column: String,
    pub n: usize,
    pub test: TestResult,
    pub p_bonferroni: f64,
    pub stars: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupCorrelation {
    pub group: Group,
    pub n: usize,
    pub test: TestResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoManualCorrelation {
    pub estimator: Estimator,
    pub feature: Feature,
    pub n: usize,
    pub overall: TestResult,
    pub by_group: Vec<GroupCorrelation>,
    /// Arithmetic mean of the per-group r values (no Fisher z).
    pub group_mean_r: Option<f64>,
}

/// Williams' test of corr(auto, rating) against corr(manual, rating).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilliamsComparison {
    pub estimator: Estimator,
    pub feature: Feature,
    pub column: String,
    pub n: usize,
    pub r_auto_rating: f64,
    pub r_manual_rating: f64,
    pub r_auto_manual: f64,
    pub test: TestResult,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub feature_vs_metadata: Vec<MetadataCorrelation>,
    pub auto_vs_manual: Vec<AutoManualCorrelation>,
    pub williams: Vec<WilliamsComparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameCountStats {
    pub a: Summary,
    pub i: Summary,
    pub u: Summary,
    /// Frames selected for at least one vowel.
    pub union: Summary,
    /// Pearson of the union count against analysed speech duration.
    pub vs_duration: Option<TestResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub config: PipelineConfig,
    pub metadata_columns: Vec<String>,
    /// Sorted by speaker_id.
    pub speakers: Vec<SpeakerOutcome>,
    pub group_stats: Vec<GroupComparison>,
    pub correlations: Correlations,
    pub frame_counts: Option<FrameCountStats>,
    pub warnings: Vec<String>,
}

impl CohortReport {
    /// Speakers with at least one failed analysis.
    pub fn failures(&self) -> usize {
        self.speakers.iter().filter(|s| s.failed()).count()
    }
}

/// Runs every manifest row, then [`summarize`]. One failing recording is
/// recorded in its row and never aborts the run.
pub fn run_cohort(manifest: &Manifest, cfg: &PipelineConfig) -> Result<CohortReport> {
    cfg.validate()?;
    if manifest.rows.is_empty() {
        return Err(Error::InvalidArgument("manifest has no speakers".into()));
    }
    // Speakers run concurrently; frames within a speaker run sequentially.
    let inner = Execution::Sequential;
    let mut speakers = par::map(cfg.execution, &manifest.rows, |row| {
        let auto = run_recording_with(
            manifest.resolve(&row.wav_path),
            manifest.resolve(&row.posteriorgram_path),
            cfg,
            inner,
        );
        let manual = row.annotation_path.as_ref().map(|p| {
            let path = manifest.resolve(p);
            let segs = read_annotations(&path);
            Outcome::from_result(
                segs.and_then(|s| run_manual_with(manifest.resolve(&row.wav_path), &s, cfg, inner)),
            )
        });
        SpeakerOutcome {
            speaker_id: row.speaker_id.clone(),
            group: row.group,
            metadata: row.metadata.clone(),
            auto: Outcome::from_result(auto),
            manual,
        }
    });
    speakers.sort_by(|a, b| a.speaker_id.cmp(&b.speaker_id));
    Ok(summarize(speakers, manifest.metadata_columns.clone(), cfg))
}

fn paired(pairs: &[(f64, f64)]) -> Result<PairedSample> {
    PairedSample::new(
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )
}

fn methods(speakers: &[SpeakerOutcome]) -> Vec<AnalysisMethod> {
    let mut out = vec![AnalysisMethod::Auto];
    if speakers.iter().any(|s| s.manual.is_some()) {
        out.push(AnalysisMethod::Manual);
    }
    out
}

/// Cohort statistics over already-analysed speakers.
pub fn summarize(
    speakers: Vec<SpeakerOutcome>,
    metadata_columns: Vec<String>,
    cfg: &PipelineConfig,
) -> CohortReport {
    let mut warnings = Vec::new();
    for s in &speakers {
        if let Some(e) = s.auto.error() {
            warnings.push(format!("{}: {e}", s.speaker_id));
        }
        if let Some(e) = s.manual.as_ref().and_then(Outcome::error) {
            warnings.push(format!("{}: {e}", s.speaker_id));
        }
    }
    let group_stats = group_comparisons(&speakers, cfg, &mut warnings);
    let correlations = correlations(&speakers, &metadata_columns, cfg, &mut warnings);
    let frame_counts = frame_count_stats(&speakers, &mut warnings);
    CohortReport {
        config: cfg.clone(),
        metadata_columns,
        speakers,
        group_stats,
        correlations,
        frame_counts,
        warnings,
    }
}

fn group_comparisons(
    speakers: &[SpeakerOutcome],
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Vec<GroupComparison> {
    let m = cfg.estimators.len();
    let mut out = Vec::new();
    for method in methods(speakers) {
        for feature in Feature::ALL {
            let mut family = Vec::new();
            for &est in &cfg.estimators {
                let values = |g: Group| -> Vec<f64> {
                    speakers
                        .iter()
                        .filter(|s| s.group == g)
                        .filter_map(|s| s.value(method, est, feature))
                        .collect()
                };
                let (c, p) = (values(Group::Control), values(Group::Patient));
                let res = (|| {
                    Ok::<_, Error>((
                        group_summary(&c)?,
                        group_summary(&p)?,
                        unpaired_t(&c, &p, cfg.stats.variance, Tail::TwoSided)?,
                    ))
                })();
                match res {
                    Ok((control, patient, test)) => family.push(GroupComparison {
                        method,
                        estimator: est,
                        feature,
                        control,
                        patient,
                        test,
                        p_bonferroni: test.p_value,
                        stars: String::new(),
                    }),
                    Err(e) => warnings.push(format!(
                        "group test {}/{est}/{feature} skipped: {e}",
                        method.name()
                    )),
                }
            }
            correct(&mut family, m, |g| g.test.p_value, |g, p| {
                g.p_bonferroni = p;
                g.stars = significance_stars(p).to_string();
            });
            out.extend(family);
        }
    }
    out
}

fn correct<T>(items: &mut [T], m: usize, p: impl Fn(&T) -> f64, set: impl Fn(&mut T, f64)) {
    let ps: Vec<f64> = items.iter().map(&p).collect();
    let adj = bonferroni(&ps, m.max(1)).expect("m >= 1");
    for (it, a) in items.iter_mut().zip(adj) {
        set(it, a);
    }
}

fn correlations(
    speakers: &[SpeakerOutcome],
    columns: &[String],
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Correlations {
    let mut out = Correlations::default();
    let m = cfg.estimators.len();

    for (ci, col) in columns.iter().enumerate() {
        let missing = speakers.iter().filter(|s| s.metadata.get(ci).copied().flatten().is_none()).count();
        if missing > 0 {
            warnings.push(format!("column {col}: {missing} speakers without a value skipped"));
        }
        for method in methods(speakers) {
            for feature in Feature::ALL {
                let mut family = Vec::new();
                for &est in &cfg.estimators {
                    let pairs: Vec<(f64, f64)> = speakers
                        .iter()
                        .filter_map(|s| Some((s.value(method, est, feature)?, s.metadata.get(ci).copied().flatten()?)))
                        .collect();
                    match paired(&pairs).and_then(|p| pearson(&p)) {
                        Ok(test) => family.push(MetadataCorrelation {
                            method,
                            estimator: est,
                            feature,
                            column: col.clone(),
                            n: pairs.len(),
                            test,
                            p_bonferroni: test.p_value,
                            stars: String::new(),
                        }),
                        Err(e) => warnings.push(format!(
                            "correlation {}/{est}/{feature} vs {col} skipped: {e}",
                            method.name()
                        )),
                    }
                }
                correct(&mut family, m, |c| c.test.p_value, |c, p| {
                    c.p_bonferroni = p;
                    c.stars = significance_stars(p).to_string();
                });
                out.feature_vs_metadata.extend(family);
            }
        }
    }

    if !methods(speakers).contains(&AnalysisMethod::Manual) {
        return out;
    }
    for &est in &cfg.estimators {
        for feature in Feature::ALL {
            let both = |s: &SpeakerOutcome| {
                Some((
                    s.value(AnalysisMethod::Auto, est, feature)?,
                    s.value(AnalysisMethod::Manual, est, feature)?,
                ))
            };
            let pairs: Vec<(f64, f64)> = speakers.iter().filter_map(both).collect();
            let overall = match paired(&pairs).and_then(|p| pearson(&p)) {
                Ok(t) => t,
                Err(e) => {
                    warnings.push(format!("auto vs manual {est}/{feature} skipped: {e}"));
                    continue;
                }
            };
            let by_group: Vec<GroupCorrelation> = Group::ALL
                .iter()
                .filter_map(|&g| {
                    let gp: Vec<(f64, f64)> =
                        speakers.iter().filter(|s| s.group == g).filter_map(both).collect();
                    let test = paired(&gp).and_then(|p| pearson(&p)).ok()?;
                    Some(GroupCorrelation {
                        group: g,
                        n: gp.len(),
                        test,
                    })
                })
                .collect();
            let group_mean_r = (!by_group.is_empty()).then(|| {
                by_group.iter().map(|g| g.test.statistic).sum::<f64>() / by_group.len() as f64
            });
            out.auto_vs_manual.push(AutoManualCorrelation {
                estimator: est,
                feature,
                n: pairs.len(),
                overall,
                by_group,
                group_mean_r,
            });

            for (ci, col) in columns.iter().enumerate() {
                let triples: Vec<(f64, f64, f64)> = speakers
                    .iter()
                    .filter_map(|s| {
                        let (a, m) = both(s)?;
                        Some((a, m, s.metadata.get(ci).copied().flatten()?))
                    })
                    .collect();
                let r = |f: fn(&(f64, f64, f64)) -> (f64, f64)| -> Result<f64> {
                    let pairs: Vec<(f64, f64)> = triples.iter().map(f).collect();
                    Ok(pearson(&paired(&pairs)?)?.statistic)
                };
                let res = (|| {
                    let r13 = r(|t| (t.0, t.2))?;
                    let r23 = r(|t| (t.1, t.2))?;
                    let r12 = r(|t| (t.0, t.1))?;
                    Ok::<_, Error>((r13, r23, r12, williams_t(r13, r23, r12, triples.len())?))
                })();
                match res {
                    Ok((r13, r23, r12, test)) => out.williams.push(WilliamsComparison {
                        estimator: est,
                        feature,
                        column: col.clone(),
                        n: triples.len(),
                        r_auto_rating: r13,
                        r_manual_rating: r23,
                        r_auto_manual: r12,
                        test,
                    }),
                    Err(e) => warnings.push(format!(
                        "williams test {est}/{feature} vs {col} skipped: {e}"
                    )),
                }
            }
        }
    }
    out
}

fn frame_count_stats(
    speakers: &[SpeakerOutcome],
    warnings: &mut Vec<String>,
) -> Option<FrameCountStats> {
    let rows: Vec<(crate::posterior::SelectionStats, f64)> = speakers
        .iter()
        .filter_map(|s| {
            let r = s.auto.result()?;
            Some((r.selection?, r.duration_s))
        })
        .collect();
    let summary = |f: fn(&crate::posterior::SelectionStats) -> usize| {
        group_summary(&rows.iter().map(|r| f(&r.0) as f64).collect::<Vec<_>>())
    };
    let res = (|| {
        Ok::<_, Error>(FrameCountStats {
            a: summary(|s| s.n_a)?,
            i: summary(|s| s.n_i)?,
            u: summary(|s| s.n_u)?,
            union: summary(|s| s.union)?,
            vs_duration: None,
        })
    })();
    let mut stats = match res {
        Ok(s) => s,
        Err(e) => {
            warnings.push(format!("frame count statistics skipped: {e}"));
            return None;
        }
    };
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.0.union as f64, r.1)).collect();
    match paired(&pairs).and_then(|p| pearson(&p)) {
        Ok(t) => stats.vs_duration = Some(t),
        Err(e) => warnings.push(format!("frame count vs duration skipped: {e}")),
    }
    Some(stats)
}
