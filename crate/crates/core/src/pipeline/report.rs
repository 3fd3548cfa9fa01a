//! Report files written for a cohort run.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::cohort::{CohortReport, Correlations, FrameCountStats, GroupComparison, Outcome};
use super::recording::AnalysisMethod;
use super::svg;
use crate::error::{Error, Result};
use crate::features::Feature;
use crate::stats::Variance;

/// Column set of `features.csv`.
pub const FEATURE_COLUMNS: [&str; 21] = [
    "speaker_id",
    "group",
    "method",
    "estimator",
    "status",
    "vai",
    "vsa",
    "vsa_e5",
    "fcr",
    "f2i_f2u",
    "f1a",
    "f2a",
    "f1i",
    "f2i",
    "f1u",
    "f2u",
    "n_a",
    "n_i",
    "n_u",
    "error_ratio",
    "error",
];

pub fn features_csv(report: &CohortReport) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(FEATURE_COLUMNS).expect("in-memory write");
    for s in &report.speakers {
        let outcomes = [(AnalysisMethod::Auto, Some(&s.auto)), (AnalysisMethod::Manual, s.manual.as_ref())];
        for (method, outcome) in outcomes {
            let Some(outcome) = outcome else { continue };
            let mut base = vec![s.speaker_id.clone(), s.group.to_string(), method.name().to_string()];
            match outcome {
                Outcome::Ok { result } => {
                    for er in &result.estimators {
                        let f = &er.features;
                        let r = &er.representatives;
                        let u = &result.samples_used;
                        let mut rec = base.clone();
                        rec.extend([
                            f.estimator.to_string(),
                            "ok".to_string(),
                            format!("{:.6}", f.vai),
                            format!("{:.1}", f.vsa),
                            format!("{:.4}", f.vsa * 1e-5),
                            format!("{:.6}", f.fcr),
                            format!("{:.6}", f.f2_ratio),
                            format!("{:.2}", r.f1a),
                            format!("{:.2}", r.f2a),
                            format!("{:.2}", r.f1i),
                            format!("{:.2}", r.f2i),
                            format!("{:.2}", r.f1u),
                            format!("{:.2}", r.f2u),
                            u.a.to_string(),
                            u.i.to_string(),
                            u.u.to_string(),
                            format!("{:.4}", result.error_ratio),
                            String::new(),
                        ]);
                        w.write_record(&rec).expect("in-memory write");
                    }
                }
                Outcome::Failed { error } => {
                    base.push(String::new());
                    base.push("failed".into());
                    base.extend(std::iter::repeat_n(String::new(), FEATURE_COLUMNS.len() - 6));
                    base.push(error.clone());
                    w.write_record(&base).expect("in-memory write");
                }
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Serialize)]
struct GroupStatsFile<'a> {
    variance: Variance,
    bonferroni_m: usize,
    comparisons: &'a [GroupComparison],
}

#[derive(Serialize)]
struct CorrelationsFile<'a> {
    /// How per-group correlations are averaged.
    group_average: &'static str,
    #[serde(flatten)]
    correlations: &'a Correlations,
    frame_counts: &'a Option<FrameCountStats>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn group_stats_json(report: &CohortReport) -> String {
    to_json(&GroupStatsFile {
        variance: report.config.stats.variance,
        bonferroni_m: report.config.estimators.len(),
        comparisons: &report.group_stats,
    })
}

pub fn correlations_json(report: &CohortReport) -> String {
    to_json(&CorrelationsFile {
        group_average: "arithmetic",
        correlations: &report.correlations,
        frame_counts: &report.frame_counts,
    })
}

pub fn results_json(report: &CohortReport) -> String {
    to_json(report)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<CohortReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn safe_name(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Every report file as (relative path, contents), in write order.
pub fn render(report: &CohortReport) -> Result<Vec<(PathBuf, String)>> {
    if report.speakers.is_empty() {
        return Err(Error::InvalidArgument("cohort is empty; no reports written".into()));
    }
    let est = report.config.plot_estimator;
    let mut files = vec![
        (PathBuf::from("features.csv"), features_csv(report)),
        (PathBuf::from("group_stats.json"), group_stats_json(report)),
        (PathBuf::from("correlations.json"), correlations_json(report)),
        (PathBuf::from("results.json"), results_json(report)),
    ];
    let plots = PathBuf::from("plots");
    let mut methods = vec![AnalysisMethod::Auto];
    if report.speakers.iter().any(|s| s.manual.is_some()) {
        methods.push(AnalysisMethod::Manual);
    }
    for &m in &methods {
        files.push((
            plots.join(format!("vowel_space_{}.svg", m.name())),
            svg::cohort_vowel_space(&report.speakers, m, est),
        ));
    }
    for s in &report.speakers {
        let Some(r) = s.auto.result() else { continue };
        let Some(er) = r.get(est) else { continue };
        files.push((
            plots.join(format!("speaker_{}.svg", safe_name(&s.speaker_id))),
            svg::speaker_vowel_space(
                &format!("{} ({est})", s.speaker_id),
                &r.samples,
                &er.representatives,
            ),
        ));
    }
    for (ci, col) in report.metadata_columns.iter().enumerate() {
        for &m in &methods {
            for f in Feature::ALL {
                if let Some(svg) = svg::feature_vs_rating(&report.speakers, ci, col, m, est, f) {
                    files.push((
                        plots.join(format!("{}_{}_vs_{}.svg", m.name(), f.name(), safe_name(col))),
                        svg,
                    ));
                }
            }
        }
    }
    Ok(files)
}

/// Writes all report files under `out_dir`. Nothing is written when the
/// cohort is empty. Returns the written paths.
pub fn emit_reports(report: &CohortReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let files = render(report)?;
    let mut written = Vec::with_capacity(files.len());
    for (rel, contents) in files {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(contents.as_bytes()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
