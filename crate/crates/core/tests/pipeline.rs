use std::path::Path;

use vowelspace::features::{Estimator, Vowel};
use vowelspace::par::Execution;
use vowelspace::pipeline::{
    analyze_manual, analyze_recording, emit_reports, read_manifest, run_cohort, run_recording,
    summarize, Manifest, PipelineConfig, SegmentAnnotation,
};
use vowelspace::posterior::{phone_index, PhoneSets, Posteriorgram, SILENCE};
use vowelspace::synth::{synth_cohort, write_cohort, CohortSpec, SynthCohort};

fn cohort(speakers: usize, seed: u64) -> SynthCohort {
    synth_cohort(&CohortSpec::default(), speakers, seed, Execution::Parallel).unwrap()
}

fn written(dir: &Path, speakers: usize, seed: u64) -> Manifest {
    write_cohort(&cohort(speakers, seed), dir).unwrap();
    read_manifest(dir.join("manifest.csv")).unwrap()
}

#[test]
fn unshifted_speaker_matches_analytic_vai() {
    let tmp = tempfile::tempdir().unwrap();
    let c = cohort(4, 21);
    write_cohort(&c, tmp.path()).unwrap();
    let s = &c.speakers[0];
    assert_eq!(s.lambda, 0.0);
    let r = run_recording(
        tmp.path().join(format!("{}.wav", s.speaker_id)),
        tmp.path().join(format!("{}.pg.csv", s.speaker_id)),
        &PipelineConfig::default(),
    )
    .unwrap();
    let vai = r.get(Estimator::Mean).unwrap().features.vai;
    assert!((vai - s.analytic_vai).abs() <= 0.05, "{vai} vs {}", s.analytic_vai);
}

#[test]
fn missing_u_frames_fail_naming_u() {
    let c = cohort(2, 3);
    let s = &c.speakers[0];
    let pg = &s.posteriorgram;
    let sets = PhoneSets::default();
    let u: Vec<usize> = sets.u.iter().map(|l| phone_index(l).unwrap()).collect();
    let logits = pg
        .logits()
        .iter()
        .map(|row| {
            let mut row = *row;
            u.iter().for_each(|&j| row[j] = -30.0);
            row
        })
        .collect();
    let decoded = pg
        .decoded()
        .iter()
        .map(|d| if sets.u.contains(d) { SILENCE.to_string() } else { d.clone() })
        .collect();
    let stripped = Posteriorgram::new(pg.frame_times().to_vec(), logits, decoded).unwrap();
    let err = analyze_recording(&s.waveform, &stripped, &PipelineConfig::default(), Execution::Sequential)
        .unwrap_err();
    assert!(err.to_string().contains("/u/"), "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = written(a.path(), 4, 8);
    let mb = written(b.path(), 4, 8);
    let cfg = PipelineConfig::default();
    let seq = PipelineConfig { execution: Execution::Sequential, ..cfg.clone() };
    emit_reports(&run_cohort(&ma, &cfg).unwrap(), a.path().join("out")).unwrap();
    emit_reports(&run_cohort(&mb, &seq).unwrap(), b.path().join("out")).unwrap();
    for f in ["features.csv", "group_stats.json", "correlations.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn failure_is_isolated_to_its_row() {
    let tmp = tempfile::tempdir().unwrap();
    let m = written(tmp.path(), 4, 2);
    std::fs::write(tmp.path().join("syn002.pg.csv"), "garbage\n").unwrap();
    let report = run_cohort(&m, &PipelineConfig::default()).unwrap();
    assert_eq!(report.failures(), 1);
    let bad = report.speakers.iter().find(|s| s.speaker_id == "syn002").unwrap();
    assert!(bad.auto.error().unwrap().contains("syn002.pg.csv"));
    assert!(report.speakers.iter().filter(|s| s.speaker_id != "syn002").all(|s| !s.failed()));
}

#[test]
fn empty_cohort_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let m = written(tmp.path(), 2, 1);
    let mut report = run_cohort(&m, &PipelineConfig::default()).unwrap();
    report.speakers.clear();
    let out = tmp.path().join("out");
    assert!(emit_reports(&report, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn identical_groups_have_zero_t() {
    let tmp = tempfile::tempdir().unwrap();
    let m = written(tmp.path(), 2, 4);
    let cfg = PipelineConfig::default();
    let base = run_cohort(&m, &cfg).unwrap();
    // Every speaker appears once in each group.
    let mut speakers = Vec::new();
    for s in &base.speakers {
        for g in vowelspace::pipeline::Group::ALL {
            let mut x = s.clone();
            x.group = g;
            x.speaker_id = format!("{}_{g}", s.speaker_id);
            speakers.push(x);
        }
    }
    let report = summarize(speakers, base.metadata_columns.clone(), &cfg);
    assert!(!report.group_stats.is_empty());
    for c in &report.group_stats {
        assert!(c.test.statistic.abs() < 1e-9, "{c:?}");
    }
}

#[test]
fn short_segment_warns_but_is_used() {
    let c = cohort(2, 6);
    let s = &c.speakers[0];
    let mut segs: Vec<SegmentAnnotation> = s.annotations.clone();
    let first_u = segs.iter().position(|a| a.vowel == Vowel::U).unwrap();
    let mid = 0.5 * (segs[first_u].start_s + segs[first_u].end_s);
    segs[first_u].start_s = mid - 0.01;
    segs[first_u].end_s = mid + 0.01;
    let r = analyze_manual(&s.waveform, &segs, &PipelineConfig::default(), Execution::Sequential).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("30 ms")), "{:?}", r.warnings);
    let n_u = segs.iter().filter(|a| a.vowel == Vowel::U).count();
    assert_eq!(r.samples_used.u, n_u);
}
