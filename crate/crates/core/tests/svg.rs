use vowelspace::par::Execution;
use vowelspace::pipeline::{emit_reports, read_manifest, run_cohort, PipelineConfig};
use vowelspace::synth::{synth_cohort, write_cohort, CohortSpec};

#[test]
fn plots_are_well_formed() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = CohortSpec { tokens_per_vowel: 1, ..CohortSpec::default() };
    let c = synth_cohort(&spec, 4, 17, Execution::Parallel).unwrap();
    write_cohort(&c, tmp.path().join("data")).unwrap();
    let m = read_manifest(tmp.path().join("data/manifest.csv")).unwrap();
    let report = run_cohort(&m, &PipelineConfig::default()).unwrap();
    let files = emit_reports(&report, tmp.path().join("out")).unwrap();
    let svgs: Vec<_> = files.iter().filter(|p| p.extension().is_some_and(|e| e == "svg")).collect();
    assert!(svgs.len() > 4);
    let mut regressions = 0;
    for path in svgs {
        let text = std::fs::read_to_string(path).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let name = path.file_name().unwrap().to_str().unwrap();
        if name.contains("_vs_") {
            let lines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
            assert_eq!(lines, 1, "{name}");
            regressions += 1;
        }
    }
    assert!(regressions > 0);
}
