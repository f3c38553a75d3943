use predmin::analysis::strip_timing;
use predmin::harness::{
    demo_corpus, read_sample_csv, run_corpus, summary_record, trace_path, CorpusSummary, ExpectedPolicy, PlotKind,
    RowStatus, RunConfig, SampleSpec, ValiditySetting,
};
use predmin::oracle::MockOracleSpec;
use predmin::Language;
use std::fs;

fn sample(id: &str, n: usize) -> SampleSpec {
    let mut words = vec!["k1".to_string(), "k2".to_string()];
    words.extend((2..n).map(|i| format!("f{i}")));
    SampleSpec {
        sample_id: id.into(),
        text: words.join(" "),
        language: Language::JavaLike,
        protected_texts: vec![],
        protected_uids: vec![],
        expected_label: None,
    }
}

fn three_samples() -> Vec<SampleSpec> {
    vec![sample("s08", 8), sample("s16", 16), sample("s32", 32)]
}

#[test]
fn average_reduction_over_three_keyset_samples() {
    let report = run_corpus(
        &three_samples(),
        &RunConfig::with_mock(MockOracleSpec::keyset(["k1", "k2"])),
    )
    .unwrap();
    let reduced: Vec<usize> = report.rows.iter().map(|r| r.reduced_size).collect();
    assert_eq!(reduced, [2, 2, 2]);
    let pct = report.summary.reduction_pct.unwrap();
    // (75 + 87.5 + 93.75) / 3
    assert!((pct.avg - 85.416_666_666_666_67).abs() < 1e-9, "{}", pct.avg);
    assert_eq!((pct.min, pct.max), (75.0, 93.75));
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn written_outputs_round_trip_to_the_same_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..RunConfig::with_mock(MockOracleSpec::keyset(["k1", "k2"]))
    };
    let report = run_corpus(&three_samples(), &config).unwrap();

    let rows = read_sample_csv(fs::File::open(dir.path().join("samples.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    let recomputed = CorpusSummary::from_rows(&rows, 0);
    assert_eq!(summary_record(&recomputed), summary_record(&report.summary));

    let mut summary = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap();
    let record = summary.records().next().unwrap().unwrap();
    let written: Vec<String> = record.iter().map(String::from).collect();
    assert_eq!(written, summary_record(&report.summary));

    for s in three_samples() {
        let trace = fs::read_to_string(trace_path(dir.path(), &s.sample_id)).unwrap();
        let last = trace.lines().last().unwrap();
        assert!(last.contains("\"summary\":true"), "{last}");
    }
    for kind in PlotKind::ALL {
        let plot = fs::read_to_string(dir.path().join("plots").join(format!("{}.csv", kind.name()))).unwrap();
        assert_eq!(plot.lines().count(), 4, "{}", kind.name());
    }
}

#[test]
fn empty_corpus_yields_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        out_dir: Some(dir.path().to_path_buf()),
        ..RunConfig::with_mock(MockOracleSpec::keyset(["k1"]))
    };
    let report = run_corpus(&[], &config).unwrap();
    assert!(report.rows.is_empty());
    assert_eq!(report.summary.samples, 0);
    assert!(report.summary.reduction_pct.is_none());
    assert_eq!(report.exit_code(), 0);
    let samples = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1);
}

#[test]
fn label_mismatch_skips_the_sample_without_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = three_samples();
    corpus[1].expected_label = Some("something else".into());
    corpus[2].expected_label = Some("k1,k2".into());
    let config = RunConfig {
        out_dir: Some(dir.path().to_path_buf()),
        expected: ExpectedPolicy::Field,
        ..RunConfig::with_mock(MockOracleSpec::keyset(["k1", "k2"]))
    };
    let report = run_corpus(&corpus, &config).unwrap();
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].sample_id, "s16");
    assert_eq!(report.summary.skipped, 1);
    assert_eq!(report.rows.len(), 2);
    assert!(!trace_path(dir.path(), "s16").exists());
    assert!(trace_path(dir.path(), "s32").exists());
    let skipped = fs::read_to_string(dir.path().join("skipped.csv")).unwrap();
    assert!(skipped.contains("s16"));
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn failing_oracle_marks_rows_failed_and_sets_exit_code() {
    let config = RunConfig {
        oracle: predmin::harness::OracleSpec::Command("exit 1".into()),
        ..RunConfig::with_mock(MockOracleSpec::keyset(["k1"]))
    };
    let report = run_corpus(&three_samples()[..1], &config).unwrap();
    assert_eq!(report.rows[0].status, RowStatus::Failed);
    assert!(report.rows[0].error.is_some());
    assert_eq!(report.summary.failed, 1);
    assert_eq!(report.exit_code(), 2);
}

#[test]
fn parallel_traces_match_serial_traces() {
    let corpus = demo_corpus();
    let spec = MockOracleSpec::ThresholdCount {
        token: "(".into(),
        min_count: 2,
    };
    let serial = run_corpus(&corpus, &RunConfig::with_mock(spec.clone())).unwrap();
    let parallel = run_corpus(
        &corpus,
        &RunConfig {
            workers: 4,
            ..RunConfig::with_mock(spec)
        },
    )
    .unwrap();
    assert_eq!(serial.traces.len(), corpus.len());
    let strip = |traces: &[(String, String)]| -> Vec<(String, String)> {
        traces.iter().map(|(id, t)| (id.clone(), strip_timing(t))).collect()
    };
    assert_eq!(strip(&serial.traces), strip(&parallel.traces));
}

#[test]
fn structural_validity_runs_over_the_demo_corpus() {
    let config = RunConfig {
        validity: ValiditySetting::Structural,
        ..RunConfig::with_mock(MockOracleSpec::ThresholdCount {
            token: "(".into(),
            min_count: 1,
        })
    };
    let report = run_corpus(&demo_corpus(), &config).unwrap();
    assert_eq!(report.exit_code(), 0);
    for row in &report.rows {
        assert!(
            row.dd_preserved <= row.dd_valid && row.dd_valid <= row.dd_total,
            "{row:?}"
        );
    }
}

#[test]
fn use_before_assign_rejected_at_char_granularity() {
    let config = RunConfig {
        granularity: predmin::Granularity::Char,
        ..RunConfig::with_mock(MockOracleSpec::UseBeforeAssign)
    };
    assert!(run_corpus(&demo_corpus(), &config).is_err());
}

#[test]
fn auto_validity_filters_only_java_token_runs() {
    let config = RunConfig {
        validity: ValiditySetting::Auto,
        ..RunConfig::with_mock(MockOracleSpec::ThresholdCount {
            token: "(".into(),
            min_count: 1,
        })
    };
    let report = run_corpus(&demo_corpus(), &config).unwrap();
    let (java, python): (Vec<_>, Vec<_>) = report.rows.iter().partition(|r| r.sample_id.starts_with("java_"));
    assert!(java.iter().any(|r| r.dd_valid < r.dd_total));
    assert!(python.iter().all(|r| r.dd_valid == r.dd_total));
}
