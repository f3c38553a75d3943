//! Corpus driver: per-sample reductions, traces, and summary tables.

use crate::analysis::{overlap_report, reduction_ratio, relative_reduction, write_trace};
use crate::granularity::{tokenize, BuiltinSplitter, Granularity, Language, UnitSplitter};
use crate::oracle::http::HttpOracle;
use crate::oracle::subprocess::SubprocessOracle;
use crate::oracle::{MockOracleSpec, MockView, OracleClient};
use crate::reduction::{ddmin, ReductionConfig, ReductionError, ReductionResult};
use crate::unit::{AtomicUnit, ProgramSlice, Uid};
use crate::validity::ValidityPolicy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Bundled hand-written corpus of java_like and python_like snippets.
pub const DEMO_CORPUS: &str = include_str!("../data/demo_corpus.jsonl");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub sample_id: String,
    pub text: String,
    pub language: Language,
    /// Every token occurrence with one of these texts is protected.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protected_texts: Vec<String>,
    /// Explicit unit uids (at the run's granularity) to protect.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub protected_uids: Vec<Uid>,
    /// Label to preserve instead of the oracle's prediction on the full text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn parse_corpus(jsonl: &str) -> Result<Vec<SampleSpec>, HarnessError> {
    let mut samples = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sample: SampleSpec = serde_json::from_str(line).map_err(|e| HarnessError::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(sample.sample_id.clone()) {
            return Err(HarnessError::Corpus {
                line: i + 1,
                message: format!("duplicate sample_id {:?}", sample.sample_id),
            });
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn load_corpus(path: &Path) -> Result<Vec<SampleSpec>, HarnessError> {
    let file = fs::File::open(path)?;
    let mut text = String::new();
    for line in io::BufReader::new(file).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_corpus(&text)
}

pub fn demo_corpus() -> Vec<SampleSpec> {
    parse_corpus(DEMO_CORPUS).expect("bundled corpus parses")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Mock(MockOracleSpec),
    Command(String),
    Url(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValiditySetting {
    /// Structural for java_like samples at token granularity, none otherwise.
    Auto,
    None,
    /// Structural check in the sample's own language.
    Structural,
    Command(String),
}

impl FromStr for ValiditySetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ValiditySetting::Auto),
            "none" => Ok(ValiditySetting::None),
            "structural" => Ok(ValiditySetting::Structural),
            _ => match s.strip_prefix("cmd:") {
                Some(cmd) if !cmd.is_empty() => Ok(ValiditySetting::Command(cmd.to_string())),
                _ => Err(format!(
                    "validity must be auto, none, structural, or cmd:<path>; got {s:?}"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpectedPolicy {
    /// Preserve whatever the oracle predicts on the full text.
    #[default]
    FromOracle,
    /// Preserve the sample's `expected_label`; samples whose full-text
    /// prediction differs are skipped.
    Field,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub granularity: Granularity,
    pub oracle: OracleSpec,
    pub validity: ValiditySetting,
    /// Texts protected in every sample.
    pub protect: Vec<String>,
    pub workers: usize,
    pub out_dir: Option<PathBuf>,
    pub max_oracle_calls: Option<u64>,
    pub expected: ExpectedPolicy,
}

impl RunConfig {
    pub fn with_mock(spec: MockOracleSpec) -> Self {
        Self {
            granularity: Granularity::Token,
            oracle: OracleSpec::Mock(spec),
            validity: ValiditySetting::None,
            protect: Vec::new(),
            workers: 1,
            out_dir: None,
            max_oracle_calls: None,
            expected: ExpectedPolicy::FromOracle,
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        if self.workers < 1 {
            return Err(HarnessError::Config("workers must be at least 1".into()));
        }
        if self.max_oracle_calls == Some(0) {
            return Err(HarnessError::Config("max oracle calls must be at least 1".into()));
        }
        if self.granularity != Granularity::Token && self.oracle == OracleSpec::Mock(MockOracleSpec::UseBeforeAssign) {
            return Err(HarnessError::Config("use_before_assign needs token granularity".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Reduced,
    Failed,
}

/// Per-sample result row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub sample_id: String,
    pub status: RowStatus,
    pub original_size: usize,
    pub reduced_size: usize,
    pub protected_size: usize,
    pub reduction_pct: f64,
    pub relative_reduction_pct: Option<f64>,
    pub dd_total: u64,
    pub dd_valid: u64,
    pub dd_preserved: u64,
    pub dd_raw_attempts: u64,
    pub oracle_time_s: f64,
    pub wall_time_s: f64,
    /// Attention overlap as a ratio in [0,1], when the oracle reports attention.
    pub overlap: Option<f64>,
    pub final_score: f64,
    pub budget_exhausted: bool,
    pub error: Option<String>,
}

impl SampleRow {
    fn failed(sample_id: &str, error: String) -> Self {
        Self {
            sample_id: sample_id.to_string(),
            status: RowStatus::Failed,
            original_size: 0,
            reduced_size: 0,
            protected_size: 0,
            reduction_pct: 0.0,
            relative_reduction_pct: None,
            dd_total: 0,
            dd_valid: 0,
            dd_preserved: 0,
            dd_raw_attempts: 0,
            oracle_time_s: 0.0,
            wall_time_s: 0.0,
            overlap: None,
            final_score: 0.0,
            budget_exhausted: false,
            error: Some(error),
        }
    }

    pub fn removed(&self) -> usize {
        self.original_size - self.reduced_size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSample {
    pub sample_id: String,
    pub reason: String,
}

/// Min / mean / max of a column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl Spread {
    pub fn of<I: IntoIterator<Item = f64>>(values: I) -> Option<Self> {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return None;
        }
        Some(Spread {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            avg: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// One summary row over the reduced samples of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub samples: usize,
    pub reduced: usize,
    pub skipped: usize,
    pub failed: usize,
    pub original_size: Option<Spread>,
    pub reduced_size: Option<Spread>,
    pub reduction_pct: Option<Spread>,
    pub relative_reduction_pct: Option<Spread>,
    pub overlap_pct: Option<Spread>,
    pub dd_total_avg: Option<f64>,
    pub dd_valid_avg: Option<f64>,
    pub dd_preserved_avg: Option<f64>,
    pub wall_time_s: Option<Spread>,
}

impl CorpusSummary {
    /// Aggregates the `Reduced` rows; skip counts come from the caller.
    pub fn from_rows(rows: &[SampleRow], skipped: usize) -> Self {
        let ok: Vec<&SampleRow> = rows.iter().filter(|r| r.status == RowStatus::Reduced).collect();
        let avg = |f: fn(&SampleRow) -> f64| Spread::of(ok.iter().map(|r| f(r))).map(|s| s.avg);
        CorpusSummary {
            samples: rows.len() + skipped,
            reduced: ok.len(),
            skipped,
            failed: rows.len() - ok.len(),
            original_size: Spread::of(ok.iter().map(|r| r.original_size as f64)),
            reduced_size: Spread::of(ok.iter().map(|r| r.reduced_size as f64)),
            reduction_pct: Spread::of(ok.iter().map(|r| r.reduction_pct)),
            relative_reduction_pct: Spread::of(ok.iter().filter_map(|r| r.relative_reduction_pct)),
            overlap_pct: Spread::of(ok.iter().filter_map(|r| r.overlap.map(|o| 100.0 * o))),
            dd_total_avg: avg(|r| r.dd_total as f64),
            dd_valid_avg: avg(|r| r.dd_valid as f64),
            dd_preserved_avg: avg(|r| r.dd_preserved as f64),
            wall_time_s: Spread::of(ok.iter().map(|r| r.wall_time_s)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusReport {
    /// Reduced and failed rows, sorted by sample_id.
    pub rows: Vec<SampleRow>,
    pub skipped: Vec<SkippedSample>,
    pub summary: CorpusSummary,
    /// Trace JSON-lines per reduced sample, sorted by sample_id.
    pub traces: Vec<(String, String)>,
}

impl CorpusReport {
    /// 0 when every processed sample reduced, 2 when any failed.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed > 0 {
            2
        } else {
            0
        }
    }
}

enum SampleOutcome {
    Reduced(SampleRow, String),
    Skipped(SkippedSample),
    Failed(SampleRow),
}

struct Worker {
    external: Option<OracleClient>,
}

impl Worker {
    fn client(&mut self, config: &RunConfig, language: Language, original_len: usize) -> OracleClient {
        match &config.oracle {
            OracleSpec::Mock(spec) => {
                let view = match config.granularity {
                    Granularity::Token => MockView::Units,
                    _ => MockView::Relex(language),
                };
                OracleClient::new(spec.instantiate(view, original_len))
            }
            OracleSpec::Command(cmd) => self
                .external
                .take()
                .unwrap_or_else(|| OracleClient::new(SubprocessOracle::new(cmd.clone()))),
            OracleSpec::Url(url) => self
                .external
                .take()
                .unwrap_or_else(|| OracleClient::new(HttpOracle::new(url))),
        }
    }

    fn give_back(&mut self, client: OracleClient, config: &RunConfig) {
        if !matches!(config.oracle, OracleSpec::Mock(_)) {
            self.external = Some(client);
        }
    }
}

/// Uids of units covered by any token occurrence whose text is in `texts`.
pub fn protected_uids_for_texts(
    text: &str,
    language: Language,
    units: &[AtomicUnit],
    texts: &BTreeSet<String>,
) -> BTreeSet<Uid> {
    if texts.is_empty() {
        return BTreeSet::new();
    }
    let tokens = match tokenize(text, language) {
        Ok(t) => t,
        Err(e) => {
            log::warn!("cannot lex text to locate protected tokens: {e}");
            return BTreeSet::new();
        }
    };
    let spans: Vec<(usize, usize)> = tokens
        .iter()
        .filter(|t| texts.contains(&t.text))
        .map(|t| (t.offset, t.offset + t.text.len()))
        .collect();
    units
        .iter()
        .filter(|u| {
            let (start, end) = (u.offset, u.offset + u.text.len());
            spans.iter().any(|&(s, e)| start < e && s < end)
        })
        .map(|u| u.uid)
        .collect()
}

fn run_sample(sample: &SampleSpec, config: &RunConfig, worker: &mut Worker) -> SampleOutcome {
    let splitter = BuiltinSplitter {
        granularity: config.granularity,
        language: sample.language,
    };
    let units = match splitter.split(&sample.text) {
        Ok(u) => u,
        Err(e) => return SampleOutcome::Failed(SampleRow::failed(&sample.sample_id, e.to_string())),
    };
    let protect_texts: BTreeSet<String> = config
        .protect
        .iter()
        .chain(sample.protected_texts.iter())
        .cloned()
        .collect();
    let mut protected = protected_uids_for_texts(&sample.text, sample.language, &units, &protect_texts);
    protected.extend(sample.protected_uids.iter().copied());

    let program = match ProgramSlice::new(units) {
        Ok(p) => p,
        Err(e) => return SampleOutcome::Failed(SampleRow::failed(&sample.sample_id, e.to_string())),
    };
    let setting = match &config.validity {
        ValiditySetting::Auto if config.granularity == Granularity::Token && sample.language == Language::JavaLike => {
            &ValiditySetting::Structural
        }
        ValiditySetting::Auto => &ValiditySetting::None,
        other => other,
    };
    let validity = match setting {
        ValiditySetting::Auto | ValiditySetting::None => ValidityPolicy::none(),
        ValiditySetting::Structural => ValidityPolicy::structural(sample.language),
        ValiditySetting::Command(cmd) => ValidityPolicy::external(cmd.clone()),
    };
    let reduction_config = ReductionConfig {
        protected_uids: protected,
        require_valid: !matches!(setting, ValiditySetting::Auto | ValiditySetting::None),
        validity,
        max_oracle_calls: config.max_oracle_calls,
        reference_label: match config.expected {
            ExpectedPolicy::FromOracle => None,
            ExpectedPolicy::Field => sample.expected_label.clone(),
        },
        ..Default::default()
    };

    let mut client = worker.client(config, sample.language, program.len());
    let outcome = ddmin(&mut client, &program, &reduction_config);
    worker.give_back(client, config);

    match outcome {
        Ok(result) => {
            let row = row_for(&sample.sample_id, &program, &result);
            let mut trace = Vec::new();
            write_trace(&result, &mut trace).expect("writing to memory cannot fail");
            SampleOutcome::Reduced(row, String::from_utf8(trace).expect("trace is UTF-8"))
        }
        Err(ReductionError::ReferenceMismatch { expected, actual }) => SampleOutcome::Skipped(SkippedSample {
            sample_id: sample.sample_id.clone(),
            reason: format!("initial prediction {actual:?} differs from expected {expected:?}"),
        }),
        Err(e) => {
            log::error!("sample {}: {e}", sample.sample_id);
            SampleOutcome::Failed(SampleRow::failed(&sample.sample_id, e.to_string()))
        }
    }
}

fn row_for(sample_id: &str, program: &ProgramSlice, result: &ReductionResult) -> SampleRow {
    let original = program.len();
    let reduced = result.minimal.len();
    let overlap = result
        .reference
        .attention
        .as_ref()
        .and_then(|attn| overlap_report(program.units(), attn, result.minimal.units()).ok())
        .map(|r| r.overlap);
    SampleRow {
        sample_id: sample_id.to_string(),
        status: RowStatus::Reduced,
        original_size: original,
        reduced_size: reduced,
        protected_size: result.protected_count,
        reduction_pct: reduction_ratio(original, reduced).unwrap_or(0.0),
        relative_reduction_pct: relative_reduction(original, reduced, result.protected_count).ok(),
        dd_total: result.stats.total,
        dd_valid: result.stats.valid,
        dd_preserved: result.stats.preserved,
        dd_raw_attempts: result.stats.raw_attempts,
        oracle_time_s: result.stats.oracle_time,
        wall_time_s: result.wall_time,
        overlap,
        final_score: result.final_score(),
        budget_exhausted: result.budget_exhausted,
        error: None,
    }
}

/// Runs every sample and aggregates; writes files when `out_dir` is set.
pub fn run_corpus(corpus: &[SampleSpec], config: &RunConfig) -> Result<CorpusReport, HarnessError> {
    config.check()?;
    if corpus.is_empty() {
        log::warn!("corpus is empty; nothing to reduce");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let outcomes: Vec<SampleOutcome> = pool.install(|| {
        corpus
            .par_iter()
            .map_init(
                || Worker { external: None },
                |worker, sample| run_sample(sample, config, worker),
            )
            .collect()
    });

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut traces = Vec::new();
    for outcome in outcomes {
        match outcome {
            SampleOutcome::Reduced(row, trace) => {
                traces.push((row.sample_id.clone(), trace));
                rows.push(row);
            }
            SampleOutcome::Failed(row) => rows.push(row),
            SampleOutcome::Skipped(s) => {
                log::info!("skipping {}: {}", s.sample_id, s.reason);
                skipped.push(s);
            }
        }
    }
    rows.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    skipped.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    traces.sort_by(|a, b| a.0.cmp(&b.0));
    let summary = CorpusSummary::from_rows(&rows, skipped.len());
    let report = CorpusReport {
        rows,
        skipped,
        summary,
        traces,
    };
    if let Some(dir) = &config.out_dir {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

/// Shortest round-tripping decimal; `90.0`, `3.2`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub const SAMPLE_COLUMNS: [&str; 12] = [
    "sample_id",
    "original_size",
    "reduced_size",
    "reduction_pct",
    "relative_reduction_pct",
    "dd_total",
    "dd_valid",
    "dd_preserved",
    "oracle_time_s",
    "wall_time_s",
    "overlap",
    "status",
];

pub fn write_sample_csv<W: Write>(rows: &[SampleRow], sink: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SAMPLE_COLUMNS)?;
    for r in rows {
        let reduced = r.status == RowStatus::Reduced;
        let num = |s: String| if reduced { s } else { String::new() };
        w.write_record([
            r.sample_id.clone(),
            num(r.original_size.to_string()),
            num(r.reduced_size.to_string()),
            num(fmt_f64(r.reduction_pct)),
            opt(r.relative_reduction_pct),
            num(r.dd_total.to_string()),
            num(r.dd_valid.to_string()),
            num(r.dd_preserved.to_string()),
            num(fmt_f64(r.oracle_time_s)),
            num(fmt_f64(r.wall_time_s)),
            opt(r.overlap),
            match r.status {
                RowStatus::Reduced => "reduced".into(),
                RowStatus::Failed => format!("failed: {}", r.error.as_deref().unwrap_or("")),
            },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_sample_csv`]; failed rows keep only id and status.
pub fn read_sample_csv<R: io::Read>(source: R) -> Result<Vec<SampleRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(source);
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |i: usize| HarnessError::Corpus {
            line: rows.len() + 2,
            message: format!("bad value {:?} in column {}", field(i), SAMPLE_COLUMNS[i]),
        };
        let status = field(11);
        if status != "reduced" {
            rows.push(SampleRow::failed(
                field(0),
                status.trim_start_matches("failed: ").to_string(),
            ));
            continue;
        }
        let int = |i: usize| field(i).parse::<u64>().map_err(|_| bad(i));
        let float = |i: usize| field(i).parse::<f64>().map_err(|_| bad(i));
        let opt_float = |i: usize| {
            if field(i).is_empty() {
                Ok(None)
            } else {
                float(i).map(Some)
            }
        };
        let original_size = int(1)? as usize;
        let reduced_size = int(2)? as usize;
        rows.push(SampleRow {
            sample_id: field(0).to_string(),
            status: RowStatus::Reduced,
            original_size,
            reduced_size,
            protected_size: 0,
            reduction_pct: float(3)?,
            relative_reduction_pct: opt_float(4)?,
            dd_total: int(5)?,
            dd_valid: int(6)?,
            dd_preserved: int(7)?,
            dd_raw_attempts: 0,
            oracle_time_s: float(8)?,
            wall_time_s: float(9)?,
            overlap: opt_float(10)?,
            final_score: 0.0,
            budget_exhausted: false,
            error: None,
        });
    }
    Ok(rows)
}

pub const SUMMARY_COLUMNS: [&str; 25] = [
    "samples",
    "reduced",
    "skipped",
    "failed",
    "original_size_min",
    "original_size_avg",
    "original_size_max",
    "reduced_size_min",
    "reduced_size_avg",
    "reduced_size_max",
    "reduction_pct_min",
    "reduction_pct_avg",
    "reduction_pct_max",
    "relative_reduction_pct_min",
    "relative_reduction_pct_avg",
    "relative_reduction_pct_max",
    "overlap_pct_min",
    "overlap_pct_avg",
    "overlap_pct_max",
    "dd_total_avg",
    "dd_valid_avg",
    "dd_preserved_avg",
    "wall_time_s_min",
    "wall_time_s_avg",
    "wall_time_s_max",
];

pub fn summary_record(s: &CorpusSummary) -> Vec<String> {
    let mut out = vec![
        s.samples.to_string(),
        s.reduced.to_string(),
        s.skipped.to_string(),
        s.failed.to_string(),
    ];
    for spread in [
        s.original_size,
        s.reduced_size,
        s.reduction_pct,
        s.relative_reduction_pct,
        s.overlap_pct,
    ] {
        out.extend([
            opt(spread.map(|x| x.min)),
            opt(spread.map(|x| x.avg)),
            opt(spread.map(|x| x.max)),
        ]);
    }
    out.extend([opt(s.dd_total_avg), opt(s.dd_valid_avg), opt(s.dd_preserved_avg)]);
    let t = s.wall_time_s;
    out.extend([opt(t.map(|x| x.min)), opt(t.map(|x| x.avg)), opt(t.map(|x| x.max))]);
    out
}

pub fn write_summary_csv<W: Write>(summary: &CorpusSummary, sink: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SUMMARY_COLUMNS)?;
    w.write_record(summary_record(summary))?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// initial size vs final size
    SizeVsFinal,
    /// initial size vs reduction percentage
    PctVsSize,
    /// reduction percentage vs final score
    ScoreVsReduction,
    /// units removed vs wall time
    TimeVsRemoved,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::SizeVsFinal,
        PlotKind::PctVsSize,
        PlotKind::ScoreVsReduction,
        PlotKind::TimeVsRemoved,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::SizeVsFinal => "size_vs_final",
            PlotKind::PctVsSize => "pct_vs_size",
            PlotKind::ScoreVsReduction => "score_vs_reduction",
            PlotKind::TimeVsRemoved => "time_vs_removed",
        }
    }

    fn header(&self) -> [&'static str; 3] {
        match self {
            PlotKind::SizeVsFinal => ["sample_id", "initial_size", "final_size"],
            PlotKind::PctVsSize => ["sample_id", "initial_size", "reduction_pct"],
            PlotKind::ScoreVsReduction => ["sample_id", "reduction_pct", "final_score"],
            PlotKind::TimeVsRemoved => ["sample_id", "removed_units", "wall_time_s"],
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown plot kind {s:?}"))
    }
}

/// Plot-ready CSV for one figure; values are not transformed.
pub fn emit_plot_data<W: Write>(rows: &[SampleRow], kind: PlotKind, sink: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(kind.header())?;
    for r in rows.iter().filter(|r| r.status == RowStatus::Reduced) {
        let (x, y) = match kind {
            PlotKind::SizeVsFinal => (r.original_size.to_string(), r.reduced_size.to_string()),
            PlotKind::PctVsSize => (r.original_size.to_string(), fmt_f64(r.reduction_pct)),
            PlotKind::ScoreVsReduction => (fmt_f64(r.reduction_pct), fmt_f64(r.final_score)),
            PlotKind::TimeVsRemoved => (r.removed().to_string(), fmt_f64(r.wall_time_s)),
        };
        w.write_record([r.sample_id.as_str(), &x, &y])?;
    }
    w.flush()?;
    Ok(())
}

fn file_stem(sample_id: &str) -> String {
    sample_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn trace_path(out_dir: &Path, sample_id: &str) -> PathBuf {
    out_dir.join("traces").join(format!("{}.jsonl", file_stem(sample_id)))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, HarnessError> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Layout: `samples.csv`, `summary.csv`, `skipped.csv`,
/// `traces/<id>.jsonl`, `plots/<kind>.csv`.
pub fn write_outputs(report: &CorpusReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir.join("traces"))?;
    fs::create_dir_all(dir.join("plots"))?;
    for (id, trace) in &report.traces {
        fs::write(trace_path(dir, id), trace)?;
    }
    write_sample_csv(&report.rows, create(&dir.join("samples.csv"))?)?;
    write_summary_csv(&report.summary, create(&dir.join("summary.csv"))?)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("skipped.csv"))?);
    w.write_record(["sample_id", "reason"])?;
    for s in &report.skipped {
        w.write_record([&s.sample_id, &s.reason])?;
    }
    w.flush()?;
    for kind in PlotKind::ALL {
        emit_plot_data(
            &report.rows,
            kind,
            create(&dir.join("plots").join(format!("{}.csv", kind.name())))?,
        )?;
    }
    Ok(())
}
