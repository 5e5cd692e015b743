//! Execution-time traces and empirical distributions.
//!
//! A trace is the ordered sample set measured for one task; the empirical
//! distribution built from it provides `alpha(t)`, the fraction of samples
//! that finished within `t` microseconds. All execution times in this crate
//! are integer microseconds so that budget scans and schedulability
//! comparisons never suffer float drift.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when ingesting traces or building distributions.
#[derive(Debug, Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("trace contains no samples")]
    EmptyTrace,
    #[error("sample {index} ({value} us) exceeds wcet_hi; the declared bound is unsafe")]
    SampleExceedsWcetHi { index: usize, value: u64 },
    #[error("too few samples on one side of the split")]
    TooFewSamples,
}

/// Supported on-disk trace encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    /// UTF-8, one integer microsecond sample per line, `#` starts a comment
    /// line, no header.
    CsvV1,
}

impl TraceFormat {
    pub fn id(&self) -> &'static str {
        match self {
            TraceFormat::CsvV1 => "csv-v1",
        }
    }

    pub fn parse_id(id: &str) -> Option<Self> {
        match id {
            "csv-v1" => Some(TraceFormat::CsvV1),
            _ => None,
        }
    }
}

/// Raw execution-time samples for one task, in measurement order.
///
/// Temporal order is preserved because run-time replay depends on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    task_label: String,
    samples: Vec<u64>,
    source: String,
}

impl ExecutionTrace {
    /// Build a trace from in-memory samples. Samples must be non-empty and
    /// strictly positive.
    pub fn new(
        task_label: impl Into<String>,
        samples: Vec<u64>,
        source: impl Into<String>,
    ) -> Result<Self, TraceError> {
        if samples.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        if let Some(pos) = samples.iter().position(|&s| s == 0) {
            return Err(TraceError::Parse {
                line: pos + 1,
                reason: "non-positive sample".into(),
            });
        }
        Ok(Self {
            task_label: task_label.into(),
            samples,
            source: source.into(),
        })
    }

    pub fn task_label(&self) -> &str {
        &self.task_label
    }

    pub fn samples(&self) -> &[u64] {
        &self.samples
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_sample(&self) -> u64 {
        *self.samples.iter().max().expect("trace is non-empty")
    }
}

/// Load a trace file. The task label is the file stem; the source records the
/// path.
pub fn load_trace(path: impl AsRef<Path>, format: TraceFormat) -> Result<ExecutionTrace, TraceError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string());
    match format {
        TraceFormat::CsvV1 => parse_csv_v1(BufReader::new(file), label, path.display().to_string()),
    }
}

/// Parse the `csv-v1` encoding from any reader.
pub fn parse_csv_v1(
    reader: impl BufRead,
    task_label: impl Into<String>,
    source: impl Into<String>,
) -> Result<ExecutionTrace, TraceError> {
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.starts_with('#') {
            continue;
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            return Err(TraceError::Parse {
                line: lineno,
                reason: "empty line".into(),
            });
        }
        if trimmed.starts_with('-') {
            return Err(TraceError::Parse {
                line: lineno,
                reason: "non-positive sample".into(),
            });
        }
        let value: u64 = trimmed.parse().map_err(|_| TraceError::Parse {
            line: lineno,
            reason: format!("not an integer sample: {trimmed:?}"),
        })?;
        if value == 0 {
            return Err(TraceError::Parse {
                line: lineno,
                reason: "non-positive sample".into(),
            });
        }
        samples.push(value);
    }
    if samples.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(ExecutionTrace {
        task_label: task_label.into(),
        samples,
        source: source.into(),
    })
}

/// Serialize a trace to the canonical `csv-v1` byte form: one sample per
/// line, trailing newline, no comments. `save -> load` is the identity on
/// samples, and `load -> save` is byte-identical for canonical files.
pub fn to_csv_v1(trace: &ExecutionTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 8);
    for s in &trace.samples {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

/// Write a trace to disk in `csv-v1`.
pub fn save_trace(trace: &ExecutionTrace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(to_csv_v1(trace).as_bytes())?;
    Ok(())
}

/// Sorted empirical execution-time distribution with its conservative upper
/// bound `wcet_hi`.
///
/// By construction every sample is `<= wcet_hi`, hence `alpha(wcet_hi) == 1`
/// exactly. Immutable after construction; safe to share across workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    task_label: String,
    sorted_samples: Vec<u64>,
    wcet_hi: u64,
}

/// JSON wire form of a distribution.
#[derive(Debug, Serialize, Deserialize)]
struct DistributionJson {
    task_label: String,
    n: usize,
    wcet_hi_us: u64,
    sorted_samples_us: Vec<u64>,
}

impl EmpiricalDistribution {
    pub fn task_label(&self) -> &str {
        &self.task_label
    }

    pub fn n(&self) -> usize {
        self.sorted_samples.len()
    }

    pub fn wcet_hi(&self) -> u64 {
        self.wcet_hi
    }

    pub fn sorted_samples(&self) -> &[u64] {
        &self.sorted_samples
    }

    pub fn min_sample(&self) -> u64 {
        self.sorted_samples[0]
    }

    pub fn max_sample(&self) -> u64 {
        *self.sorted_samples.last().expect("non-empty")
    }

    /// Distinct sample values, ascending.
    pub fn distinct_samples(&self) -> Vec<u64> {
        let mut out = self.sorted_samples.clone();
        out.dedup();
        out
    }

    /// Fraction of samples with execution time `<= t` (right-continuous step
    /// function). Equals 1 for every `t >= wcet_hi`.
    pub fn alpha(&self, t: u64) -> f64 {
        let below = self.sorted_samples.partition_point(|&s| s <= t);
        below as f64 / self.n() as f64
    }

    /// Number of samples `<= t`.
    pub fn count_le(&self, t: u64) -> usize {
        self.sorted_samples.partition_point(|&s| s <= t)
    }

    pub fn to_json(&self) -> String {
        let dto = DistributionJson {
            task_label: self.task_label.clone(),
            n: self.n(),
            wcet_hi_us: self.wcet_hi,
            sorted_samples_us: self.sorted_samples.clone(),
        };
        serde_json::to_string_pretty(&dto).expect("distribution serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, TraceError> {
        let dto: DistributionJson = serde_json::from_str(json).map_err(|e| TraceError::Parse {
            line: 0,
            reason: format!("invalid distribution json: {e}"),
        })?;
        if dto.sorted_samples_us.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        if dto.sorted_samples_us.windows(2).any(|w| w[0] > w[1]) {
            return Err(TraceError::Parse {
                line: 0,
                reason: "sorted_samples_us not ascending".into(),
            });
        }
        let trace = ExecutionTrace::new(dto.task_label, dto.sorted_samples_us, "json")?;
        build_distribution(&trace, dto.wcet_hi_us)
    }
}

/// Build the empirical distribution for a trace under a declared `wcet_hi`.
///
/// A sample above `wcet_hi` is a hard error, not a clamp: it means the
/// declared conservative bound is unsound.
pub fn build_distribution(
    trace: &ExecutionTrace,
    wcet_hi: u64,
) -> Result<EmpiricalDistribution, TraceError> {
    if let Some((index, &value)) = trace
        .samples()
        .iter()
        .enumerate()
        .find(|(_, &s)| s > wcet_hi)
    {
        return Err(TraceError::SampleExceedsWcetHi { index, value });
    }
    let mut sorted = trace.samples().to_vec();
    sorted.sort_unstable();
    Ok(EmpiricalDistribution {
        task_label: trace.task_label().to_string(),
        sorted_samples: sorted,
        wcet_hi,
    })
}

/// Sup-norm distance between the ECDF of the first `split` fraction of the
/// trace and the ECDF of the whole trace.
///
/// A small deviation indicates the sample count has stabilized the empirical
/// distribution; callers compare against a configured threshold (0.02 by
/// default in the CLI) to judge whether more measurements are needed.
pub fn stability_check(trace: &ExecutionTrace, split: f64) -> Result<f64, TraceError> {
    if !(split > 0.0 && split < 1.0) {
        return Err(TraceError::TooFewSamples);
    }
    let n = trace.len();
    let k = (split * n as f64).floor() as usize;
    if k < 2 || n - k < 2 {
        return Err(TraceError::TooFewSamples);
    }
    let mut head: Vec<u64> = trace.samples()[..k].to_vec();
    let mut full: Vec<u64> = trace.samples().to_vec();
    head.sort_unstable();
    full.sort_unstable();
    // Both ECDFs are right-continuous step functions; the sup is attained at
    // a jump point, and every jump of either function sits at a value of the
    // full sample set.
    let mut worst: f64 = 0.0;
    let mut prev = None;
    for &v in &full {
        if prev == Some(v) {
            continue;
        }
        prev = Some(v);
        let f_head = head.partition_point(|&s| s <= v) as f64 / k as f64;
        let f_full = full.partition_point(|&s| s <= v) as f64 / n as f64;
        worst = worst.max((f_head - f_full).abs());
    }
    Ok(worst)
}
