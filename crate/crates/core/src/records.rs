//! Log record schemas and line-oriented ingestion.
//!
//! JSONL, one object per line:
//!
//! ```text
//! {"t":0.01,"q":[...],"qd":[...]}        joint sample
//! {"t":0.01,"w":[fx,fy,fz,tx,ty,tz]}     wrench sample
//! {"t":0.01,"b":[...6],"bd":[...6]}      ground truth (simulator sidecar)
//! ```
//!
//! CSV carries the same records with a leading kind column:
//! `joint,t,q_1..q_N,qd_1..qd_N` and `wrench,t,w_1..w_6`. Lines starting
//! with `#` and a header line starting with `kind` are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointRecord {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrenchRecord {
    pub t: f64,
    pub w: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogRecord {
    Joint(JointRecord),
    Wrench(WrenchRecord),
}

impl LogRecord {
    pub fn t(&self) -> f64 {
        match self {
            LogRecord::Joint(j) => j.t,
            LogRecord::Wrench(w) => w.t,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            LogRecord::Joint(j) => {
                if !j.t.is_finite() {
                    return Err("non-finite timestamp".into());
                }
                if j.q.is_empty() || j.q.len() != j.qd.len() {
                    return Err(format!(
                        "joint record needs equal, non-empty q and qd (got {} and {})",
                        j.q.len(),
                        j.qd.len()
                    ));
                }
                if !finite(&j.q) || !finite(&j.qd) {
                    return Err("non-finite joint value".into());
                }
            }
            LogRecord::Wrench(w) => {
                if !w.t.is_finite() {
                    return Err("non-finite timestamp".into());
                }
                if !finite(&w.w) {
                    return Err("non-finite wrench value".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    pub t: f64,
    pub b: [f64; 6],
    pub bd: [f64; 6],
}

impl TruthRecord {
    /// True bias at `t`, extrapolated linearly from this record.
    pub fn bias_at(&self, t: f64) -> [f64; 6] {
        std::array::from_fn(|i| self.b[i] + self.bd[i] * (t - self.t))
    }
}

/// One bias-filter step as written to the estimate stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub t: f64,
    pub b: [f64; 6],
    pub bd: [f64; 6],
    pub p_diag: [f64; 12],
    pub innovation: [f64; 6],
    pub gated: bool,
    /// Full 12×12 covariance, row-major, when requested in the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    #[default]
    Jsonl,
    Csv,
}

impl LogFormat {
    /// `.csv` files are CSV, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => LogFormat::Csv,
            _ => LogFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MalformedPolicy {
    /// Stop at the first malformed line.
    #[default]
    FailFast,
    /// Skip malformed lines and count them.
    Skip,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    pub out_of_order: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub records: Vec<LogRecord>,
    pub stats: IngestStats,
}

/// Enforces monotone time: each channel strictly increasing and the stream
/// as a whole non-decreasing.
#[derive(Debug, Default)]
struct MonotoneFilter {
    last: Option<f64>,
    last_joint: Option<f64>,
    last_wrench: Option<f64>,
}

impl MonotoneFilter {
    fn accept(&mut self, rec: &LogRecord) -> bool {
        let t = rec.t();
        let channel = match rec {
            LogRecord::Joint(_) => &mut self.last_joint,
            LogRecord::Wrench(_) => &mut self.last_wrench,
        };
        if channel.is_some_and(|c| t <= c) || self.last.is_some_and(|l| t < l) {
            return false;
        }
        *channel = Some(t);
        self.last = Some(t);
        true
    }
}

fn parse_csv_record(fields: &csv::StringRecord) -> std::result::Result<Option<LogRecord>, String> {
    let kind = fields.get(0).map(str::trim).unwrap_or("");
    if kind.is_empty() || kind.eq_ignore_ascii_case("kind") {
        return Ok(None);
    }
    let nums = fields
        .iter()
        .skip(1)
        .map(|f| f.trim().parse::<f64>().map_err(|e| format!("bad number {f:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let (&t, values) = nums.split_first().ok_or("missing timestamp")?;
    match kind {
        "joint" => {
            if values.is_empty() || values.len() % 2 != 0 {
                return Err(format!("joint row needs 2N values, got {}", values.len()));
            }
            let (q, qd) = values.split_at(values.len() / 2);
            Ok(Some(LogRecord::Joint(JointRecord {
                t,
                q: q.to_vec(),
                qd: qd.to_vec(),
            })))
        }
        "wrench" => {
            let w: [f64; 6] = values
                .try_into()
                .map_err(|_| format!("wrench row needs 6 values, got {}", values.len()))?;
            Ok(Some(LogRecord::Wrench(WrenchRecord { t, w })))
        }
        other => Err(format!("unknown record kind {other:?}")),
    }
}

/// Parses and validates a log, dropping records that break time ordering.
pub fn ingest<R: Read>(reader: R, format: LogFormat, policy: MalformedPolicy) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut order = MonotoneFilter::default();
    let mut handle = |line: usize, parsed: std::result::Result<Option<LogRecord>, String>, out: &mut Ingested| {
        let parsed = parsed.and_then(|r| match r {
            Some(rec) => rec.validate().map(|_| Some(rec)),
            None => Ok(None),
        });
        match parsed {
            Ok(Some(rec)) => {
                if order.accept(&rec) {
                    out.records.push(rec);
                } else {
                    out.stats.out_of_order += 1;
                    warn!("line {line}: dropping record at t={} (out of order)", rec.t());
                }
                Ok(())
            }
            Ok(None) => Ok(()),
            Err(message) => match policy {
                MalformedPolicy::FailFast => Err(Error::Parse { line, message }),
                MalformedPolicy::Skip => {
                    out.stats.malformed += 1;
                    warn!("line {line}: skipping malformed record: {message}");
                    Ok(())
                }
            },
        }
    };
    match format {
        LogFormat::Jsonl => {
            for (i, line) in BufReader::new(reader).lines().enumerate() {
                let line_no = i + 1;
                let line = line.map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?;
                out.stats.lines += 1;
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<LogRecord>(trimmed)
                    .map(Some)
                    .map_err(|e| e.to_string());
                handle(line_no, parsed, &mut out)?;
            }
        }
        LogFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .comment(Some(b'#'))
                .trim(csv::Trim::All)
                .from_reader(reader);
            for row in rdr.records() {
                let (line_no, parsed) = match row {
                    Ok(r) => (
                        r.position().map_or(0, |p| p.line() as usize),
                        parse_csv_record(&r),
                    ),
                    Err(e) => (
                        e.position().map_or(0, |p| p.line() as usize),
                        Err(e.to_string()),
                    ),
                };
                out.stats.lines += 1;
                handle(line_no, parsed, &mut out)?;
            }
        }
    }
    out.stats.records = out.records.len();
    Ok(out)
}

pub fn ingest_path(path: &Path, format: Option<LogFormat>, policy: MalformedPolicy) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    ingest(file, format.unwrap_or_else(|| LogFormat::from_path(path)), policy)
}

/// Reads a JSONL file of any record type, failing on the first bad line.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T, W, I>(writer: W, items: I) -> std::io::Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    let mut w = BufWriter::new(writer);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes joint and wrench records as CSV rows readable by [`ingest`].
pub fn write_csv<'a, W, I>(writer: W, records: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a LogRecord>,
{
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    let csv_err = |e: csv::Error| Error::io("writing csv", e.into());
    w.write_record(["kind", "t", "values..."]).map_err(csv_err)?;
    for r in records {
        let mut row = Vec::new();
        match r {
            LogRecord::Joint(j) => {
                row.push("joint".to_string());
                row.push(j.t.to_string());
                row.extend(j.q.iter().chain(&j.qd).map(f64::to_string));
            }
            LogRecord::Wrench(x) => {
                row.push("wrench".to_string());
                row.push(x.t.to_string());
                row.extend(x.w.iter().map(f64::to_string));
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("writing csv", e))
}

pub fn write_jsonl_path<'a, T, I>(path: &Path, items: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    write_jsonl(file, items).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
