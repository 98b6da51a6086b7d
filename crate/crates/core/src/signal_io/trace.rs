use std::fmt::Write as _;
use std::path::Path;

use super::{EogFrame, MetricSample, Record, TraceError};

const MAGIC: &str = "#neuroswarm-trace";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHeader {
    pub version: u32,
    pub sample_rate_hz: f64,
    pub metric_rate_hz: f64,
}

impl Default for TraceHeader {
    fn default() -> Self {
        Self {
            version: 1,
            sample_rate_hz: 128.0,
            metric_rate_hz: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub records: Vec<Record>,
}

impl TraceFile {
    pub fn eog_frames(&self) -> impl Iterator<Item = &EogFrame> {
        self.records.iter().filter_map(|r| match r {
            Record::Eog(f) => Some(f),
            _ => None,
        })
    }

    pub fn metric_samples(&self) -> impl Iterator<Item = &MetricSample> {
        self.records.iter().filter_map(|r| match r {
            Record::Metric(m) => Some(m),
            _ => None,
        })
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(40 * (self.records.len() + 1));
        let h = &self.header;
        let _ = writeln!(
            out,
            "{MAGIC} v{} sample_rate={} metric_rate={}",
            h.version,
            format_real(h.sample_rate_hz),
            format_real(h.metric_rate_hz)
        );
        for record in &self.records {
            match record {
                Record::Eog(f) => {
                    let _ = write!(out, "E {}", f.t_ms);
                    for v in f.potentials {
                        let _ = write!(out, " {}", format_real(v));
                    }
                    out.push('\n');
                }
                Record::Metric(m) => {
                    let _ = writeln!(
                        out,
                        "M {} {} {} {}",
                        m.t_ms,
                        format_real(m.engagement),
                        format_real(m.excitement),
                        format_real(m.meditation)
                    );
                }
            }
        }
        out
    }

    /// Checks per-stream strict monotonicity, overall ordering and metric ranges.
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut last_eog: Option<u64> = None;
        let mut last_metric: Option<u64> = None;
        let mut last_any: Option<u64> = None;
        for (k, record) in self.records.iter().enumerate() {
            let line = k + 2;
            let t = record.t_ms();
            let fail = |message: String| Err(TraceError::Validation { line, message });
            if last_any.is_some_and(|p| t < p) {
                return fail(format!("timestamp {t} ms goes backwards"));
            }
            match record {
                Record::Eog(f) => {
                    if last_eog.is_some_and(|p| t <= p) {
                        return fail(format!("EOG timestamp {t} ms not strictly increasing"));
                    }
                    if f.potentials.iter().any(|v| !v.is_finite()) {
                        return fail("non-finite potential".into());
                    }
                    last_eog = Some(t);
                }
                Record::Metric(m) => {
                    if last_metric.is_some_and(|p| t <= p) {
                        return fail(format!("metric timestamp {t} ms not strictly increasing"));
                    }
                    if let Err(message) = m.check() {
                        return fail(message);
                    }
                    last_metric = Some(t);
                }
            }
            last_any = Some(t);
        }
        Ok(())
    }
}

/// Formats a real with at most six decimals, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    let mut s = format!("{x:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// Rounds to the value a trace file would store.
pub fn quantize(x: f64) -> f64 {
    format_real(x).parse().expect("formatted reals parse")
}

fn parse_header(line: &str) -> Result<TraceHeader, TraceError> {
    let err = |message: String| TraceError::Parse { line: 1, message };
    let mut parts = line.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(err(format!("expected header starting with '{MAGIC}'")));
    }
    let version = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| err("missing or malformed version".into()))?;
    if version != 1 {
        return Err(err(format!("unsupported trace version {version}")));
    }
    let mut header = TraceHeader {
        version,
        ..TraceHeader::default()
    };
    for kv in parts {
        let Some((key, value)) = kv.split_once('=') else {
            continue;
        };
        let parse = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| *x > 0.0 && x.is_finite())
                .ok_or_else(|| err(format!("bad value for {key}: '{v}'")))
        };
        match key {
            "sample_rate" => header.sample_rate_hz = parse(value)?,
            "metric_rate" => header.metric_rate_hz = parse(value)?,
            _ => {}
        }
    }
    Ok(header)
}

fn parse_record(line: &str, line_no: usize) -> Result<Record, TraceError> {
    let err = |message: String| TraceError::Parse { line: line_no, message };
    let fields: Vec<&str> = line.split_whitespace().collect();
    let kind = fields[0];
    let expected = match kind {
        "E" => 6,
        "M" => 5,
        other => return Err(err(format!("unknown record type '{other}'"))),
    };
    if fields.len() != expected {
        return Err(err(format!(
            "record '{kind}' needs {} fields, found {}",
            expected - 1,
            fields.len() - 1
        )));
    }
    let t_ms: u64 = fields[1]
        .parse()
        .map_err(|_| err(format!("bad timestamp '{}'", fields[1])))?;
    let mut values = [0.0; 4];
    for (slot, text) in values.iter_mut().zip(&fields[2..]) {
        *slot = text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("bad number '{text}'")))?;
    }
    Ok(match kind {
        "E" => Record::Eog(EogFrame { t_ms, potentials: values }),
        _ => Record::Metric(MetricSample {
            t_ms,
            engagement: values[0],
            excitement: values[1],
            meditation: values[2],
        }),
    })
}

pub fn parse_trace(text: &str) -> Result<TraceFile, TraceError> {
    let mut lines = text.lines();
    let header = parse_header(lines.next().ok_or(TraceError::Parse {
        line: 1,
        message: "empty file".into(),
    })?)?;
    let mut records = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_record(line, k + 2)?);
    }
    let trace = TraceFile { header, records };
    trace.validate()?;
    Ok(trace)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceFile, TraceError> {
    parse_trace(&std::fs::read_to_string(path)?)
}

pub fn write_trace(path: impl AsRef<Path>, trace: &TraceFile) -> Result<(), TraceError> {
    std::fs::write(path, trace.to_text())?;
    Ok(())
}
