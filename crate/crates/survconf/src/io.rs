//! CSV ingestion and CSV artifact writers.
//!
//! Training files have a header with `time` and `event` columns, an optional
//! integer `site` column, and any number of numeric covariate columns, used
//! in header order. Row numbers in errors count data rows from 1.

use std::fmt::Write as _;
use std::io::{Read, Write};

use survconf_core::sim::CoverageReport;
use survconf_core::{Dataset, Endpoint, Observation, PredictionInterval};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{}{message}", row.map(|r| format!("row {r}: ")).unwrap_or_default(), column.as_ref().map(|c| format!("column '{c}': ")).unwrap_or_default())]
pub struct IngestError {
    pub row: Option<usize>,
    pub column: Option<String>,
    pub message: String,
}

impl IngestError {
    fn file(message: impl Into<String>) -> Self {
        Self {
            row: None,
            column: None,
            message: message.into(),
        }
    }

    fn cell(row: usize, column: &str, message: impl Into<String>) -> Self {
        Self {
            row: Some(row),
            column: Some(column.into()),
            message: message.into(),
        }
    }
}

const RESERVED: [&str; 3] = ["time", "event", "site"];

fn header<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>, IngestError> {
    let h = rdr
        .headers()
        .map_err(|e| IngestError::file(format!("unreadable header: {e}")))?;
    let names: Vec<String> = h.iter().map(|s| s.trim().to_string()).collect();
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() {
            return Err(IngestError::file(format!("header column {} is empty", i + 1)));
        }
        if names[..i].contains(n) {
            return Err(IngestError::file(format!("duplicate column '{n}'")));
        }
    }
    Ok(names)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn number(row: usize, column: &str, raw: &str) -> Result<f64, IngestError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| IngestError::cell(row, column, format!("'{raw}' is not a number")))?;
    if !v.is_finite() {
        return Err(IngestError::cell(row, column, "value must be finite"));
    }
    Ok(v)
}

/// Reads a training dataset.
pub fn ingest_csv<R: Read>(input: R) -> Result<Dataset, IngestError> {
    let mut rdr = reader(input);
    let names = header(&mut rdr)?;
    let col = |n: &str| names.iter().position(|c| c == n);
    let time_col = col("time").ok_or_else(|| IngestError::file("missing 'time' column"))?;
    let event_col = col("event").ok_or_else(|| IngestError::file("missing 'event' column"))?;
    let site_col = col("site");
    let covs: Vec<usize> = (0..names.len())
        .filter(|&i| !RESERVED.contains(&names[i].as_str()))
        .collect();

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError {
            row: Some(row),
            column: None,
            message: e.to_string(),
        })?;
        let time = number(row, "time", &rec[time_col])?;
        if time <= 0.0 {
            return Err(IngestError::cell(
                row,
                "time",
                format!("time must be positive, got {time}"),
            ));
        }
        let event = match &rec[event_col] {
            "1" => true,
            "0" => false,
            other => {
                return Err(IngestError::cell(
                    row,
                    "event",
                    format!("event must be 0 or 1, got '{other}'"),
                ))
            }
        };
        let covariates = covs
            .iter()
            .map(|&j| number(row, &names[j], &rec[j]))
            .collect::<Result<Vec<_>, _>>()?;
        let mut obs = Observation::new(time, event, covariates);
        if let Some(j) = site_col {
            let site = rec[j]
                .parse::<u32>()
                .map_err(|_| IngestError::cell(row, "site", format!("'{}' is not a site label", &rec[j])))?;
            obs = obs.with_site(site);
        }
        rows.push(obs);
    }
    if rows.is_empty() {
        return Err(IngestError::file("no data rows"));
    }
    if !rows.iter().any(|r| r.event) {
        return Err(IngestError::file("no events: every row is censored"));
    }
    let names = covs.iter().map(|&j| names[j].clone()).collect();
    Dataset::new(rows, names).map_err(|e| IngestError::file(e.to_string()))
}

/// Reads covariate profiles for prediction. Columns are matched by name to
/// `expected`; `time`, `event` and `site` are ignored, anything else is an
/// error.
pub fn ingest_covariates<R: Read>(input: R, expected: &[String]) -> Result<Vec<Vec<f64>>, IngestError> {
    let mut rdr = reader(input);
    let names = header(&mut rdr)?;
    if let Some(extra) = names
        .iter()
        .find(|n| !RESERVED.contains(&n.as_str()) && !expected.contains(n))
    {
        return Err(IngestError::file(format!("unknown covariate column '{extra}'")));
    }
    let cols = expected
        .iter()
        .map(|e| {
            names
                .iter()
                .position(|n| n == e)
                .ok_or_else(|| IngestError::file(format!("missing covariate column '{e}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError {
            row: Some(row),
            column: None,
            message: e.to_string(),
        })?;
        out.push(
            cols.iter()
                .zip(expected)
                .map(|(&j, n)| number(row, n, &rec[j]))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    Ok(out)
}

/// `printf("%.17g")`.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        strip_zeros(&format!("{v:.*}", (16 - exp) as usize)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `# key: value` lines that start every CSV artifact.
pub fn comment_header(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s
}

fn upper_cell(e: Endpoint) -> String {
    fmt_g17(e.value())
}

/// Per-row intervals as `lower,upper,capped,alpha,c_L`.
pub fn write_intervals<W: Write>(mut out: W, header: &str, intervals: &[PredictionInterval]) -> AppResult<()> {
    let mut s = String::from(header);
    s.push_str("lower,upper,capped,alpha,c_L\n");
    for iv in intervals {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_g17(iv.lower),
            upper_cell(iv.upper),
            iv.capped() as u8,
            fmt_g17(iv.alpha),
            fmt_g17(iv.conditioning_time)
        );
    }
    out.write_all(s.as_bytes()).map_err(|e| AppError::io("<output>", e))
}

/// One row per method with the usual table columns.
pub fn report_csv(header: &str, report: &CoverageReport) -> String {
    let mut s = String::from(header);
    s.push_str(
        "method,coverage,coverage_min_eta,mean_length,sd_length,mean_length_truncated,capped_fraction,n_ok,n_failed\n",
    );
    for m in &report.methods {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            csv_text(&m.label),
            fmt_g17(m.coverage),
            fmt_g17(m.coverage_min_eta),
            fmt_g17(m.mean_length),
            fmt_g17(m.sd_length),
            fmt_g17(m.mean_length_truncated),
            fmt_g17(m.capped_fraction),
            m.n_ok,
            m.n_failed
        );
    }
    s
}

/// Long-format per-replication mean lengths, for plotting length
/// distributions.
pub fn lengths_csv(header: &str, report: &CoverageReport) -> String {
    let mut s = String::from(header);
    s.push_str("method,replicate,mean_length\n");
    for m in &report.methods {
        for (i, l) in m.replicate_lengths.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", csv_text(&m.label), i, fmt_g17(*l));
        }
    }
    s
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
