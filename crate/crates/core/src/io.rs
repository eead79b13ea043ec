//! Text formats: chain traces, rejection output, cost-scan tables, summary
//! reports and observation files.
//!
//! Every output file starts with `#` comment lines from an [`OutputHeader`].
//! Floating-point columns are written with 17 significant digits so values
//! round-trip exactly.

use std::io::{Read, Write};

use crate::baselines::RejectionResult;
use crate::diagnostics::CostScanRow;
use crate::error::{Error, Result};
use crate::pmmh::{ChainRecord, Trace};

/// Provenance lines written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputHeader {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl OutputHeader {
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# reabc {}", self.version)?;
        writeln!(w, "# config_sha256: {}", self.config_hash)?;
        writeln!(w, "# seed: {}", self.seed)?;
        Ok(())
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse { line, message: format!("{kind:?}") },
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

/// Column names of a trace with `d` parameters.
pub fn trace_columns(d: usize) -> Vec<String> {
    let mut cols = vec!["iter".to_string()];
    cols.extend((1..=d).map(|j| format!("theta_{j}")));
    cols.extend(
        ["log_like", "accepted", "smc_stages", "smc_time_s", "terminated_early", "sim_calls"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

/// Writes a trace. With `timing` false the `smc_time_s` column is zeroed so
/// that repeated runs produce identical bytes.
pub fn write_trace<W: Write>(mut w: W, trace: &Trace, header: &OutputHeader, timing: bool) -> Result<()> {
    header.write(&mut w)?;
    let mut csv = writer(w);
    csv.write_record(trace_columns(trace.param_dim())).map_err(csv_error)?;
    for r in &trace.records {
        let mut row = vec![r.iteration.to_string()];
        row.extend(r.theta.iter().map(|&v| float(v)));
        row.push(float(r.log_likelihood));
        row.push(u8::from(r.accepted).to_string());
        row.push(r.smc_stages.to_string());
        row.push(float(if timing { r.smc_time } else { 0.0 }));
        row.push(u8::from(r.smc_terminated_early).to_string());
        row.push(r.simulator_calls.to_string());
        csv.write_record(&row).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(fields: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = fields.get(idx).ok_or_else(|| Error::Parse { line, message: format!("missing column {name}") })?;
    raw.parse().map_err(|e| Error::Parse { line, message: format!("column {name}: {e} ({raw:?})") })
}

fn parse_flag(fields: &csv::StringRecord, idx: usize, name: &str, line: usize) -> Result<bool> {
    match parse_field::<u8>(fields, idx, name, line)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::Parse { line, message: format!("column {name}: expected 0 or 1, got {v}") }),
    }
}

/// Reads a trace written by [`write_trace`]. Errors carry the file line.
pub fn read_trace<R: Read>(r: R) -> Result<Trace> {
    let mut csv = reader(r);
    let headers = csv.headers().map_err(csv_error)?.clone();
    let d = headers.len().checked_sub(7).ok_or(Error::Parse { line: 1, message: "too few trace columns".into() })?;
    let expected = trace_columns(d);
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            line: headers.position().map_or(1, |p| p.line() as usize),
            message: format!("unexpected trace header, expected {}", expected.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in csv.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let theta = (0..d).map(|j| parse_field(&row, 1 + j, &expected[1 + j], line)).collect::<Result<Vec<f64>>>()?;
        records.push(ChainRecord {
            iteration: parse_field(&row, 0, "iter", line)?,
            theta,
            log_likelihood: parse_field(&row, d + 1, "log_like", line)?,
            accepted: parse_flag(&row, d + 2, "accepted", line)?,
            smc_stages: parse_field(&row, d + 3, "smc_stages", line)?,
            smc_time: parse_field(&row, d + 4, "smc_time_s", line)?,
            smc_terminated_early: parse_flag(&row, d + 5, "terminated_early", line)?,
            simulator_calls: parse_field(&row, d + 6, "sim_calls", line)?,
        });
    }
    if records.is_empty() {
        return Err(Error::InsufficientData("trace has no rows".into()));
    }
    Ok(Trace { records, seed: 0, zero_estimates: 0 })
}

/// `key: value` lines.
pub fn write_report<W: Write>(mut w: W, header: &OutputHeader, pairs: &[(String, String)]) -> Result<()> {
    header.write(&mut w)?;
    for (k, v) in pairs {
        writeln!(w, "{k}: {v}")?;
    }
    Ok(())
}

/// Accepted parameters, one row per draw.
pub fn write_rejection<W: Write>(mut w: W, result: &RejectionResult, d: usize, header: &OutputHeader) -> Result<()> {
    header.write(&mut w)?;
    let mut csv = writer(w);
    csv.write_record((1..=d).map(|j| format!("theta_{j}"))).map_err(csv_error)?;
    for theta in &result.accepted_params {
        csv.write_record(theta.iter().map(|&v| float(v))).map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

/// Metadata accompanying [`write_rejection`] output.
pub fn rejection_sidecar(result: &RejectionResult, epsilon: f64, timing: bool) -> Vec<(String, String)> {
    let mut pairs = vec![
        ("epsilon".to_string(), epsilon.to_string()),
        ("attempts".to_string(), result.attempts.to_string()),
        ("accepted".to_string(), result.accepted_params.len().to_string()),
        ("acceptance_rate".to_string(), format!("{:.6e}", result.acceptance_rate())),
        ("wall_time_s".to_string(), format!("{:.6}", if timing { result.wall_time } else { 0.0 })),
    ];
    if let Some(d) = &result.diagnostic {
        pairs.push(("diagnostic".to_string(), d.clone()));
    }
    pairs
}

pub fn write_cost_scan<W: Write>(mut w: W, rows: &[CostScanRow], header: &OutputHeader, timing: bool) -> Result<()> {
    header.write(&mut w)?;
    let mut csv = writer(w);
    csv.write_record([
        "epsilon",
        "method",
        "simulator_calls",
        "wall_time_s",
        "effective_samples",
        "calls_per_effective_sample",
        "time_per_effective_sample",
        "stages",
        "flagged",
    ])
    .map_err(csv_error)?;
    for r in rows {
        let time = |v: f64| float(if timing { v } else { 0.0 });
        csv.write_record([
            float(r.epsilon),
            r.method.to_string(),
            r.simulator_calls.to_string(),
            time(r.wall_time),
            float(r.effective_samples),
            float(r.calls_per_effective_sample),
            time(r.time_per_effective_sample),
            r.stages.map_or(String::new(), |s| s.to_string()),
            u8::from(r.flagged).to_string(),
        ])
        .map_err(csv_error)?;
    }
    csv.flush()?;
    Ok(())
}

/// One observation per line; `#` comments and an optional non-numeric
/// header line are skipped.
pub fn read_observations(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => return Err(Error::Parse { line: idx + 1, message: format!("non-finite observation {v}") }),
            Err(_) if !seen_content => {}
            Err(e) => return Err(Error::Parse { line: idx + 1, message: format!("observation {line:?}: {e}") }),
        }
        seen_content = true;
    }
    if values.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> OutputHeader {
        OutputHeader { version: "0.1.0".into(), config_hash: "abc".into(), seed: 7 }
    }

    fn trace() -> Trace {
        let rec = |i, theta: Vec<f64>, accepted| ChainRecord {
            iteration: i,
            theta,
            log_likelihood: -1.0 / 3.0,
            accepted,
            smc_stages: 3,
            smc_time: 0.125,
            smc_terminated_early: !accepted,
            simulator_calls: 900,
        };
        Trace {
            records: vec![rec(1, vec![0.1, 2.0], true), rec(2, vec![0.1, 2.0], false), rec(3, vec![1e-300, 3.5], true)],
            seed: 7,
            zero_estimates: 0,
        }
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace(), &header(), true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# reabc 0.1.0\n# config_sha256: abc\n# seed: 7\n"));
        assert!(
            text.contains("iter,theta_1,theta_2,log_like,accepted,smc_stages,smc_time_s,terminated_early,sim_calls\n")
        );
        let back = read_trace(&buf[..]).unwrap();
        assert_eq!(back.records, trace().records);
    }

    #[test]
    fn timing_off_zeroes_time_column() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace(), &header(), false).unwrap();
        let back = read_trace(&buf[..]).unwrap();
        assert!(back.records.iter().all(|r| r.smc_time == 0.0));
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let text = "# c\niter,theta_1,log_like,accepted,smc_stages,smc_time_s,terminated_early,sim_calls\n\
                    1,0.5,-1,1,2,0,0,10\n2,oops,-1,0,2,0,0,10\n";
        match read_trace(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("theta_1"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_flag =
            "iter,theta_1,log_like,accepted,smc_stages,smc_time_s,terminated_early,sim_calls\n1,0.5,-1,2,2,0,0,10\n";
        assert!(matches!(read_trace(bad_flag.as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(read_trace("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn observations_file() {
        let v = read_observations("# generated\ny\n1.5\n-2\n\n3e-1 # note\n").unwrap();
        assert_eq!(v, vec![1.5, -2.0, 0.3]);
        assert!(matches!(read_observations("1\nx\n"), Err(Error::Parse { line: 2, .. })));
        assert!(read_observations("# empty\n").is_err());
    }

    #[test]
    fn rejection_output() {
        let r = RejectionResult {
            accepted_params: vec![vec![1.0], vec![2.5]],
            attempts: 10,
            wall_time: 0.3,
            diagnostic: None,
        };
        let mut buf = Vec::new();
        write_rejection(&mut buf, &r, 1, &header()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("theta_1\n1.0000000000000000e0\n2.5000000000000000e0\n"));
        let side = rejection_sidecar(&r, 5.0, true);
        assert!(side.contains(&("attempts".to_string(), "10".to_string())));
    }
}
