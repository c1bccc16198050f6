//! Loading price bars from CSV and turning them into return series.
//!
//! Two schemas are accepted. `timestamp,close,volume` is the bar format; a file
//! whose header is `timestamp,return` (what the simulator writes) is read as a
//! ready-made return series.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::model::ReturnSeries;

pub const BAR_HEADER: [&str; 3] = ["timestamp", "close", "volume"];
pub const RETURN_HEADER: [&str; 2] = ["timestamp", "return"];

/// Minimum number of bars left after dropping zero-volume rows.
pub const MIN_BARS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarRecord {
    /// Epoch milliseconds.
    pub timestamp: i64,
    pub close: f64,
    pub volume: f64,
}

/// What a CSV file turned out to contain.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Bars(Vec<BarRecord>),
    Returns(ReturnSeries),
}

fn reader_for(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    File::open(path)
        .map_err(|e| input(format!("cannot open {}: {e}", path.display())))?
        .read_to_string(&mut text)
        .map_err(|e| input(format!("{} is not valid UTF-8 text: {e}", path.display())))?;
    Ok(text)
}

fn header_of(rdr: &mut csv::Reader<&[u8]>) -> Result<Vec<String>> {
    let header = rdr.headers().map_err(|e| input(format!("unreadable header: {e}")))?;
    Ok(header.iter().map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase()).collect())
}

// Data rows are numbered from 1; the header is row 0.
fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<T> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| input(format!("row {row}: missing column '{name}'")))?;
    raw.parse()
        .map_err(|_| input(format!("row {row}: cannot parse {name} '{raw}'")))
}

fn check_timestamp(prev: Option<i64>, ts: i64, row: usize) -> Result<()> {
    match prev {
        Some(p) if ts == p => Err(input(format!("row {row}: duplicate timestamp {ts}"))),
        Some(p) if ts < p => Err(input(format!("row {row}: timestamp {ts} is earlier than {p}"))),
        _ => Ok(()),
    }
}

fn parse_bars(text: &str) -> Result<Vec<BarRecord>> {
    let mut rdr = reader_for(text);
    let header = header_of(&mut rdr)?;
    if header != BAR_HEADER {
        return Err(input(format!("expected header 'timestamp,close,volume', found '{}'", header.join(","))));
    }
    let mut bars = Vec::new();
    let mut prev = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| input(format!("row {row}: {e}")))?;
        let timestamp: i64 = field(&rec, 0, "timestamp", row)?;
        let close: f64 = field(&rec, 1, "close", row)?;
        let volume: f64 = field(&rec, 2, "volume", row)?;
        if !(close.is_finite() && close > 0.0) {
            return Err(input(format!("row {row}: close must be positive, got {close}")));
        }
        if !(volume.is_finite() && volume >= 0.0) {
            return Err(input(format!("row {row}: volume must be non-negative, got {volume}")));
        }
        check_timestamp(prev, timestamp, row)?;
        prev = Some(timestamp);
        bars.push(BarRecord { timestamp, close, volume });
    }
    if bars.is_empty() {
        return Err(input("no data rows"));
    }
    Ok(bars)
}

fn parse_returns(text: &str, instrument_id: &str, period: &str) -> Result<ReturnSeries> {
    let mut rdr = reader_for(text);
    header_of(&mut rdr)?;
    let mut returns = Vec::new();
    let mut prev = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| input(format!("row {row}: {e}")))?;
        let timestamp: i64 = field(&rec, 0, "timestamp", row)?;
        let r: f64 = field(&rec, 1, "return", row)?;
        if !r.is_finite() {
            return Err(input(format!("row {row}: return is not finite")));
        }
        check_timestamp(prev, timestamp, row)?;
        prev = Some(timestamp);
        returns.push(r);
    }
    if returns.is_empty() {
        return Err(input("no data rows"));
    }
    ReturnSeries::new(returns, instrument_id, period)
}

fn is_return_header(text: &str) -> bool {
    let mut rdr = reader_for(text);
    matches!(header_of(&mut rdr), Ok(h) if h == RETURN_HEADER)
}

/// Reads a `timestamp,close,volume` file. Errors name the offending data row.
pub fn load_bars(path: &Path) -> Result<Vec<BarRecord>> {
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(input(format!("{} is empty", path.display())));
    }
    parse_bars(&text).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Reads either schema, deciding by the header.
pub fn load_any(path: &Path, instrument_id: &str, period: &str) -> Result<Loaded> {
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(input(format!("{} is empty", path.display())));
    }
    let parsed = if is_return_header(&text) {
        parse_returns(&text, instrument_id, period).map(Loaded::Returns)
    } else {
        parse_bars(&text).map(Loaded::Bars)
    };
    parsed.map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Loads a file of either schema straight into a return series.
pub fn load_series(path: &Path, instrument_id: &str, period: &str) -> Result<ReturnSeries> {
    match load_any(path, instrument_id, period)? {
        Loaded::Returns(s) => Ok(s),
        Loaded::Bars(b) => to_returns(&b, instrument_id, period),
    }
}

/// Differences of log closes over consecutive entries.
pub fn log_returns(closes: &[f64]) -> Vec<f64> {
    closes.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
}

/// Drops zero-volume bars, then differences the log closes of the survivors.
pub fn to_returns(bars: &[BarRecord], instrument_id: &str, period: &str) -> Result<ReturnSeries> {
    let closes: Vec<f64> = bars.iter().filter(|b| b.volume > 0.0).map(|b| b.close).collect();
    if closes.len() < MIN_BARS {
        return Err(input(format!(
            "{} bars with non-zero volume, at least {MIN_BARS} needed",
            closes.len()
        )));
    }
    ReturnSeries::new(log_returns(&closes), instrument_id, period)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;
    use crate::error::Error;

    fn file_with(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn bar(timestamp: i64, close: f64, volume: f64) -> BarRecord {
        BarRecord { timestamp, close, volume }
    }

    fn err_text(r: Result<impl std::fmt::Debug>) -> String {
        match r {
            Err(Error::Input(m)) => m,
            other => panic!("expected an input error, got {other:?}"),
        }
    }

    #[test]
    fn three_rows() {
        let f = file_with("timestamp,close,volume\n1,100,5\n2,101.5,0\n3,99,2\n");
        let bars = load_bars(f.path()).unwrap();
        assert_eq!(bars.len(), 3);
        assert_eq!(bars[1], bar(2, 101.5, 0.0));
    }

    #[test]
    fn crlf_and_lf_agree() {
        let lf = file_with("timestamp,close,volume\n1,100,5\n2,101,3\n");
        let crlf = file_with("timestamp,close,volume\r\n1,100,5\r\n2,101,3\r\n");
        assert_eq!(load_bars(lf.path()).unwrap(), load_bars(crlf.path()).unwrap());
    }

    #[test]
    fn zero_close_names_row() {
        let f = file_with("timestamp,close,volume\n1,100,5\n2,0,3\n");
        assert!(err_text(load_bars(f.path())).contains("row 2"));
    }

    #[test]
    fn bad_rows() {
        for (body, needle) in [
            ("1,100,5\n1,101,3\n", "duplicate"),
            ("2,100,5\n1,101,3\n", "earlier"),
            ("1,abc,5\n", "cannot parse close"),
            ("1,100,-1\n", "volume"),
            ("1,100\n", "row 1"),
        ] {
            let f = file_with(&format!("timestamp,close,volume\n{body}"));
            let msg = err_text(load_bars(f.path()));
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(load_bars(file_with("").path()), Err(Error::Input(_))));
        assert!(matches!(load_bars(file_with("timestamp,close,volume\n").path()), Err(Error::Input(_))));
        assert!(matches!(load_bars(file_with("a,b,c\n1,2,3\n").path()), Err(Error::Input(_))));
    }

    #[test]
    fn log_return_value() {
        let r = log_returns(&[100.0, 105.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.048_790_2).abs() < 1e-7);
    }

    #[test]
    fn two_bars_are_too_few() {
        let bars = [bar(1, 100.0, 1.0), bar(2, 105.0, 1.0)];
        assert!(matches!(to_returns(&bars, "x", "1m"), Err(Error::Input(_))));
    }

    #[test]
    fn zero_volume_removed_before_differencing() {
        let bars = [
            bar(1, 100.0, 1.0),
            bar(2, 110.0, 0.0),
            bar(3, 121.0, 1.0),
            bar(4, 133.1, 1.0),
        ];
        let s = to_returns(&bars, "x", "1m").unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.returns()[0] - (1.21f64).ln()).abs() < 1e-12);
        assert!((s.returns()[1] - (1.1f64).ln()).abs() < 1e-12);
        // differencing first and then dropping would give ln(1.1) twice
        assert!((s.returns()[0] - (1.1f64).ln()).abs() > 0.05);
    }

    #[test]
    fn all_zero_volume() {
        let bars = [bar(1, 100.0, 0.0), bar(2, 110.0, 0.0), bar(3, 121.0, 0.0)];
        assert!(matches!(to_returns(&bars, "x", "1m"), Err(Error::Input(_))));
    }

    #[test]
    fn return_schema_detected() {
        let f = file_with("timestamp,return\n0,0.1\n60000,-0.2\n120000,0.05\n");
        let s = load_series(f.path(), "sim", "1m").unwrap();
        assert_eq!(s.returns(), &[0.1, -0.2, 0.05]);
        assert_eq!(s.instrument_id, "sim");
        let f = file_with("timestamp,close,volume\n1,100,1\n2,105,1\n3,110.25,1\n");
        let s = load_series(f.path(), "bars", "1d").unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn returns_never_non_finite() {
        let bars: Vec<BarRecord> = (0..50)
            .map(|i| bar(i, 1e-300 + (i as f64).powi(8), if i % 7 == 0 { 0.0 } else { 1.0 }))
            .collect();
        let s = to_returns(&bars, "x", "1m").unwrap();
        assert!(s.returns().iter().all(|r| r.is_finite()));
    }
}
