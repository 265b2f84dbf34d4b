//! Panel and season-map CSV formats.
//!
//! Long format: header `n,s,t_index,value`, one row per cell, indices
//! 1-based. Wide format: header `n,s,v1,…,vT`, one row per curve. Season
//! maps: header `n,season`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use sepstat_core::FunctionalPanel;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: cannot parse {field} value {value:?}")]
    Parse {
        line: u64,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: {field} must be a positive 1-based index")]
    Index { line: u64, field: &'static str },
    #[error("line {line}: duplicate row for n={n}, s={s}, t_index={t}")]
    Duplicate { line: u64, n: usize, s: usize, t: usize },
    #[error("incomplete panel: no value for n={n}, s={s}, t_index={t}")]
    Missing { n: usize, s: usize, t: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("line {line}: duplicate season label for n={n}")]
    DuplicateSeason { line: u64, n: usize },
    #[error(transparent)]
    Panel(#[from] sepstat_core::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PanelFormat {
    #[default]
    Long,
    Wide,
}

impl FromStr for PanelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "long" => Ok(PanelFormat::Long),
            "wide" => Ok(PanelFormat::Wide),
            other => Err(format!("unknown panel format {other:?} (expected long or wide)")),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_index(record: &csv::StringRecord, i: usize, field: &'static str) -> Result<usize, IoError> {
    let line = line_of(record);
    let raw = record.get(i).unwrap_or("");
    let v: usize = raw.parse().map_err(|_| IoError::Parse {
        line,
        field,
        value: raw.to_string(),
    })?;
    if v == 0 {
        return Err(IoError::Index { line, field });
    }
    Ok(v)
}

fn parse_value(record: &csv::StringRecord, i: usize) -> Result<f64, IoError> {
    let raw = record.get(i).unwrap_or("");
    raw.parse().map_err(|_| IoError::Parse {
        line: line_of(record),
        field: "value",
        value: raw.to_string(),
    })
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<(), IoError> {
    if found.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(IoError::Header {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        })
    }
}

pub fn read_panel<R: Read>(r: R, format: PanelFormat) -> Result<FunctionalPanel, IoError> {
    match format {
        PanelFormat::Long => read_long(r),
        PanelFormat::Wide => read_wide(r),
    }
}

pub fn load_panel(path: &Path, format: PanelFormat) -> Result<FunctionalPanel, IoError> {
    read_panel(open(path)?, format)
}

fn read_long<R: Read>(r: R) -> Result<FunctionalPanel, IoError> {
    let mut rdr = reader(r);
    check_header(rdr.headers()?, &["n", "s", "t_index", "value"])?;
    let mut cells: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let (mut n_max, mut s_max, mut t_max) = (0, 0, 0);
    for record in rdr.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(IoError::Shape(format!(
                "line {}: expected 4 fields, found {}",
                line_of(&record),
                record.len()
            )));
        }
        let n = parse_index(&record, 0, "n")?;
        let s = parse_index(&record, 1, "s")?;
        let t = parse_index(&record, 2, "t_index")?;
        let v = parse_value(&record, 3)?;
        if cells.insert((n, s, t), v).is_some() {
            return Err(IoError::Duplicate {
                line: line_of(&record),
                n,
                s,
                t,
            });
        }
        n_max = n_max.max(n);
        s_max = s_max.max(s);
        t_max = t_max.max(t);
    }
    let mut values = Vec::with_capacity(n_max * s_max * t_max);
    // BTreeMap order is (n, s, t), the panel's storage order.
    let mut it = cells.into_iter();
    for n in 1..=n_max {
        for s in 1..=s_max {
            for t in 1..=t_max {
                match it.next() {
                    Some(((a, b, c), v)) if (a, b, c) == (n, s, t) => values.push(v),
                    _ => return Err(IoError::Missing { n, s, t }),
                }
            }
        }
    }
    Ok(FunctionalPanel::new(n_max, s_max, t_max, values)?)
}

fn read_wide<R: Read>(r: R) -> Result<FunctionalPanel, IoError> {
    let mut rdr = reader(r);
    let header = rdr.headers()?.clone();
    let t = header.len().saturating_sub(2);
    let expected: Vec<String> = ["n".to_string(), "s".to_string()]
        .into_iter()
        .chain((1..=t).map(|i| format!("v{i}")))
        .collect();
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    if t == 0 {
        return Err(IoError::Header {
            expected: "n,s,v1,...,vT".into(),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    check_header(&header, &expected)?;
    let mut curves: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    let (mut n_max, mut s_max) = (0, 0);
    for record in rdr.records() {
        let record = record?;
        if record.len() != t + 2 {
            return Err(IoError::Shape(format!(
                "line {}: expected {} values, found {}",
                line_of(&record),
                t,
                record.len().saturating_sub(2)
            )));
        }
        let n = parse_index(&record, 0, "n")?;
        let s = parse_index(&record, 1, "s")?;
        let curve = (2..t + 2).map(|i| parse_value(&record, i)).collect::<Result<Vec<_>, _>>()?;
        if curves.insert((n, s), curve).is_some() {
            return Err(IoError::Duplicate {
                line: line_of(&record),
                n,
                s,
                t: 1,
            });
        }
        n_max = n_max.max(n);
        s_max = s_max.max(s);
    }
    let mut values = Vec::with_capacity(n_max * s_max * t);
    for n in 1..=n_max {
        for s in 1..=s_max {
            let curve = curves.get(&(n, s)).ok_or(IoError::Missing { n, s, t: 1 })?;
            values.extend_from_slice(curve);
        }
    }
    Ok(FunctionalPanel::new(n_max, s_max, t, values)?)
}

/// `{:?}` prints the shortest decimal that parses back to the same `f64`.
fn fmt_value(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_panel<W: Write>(w: W, p: &FunctionalPanel, format: PanelFormat) -> Result<(), IoError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    match format {
        PanelFormat::Long => {
            wtr.write_record(["n", "s", "t_index", "value"])?;
            for n in 0..p.n() {
                for s in 0..p.s() {
                    for (t, &v) in p.curve(n, s).iter().enumerate() {
                        wtr.write_record([
                            (n + 1).to_string(),
                            (s + 1).to_string(),
                            (t + 1).to_string(),
                            fmt_value(v),
                        ])?;
                    }
                }
            }
        }
        PanelFormat::Wide => {
            let header: Vec<String> = ["n".to_string(), "s".to_string()]
                .into_iter()
                .chain((1..=p.t()).map(|i| format!("v{i}")))
                .collect();
            wtr.write_record(&header)?;
            for n in 0..p.n() {
                for s in 0..p.s() {
                    let row: Vec<String> = [(n + 1).to_string(), (s + 1).to_string()]
                        .into_iter()
                        .chain(p.curve(n, s).iter().map(|&v| fmt_value(v)))
                        .collect();
                    wtr.write_record(&row)?;
                }
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Season labels keyed by 0-based observation index.
pub fn read_seasons<R: Read>(r: R) -> Result<BTreeMap<usize, String>, IoError> {
    let mut rdr = reader(r);
    check_header(rdr.headers()?, &["n", "season"])?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(IoError::Shape(format!(
                "line {}: expected n,season",
                line_of(&record)
            )));
        }
        let n = parse_index(&record, 0, "n")?;
        if out.insert(n - 1, record[1].to_string()).is_some() {
            return Err(IoError::DuplicateSeason {
                line: line_of(&record),
                n,
            });
        }
    }
    Ok(out)
}

pub fn load_seasons(path: &Path) -> Result<BTreeMap<usize, String>, IoError> {
    read_seasons(open(path)?)
}
