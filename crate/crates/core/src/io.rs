//! Header-less CSV formats.
//!
//! * labels: one row per instance, comma-separated `-1`/`1`/`0`
//! * expert: `instance_index,label` per line (0-based index, label `±1`)
//! * truth: one `±1` per line
//! * features: one row per instance, comma-separated reals

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampling::FeatureMatrix;
use crate::types::{ExpertLabels, LabelMatrix};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses every record of a header-less CSV into typed fields, tagging errors with the
/// 1-based line number.
fn parse_records<T: FromStr, R: Read>(reader: R, origin: &Path) -> Result<Vec<(u64, Vec<T>)>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let fields = record
            .iter()
            .map(|f| {
                f.parse::<T>().map_err(|_| Error::Parse {
                    path: origin.to_path_buf(),
                    line,
                    message: format!("cannot parse field {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((line, fields));
    }
    Ok(out)
}

fn parse_error(origin: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn parse_labels<R: Read>(reader: R, origin: &Path) -> Result<LabelMatrix> {
    let records = parse_records::<i8, _>(reader, origin)?;
    let Some((_, first)) = records.first() else {
        return Err(parse_error(origin, 0, "no label rows"));
    };
    let width = first.len();
    for (line, row) in &records {
        if row.len() != width {
            return Err(parse_error(
                origin,
                *line,
                format!("row has {} labels, expected {width}", row.len()),
            ));
        }
        if let Some(v) = row.iter().find(|v| !matches!(v, -1..=1)) {
            return Err(parse_error(
                origin,
                *line,
                format!("label {v} is not -1, 1 or 0"),
            ));
        }
    }
    let rows: Vec<Vec<i8>> = records.into_iter().map(|(_, r)| r).collect();
    LabelMatrix::from_rows(&rows)
}

pub fn parse_expert<R: Read>(reader: R, origin: &Path, n_instances: usize) -> Result<ExpertLabels> {
    let records = parse_records::<i64, _>(reader, origin)?;
    let mut pairs = Vec::with_capacity(records.len());
    for (line, row) in records {
        let [index, label] = row[..] else {
            return Err(parse_error(origin, line, "expected `instance_index,label`"));
        };
        if index < 0 {
            return Err(parse_error(origin, line, "negative instance index"));
        }
        if label != 1 && label != -1 {
            return Err(parse_error(
                origin,
                line,
                format!("label {label} is not ±1"),
            ));
        }
        pairs.push((index as usize, label as i8));
    }
    ExpertLabels::new(pairs, n_instances)
}

pub fn parse_truth<R: Read>(reader: R, origin: &Path) -> Result<Vec<i8>> {
    let records = parse_records::<i8, _>(reader, origin)?;
    records
        .into_iter()
        .map(|(line, row)| match row[..] {
            [v @ (1 | -1)] => Ok(v),
            _ => Err(parse_error(origin, line, "expected a single ±1 label")),
        })
        .collect()
}

pub fn parse_features<R: Read>(reader: R, origin: &Path) -> Result<FeatureMatrix> {
    let records = parse_records::<f64, _>(reader, origin)?;
    let rows: Vec<Vec<f64>> = records.into_iter().map(|(_, r)| r).collect();
    FeatureMatrix::from_rows(&rows)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMatrix> {
    let path = path.as_ref();
    parse_labels(open(path)?, path)
}

pub fn read_expert(path: impl AsRef<Path>, n_instances: usize) -> Result<ExpertLabels> {
    let path = path.as_ref();
    parse_expert(open(path)?, path, n_instances)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<Vec<i8>> {
    let path = path.as_ref();
    parse_truth(open(path)?, path)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    parse_features(open(path)?, path)
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_labels<W: Write>(mut out: W, labels: &LabelMatrix) -> std::io::Result<()> {
    for row in labels.rows() {
        writeln!(out, "{}", join(row))?;
    }
    Ok(())
}

pub fn write_expert<W: Write>(mut out: W, expert: &ExpertLabels) -> std::io::Result<()> {
    for (i, l) in expert.pairs() {
        writeln!(out, "{i},{l}")?;
    }
    Ok(())
}

pub fn write_truth<W: Write>(mut out: W, truth: &[i8]) -> std::io::Result<()> {
    for t in truth {
        writeln!(out, "{t}")?;
    }
    Ok(())
}

pub fn write_features<W: Write>(mut out: W, features: &FeatureMatrix) -> std::io::Result<()> {
    for row in features.rows() {
        writeln!(out, "{}", join(row))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn labels_round_trip() {
        let m = LabelMatrix::from_rows(&[vec![1, -1, 0], vec![0, 1, 1]]).unwrap();
        let mut buf = Vec::new();
        write_labels(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,-1,0\n0,1,1\n");
        assert_eq!(parse_labels(&buf[..], p()).unwrap(), m);
    }

    #[test]
    fn malformed_row_names_line() {
        let err = parse_labels("1,1\n1,x\n".as_bytes(), p()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_labels("1,1\n1,1,1\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_labels("1,1\n1,3\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn expert_and_truth_formats() {
        let e = parse_expert("0,1\n 2 , -1\n".as_bytes(), p(), 3).unwrap();
        assert_eq!(e.pairs(), &[(0, 1), (2, -1)]);
        assert!(matches!(
            parse_expert("0,1\n1,0\n".as_bytes(), p(), 3),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_expert("0,1,1\n".as_bytes(), p(), 3),
            Err(Error::Parse { line: 1, .. })
        ));
        assert_eq!(parse_truth("1\n-1\n".as_bytes(), p()).unwrap(), vec![1, -1]);
        assert!(parse_truth("1\n0\n".as_bytes(), p()).is_err());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_labels("/definitely/not/here.csv").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.csv"));
        assert!(matches!(err, Error::Io { .. }));
    }
}
