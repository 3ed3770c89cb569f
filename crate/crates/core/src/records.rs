//! Time-tagged detection records and their line-oriented text format.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const RECORDS_HEADER: &str = "#photon-beat-records v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    C,
    D,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::C => "C",
            Detector::D => "D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Photon,
    Dark,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Photon => "photon",
            Origin::Dark => "dark",
        }
    }
}

/// One time-tagged photodetection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub train_id: u64,
    pub detector: Detector,
    /// ns from run start.
    pub timestamp: f64,
    pub origin: Origin,
}

/// Write records as `train_id<TAB>detector<TAB>timestamp_ns<TAB>origin`
/// lines under the versioned header. Timestamps print in shortest
/// round-trip form, so re-reading reproduces the exact values.
pub fn write_records<W: Write>(mut w: W, records: &[DetectionRecord]) -> Result<()> {
    let io = |e| Error::io("writing records", e);
    writeln!(w, "{RECORDS_HEADER}").map_err(io)?;
    for r in records {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            r.train_id,
            r.detector.as_str(),
            r.timestamp,
            r.origin.as_str()
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(r: R, path: &Path) -> Result<Vec<DetectionRecord>> {
    let mut lines = r.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line: line + 1,
        message,
    };
    let (_, first) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty records file".into()))?;
    let first = first.map_err(|e| Error::io("reading records", e))?;
    if first.trim_end() != RECORDS_HEADER {
        return Err(parse_err(
            0,
            format!("expected header `{RECORDS_HEADER}`, got `{first}`"),
        ));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::io("reading records", e))?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let mut next = |name: &str| {
            fields
                .next()
                .ok_or_else(|| parse_err(lineno, format!("missing field `{name}`")))
        };
        let train_id: u64 = next("train_id")?
            .parse()
            .map_err(|_| parse_err(lineno, "bad train_id".into()))?;
        let detector = match next("detector")? {
            "C" => Detector::C,
            "D" => Detector::D,
            other => return Err(parse_err(lineno, format!("bad detector `{other}`"))),
        };
        let timestamp: f64 = next("timestamp_ns")?
            .parse()
            .map_err(|_| parse_err(lineno, "bad timestamp".into()))?;
        let origin = match next("origin")? {
            "photon" => Origin::Photon,
            "dark" => Origin::Dark,
            other => return Err(parse_err(lineno, format!("bad origin `{other}`"))),
        };
        out.push(DetectionRecord {
            train_id,
            detector,
            timestamp,
            origin,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<DetectionRecord>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening records {}", path.display()), e))?;
    read_records(std::io::BufReader::new(f), path)
}

pub fn write_records_file(path: &Path, records: &[DetectionRecord]) -> Result<()> {
    let f = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating records {}", path.display()), e))?;
    write_records(std::io::BufWriter::new(f), records)
}
