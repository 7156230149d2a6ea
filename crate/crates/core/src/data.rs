//! CSV ingestion and classification of subjects into observation categories.
//!
//! Schema (UTF-8, comma separated, header required):
//!
//! ```text
//! id,wait_time,survival_time,transplant,dead
//! ```
//!
//! Times are in days. `wait_time` is the time to transplant and may be blank
//! when `transplant = 0`. Subjects with a zero transplant or survival time
//! are dropped during classification.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{Category, CategoryCounts, Dataset, SubjectRecord};

pub const HEADER: [&str; 5] = ["id", "wait_time", "survival_time", "transplant", "dead"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSubject {
    pub id: String,
    pub wait_time: Option<f64>,
    pub survival_time: f64,
    pub transplant: bool,
    pub dead: bool,
    /// 1-based line in the source file.
    pub line: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedRow {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: usize,
    pub dropped: Vec<DroppedRow>,
    pub counts: CategoryCounts,
}

fn parse_time(raw: &str, line: u64, field: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Parse {
        line,
        field: field.into(),
        message: format!("expected a number, got {raw:?}"),
    })?;
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Parse {
            line,
            field: field.into(),
            message: format!("expected a nonnegative time, got {raw:?}"),
        });
    }
    Ok(v)
}

fn parse_flag(raw: &str, line: u64, field: &str) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            line,
            field: field.into(),
            message: format!("expected 0 or 1, got {other:?}"),
        }),
    }
}

/// Parses the subject CSV. Line numbers count the header as line 1.
pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<RawSubject>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut rows = rdr.records();

    let header = match rows.next() {
        None => return Err(Error::NoRecords),
        Some(h) => h.map_err(|e| csv_error(e, 1))?,
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        return Err(Error::Parse {
            line: 1,
            field: "header".into(),
            message: format!("expected {:?}, got {:?}", HEADER.join(","), names.join(",")),
        });
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if row.len() != HEADER.len() {
            return Err(Error::Parse {
                line,
                field: "row".into(),
                message: format!("expected {} fields, got {}", HEADER.len(), row.len()),
            });
        }
        let id = row[0].trim().to_string();
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                field: "id".into(),
                message: "empty id".into(),
            });
        }
        let transplant = parse_flag(&row[3], line, "transplant")?;
        let dead = parse_flag(&row[4], line, "dead")?;
        let wait_time = if row[1].trim().is_empty() {
            if transplant {
                return Err(Error::Parse {
                    line,
                    field: "wait_time".into(),
                    message: "required when transplant = 1".into(),
                });
            }
            None
        } else {
            Some(parse_time(&row[1], line, "wait_time")?)
        };
        let survival_time = parse_time(&row[2], line, "survival_time")?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, line });
        }
        out.push(RawSubject {
            id,
            wait_time,
            survival_time,
            transplant,
            dead,
            line,
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse {
        line,
        field: "row".into(),
        message: e.to_string(),
    }
}

pub fn parse_csv_path<P: AsRef<Path>>(path: P) -> Result<Vec<RawSubject>> {
    parse_csv(File::open(path)?)
}

/// Maps subjects to observation categories, dropping zero-time rows and rows
/// whose transplant time breaks the ordering the category requires.
pub fn classify(subjects: &[RawSubject]) -> Result<(Dataset, CleaningReport)> {
    let mut records = Vec::with_capacity(subjects.len());
    let mut dropped = Vec::new();
    for s in subjects {
        match classify_one(s) {
            Ok(rec) => records.push(rec),
            Err(reason) => dropped.push(DroppedRow {
                id: s.id.clone(),
                reason,
            }),
        }
    }
    let data = Dataset::new(records)?;
    let report = CleaningReport {
        input: subjects.len(),
        dropped,
        counts: data.counts(),
    };
    Ok((data, report))
}

fn classify_one(s: &RawSubject) -> std::result::Result<SubjectRecord, String> {
    let surv = s.survival_time;
    if surv == 0.0 {
        return Err("survival_time is zero".into());
    }
    if !s.transplant {
        return Ok(if s.dead {
            SubjectRecord::b_observed(surv)
        } else {
            SubjectRecord::censored(surv)
        });
    }
    let wait = s.wait_time.ok_or("transplant without wait_time")?;
    if wait == 0.0 {
        return Err("wait_time is zero".into());
    }
    if s.dead {
        if wait >= surv {
            return Err(format!("transplant at {wait} not before death at {surv}"));
        }
        Ok(SubjectRecord::both_observed(wait, surv))
    } else {
        if wait > surv {
            return Err(format!("transplant at {wait} after censoring at {surv}"));
        }
        Ok(SubjectRecord::a_observed(wait, surv))
    }
}

/// Writes a dataset in the subject CSV schema with ids `prefix1, prefix2, ...`.
pub fn write_csv<W: Write>(data: &Dataset, prefix: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for (i, rec) in data.records().iter().enumerate() {
        let id = format!("{prefix}{}", i + 1);
        let (wait, transplant, dead) = match rec.category {
            Category::BothObserved => (rec.t_x.to_string(), "1", "1"),
            Category::AObservedBCensored => (rec.t_x.to_string(), "1", "0"),
            Category::BObservedNoA => (String::new(), "0", "1"),
            Category::BothCensored => (String::new(), "0", "0"),
        };
        w.write_record([id.as_str(), wait.as_str(), &rec.t_y.to_string(), transplant, dead])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
