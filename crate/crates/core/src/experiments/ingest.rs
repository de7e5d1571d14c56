//! Reading and writing grouped score files.
//!
//! The format is comma separated with header `group_id,score,censored`,
//! where `score` is a nonnegative integer and `censored` is `true` or
//! `false`. Lines starting with `#` are skipped. Bad rows are collected with
//! their line numbers rather than aborting the read.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hierarchy::SubpopData;
use crate::quantile::Support;
use crate::regions::CountVector;

const HEADER: [&str; 3] = ["group_id", "score", "censored"];

/// How the support is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportRule {
    /// Fixed grid `lo, lo + step, …, hi`.
    Grid { lo: f64, hi: f64, step: f64 },
    /// The distinct scores present in the file, censored ones included.
    FromData,
}

/// One parsed row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreRecord {
    pub group_id: String,
    pub score: u64,
    pub censored: bool,
}

/// A row that could not be used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// One-based line number in the input.
    pub line: u64,
    pub reason: String,
}

/// Summary of a read.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rejects: Vec<Reject>,
    pub censored: usize,
}

impl IngestReport {
    /// Fraction of accepted rows that are censored.
    pub fn censor_fraction(&self) -> f64 {
        let accepted = self.rows_read - self.rejects.len();
        if accepted == 0 {
            0.0
        } else {
            self.censored as f64 / accepted as f64
        }
    }
}

/// Grouped data on a common support.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub support: Support,
    /// Groups in order of first appearance.
    pub groups: Vec<SubpopData>,
    pub report: IngestReport,
}

impl Dataset {
    /// Every recorded score of group `g` (censored ones at their recorded
    /// value), ascending.
    pub fn scores(&self, g: usize) -> Vec<f64> {
        let group = &self.groups[g];
        let mut out: Vec<f64> = group
            .counts
            .counts()
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(self.support.value(k), c as usize))
            .chain(group.censor_lows.iter().map(|&l| self.support.value(l)))
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite support"));
        out
    }
}

fn parse_record(record: &csv::StringRecord) -> std::result::Result<ScoreRecord, String> {
    if record.len() != 3 {
        return Err(format!("expected 3 fields, found {}", record.len()));
    }
    let group_id = record[0].trim();
    if group_id.is_empty() {
        return Err("empty group_id".into());
    }
    let score = record[1]
        .trim()
        .parse::<u64>()
        .map_err(|_| format!("score {:?} is not a nonnegative integer", &record[1]))?;
    let censored = match record[2].trim().to_ascii_lowercase().as_str() {
        "true" => true,
        "false" => false,
        other => return Err(format!("censored flag {other:?} is not true or false")),
    };
    Ok(ScoreRecord {
        group_id: group_id.to_string(),
        score,
        censored,
    })
}

/// Parses score rows from a reader, returning the usable records with their
/// line numbers and the read report. Each row must fit on one line; blank
/// lines and `#` comments are skipped.
pub fn read_records<R: Read>(mut reader: R) -> Result<(Vec<(u64, ScoreRecord)>, IngestReport)> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let row = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(raw.as_bytes())
            .records()
            .next()
            .transpose();
        let row = match row {
            Ok(Some(row)) => row,
            Ok(None) => continue,
            Err(e) if seen_header => {
                report.rows_read += 1;
                report.rejects.push(Reject {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if !seen_header {
            let names: Vec<&str> = row.iter().map(str::trim).collect();
            if names != HEADER {
                return Err(Error::Config(format!(
                    "line {line}: expected header {}, found {}",
                    HEADER.join(","),
                    names.join(",")
                )));
            }
            seen_header = true;
            continue;
        }
        report.rows_read += 1;
        match parse_record(&row) {
            Ok(r) => records.push((line, r)),
            Err(reason) => report.rejects.push(Reject { line, reason }),
        }
    }
    Ok((records, report))
}

/// Reads a score file and assembles per-group counts and censoring indices.
pub fn ingest_scores(path: &Path, rule: &SupportRule) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, rule)
}

/// [`ingest_scores`] on any reader.
pub fn ingest_reader<R: Read>(reader: R, rule: &SupportRule) -> Result<Dataset> {
    let (records, mut report) = read_records(reader)?;
    let support = match *rule {
        SupportRule::Grid { lo, hi, step } => Support::grid(lo, hi, step)?,
        SupportRule::FromData => {
            let mut values: Vec<u64> = records.iter().map(|(_, r)| r.score).collect();
            values.sort_unstable();
            values.dedup();
            if values.is_empty() {
                return Err(Error::Config(
                    "cannot build a support from a file with no usable scores".into(),
                ));
            }
            Support::new(values.into_iter().map(|v| v as f64).collect())?
        }
    };

    let mut order: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<SubpopData> = Vec::new();
    for (line, r) in records {
        let Some(k) = support.index_of(r.score as f64) else {
            report.rejects.push(Reject {
                line,
                reason: format!("score {} is not a support point", r.score),
            });
            continue;
        };
        let g = *order.entry(r.group_id.clone()).or_insert_with(|| {
            groups.push(SubpopData::new(
                r.group_id.clone(),
                CountVector::zeros(support.len()),
                Vec::new(),
            ));
            groups.len() - 1
        });
        if r.censored {
            groups[g].censor_lows.push(k);
            report.censored += 1;
        } else {
            groups[g].counts.add(k, 1);
        }
    }
    report.rejects.sort_by_key(|r| r.line);
    Ok(Dataset {
        support,
        groups,
        report,
    })
}

/// Writes groups back out in the input format, observed rows first within
/// each group.
pub fn write_scores<W: Write>(writer: W, support: &Support, groups: &[SubpopData]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for g in groups {
        for (k, &c) in g.counts.counts().iter().enumerate() {
            for _ in 0..c {
                w.write_record([g.id.as_str(), &score_text(support, k), "false"])?;
            }
        }
        for &l in &g.censor_lows {
            w.write_record([g.id.as_str(), &score_text(support, l), "true"])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn score_text(support: &Support, k: usize) -> String {
    format!("{}", support.value(k).round() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SupportRule {
        SupportRule::Grid {
            lo: 0.0,
            hi: 20.0,
            step: 1.0,
        }
    }

    #[test]
    fn parses_groups_and_censoring() {
        let text = "# innings\ngroup_id,score,censored\nPIGOTT,4,false\nPIGOTT,8,true\nX,3,false\nPIGOTT,4,false\n";
        let d = ingest_reader(text.as_bytes(), &grid()).unwrap();
        assert_eq!(d.groups.len(), 2);
        assert_eq!(d.groups[0].id, "PIGOTT");
        assert_eq!(d.groups[0].counts.counts()[4], 2);
        assert_eq!(d.groups[0].censor_lows, vec![8]);
        assert_eq!(d.report.rows_read, 4);
        assert_eq!(d.report.censored, 1);
        assert!((d.report.censor_fraction() - 0.25).abs() < 1e-15);
        assert_eq!(d.scores(0), vec![4.0, 4.0, 8.0]);
    }

    #[test]
    fn rejects_carry_line_numbers() {
        let text =
            "group_id,score,censored\nA,1,false\nA,-2,false\nA,5\n# note\nA,99,false\nA,2,maybe\n";
        let d = ingest_reader(text.as_bytes(), &grid()).unwrap();
        let lines: Vec<u64> = d.report.rejects.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![3, 4, 6, 7]);
        assert_eq!(d.groups[0].counts.total(), 1);
    }

    #[test]
    fn empty_input_is_an_empty_dataset() {
        let d = ingest_reader("".as_bytes(), &grid()).unwrap();
        assert!(d.groups.is_empty());
        assert_eq!(d.support.len(), 21);
        assert!(ingest_reader("".as_bytes(), &SupportRule::FromData).is_err());
    }

    #[test]
    fn wrong_header_is_an_error() {
        assert!(ingest_reader("name,runs,out\n".as_bytes(), &grid()).is_err());
    }

    #[test]
    fn support_from_data() {
        let text = "group_id,score,censored\nA,7,false\nB,2,true\nA,7,false\n";
        let d = ingest_reader(text.as_bytes(), &SupportRule::FromData).unwrap();
        assert_eq!(d.support.values(), &[2.0, 7.0]);
        assert_eq!(d.groups[1].censor_lows, vec![0]);
    }
}
