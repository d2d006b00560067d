use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::distribution::Corr;
use super::problem::{ChoiceProblem, LotShape};
use crate::error::{Error, Result};

/// Column set of the raw trial-level file, in canonical order.
pub const RAW_COLUMNS: [&str; 16] = [
    "SubjID", "GameID", "Ha", "pHa", "La", "Hb", "pHb", "Lb", "LotNum", "LotShape", "Corr", "Amb",
    "Block", "Trial", "B", "Feedback",
];

const PROBLEM_COLUMNS: [&str; 11] = [
    "GameID", "Ha", "pHa", "La", "Hb", "pHb", "Lb", "LotNum", "LotShape", "Corr", "Amb",
];

/// One choice made by one subject on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub subj_id: u32,
    pub game_id: u32,
    pub block: u8,
    pub trial: u8,
    pub chose_b: bool,
    pub feedback: bool,
}

/// Aggregated B-rate of one subject on one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub subj_id: u32,
    pub game_id: u32,
    pub b_rate: f64,
    pub n_trials: u32,
}

impl RatePoint {
    pub fn key(&self) -> (u32, u32) {
        (self.subj_id, self.game_id)
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Row {
            line,
            message: format!("malformed CSV: {other:?}"),
        },
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

/// Maps required column names to positions in a header row.
struct Columns {
    index: Vec<usize>,
}

impl Columns {
    fn locate(headers: &csv::StringRecord, required: &[&str]) -> Result<Self> {
        let index = required
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == *name)
                    .ok_or_else(|| Error::MissingColumn((*name).to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { index })
    }
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    columns: &'a Columns,
    names: &'a [&'a str],
    line: u64,
}

impl Row<'_> {
    fn raw(&self, col: usize) -> &str {
        self.record.get(self.columns.index[col]).unwrap_or("").trim()
    }

    fn parse<T: FromStr>(&self, col: usize) -> Result<T> {
        let cell = self.raw(col);
        cell.parse().map_err(|_| Error::Row {
            line: self.line,
            message: format!("cannot parse {} value `{cell}`", self.names[col]),
        })
    }

    fn flag(&self, col: usize) -> Result<bool> {
        match self.parse::<i64>(col)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Row {
                line: self.line,
                message: format!("{} must be 0 or 1, got {other}", self.names[col]),
            }),
        }
    }

    fn in_row(&self, err: Error) -> Error {
        match err {
            Error::Validation(msg) => Error::Validation(format!("line {}: {msg}", self.line)),
            other => other,
        }
    }

    /// Parses the problem columns starting at `first` (GameID position).
    fn problem(&self, first: usize) -> Result<ChoiceProblem> {
        let shape: LotShape = self.raw(first + 8).parse().map_err(|e| self.in_row(e))?;
        let corr = Corr::from_code(self.parse(first + 9)?).map_err(|e| self.in_row(e))?;
        let problem = ChoiceProblem {
            game_id: self.parse(first)?,
            ha: self.parse(first + 1)?,
            p_ha: self.parse(first + 2)?,
            la: self.parse(first + 3)?,
            hb: self.parse(first + 4)?,
            p_hb: self.parse(first + 5)?,
            lot_val: self.parse(first + 6)?,
            lot_num: self.parse(first + 7)?,
            lot_shape: shape,
            corr,
            amb: self.flag(first + 10)?,
        };
        problem.validate().map_err(|e| self.in_row(e))?;
        Ok(problem)
    }
}

/// Parse a raw trial-level file.
///
/// Extra columns are ignored. Returns one problem per distinct `GameID`
/// (ascending) and the trials in file order.
pub fn parse_raw_csv(path: &Path) -> Result<(Vec<ChoiceProblem>, Vec<TrialRecord>)> {
    parse_raw_reader(open(path)?, path)
}

pub fn parse_raw_reader<R: Read>(
    reader: R,
    path: &Path,
) -> Result<(Vec<ChoiceProblem>, Vec<TrialRecord>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let columns = Columns::locate(&headers, &RAW_COLUMNS)?;

    let mut problems: BTreeMap<u32, ChoiceProblem> = BTreeMap::new();
    let mut trials = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(|e| csv_error(path, e))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = Row {
            record: &record,
            columns: &columns,
            names: &RAW_COLUMNS,
            line,
        };
        let problem = row.problem(1)?;
        let trial = TrialRecord {
            subj_id: row.parse(0)?,
            game_id: problem.game_id,
            block: row.parse(12)?,
            trial: row.parse(13)?,
            chose_b: row.flag(14)?,
            feedback: row.flag(15)?,
        };
        if !(1..=5).contains(&trial.block) || !(1..=25).contains(&trial.trial) {
            return Err(Error::Row {
                line,
                message: format!(
                    "Block {} / Trial {} outside 1-5 / 1-25",
                    trial.block, trial.trial
                ),
            });
        }
        match problems.get(&problem.game_id) {
            Some(known) if *known != problem => {
                return Err(Error::Validation(format!(
                    "line {line}: game {} redefined with different parameters",
                    problem.game_id
                )))
            }
            Some(_) => {}
            None => {
                problems.insert(problem.game_id, problem);
            }
        }
        trials.push(trial);
    }
    Ok((problems.into_values().collect(), trials))
}

/// Write trials in the raw trial-level layout.
pub fn write_raw_csv(path: &Path, problems: &[ChoiceProblem], trials: &[TrialRecord]) -> Result<()> {
    let by_id: BTreeMap<u32, &ChoiceProblem> = problems.iter().map(|p| (p.game_id, p)).collect();
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut write = || -> std::result::Result<(), csv::Error> {
        w.write_record(RAW_COLUMNS)?;
        for t in trials {
            let p = by_id[&t.game_id];
            let mut rec = vec![t.subj_id.to_string()];
            rec.extend(problem_fields(p));
            rec.extend([
                t.block.to_string(),
                t.trial.to_string(),
                u8::from(t.chose_b).to_string(),
                u8::from(t.feedback).to_string(),
            ]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| csv_error(path, e))
}

fn problem_fields(p: &ChoiceProblem) -> [String; 11] {
    [
        p.game_id.to_string(),
        p.ha.to_string(),
        p.p_ha.to_string(),
        p.la.to_string(),
        p.hb.to_string(),
        p.p_hb.to_string(),
        p.lot_val.to_string(),
        p.lot_num.to_string(),
        p.lot_shape.to_string(),
        p.corr.code().to_string(),
        u8::from(p.amb).to_string(),
    ]
}

pub fn write_problems_csv(path: &Path, problems: &[ChoiceProblem]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut write = || -> std::result::Result<(), csv::Error> {
        w.write_record(PROBLEM_COLUMNS)?;
        for p in problems {
            w.write_record(problem_fields(p))?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| csv_error(path, e))
}

pub fn read_problems_csv(path: &Path) -> Result<Vec<ChoiceProblem>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let columns = Columns::locate(&headers, &PROBLEM_COLUMNS)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = Row {
            record: &record,
            columns: &columns,
            names: &PROBLEM_COLUMNS,
            line: record.position().map(|p| p.line()).unwrap_or(0),
        };
        out.push(row.problem(0)?);
    }
    Ok(out)
}

/// One rate point per (subject, game), in ascending key order.
pub fn aggregate_b_rates(trials: &[TrialRecord]) -> Vec<RatePoint> {
    let mut groups: BTreeMap<(u32, u32), (u32, u32)> = BTreeMap::new();
    for t in trials {
        let entry = groups.entry((t.subj_id, t.game_id)).or_default();
        entry.0 += u32::from(t.chose_b);
        entry.1 += 1;
    }
    groups
        .into_iter()
        .map(|((subj_id, game_id), (chose_b, n))| RatePoint {
            subj_id,
            game_id,
            b_rate: f64::from(chose_b) / f64::from(n),
            n_trials: n,
        })
        .collect()
}

pub fn write_rates_csv(path: &Path, points: &[RatePoint]) -> Result<()> {
    let mut file = create(path)?;
    let mut out = String::from("SubjID,GameID,BRate,N\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.subj_id, p.game_id, p.b_rate, p.n_trials));
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_rates_csv(path: &Path) -> Result<Vec<RatePoint>> {
    const COLS: [&str; 4] = ["SubjID", "GameID", "BRate", "N"];
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    let columns = Columns::locate(&headers, &COLS)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = Row {
            record: &record,
            columns: &columns,
            names: &COLS,
            line: record.position().map(|p| p.line()).unwrap_or(0),
        };
        let point = RatePoint {
            subj_id: row.parse(0)?,
            game_id: row.parse(1)?,
            b_rate: row.parse(2)?,
            n_trials: row.parse(3)?,
        };
        if !(0.0..=1.0).contains(&point.b_rate) || point.n_trials == 0 {
            return Err(Error::Validation(format!(
                "line {}: BRate {} / N {} out of range",
                row.line, point.b_rate, point.n_trials
            )));
        }
        out.push(point);
    }
    Ok(out)
}
