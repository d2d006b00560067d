//! Model inputs: sparse identity vectors and dense gamble features.

mod onehot;
mod psych;
mod standardize;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub use onehot::{encode_onehot, IdentityEncoder, SparseVector};
pub use psych::{
    dominance, features_for, naive_features, psych_features, ratio_min, NaiveFeatures,
    PsychFeatureVector, FEATURE_NAMES, N_FEATURES,
};
pub use standardize::Standardizer;

use crate::data::{ChoiceProblem, Key, RatePoint};
use crate::error::{Error, Result};

/// Feature rows for every rate point, keyed by (SubjID, GameID).
pub fn feature_table(
    problems: &[ChoiceProblem],
    points: &[RatePoint],
) -> Result<BTreeMap<Key, [f64; N_FEATURES]>> {
    let mut per_game = BTreeMap::new();
    for p in problems {
        per_game.insert(p.game_id, features_for(p)?.to_array());
    }
    points
        .iter()
        .map(|pt| {
            per_game
                .get(&pt.game_id)
                .map(|row| (pt.key(), *row))
                .ok_or_else(|| Error::validation(format!("no problem definition for game {}", pt.game_id)))
        })
        .collect()
}

pub fn write_feature_csv(path: &Path, table: &BTreeMap<Key, [f64; N_FEATURES]>) -> Result<()> {
    let mut out = String::from("SubjID,GameID");
    for name in FEATURE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for ((s, g), row) in table {
        out.push_str(&format!("{s},{g}"));
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_feature_csv(path: &Path) -> Result<BTreeMap<Key, [f64; N_FEATURES]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let expected = std::iter::once("SubjID")
        .chain(std::iter::once("GameID"))
        .chain(FEATURE_NAMES)
        .collect::<Vec<_>>()
        .join(",");
    if header != expected {
        return Err(Error::format(path, "feature header does not match the canonical column list"));
    }
    let mut table = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let bad = |msg: &str| Error::Row {
            line: i as u64 + 2,
            message: msg.to_string(),
        };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != N_FEATURES + 2 {
            return Err(bad("wrong number of cells"));
        }
        let key = (
            cells[0].parse().map_err(|_| bad("bad SubjID"))?,
            cells[1].parse().map_err(|_| bad("bad GameID"))?,
        );
        let mut row = [0.0; N_FEATURES];
        for (slot, cell) in row.iter_mut().zip(&cells[2..]) {
            *slot = cell.parse().map_err(|_| bad("bad feature value"))?;
        }
        table.insert(key, row);
    }
    Ok(table)
}
