use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;

use super::ingest::RatePoint;
use crate::error::{Error, Result};
use crate::seed::component_rng;

/// (SubjID, GameID)
pub type Key = (u32, u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fold {
    Train,
    Val,
    Test,
}

impl fmt::Display for Fold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fold::Train => "train",
            Fold::Val => "val",
            Fold::Test => "test",
        })
    }
}

impl std::str::FromStr for Fold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Fold::Train),
            "val" => Ok(Fold::Val),
            "test" => Ok(Fold::Test),
            other => Err(Error::validation(format!("unknown fold `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub train: BTreeSet<Key>,
    pub val: BTreeSet<Key>,
    pub test: BTreeSet<Key>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn fold_of(&self, key: &Key) -> Option<Fold> {
        if self.train.contains(key) {
            Some(Fold::Train)
        } else if self.val.contains(key) {
            Some(Fold::Val)
        } else if self.test.contains(key) {
            Some(Fold::Test)
        } else {
            None
        }
    }

    pub fn keys(&self, fold: Fold) -> &BTreeSet<Key> {
        match fold {
            Fold::Train => &self.train,
            Fold::Val => &self.val,
            Fold::Test => &self.test,
        }
    }

    /// All keys with their fold, in key order.
    pub fn entries(&self) -> Vec<(Key, Fold)> {
        let mut all: Vec<(Key, Fold)> = self
            .train
            .iter()
            .map(|k| (*k, Fold::Train))
            .chain(self.val.iter().map(|k| (*k, Fold::Val)))
            .chain(self.test.iter().map(|k| (*k, Fold::Test)))
            .collect();
        all.sort();
        all
    }

    /// One `SubjID,GameID,fold` line per key, no header.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for ((s, g), fold) in self.entries() {
            out.push_str(&format!("{s},{g},{fold}\n"));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path, seed: u64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut split = SplitAssignment {
            train: BTreeSet::new(),
            val: BTreeSet::new(),
            test: BTreeSet::new(),
            seed,
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Row {
                line: i as u64 + 1,
                message: format!("expected `SubjID,GameID,fold`, got `{line}`"),
            };
            let mut parts = line.split(',');
            let (Some(s), Some(g), Some(f), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(bad());
            };
            let key = (
                s.trim().parse().map_err(|_| bad())?,
                g.trim().parse().map_err(|_| bad())?,
            );
            let fold: Fold = f.trim().parse().map_err(|_| bad())?;
            if split.fold_of(&key).is_some() {
                return Err(Error::validation(format!("key {key:?} assigned twice")));
            }
            match fold {
                Fold::Train => split.train.insert(key),
                Fold::Val => split.val.insert(key),
                Fold::Test => split.test.insert(key),
            };
        }
        Ok(split)
    }
}

/// Split rate points into train / validation / test.
///
/// Each subject sends `test_per_subject` of its problems to test, drawn with
/// a stream keyed by (seed, subject). Validation is `round(val_frac * rest)`
/// keys drawn uniformly from everything left over.
pub fn split_dataset(
    points: &[RatePoint],
    seed: u64,
    test_per_subject: usize,
    val_frac: f64,
) -> Result<SplitAssignment> {
    if !(0.0..=1.0).contains(&val_frac) {
        return Err(Error::validation(format!("val_frac {val_frac} outside [0, 1]")));
    }
    let mut by_subject: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for p in points {
        by_subject.entry(p.subj_id).or_default().push(p.game_id);
    }

    let mut test = BTreeSet::new();
    let mut rest = Vec::new();
    for (subj, mut games) in by_subject {
        games.sort_unstable();
        games.dedup();
        if test_per_subject > 0 && games.len() <= test_per_subject {
            return Err(Error::validation(format!(
                "subject {subj} has {} problems, needs more than {test_per_subject}",
                games.len()
            )));
        }
        let mut rng = component_rng(seed, &format!("split/test/{subj}"));
        games.shuffle(&mut rng);
        let (held_out, kept) = games.split_at(test_per_subject);
        test.extend(held_out.iter().map(|&g| (subj, g)));
        rest.extend(kept.iter().map(|&g| (subj, g)));
    }

    rest.sort_unstable();
    let n_val = (val_frac * rest.len() as f64).round() as usize;
    let mut rng = component_rng(seed, "split/val");
    rest.shuffle(&mut rng);
    let val: BTreeSet<Key> = rest[..n_val].iter().copied().collect();
    let train: BTreeSet<Key> = rest[n_val..].iter().copied().collect();

    Ok(SplitAssignment {
        train,
        val,
        test,
        seed,
    })
}
