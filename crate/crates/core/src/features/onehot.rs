use crate::data::RatePoint;
use crate::error::{Error, Result};

/// Binary sparse input: the listed indices are 1, everything else 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseVector {
    len: usize,
    active: Vec<usize>,
}

impl SparseVector {
    /// `active` must be strictly ascending and below `len`.
    pub fn new(len: usize, active: Vec<usize>) -> Result<Self> {
        if active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("active indices must be strictly ascending"));
        }
        if let Some(&last) = active.last() {
            if last >= len {
                return Err(Error::validation(format!(
                    "active index {last} out of range for length {len}"
                )));
            }
        }
        Ok(Self { len, active })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.len];
        for &i in &self.active {
            dense[i] = 1.0;
        }
        dense
    }
}

/// Subjects occupy `[0, n_subjects)`, games `[n_subjects, n_subjects + n_games)`.
pub fn encode_onehot(
    subj_idx: usize,
    game_idx: usize,
    n_subjects: usize,
    n_games: usize,
) -> Result<SparseVector> {
    if subj_idx >= n_subjects || game_idx >= n_games {
        return Err(Error::validation(format!(
            "identity ({subj_idx}, {game_idx}) out of range for {n_subjects} subjects x {n_games} games"
        )));
    }
    SparseVector::new(n_subjects + n_games, vec![subj_idx, n_subjects + game_idx])
}

/// Dense index assignment for raw subject and game ids (ascending id order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityEncoder {
    subjects: Vec<u32>,
    games: Vec<u32>,
}

impl IdentityEncoder {
    pub fn from_points(points: &[RatePoint]) -> Self {
        let mut subjects: Vec<u32> = points.iter().map(|p| p.subj_id).collect();
        let mut games: Vec<u32> = points.iter().map(|p| p.game_id).collect();
        subjects.sort_unstable();
        subjects.dedup();
        games.sort_unstable();
        games.dedup();
        Self { subjects, games }
    }

    pub fn dim(&self) -> usize {
        self.subjects.len() + self.games.len()
    }

    pub fn encode(&self, subj_id: u32, game_id: u32) -> Result<SparseVector> {
        let s = self
            .subjects
            .binary_search(&subj_id)
            .map_err(|_| Error::validation(format!("unknown subject {subj_id}")))?;
        let g = self
            .games
            .binary_search(&game_id)
            .map_err(|_| Error::validation(format!("unknown game {game_id}")))?;
        encode_onehot(s, g, self.subjects.len(), self.games.len())
    }
}
