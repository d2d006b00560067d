//! Desk-scale synthetic stand-in for the raw choice data.
//!
//! Choices follow a planted logistic model: the chance of picking B is
//! `sigmoid(EV_SLOPE * (EV_B - EV_A) + bias_subject)`, so both identity and
//! gamble-feature models have real signal to find.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::distribution::Corr;
use super::ingest::TrialRecord;
use super::problem::{ChoiceProblem, LotShape};
use crate::error::{Error, Result};
use crate::seed::component_rng;

/// Problems each subject faces (capped by the number of games).
pub const GAMES_PER_SUBJECT: usize = 30;

const PROBS: [f64; 12] = [0.01, 0.05, 0.1, 0.2, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 0.9, 0.95];
const EV_SLOPE: f64 = 0.3;
const SUBJECT_BIAS_SD: f64 = 0.8;

/// Planted data-generating model, kept alongside the data for inspection.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub problems: Vec<ChoiceProblem>,
    pub trials: Vec<TrialRecord>,
    pub subject_bias: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn random_problem(game_id: u32, rng: &mut impl Rng) -> ChoiceProblem {
    let la = f64::from(rng.random_range(-10i32..=20));
    let ha = la + f64::from(rng.random_range(0i32..=30));
    let p_ha = if rng.random_bool(0.25) { 1.0 } else { *PROBS.choose(rng).unwrap() };

    let (lot_shape, lot_num) = match rng.random_range(0..6) {
        0..=2 => (LotShape::None, 1),
        3 => (LotShape::Symm, *[3u32, 5, 7, 9].choose(rng).unwrap()),
        4 => (LotShape::RSkew, rng.random_range(2u32..=6)),
        _ => (LotShape::LSkew, rng.random_range(2u32..=6)),
    };
    let lot_val = f64::from(rng.random_range(-10i32..=20));
    let hb = lot_val + f64::from(rng.random_range(0i32..=30));
    let p_hb = *PROBS.choose(rng).unwrap();
    let corr = match rng.random_range(0..5) {
        0 => Corr::Negative,
        1 => Corr::Positive,
        _ => Corr::Zero,
    };
    ChoiceProblem {
        game_id,
        ha,
        p_ha,
        la,
        hb,
        p_hb,
        lot_val,
        lot_num,
        lot_shape,
        corr,
        amb: rng.random_bool(0.1),
    }
}

/// Generate problems and trial-level choices for `n_subjects` subjects.
///
/// Subject and game ids start at 1. Each subject is assigned
/// `min(GAMES_PER_SUBJECT, n_games)` distinct games.
pub fn synth_generate(
    n_subjects: usize,
    n_games: usize,
    trials_per_cell: usize,
    seed: u64,
) -> Result<SynthData> {
    if n_subjects == 0 || n_games == 0 || trials_per_cell == 0 {
        return Err(Error::validation("synthetic counts must all be >= 1"));
    }
    if trials_per_cell > 25 {
        return Err(Error::validation(format!(
            "at most 25 trials per problem, got {trials_per_cell}"
        )));
    }

    let mut rng = component_rng(seed, "synth/problems");
    let problems: Vec<ChoiceProblem> = (1..=n_games as u32)
        .map(|id| random_problem(id, &mut rng))
        .collect();
    let ev_gap: Vec<f64> = problems
        .iter()
        .map(|p| {
            let a = p.gamble_a().expect("generated problems are valid");
            let b = p.gamble_b().expect("generated problems are valid");
            b.mean() - a.mean()
        })
        .collect();

    let mut rng = component_rng(seed, "synth/subjects");
    let bias_dist = Normal::new(0.0, SUBJECT_BIAS_SD).expect("finite sd");
    let subject_bias: Vec<f64> = (0..n_subjects).map(|_| bias_dist.sample(&mut rng)).collect();

    let per_subject = GAMES_PER_SUBJECT.min(n_games);
    let mut rng = component_rng(seed, "synth/choices");
    let mut trials = Vec::with_capacity(n_subjects * per_subject * trials_per_cell);
    let mut game_order: Vec<usize> = (0..n_games).collect();
    for (s, bias) in subject_bias.iter().enumerate() {
        game_order.shuffle(&mut rng);
        let mut assigned = game_order[..per_subject].to_vec();
        assigned.sort_unstable();
        for g in assigned {
            let p_b = sigmoid(EV_SLOPE * ev_gap[g] + bias);
            for t in 0..trials_per_cell {
                trials.push(TrialRecord {
                    subj_id: s as u32 + 1,
                    game_id: problems[g].game_id,
                    block: (t / 5 + 1) as u8,
                    trial: (t + 1) as u8,
                    chose_b: rng.random_bool(p_b),
                    feedback: t >= 5,
                });
            }
        }
    }
    Ok(SynthData {
        problems,
        trials,
        subject_bias,
    })
}
