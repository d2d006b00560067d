//! Generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use proptest::prelude::*;
use psychfm::data::{ChoiceProblem, Corr, LotShape, OutcomeDistribution};
use psychfm::features::SparseVector;
use psychfm::fm::FmModel;

pub fn corr_strategy() -> impl Strategy<Value = Corr> {
    prop_oneof![Just(Corr::Negative), Just(Corr::Zero), Just(Corr::Positive)]
}

/// (shape, LotNum) pairs that satisfy the problem constraints.
pub fn lottery_strategy() -> impl Strategy<Value = (LotShape, u32)> {
    prop_oneof![
        Just((LotShape::None, 1)),
        (1u32..=4).prop_map(|h| (LotShape::Symm, 2 * h + 1)),
        (2u32..=9).prop_map(|n| (LotShape::RSkew, n)),
        (2u32..=9).prop_map(|n| (LotShape::LSkew, n)),
    ]
}

fn prob_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), (1u32..100).prop_map(|c| f64::from(c) / 100.0)]
}

/// Valid choice problems on integer payoffs in roughly the range the
/// real problem set uses.
pub fn problem_strategy() -> impl Strategy<Value = ChoiceProblem> {
    (
        (-50i32..=50, -50i32..=50, prob_strategy()),
        (-50i32..=50, prob_strategy(), -50i32..=50),
        lottery_strategy(),
        corr_strategy(),
        any::<bool>(),
    )
        .prop_map(|((ha, la, p_ha), (hb, p_hb, lot_val), (lot_shape, lot_num), corr, amb)| ChoiceProblem {
            game_id: 1,
            ha: f64::from(ha.max(la)),
            p_ha,
            la: f64::from(ha.min(la)),
            hb: f64::from(hb),
            p_hb,
            lot_val: f64::from(lot_val),
            lot_num,
            lot_shape,
            corr,
            amb,
        })
}

/// Small arbitrary distributions: up to 6 atoms on a coarse value grid.
pub fn distribution_strategy() -> impl Strategy<Value = OutcomeDistribution> {
    prop::collection::vec((-10i32..=10, 1u32..=20), 1..=6).prop_map(|atoms| {
        let total: u32 = atoms.iter().map(|(_, w)| w).sum();
        OutcomeDistribution::new(
            atoms
                .into_iter()
                .map(|(v, w)| (f64::from(v) / 2.0, f64::from(w) / f64::from(total))),
        )
        .expect("weights sum to one")
    })
}

/// Generalized inverse CDF: smallest value whose cumulative mass reaches `u`.
fn quantile(d: &OutcomeDistribution, u: f64) -> f64 {
    let mut acc = 0.0;
    for o in d.outcomes() {
        acc += o.prob;
        if acc >= u {
            return o.value;
        }
    }
    d.max()
}

/// P(B > A) by enumerating the joint support directly. Independent pairs are
/// a double loop; the quantile couplings integrate `1[q_B(u') > q_A(u)]`
/// over `u` piecewise between every CDF breakpoint, with `u' = u` for +1 and
/// `u' = 1 - u` for -1.
pub fn p_better_oracle(a: &OutcomeDistribution, b: &OutcomeDistribution, corr: Corr) -> f64 {
    if corr == Corr::Zero {
        let mut p = 0.0;
        for oa in a.outcomes() {
            for ob in b.outcomes() {
                if ob.value > oa.value {
                    p += oa.prob * ob.prob;
                }
            }
        }
        return p;
    }
    let mut cuts = vec![0.0, 1.0];
    let mut acc = 0.0;
    for o in a.outcomes() {
        acc += o.prob;
        cuts.push(acc.min(1.0));
    }
    acc = 0.0;
    for o in b.outcomes() {
        acc += o.prob;
        let c = acc.min(1.0);
        cuts.push(if corr == Corr::Positive { c } else { 1.0 - c });
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut p = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let u = 0.5 * (lo + hi);
        let ub = if corr == Corr::Positive { u } else { 1.0 - u };
        if quantile(b, ub) > quantile(a, u) {
            p += hi - lo;
        }
    }
    p
}

/// FM prediction by the textbook double loop over feature pairs.
pub fn fm_naive_predict(m: &FmModel, x: &[f64]) -> f64 {
    let n = m.n();
    let mut y = m.w0;
    for i in 0..n {
        y += m.w[i] * x[i];
    }
    for i in 0..n {
        for j in i + 1..n {
            let vi = m.factors(i);
            let vj = m.factors(j);
            let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
            y += dot * x[i] * x[j];
        }
    }
    y
}

/// Random FM plus a binary input, as (model, sparse input, dense input).
pub fn fm_case_strategy(max_n: usize, max_k: usize) -> impl Strategy<Value = (FmModel, SparseVector, Vec<f64>)> {
    (1..=max_n, 1..=max_k).prop_flat_map(|(n, k)| {
        (
            -1.0f64..1.0,
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n * k),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(w0, w, v, mask)| {
                let model = FmModel::from_parts(w0, w, v, n, k).unwrap();
                let active: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
                let dense = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                (model, SparseVector::new(n, active).unwrap(), dense)
            })
    })
}

/// Least squares through nalgebra's Householder QR, with an intercept column
/// when requested. Returns (intercept, weights).
pub fn qr_least_squares(x: &[Vec<f64>], y: &[f64], intercept: bool) -> (f64, Vec<f64>) {
    let m = x.len();
    let d = x[0].len();
    let off = usize::from(intercept);
    let a = nalgebra::DMatrix::from_fn(m, d + off, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            x[i][j - off]
        }
    });
    let b = nalgebra::DVector::from_column_slice(y);
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let sol = qr
        .r()
        .solve_upper_triangular(&qtb)
        .expect("full-rank system");
    let coef: Vec<f64> = sol.iter().copied().collect();
    if intercept {
        (coef[0], coef[1..].to_vec())
    } else {
        (0.0, coef)
    }
}
