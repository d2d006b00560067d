use crate::data::{prob_b_better, ChoiceProblem, OutcomeDistribution};
use crate::error::Result;

/// Column names of the dense feature vector, in storage order.
pub const FEATURE_NAMES: [&str; 27] = [
    "Ha", "pHa", "La", "Hb", "pHb", "LotVal", "LotNum", "lotShapeCode", "Corr", "Amb",
    "feedbackCode", "dEV", "dSD", "dMin", "dMax", "dEV_o", "dEV_fb", "pBetter_o", "pBetter_fb",
    "dUniEV", "pBetter_u", "dSignEV", "pBetter_So", "pBetter_Sfb", "SignMax", "RatioMin", "Dom",
];

pub const N_FEATURES: usize = FEATURE_NAMES.len();

/// Objective, naive and behavioural features of one problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsychFeatureVector {
    pub objective: [f64; 11],
    pub naive: NaiveFeatures,
    pub d_ev_o: f64,
    pub d_ev_fb: f64,
    pub p_better_o: f64,
    pub p_better_fb: f64,
    pub d_uni_ev: f64,
    pub p_better_u: f64,
    pub d_sign_ev: f64,
    pub p_better_so: f64,
    pub p_better_sfb: f64,
    pub sign_max: f64,
    pub ratio_min: f64,
    pub dom: f64,
}

impl PsychFeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        out[..11].copy_from_slice(&self.objective);
        out[11..15].copy_from_slice(&[self.naive.d_ev, self.naive.d_sd, self.naive.d_min, self.naive.d_max]);
        out[15..].copy_from_slice(&[
            self.d_ev_o,
            self.d_ev_fb,
            self.p_better_o,
            self.p_better_fb,
            self.d_uni_ev,
            self.p_better_u,
            self.d_sign_ev,
            self.p_better_so,
            self.p_better_sfb,
            self.sign_max,
            self.ratio_min,
            self.dom,
        ]);
        out
    }
}

/// Statistic of B minus the same statistic of A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveFeatures {
    pub d_ev: f64,
    pub d_sd: f64,
    pub d_min: f64,
    pub d_max: f64,
}

pub fn naive_features(a: &OutcomeDistribution, b: &OutcomeDistribution) -> NaiveFeatures {
    NaiveFeatures {
        d_ev: b.mean() - a.mean(),
        d_sd: b.std_dev() - a.std_dev(),
        d_min: b.min() - a.min(),
        d_max: b.max() - a.max(),
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Signed ratio of the two minimal outcomes, bounded to [-1, 1].
pub fn ratio_min(a: &OutcomeDistribution, b: &OutcomeDistribution) -> f64 {
    let (ma, mb) = (a.min(), b.min());
    let hi = ma.abs().max(mb.abs());
    if hi == 0.0 {
        return 0.0;
    }
    sign(ma) * sign(mb) * ma.abs().min(mb.abs()) / hi
}

/// First-order stochastic dominance: +1 if B dominates A, -1 if A dominates
/// B, 0 otherwise (including identical distributions).
pub fn dominance(a: &OutcomeDistribution, b: &OutcomeDistribution) -> f64 {
    const EPS: f64 = 1e-12;
    let mut b_weak = true;
    let mut a_weak = true;
    let mut strict = false;
    let points = a.outcomes().iter().chain(b.outcomes()).map(|o| o.value);
    for x in points {
        let (fa, fb) = (a.cdf(x), b.cdf(x));
        if fb > fa + EPS {
            b_weak = false;
        }
        if fa > fb + EPS {
            a_weak = false;
        }
        if (fa - fb).abs() > EPS {
            strict = true;
        }
    }
    match (b_weak, a_weak, strict) {
        (true, _, true) => 1.0,
        (_, true, true) => -1.0,
        _ => 0.0,
    }
}

/// Build the full feature vector. `a` and `b` must be the expansions of `p`.
pub fn psych_features(
    p: &ChoiceProblem,
    a: &OutcomeDistribution,
    b: &OutcomeDistribution,
) -> Result<PsychFeatureVector> {
    let b_obj = p.gamble_b_objective()?;
    let corr = p.corr;

    let (a_u, b_u) = (a.uniform(), b.uniform());
    let (a_s, b_s, b_obj_s) = (a.map_values(sign), b.map_values(sign), b_obj.map_values(sign));

    Ok(PsychFeatureVector {
        objective: [
            p.ha,
            p.p_ha,
            p.la,
            p.hb,
            p.p_hb,
            p.lot_val,
            f64::from(p.lot_num),
            p.lot_shape.code(),
            p.corr.code() as f64,
            f64::from(u8::from(p.amb)),
            0.0,
        ],
        naive: naive_features(a, b),
        d_ev_o: b_obj.mean() - a.mean(),
        d_ev_fb: b.mean() - a.mean(),
        p_better_o: prob_b_better(a, &b_obj, corr),
        p_better_fb: prob_b_better(a, b, corr),
        d_uni_ev: b_u.mean() - a_u.mean(),
        p_better_u: prob_b_better(&a_u, &b_u, corr),
        d_sign_ev: b_s.mean() - a_s.mean(),
        p_better_so: prob_b_better(&a_s, &b_obj_s, corr),
        p_better_sfb: prob_b_better(&a_s, &b_s, corr),
        sign_max: sign(a.max().max(b.max())),
        ratio_min: ratio_min(a, b),
        dom: dominance(a, b),
    })
}

/// Expand `p` and compute its features.
pub fn features_for(p: &ChoiceProblem) -> Result<PsychFeatureVector> {
    psych_features(p, &p.gamble_a()?, &p.gamble_b()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fixtures::certainty_vs_rare_gain, Corr};

    fn dist(pairs: &[(f64, f64)]) -> OutcomeDistribution {
        OutcomeDistribution::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn naive_on_certainty_vs_rare_gain() {
        let p = certainty_vs_rare_gain();
        let n = naive_features(&p.gamble_a().unwrap(), &p.gamble_b().unwrap());
        assert!((n.d_ev - 0.2).abs() < 1e-12);
        assert_eq!((n.d_min, n.d_max), (-3.0, 29.0));
        assert!((n.d_sd - 9.6).abs() < 1e-12);
    }

    #[test]
    fn naive_on_identical() {
        let d = dist(&[(1.0, 0.5), (4.0, 0.5)]);
        let n = naive_features(&d, &d);
        assert_eq!((n.d_ev, n.d_sd, n.d_min, n.d_max), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn behavioural_features_on_certainty_vs_rare_gain() {
        let f = features_for(&certainty_vs_rare_gain()).unwrap();
        assert!((f.p_better_fb - 0.1).abs() < 1e-12);
        assert!((f.d_sign_ev + 0.9).abs() < 1e-12);
        assert!((f.d_uni_ev - 13.0).abs() < 1e-12);
        assert!((f.p_better_u - 0.5).abs() < 1e-12);
        assert_eq!((f.sign_max, f.ratio_min, f.dom), (1.0, 0.0, 0.0));
        assert_eq!(f.d_ev_o, f.d_ev_fb);
        assert_eq!(f.p_better_o, f.p_better_fb);
    }

    #[test]
    fn ambiguity_uses_pessimistic_view() {
        let p = ChoiceProblem { amb: true, ..certainty_vs_rare_gain() };
        let f = features_for(&p).unwrap();
        assert!((f.d_ev_o + 3.0).abs() < 1e-12);
        assert!((f.d_ev_fb - 0.2).abs() < 1e-12);
        assert_eq!(f.p_better_o, 0.0);
    }

    #[test]
    fn shifted_copy_dominates() {
        let a = dist(&[(-2.0, 0.3), (1.0, 0.3), (5.0, 0.4)]);
        let b = a.map_values(|v| v + 1.0);
        assert_eq!(dominance(&a, &b), 1.0);
        assert_eq!(dominance(&b, &a), -1.0);
        assert_eq!(dominance(&a, &a), 0.0);
        assert!((prob_b_better(&a, &b, Corr::Positive) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_cdfs_do_not_dominate() {
        let a = dist(&[(3.0, 1.0)]);
        let b = dist(&[(0.0, 0.9), (32.0, 0.1)]);
        assert_eq!(dominance(&a, &b), 0.0);
    }

    #[test]
    fn ratio_min_cases() {
        let pos = dist(&[(2.0, 1.0)]);
        let neg = dist(&[(-8.0, 1.0)]);
        let zero = dist(&[(0.0, 1.0)]);
        assert_eq!(ratio_min(&pos, &neg), -0.25);
        assert_eq!(ratio_min(&neg, &pos), -0.25);
        assert_eq!(ratio_min(&zero, &zero), 0.0);
        assert_eq!(ratio_min(&pos, &pos), 1.0);
    }

    #[test]
    fn names_match_vector_width() {
        let f = features_for(&certainty_vs_rare_gain()).unwrap().to_array();
        assert_eq!(f.len(), FEATURE_NAMES.len());
        assert_eq!(f[11], features_for(&certainty_vs_rare_gain()).unwrap().naive.d_ev);
        assert_eq!(f[10], 0.0);
    }
}
