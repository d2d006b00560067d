use std::fmt;
use std::str::FromStr;

use super::distribution::{Corr, OutcomeDistribution};
use crate::error::{Error, Result};

/// Shape of gamble B's multi-outcome lottery branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LotShape {
    Symm,
    RSkew,
    LSkew,
    None,
}

impl LotShape {
    pub const ALL: [LotShape; 4] = [LotShape::Symm, LotShape::RSkew, LotShape::LSkew, LotShape::None];

    /// Ordinal code used in the objective feature block.
    pub fn code(self) -> f64 {
        match self {
            LotShape::LSkew => -1.0,
            LotShape::None | LotShape::Symm => 0.0,
            LotShape::RSkew => 1.0,
        }
    }
}

impl FromStr for LotShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Symm" => Ok(LotShape::Symm),
            "R-skew" => Ok(LotShape::RSkew),
            "L-skew" => Ok(LotShape::LSkew),
            "-" => Ok(LotShape::None),
            other => Err(Error::validation(format!("unknown LotShape `{other}`"))),
        }
    }
}

impl fmt::Display for LotShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LotShape::Symm => "Symm",
            LotShape::RSkew => "R-skew",
            LotShape::LSkew => "L-skew",
            LotShape::None => "-",
        })
    }
}

/// One A-vs-B choice problem.
///
/// `lot_val` doubles as the `Lb` column: when `lot_num == 1` the lottery is a
/// single payoff equal to its own expected value.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProblem {
    pub game_id: u32,
    pub ha: f64,
    pub p_ha: f64,
    pub la: f64,
    pub hb: f64,
    pub p_hb: f64,
    pub lot_val: f64,
    pub lot_num: u32,
    pub lot_shape: LotShape,
    pub corr: Corr,
    pub amb: bool,
}

impl ChoiceProblem {
    pub fn validate(&self) -> Result<()> {
        let id = self.game_id;
        for (name, v) in [
            ("Ha", self.ha),
            ("La", self.la),
            ("Hb", self.hb),
            ("Lb", self.lot_val),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(format!("game {id}: {name} is not finite")));
            }
        }
        for (name, p) in [("pHa", self.p_ha), ("pHb", self.p_hb)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!(
                    "game {id}: {name} = {p} outside [0, 1]"
                )));
            }
        }
        if self.lot_num < 1 {
            return Err(Error::validation(format!("game {id}: LotNum must be >= 1")));
        }
        if (self.lot_num == 1) != (self.lot_shape == LotShape::None) {
            return Err(Error::validation(format!(
                "game {id}: LotNum = {} inconsistent with LotShape {}",
                self.lot_num, self.lot_shape
            )));
        }
        if self.lot_shape == LotShape::Symm && self.lot_num.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "game {id}: symmetric lottery needs an odd LotNum, got {}",
                self.lot_num
            )));
        }
        Ok(())
    }

    /// Gamble A: `Ha` with probability `pHa`, otherwise `La`.
    pub fn gamble_a(&self) -> Result<OutcomeDistribution> {
        self.validate()?;
        OutcomeDistribution::new([(self.ha, self.p_ha), (self.la, 1.0 - self.p_ha)])
    }

    /// Gamble B: `Hb` with probability `pHb`, otherwise the lottery.
    pub fn gamble_b(&self) -> Result<OutcomeDistribution> {
        self.validate()?;
        self.gamble_b_with(self.p_hb)
    }

    /// Gamble B as seen without knowing `pHb`: the pessimistic reading puts
    /// no weight on the high branch, leaving only the lottery.
    pub fn gamble_b_objective(&self) -> Result<OutcomeDistribution> {
        self.validate()?;
        if self.amb {
            self.gamble_b_with(0.0)
        } else {
            self.gamble_b_with(self.p_hb)
        }
    }

    fn gamble_b_with(&self, p_hb: f64) -> Result<OutcomeDistribution> {
        let lottery = self.lottery_atoms();
        let rest = 1.0 - p_hb;
        OutcomeDistribution::new(
            std::iter::once((self.hb, p_hb)).chain(lottery.into_iter().map(|(v, p)| (v, p * rest))),
        )
    }

    /// The lottery branch of B on its own, normalised to total mass one.
    pub fn lottery(&self) -> Result<OutcomeDistribution> {
        self.validate()?;
        OutcomeDistribution::new(self.lottery_atoms())
    }

    fn lottery_atoms(&self) -> Vec<(f64, f64)> {
        let n = self.lot_num;
        match self.lot_shape {
            LotShape::None => vec![(self.lot_val, 1.0)],
            LotShape::Symm => {
                // Binomial(k, 1/2) on LotVal - k/2 ..= LotVal + k/2.
                let k = n - 1;
                let half = (k / 2) as f64;
                let scale = 0.5f64.powi(k as i32);
                let mut choose = 1.0f64;
                (0..=k)
                    .map(|j| {
                        if j > 0 {
                            choose = choose * f64::from(k - j + 1) / f64::from(j);
                        }
                        (self.lot_val - half + f64::from(j), choose * scale)
                    })
                    .collect()
            }
            LotShape::RSkew | LotShape::LSkew => {
                let sign = if self.lot_shape == LotShape::RSkew { 1.0 } else { -1.0 };
                let offset = f64::from(n + 1);
                (1..=n)
                    .map(|i| {
                        let step = 2f64.powi(i as i32);
                        let mut prob = 0.5f64.powi(i as i32);
                        if i == n {
                            prob *= 2.0;
                        }
                        (self.lot_val + sign * (step - offset), prob)
                    })
                    .collect()
            }
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::certainty_vs_rare_gain;
    use super::*;

    fn pairs(d: &OutcomeDistribution) -> Vec<(f64, f64)> {
        d.outcomes().iter().map(|o| (o.value, o.prob)).collect()
    }

    fn assert_pairs(got: &OutcomeDistribution, want: &[(f64, f64)]) {
        let got = pairs(got);
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for ((gv, gp), (wv, wp)) in got.iter().zip(want) {
            assert!((gv - wv).abs() < 1e-12 && (gp - wp).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn gamble_a_expansion() {
        let p = certainty_vs_rare_gain();
        assert_pairs(&p.gamble_a().unwrap(), &[(3.0, 1.0)]);

        let p = ChoiceProblem { ha: 5.0, la: 5.0, p_ha: 0.4, ..certainty_vs_rare_gain() };
        assert_pairs(&p.gamble_a().unwrap(), &[(5.0, 1.0)]);

        let p = ChoiceProblem { ha: 10.0, p_ha: 0.25, la: -2.0, ..certainty_vs_rare_gain() };
        assert_pairs(&p.gamble_a().unwrap(), &[(-2.0, 0.75), (10.0, 0.25)]);
    }

    #[test]
    fn gamble_b_single_outcome_lottery() {
        let p = certainty_vs_rare_gain();
        assert_pairs(&p.gamble_b().unwrap(), &[(0.0, 0.9), (32.0, 0.1)]);
    }

    #[test]
    fn gamble_b_symmetric_lottery() {
        let p = ChoiceProblem {
            hb: 20.0,
            p_hb: 0.5,
            lot_val: 10.0,
            lot_num: 3,
            lot_shape: LotShape::Symm,
            ..certainty_vs_rare_gain()
        };
        assert_pairs(
            &p.gamble_b().unwrap(),
            &[(9.0, 0.125), (10.0, 0.25), (11.0, 0.125), (20.0, 0.5)],
        );
        assert!((p.lottery().unwrap().mean() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn gamble_b_right_skew_lottery() {
        let p = ChoiceProblem {
            hb: 0.0,
            p_hb: 0.0,
            lot_val: 10.0,
            lot_num: 2,
            lot_shape: LotShape::RSkew,
            ..certainty_vs_rare_gain()
        };
        assert_pairs(&p.gamble_b().unwrap(), &[(9.0, 0.5), (11.0, 0.5)]);
    }

    #[test]
    fn left_skew_mirrors_right_skew() {
        let base = ChoiceProblem {
            p_hb: 0.0,
            lot_val: 4.0,
            lot_num: 4,
            lot_shape: LotShape::RSkew,
            ..certainty_vs_rare_gain()
        };
        let right = base.lottery().unwrap();
        let left = ChoiceProblem { lot_shape: LotShape::LSkew, ..base }.lottery().unwrap();
        for (r, l) in right.outcomes().iter().zip(left.outcomes().iter().rev()) {
            assert!((r.value - 4.0 + (l.value - 4.0)).abs() < 1e-12);
            assert_eq!(r.prob, l.prob);
        }
    }

    #[test]
    fn invariant_violations() {
        let even_symm = ChoiceProblem {
            lot_num: 2,
            lot_shape: LotShape::Symm,
            ..certainty_vs_rare_gain()
        };
        assert!(matches!(even_symm.validate(), Err(Error::Validation(_))));

        let zero = ChoiceProblem { lot_num: 0, ..certainty_vs_rare_gain() };
        assert!(zero.gamble_b().is_err());

        let shapeless = ChoiceProblem { lot_num: 3, ..certainty_vs_rare_gain() };
        assert!(shapeless.validate().is_err());

        let bad_p = ChoiceProblem { p_ha: 1.5, ..certainty_vs_rare_gain() };
        assert!(bad_p.validate().is_err());
    }

    #[test]
    fn ambiguous_objective_view_drops_high_branch() {
        let p = ChoiceProblem { amb: true, ..certainty_vs_rare_gain() };
        assert_pairs(&p.gamble_b_objective().unwrap(), &[(0.0, 1.0)]);
        assert_pairs(&p.gamble_b().unwrap(), &[(0.0, 0.9), (32.0, 0.1)]);
    }

    #[test]
    fn lot_shape_labels_round_trip() {
        for s in LotShape::ALL {
            assert_eq!(s.to_string().parse::<LotShape>().unwrap(), s);
        }
        assert!("skew".parse::<LotShape>().is_err());
    }
}
