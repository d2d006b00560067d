use crate::error::{Error, Result};

/// Tolerance used when validating that probability masses sum to one.
const MASS_TOLERANCE: f64 = 1e-9;

/// A single payoff together with its probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub prob: f64,
}

/// A finite payoff distribution: strictly ascending values, positive masses
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    outcomes: Vec<Outcome>,
}

impl OutcomeDistribution {
    /// Build a distribution from arbitrary `(value, prob)` pairs.
    ///
    /// Pairs are sorted by value, equal values are merged and zero-mass
    /// entries dropped.
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<Outcome> = Vec::new();
        for (value, prob) in pairs {
            if !value.is_finite() {
                return Err(Error::validation(format!("non-finite payoff {value}")));
            }
            if !prob.is_finite() || prob < 0.0 {
                return Err(Error::validation(format!(
                    "invalid probability {prob} for payoff {value}"
                )));
            }
            if prob > 0.0 {
                raw.push(Outcome { value, prob });
            }
        }
        raw.sort_by(|a, b| a.value.total_cmp(&b.value));

        let mut outcomes: Vec<Outcome> = Vec::with_capacity(raw.len());
        for o in raw {
            match outcomes.last_mut() {
                Some(last) if last.value == o.value => last.prob += o.prob,
                _ => outcomes.push(o),
            }
        }

        let total: f64 = outcomes.iter().map(|o| o.prob).sum();
        if outcomes.is_empty() || (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { outcomes })
    }

    /// Point mass at `value`.
    pub fn certain(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.outcomes.iter().map(|o| o.prob).sum()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes.iter().map(|o| o.value * o.prob).sum()
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.outcomes
            .iter()
            .map(|o| o.prob * (o.value - mean).powi(2))
            .sum()
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.outcomes[0].value
    }

    pub fn max(&self) -> f64 {
        self.outcomes[self.outcomes.len() - 1].value
    }

    /// P(X <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        self.outcomes
            .iter()
            .take_while(|o| o.value <= x)
            .map(|o| o.prob)
            .sum()
    }

    /// Push every payoff through `f`, re-merging values that collide.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.outcomes.iter().map(|o| (f(o.value), o.prob)))
            .expect("mapping payoffs preserves total mass")
    }

    /// Same support, equal mass on every distinct payoff.
    pub fn uniform(&self) -> Self {
        let p = 1.0 / self.outcomes.len() as f64;
        Self {
            outcomes: self
                .outcomes
                .iter()
                .map(|o| Outcome {
                    value: o.value,
                    prob: p,
                })
                .collect(),
        }
    }
}

/// Payoff correlation between the two gambles of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corr {
    Negative,
    Zero,
    Positive,
}

impl Corr {
    pub const ALL: [Corr; 3] = [Corr::Negative, Corr::Zero, Corr::Positive];

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            -1 => Ok(Corr::Negative),
            0 => Ok(Corr::Zero),
            1 => Ok(Corr::Positive),
            other => Err(Error::validation(format!(
                "Corr must be -1, 0 or 1, got {other}"
            ))),
        }
    }

    pub fn code(self) -> i64 {
        match self {
            Corr::Negative => -1,
            Corr::Zero => 0,
            Corr::Positive => 1,
        }
    }
}

/// One atom of a joint payoff distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOutcome {
    pub a: f64,
    pub b: f64,
    pub prob: f64,
}

/// Couple two marginals according to `corr`.
///
/// `Zero` gives the product measure. `Positive` pairs ascending quantiles of
/// both marginals (comonotonic), `Negative` pairs `a` ascending with `b`
/// descending (antithetic). Mass is split wherever the two CDFs step at
/// different quantiles.
pub fn joint_distribution(
    a: &OutcomeDistribution,
    b: &OutcomeDistribution,
    corr: Corr,
) -> Vec<JointOutcome> {
    match corr {
        Corr::Zero => a
            .outcomes()
            .iter()
            .flat_map(|oa| {
                b.outcomes().iter().map(move |ob| JointOutcome {
                    a: oa.value,
                    b: ob.value,
                    prob: oa.prob * ob.prob,
                })
            })
            .collect(),
        Corr::Positive => quantile_coupling(a.outcomes(), b.outcomes().iter()),
        Corr::Negative => quantile_coupling(a.outcomes(), b.outcomes().iter().rev()),
    }
}

fn quantile_coupling<'b>(
    a: &[Outcome],
    b: impl Iterator<Item = &'b Outcome>,
) -> Vec<JointOutcome> {
    let mut joint = Vec::with_capacity(a.len() + 4);
    let mut b = b.peekable();
    let mut a_iter = a.iter();
    let mut cur_a = a_iter.next().copied();
    let mut b_left = b.peek().map(|o| o.prob).unwrap_or(0.0);

    while let (Some(oa), Some(ob)) = (cur_a.as_mut(), b.peek().copied()) {
        let mass = oa.prob.min(b_left);
        if mass > 0.0 {
            joint.push(JointOutcome {
                a: oa.value,
                b: ob.value,
                prob: mass,
            });
        }
        if oa.prob <= b_left {
            b_left -= oa.prob;
            cur_a = a_iter.next().copied();
            if b_left <= 0.0 {
                b.next();
                b_left = b.peek().map(|o| o.prob).unwrap_or(0.0);
            }
        } else {
            oa.prob -= b_left;
            b.next();
            b_left = b.peek().map(|o| o.prob).unwrap_or(0.0);
        }
    }
    joint
}

/// P(payoff of B > payoff of A) under the given coupling.
pub fn prob_b_better(a: &OutcomeDistribution, b: &OutcomeDistribution, corr: Corr) -> f64 {
    joint_distribution(a, b, corr)
        .iter()
        .filter(|j| j.b > j.a)
        .map(|j| j.prob)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(f64, f64)]) -> OutcomeDistribution {
        OutcomeDistribution::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn merges_duplicates_and_sorts() {
        let d = dist(&[(5.0, 0.4), (1.0, 0.2), (5.0, 0.4)]);
        assert_eq!(
            d.outcomes(),
            &[
                Outcome { value: 1.0, prob: 0.2 },
                Outcome { value: 5.0, prob: 0.8 }
            ]
        );
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(OutcomeDistribution::new([(1.0, 0.5)]).is_err());
        assert!(OutcomeDistribution::new([(1.0, -0.5), (2.0, 1.5)]).is_err());
        assert!(OutcomeDistribution::new([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn moments() {
        let d = dist(&[(0.0, 0.9), (32.0, 0.1)]);
        assert!((d.mean() - 3.2).abs() < 1e-12);
        assert!((d.variance() - (0.1 * 32.0 * 32.0 - 3.2 * 3.2)).abs() < 1e-9);
        assert_eq!((d.min(), d.max()), (0.0, 32.0));
        assert!((d.cdf(0.0) - 0.9).abs() < 1e-15);
        assert_eq!(d.cdf(-1.0), 0.0);
    }

    #[test]
    fn product_with_point_mass() {
        let a = dist(&[(3.0, 1.0)]);
        let b = dist(&[(0.0, 0.9), (32.0, 0.1)]);
        let j = joint_distribution(&a, &b, Corr::Zero);
        assert_eq!(
            j,
            vec![
                JointOutcome { a: 3.0, b: 0.0, prob: 0.9 },
                JointOutcome { a: 3.0, b: 32.0, prob: 0.1 }
            ]
        );
    }

    #[test]
    fn comonotone_identical_marginals_lie_on_diagonal() {
        let a = dist(&[(-1.0, 0.3), (2.0, 0.2), (7.0, 0.5)]);
        let j = joint_distribution(&a, &a, Corr::Positive);
        assert!(j.iter().all(|o| o.a == o.b));
        assert!((j.iter().map(|o| o.prob).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antithetic_pairing() {
        let a = dist(&[(0.0, 0.5), (10.0, 0.5)]);
        let j = joint_distribution(&a, &a, Corr::Negative);
        assert_eq!(
            j,
            vec![
                JointOutcome { a: 0.0, b: 10.0, prob: 0.5 },
                JointOutcome { a: 10.0, b: 0.0, prob: 0.5 }
            ]
        );
    }

    #[test]
    fn coupling_splits_mass_at_quantile_boundaries() {
        let a = dist(&[(0.0, 0.25), (1.0, 0.75)]);
        let b = dist(&[(0.0, 0.5), (1.0, 0.5)]);
        let j = joint_distribution(&a, &b, Corr::Positive);
        assert_eq!(
            j,
            vec![
                JointOutcome { a: 0.0, b: 0.0, prob: 0.25 },
                JointOutcome { a: 1.0, b: 0.0, prob: 0.25 },
                JointOutcome { a: 1.0, b: 1.0, prob: 0.5 }
            ]
        );
    }

    #[test]
    fn uniform_and_sign_maps() {
        let b = dist(&[(0.0, 0.9), (32.0, 0.1)]);
        assert_eq!(b.uniform().mean(), 16.0);
        let s = b.map_values(|v| if v > 0.0 { 1.0 } else { 0.0 });
        assert!((s.mean() - 0.1).abs() < 1e-15);
    }
}
