use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Degree-2 factorization machine over binary sparse inputs.
///
/// `v` holds the latent factors row-major: row `i` is `v[i*k..(i+1)*k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FmModel {
    pub w0: f64,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    n: usize,
    k: usize,
}

/// Dense gradient of the per-example objective with respect to every
/// parameter, laid out like [`FmModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct FmGradient {
    pub w0: f64,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl FmModel {
    /// All-zero model with `n` inputs and latent dimension `k`.
    pub fn zeros(n: usize, k: usize) -> Result<Self> {
        Self::from_parts(0.0, vec![0.0; n], vec![0.0; n * k], n, k)
    }

    pub fn from_parts(w0: f64, w: Vec<f64>, v: Vec<f64>, n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::validation(format!("FM needs n, k >= 1 (got n={n}, k={k})")));
        }
        if w.len() != n || v.len() != n * k {
            return Err(Error::validation("FM parameter shapes do not match n and k"));
        }
        if !w0.is_finite() || w.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::validation("FM parameters must be finite"));
        }
        Ok(Self { w0, w, v, n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn factors(&self, i: usize) -> &[f64] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    pub fn predict(&self, x: &SparseVector) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::validation(format!(
                "input length {} does not match model width {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.predict_active(x.active()))
    }

    /// `w0 + sum w_i + 1/2 sum_f [(sum_i v_if)^2 - sum_i v_if^2]` over the
    /// active set.
    pub(crate) fn predict_active(&self, active: &[usize]) -> f64 {
        let linear: f64 = active.iter().map(|&i| self.w[i]).sum();
        let mut pairwise = 0.0;
        for f in 0..self.k {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for &i in active {
                let vif = self.v[i * self.k + f];
                sum += vif;
                sum_sq += vif * vif;
            }
            pairwise += sum * sum - sum_sq;
        }
        self.w0 + linear + 0.5 * pairwise
    }

    /// `(y_hat - y)^2 + reg_w * sum_active w_i^2 + reg_v * sum_active |v_i|^2`
    pub fn example_loss(&self, x: &SparseVector, y: f64, reg_w: f64, reg_v: f64) -> f64 {
        let active = x.active();
        let err = self.predict_active(active) - y;
        let penalty: f64 = active
            .iter()
            .map(|&i| reg_w * self.w[i].powi(2) + reg_v * self.factors(i).iter().map(|v| v * v).sum::<f64>())
            .sum();
        err * err + penalty
    }

    /// Analytic gradient of [`FmModel::example_loss`].
    pub fn example_gradient(&self, x: &SparseVector, y: f64, reg_w: f64, reg_v: f64) -> FmGradient {
        let active = x.active();
        let step = self.sparse_gradient(active, y, reg_w, reg_v);
        let mut grad = FmGradient {
            w0: step.w0,
            w: vec![0.0; self.n],
            v: vec![0.0; self.n * self.k],
        };
        for (a, &i) in active.iter().enumerate() {
            grad.w[i] = step.w[a];
            grad.v[i * self.k..(i + 1) * self.k].copy_from_slice(&step.v[a * self.k..(a + 1) * self.k]);
        }
        grad
    }

    /// Gradient restricted to the active set; `w` and `v` are indexed by
    /// position within `active`.
    pub(crate) fn sparse_gradient(&self, active: &[usize], y: f64, reg_w: f64, reg_v: f64) -> FmGradient {
        let k = self.k;
        let mut sums = vec![0.0; k];
        for &i in active {
            for (s, v) in sums.iter_mut().zip(self.factors(i)) {
                *s += v;
            }
        }
        let err2 = 2.0 * (self.predict_active(active) - y);
        let w = active.iter().map(|&i| err2 + 2.0 * reg_w * self.w[i]).collect();
        let mut v = Vec::with_capacity(active.len() * k);
        for &i in active {
            for (f, vif) in self.factors(i).iter().enumerate() {
                v.push(err2 * (sums[f] - vif) + 2.0 * reg_v * vif);
            }
        }
        FmGradient { w0: err2, w, v }
    }

    /// Full-batch regularized objective: squared error summed over examples
    /// plus `reg_w * |w|^2 + reg_v * |V|^2`. The bias is not penalized.
    pub fn objective(&self, data: &[(SparseVector, f64)], reg_w: f64, reg_v: f64) -> f64 {
        let sse: f64 = data
            .iter()
            .map(|(x, y)| (self.predict_active(x.active()) - y).powi(2))
            .sum();
        sse + reg_w * self.w.iter().map(|w| w * w).sum::<f64>()
            + reg_v * self.v.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn mse(&self, data: &[(SparseVector, f64)]) -> f64 {
        data.iter()
            .map(|(x, y)| (self.predict_active(x.active()) - y).powi(2))
            .sum::<f64>()
            / data.len() as f64
    }
}
