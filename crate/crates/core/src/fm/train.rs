use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use super::model::FmModel;
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::seed::component_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Sgd,
    Als,
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Solver::Sgd),
            "als" => Ok(Solver::Als),
            other => Err(Error::validation(format!("unknown FM solver `{other}`"))),
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Sgd => "sgd",
            Solver::Als => "als",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmConfig {
    pub k: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub reg_w: f64,
    pub reg_v: f64,
    pub init_std: f64,
    pub seed: u64,
    pub solver: Solver,
}

impl Default for FmConfig {
    fn default() -> Self {
        Self {
            k: 8,
            learning_rate: 0.01,
            epochs: 200,
            reg_w: 1e-3,
            reg_v: 1e-3,
            init_std: 0.01,
            seed: 0,
            solver: Solver::Sgd,
        }
    }
}

impl FmConfig {
    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::validation("fm.k must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("fm.lr must be > 0"));
        }
        if !(self.reg_w >= 0.0 && self.reg_v >= 0.0) {
            return Err(Error::validation("fm.reg_w and fm.reg_v must be >= 0"));
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return Err(Error::validation("fm.init_std must be > 0"));
        }
        Ok(())
    }

    /// Compact `key=value` summary for reports.
    pub fn describe(&self) -> String {
        format!(
            "solver={} k={} lr={} epochs={} reg_w={} reg_v={} init_std={}",
            self.solver, self.k, self.learning_rate, self.epochs, self.reg_w, self.reg_v, self.init_std
        )
    }
}

/// A trained model with its per-epoch (SGD) or per-sweep (ALS) trace.
#[derive(Debug, Clone)]
pub struct FmFit {
    pub model: FmModel,
    /// Training MSE before any update, then after each epoch/sweep.
    pub train_mse: Vec<f64>,
    /// Full-batch regularized objective at the same points.
    pub objective: Vec<f64>,
}

fn check_data(data: &[(SparseVector, f64)]) -> Result<usize> {
    let Some((first, _)) = data.first() else {
        return Err(Error::validation("no training examples"));
    };
    let n = first.len();
    for (x, y) in data {
        if x.len() != n {
            return Err(Error::validation("training vectors have different lengths"));
        }
        if !y.is_finite() {
            return Err(Error::validation("non-finite training target"));
        }
    }
    Ok(n)
}

fn initial_model(n: usize, cfg: &FmConfig) -> Result<FmModel> {
    let mut rng = component_rng(cfg.seed, "fm/init");
    let normal = Normal::new(0.0, cfg.init_std).expect("validated init_std");
    let v = (0..n * cfg.k).map(|_| normal.sample(&mut rng)).collect();
    FmModel::from_parts(0.0, vec![0.0; n], v, n, cfg.k)
}

/// Train with whichever solver `cfg` names.
pub fn train(data: &[(SparseVector, f64)], cfg: &FmConfig) -> Result<FmFit> {
    match cfg.solver {
        Solver::Sgd => train_sgd(data, cfg),
        Solver::Als => train_als(data, cfg),
    }
}

/// Plain SGD on the per-example squared error with L2 penalties on the
/// active parameters.
pub fn train_sgd(data: &[(SparseVector, f64)], cfg: &FmConfig) -> Result<FmFit> {
    cfg.validate()?;
    let n = check_data(data)?;
    let k = cfg.k;
    let mut model = initial_model(n, cfg)?;
    let mut rng = component_rng(cfg.seed, "fm/shuffle");
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut train_mse = vec![model.mse(data)];
    let mut objective = vec![model.objective(data, cfg.reg_w, cfg.reg_v)];
    let lr = cfg.learning_rate;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &m in &order {
            let (x, y) = &data[m];
            let active = x.active();
            let g = model.sparse_gradient(active, *y, cfg.reg_w, cfg.reg_v);
            model.w0 -= lr * g.w0;
            for (a, &i) in active.iter().enumerate() {
                model.w[i] -= lr * g.w[a];
                for f in 0..k {
                    model.v[i * k + f] -= lr * g.v[a * k + f];
                }
            }
        }
        let mse = model.mse(data);
        if !mse.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        train_mse.push(mse);
        objective.push(model.objective(data, cfg.reg_w, cfg.reg_v));
    }
    Ok(FmFit {
        model,
        train_mse,
        objective,
    })
}

/// Coordinate-wise least squares: every parameter in turn is set to its
/// exact minimizer with all others held fixed. One sweep visits the bias,
/// each `w_i`, then each latent column `f`.
pub fn train_als(data: &[(SparseVector, f64)], cfg: &FmConfig) -> Result<FmFit> {
    cfg.validate()?;
    let n = check_data(data)?;
    let k = cfg.k;
    let mut model = initial_model(n, cfg)?;

    let mut rows_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (m, (x, _)) in data.iter().enumerate() {
        for &i in x.active() {
            rows_of[i].push(m);
        }
    }

    // residual e_m = y_hat_m - y_m
    let mut resid: Vec<f64> = data
        .iter()
        .map(|(x, y)| model.predict_active(x.active()) - y)
        .collect();
    let mut q = vec![0.0; data.len()];

    let mut train_mse = vec![model.mse(data)];
    let mut objective = vec![model.objective(data, cfg.reg_w, cfg.reg_v)];
    let n_rows = data.len() as f64;
    for sweep in 1..=cfg.epochs {
        let delta = -resid.iter().sum::<f64>() / n_rows;
        model.w0 += delta;
        resid.iter_mut().for_each(|e| *e += delta);

        for i in 0..n {
            let rows = &rows_of[i];
            let denom = rows.len() as f64 + cfg.reg_w;
            if denom == 0.0 {
                continue;
            }
            let wi = model.w[i];
            let num: f64 = rows.iter().map(|&m| wi - resid[m]).sum();
            let new = num / denom;
            let d = new - wi;
            model.w[i] = new;
            for &m in rows {
                resid[m] += d;
            }
        }

        for f in 0..k {
            for (m, (x, _)) in data.iter().enumerate() {
                q[m] = x.active().iter().map(|&i| model.v[i * k + f]).sum();
            }
            for i in 0..n {
                let rows = &rows_of[i];
                let vif = model.v[i * k + f];
                let mut num = 0.0;
                let mut den = cfg.reg_v;
                for &m in rows {
                    let h = q[m] - vif;
                    num += h * (vif * h - resid[m]);
                    den += h * h;
                }
                if den == 0.0 {
                    continue;
                }
                let new = num / den;
                let d = new - vif;
                model.v[i * k + f] = new;
                for &m in rows {
                    resid[m] += d * (q[m] - vif);
                    q[m] += d;
                }
            }
        }

        let mse = model.mse(data);
        if !mse.is_finite() {
            return Err(Error::Divergence { epoch: sweep });
        }
        let obj = model.objective(data, cfg.reg_w, cfg.reg_v);
        debug_assert!(
            obj <= objective[objective.len() - 1] * (1.0 + 1e-9) + 1e-12,
            "ALS objective increased at sweep {sweep}"
        );
        train_mse.push(mse);
        objective.push(obj);
    }
    Ok(FmFit {
        model,
        train_mse,
        objective,
    })
}
