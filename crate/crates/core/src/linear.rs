//! Ridge and lasso regression with an unpenalized intercept.
//!
//! Both minimize the plain sum of squared residuals plus the penalty, so
//! `lambda` is on the scale of the row count.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::Standardizer;
use crate::io::{parse_floats, read_lines, write_text, Lines};

pub const LINEAR_HEADER: &str = "psychfm-model v1 linear";

/// Validation-selection grid for lambda.
pub const LAMBDA_GRID: [f64; 8] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];

/// `y_hat = b + w . x`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub b: f64,
    pub w: Vec<f64>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::validation(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.w.len()
            )));
        }
        Ok(self.b + dot(&self.w, x))
    }

    /// Rewrite a model fitted on standardized inputs so it accepts raw ones.
    pub fn on_raw_inputs(&self, standardizer: &Standardizer) -> LinearModel {
        let w: Vec<f64> = self
            .w
            .iter()
            .zip(&standardizer.scale)
            .map(|(w, s)| w / s)
            .collect();
        let b = self.b - dot(&w, &standardizer.mean);
        LinearModel { b, w }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub fit_intercept: bool,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            fit_intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub model: LinearModel,
    /// Extra diagonal added when the system was numerically singular.
    pub jitter: Option<f64>,
    /// Relative norm of the normal-equation residual at the solution.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub fit_intercept: bool,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tol: 1e-6,
            max_iter: 100_000,
            fit_intercept: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub model: LinearModel,
    pub converged: bool,
    pub sweeps: usize,
    /// Objective before the first sweep and after each sweep.
    pub objective: Vec<f64>,
}

/// Design matrix centred (when fitting an intercept) plus the centring data.
struct Centered {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

fn check_inputs<R: AsRef<[f64]>>(x: &[R], y: &[f64], lambda: f64) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::validation("regression needs at least one row"));
    }
    if x.len() != y.len() {
        return Err(Error::validation(format!(
            "{} rows but {} targets",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].as_ref().len();
    for row in x {
        let row = row.as_ref();
        if row.len() != d {
            return Err(Error::validation("ragged design matrix"));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite feature value"));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite target"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(d)
}

fn center<R: AsRef<[f64]>>(x: &[R], y: &[f64], d: usize, fit_intercept: bool) -> Centered {
    let m = x.len() as f64;
    let (x_mean, y_mean) = if fit_intercept {
        let mut xm = vec![0.0; d];
        for row in x {
            for (acc, v) in xm.iter_mut().zip(row.as_ref()) {
                *acc += v;
            }
        }
        xm.iter_mut().for_each(|v| *v /= m);
        (xm, y.iter().sum::<f64>() / m)
    } else {
        (vec![0.0; d], 0.0)
    };
    Centered {
        x: x
            .iter()
            .map(|row| row.as_ref().iter().zip(&x_mean).map(|(v, mu)| v - mu).collect())
            .collect(),
        y: y.iter().map(|v| v - y_mean).collect(),
        x_mean,
        y_mean,
    }
}

/// In-place Cholesky factorization of a symmetric matrix; `None` if not
/// numerically positive definite.
fn cholesky(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    for j in 0..n {
        let mut diag = a[j][j];
        let floor = 1e-12 * diag.abs();
        for k in 0..j {
            diag -= a[j][k] * a[j][k];
        }
        if !(diag > floor) {
            return None;
        }
        let ljj = diag.sqrt();
        a[j][j] = ljj;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / ljj;
        }
    }
    Some(a)
}

fn cholesky_solve(l: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut z = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i][k] * z[k];
        }
        z[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[k][i] * z[k];
        }
        z[i] /= l[i][i];
    }
    z
}

/// Closed-form ridge regression through a Cholesky solve of
/// `(X'X + lambda I) w = X'y` on centred data.
///
/// A singular system gets a diagonal jitter starting at 1e-10 (times the
/// mean diagonal when that exceeds one), reported in [`RidgeFit::jitter`].
pub fn ridge_fit<R: AsRef<[f64]>>(x: &[R], y: &[f64], cfg: &RidgeConfig) -> Result<RidgeFit> {
    let d = check_inputs(x, y, cfg.lambda)?;
    let c = center(x, y, d, cfg.fit_intercept);

    let mut gram = vec![vec![0.0; d]; d];
    let mut xty = vec![0.0; d];
    for (row, yi) in c.x.iter().zip(&c.y) {
        for i in 0..d {
            xty[i] += row[i] * yi;
            for j in 0..=i {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[j][i] = gram[i][j];
        }
    }

    let mean_diag = if d > 0 { (0..d).map(|i| gram[i][i]).sum::<f64>() / d as f64 } else { 0.0 };
    let mut jitter = None;
    let mut extra = 0.0;
    let w = loop {
        let mut a = gram.clone();
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += cfg.lambda + extra;
        }
        if let Some(l) = cholesky(a) {
            break cholesky_solve(&l, &xty);
        }
        extra = if extra == 0.0 { 1e-10 * mean_diag.max(1.0) } else { extra * 10.0 };
        jitter = Some(extra);
        if !extra.is_finite() {
            return Err(Error::validation("ridge system could not be regularized"));
        }
    };
    if let Some(j) = jitter {
        log::warn!("ridge: singular system, solved with diagonal jitter {j:e}");
    }

    // (X'X + lambda I) w - X'y, relative to |X'y| + |lambda w|
    let lam = cfg.lambda + extra;
    let mut res_sq = 0.0;
    let mut scale_sq = 0.0;
    for i in 0..d {
        let r = dot(&gram[i], &w) + lam * w[i] - xty[i];
        res_sq += r * r;
        scale_sq += xty[i] * xty[i] + (lam * w[i]).powi(2);
    }
    let residual = if scale_sq > 0.0 { (res_sq / scale_sq).sqrt() } else { res_sq.sqrt() };
    debug_assert!(residual < 1e-8, "ridge normal-equation residual {residual}");

    let b = if cfg.fit_intercept { c.y_mean - dot(&w, &c.x_mean) } else { 0.0 };
    Ok(RidgeFit {
        model: LinearModel { b, w },
        jitter,
        residual,
    })
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `sum (y - b - Xw)^2 + lambda sum |w_j|`.
///
/// Stops once the largest coordinate change in a sweep is below `tol`, or
/// after `max_iter` sweeps with `converged = false`.
pub fn lasso_fit<R: AsRef<[f64]>>(x: &[R], y: &[f64], cfg: &LassoConfig) -> Result<LassoFit> {
    let d = check_inputs(x, y, cfg.lambda)?;
    if !(cfg.tol > 0.0) {
        return Err(Error::validation("lasso tol must be > 0"));
    }
    let c = center(x, y, d, cfg.fit_intercept);
    let m = c.x.len();

    // column-major copy for the coordinate loop
    let cols: Vec<Vec<f64>> = (0..d).map(|j| c.x.iter().map(|r| r[j]).collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|col| dot(col, col)).collect();
    let mut w = vec![0.0; d];
    let mut resid = c.y.clone();
    let half_lambda = cfg.lambda / 2.0;

    let objective = |resid: &[f64], w: &[f64]| {
        dot(resid, resid) + cfg.lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut history = vec![objective(&resid, &w)];
    let mut converged = d == 0;
    let mut sweeps = 0;
    while !converged && sweeps < cfg.max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..d {
            if norms[j] == 0.0 {
                continue;
            }
            let col = &cols[j];
            let rho = dot(col, &resid) + norms[j] * w[j];
            let new = soft_threshold(rho, half_lambda) / norms[j];
            let delta = new - w[j];
            if delta != 0.0 {
                for i in 0..m {
                    resid[i] -= delta * col[i];
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        let obj = objective(&resid, &w);
        debug_assert!(
            obj <= history[history.len() - 1] * (1.0 + 1e-10) + 1e-12,
            "lasso objective increased at sweep {sweeps}"
        );
        history.push(obj);
        converged = max_change < cfg.tol;
    }

    let b = if cfg.fit_intercept { c.y_mean - dot(&w, &c.x_mean) } else { 0.0 };
    Ok(LassoFit {
        model: LinearModel { b, w },
        converged,
        sweeps,
        objective: history,
    })
}

pub fn to_text(m: &LinearModel) -> String {
    let w: Vec<String> = m.w.iter().map(|v| v.to_string()).collect();
    format!("{LINEAR_HEADER}\n{}\n{}\n{}\n", m.w.len(), m.b, w.join(" "))
}

pub fn from_text(text: &str, path: &Path) -> Result<LinearModel> {
    from_lines(Lines::new(text.to_string()), path)
}

fn from_lines(mut lines: Lines, path: &Path) -> Result<LinearModel> {
    lines.expect_header(LINEAR_HEADER, path)?;
    let d: usize = lines
        .next_record(path)?
        .trim()
        .parse()
        .map_err(|_| Error::format(path, "bad dimension record"))?;
    let b = parse_floats(lines.next_record(path)?, 1, path)?[0];
    let w = if d == 0 {
        Vec::new()
    } else {
        parse_floats(lines.next_record(path)?, d, path)?
    };
    if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("linear model parameters must be finite"));
    }
    Ok(LinearModel { b, w })
}

pub fn save(m: &LinearModel, path: &Path) -> Result<()> {
    write_text(path, &to_text(m))
}

pub fn load(path: &Path) -> Result<LinearModel> {
    from_lines(read_lines(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> LinearModel {
        ridge_fit(x, y, &RidgeConfig { lambda, fit_intercept: true }).unwrap().model
    }

    fn lasso(x: &[Vec<f64>], y: &[f64], lambda: f64) -> LassoFit {
        lasso_fit(x, y, &LassoConfig { lambda, tol: 1e-12, ..LassoConfig::default() }).unwrap()
    }

    #[test]
    fn ridge_exact_interpolation() {
        let m = ridge(&[vec![1.0], vec![2.0]], &[1.0, 2.0], 0.0);
        assert!((m.w[0] - 1.0).abs() < 1e-12 && m.b.abs() < 1e-12, "{m:?}");
    }

    #[test]
    fn ridge_hand_closed_form() {
        let m = ridge(&[vec![1.0], vec![-1.0]], &[1.0, -1.0], 2.0);
        assert!((m.w[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ridge_infinite_shrinkage() {
        let x = vec![vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 5.0]];
        let y = [3.0, 1.0, 2.0];
        let m = ridge(&x, &y, 1e9);
        assert!(m.w.iter().all(|w| w.abs() < 1e-6));
        assert!((m.b - 2.0).abs() < 1e-5);
    }

    #[test]
    fn ridge_collinear_columns_get_jitter() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        let fit = ridge_fit(&x, &[1.0, 2.0, 3.1], &RidgeConfig { lambda: 0.0, fit_intercept: true }).unwrap();
        assert!(fit.jitter.is_some());
        assert!(fit.model.w.iter().all(|w| w.is_finite()));
    }

    #[test]
    fn ridge_satisfies_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = rng.random_range(1..6);
            let m = rng.random_range(d + 1..30);
            let x: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fit = ridge_fit(&x, &y, &RidgeConfig { lambda: rng.random_range(0.0..3.0), fit_intercept: true }).unwrap();
            assert!(fit.residual < 1e-8);
        }
    }

    #[test]
    fn lasso_matches_least_squares_at_zero_penalty() {
        let x = vec![vec![1.0, 0.5], vec![2.0, -1.0], vec![0.0, 3.0], vec![1.5, 1.5]];
        let y = [1.0, 0.0, 2.0, 1.2];
        let r = ridge(&x, &y, 0.0);
        let l = lasso(&x, &y, 0.0);
        assert!(l.converged);
        for (a, b) in r.w.iter().zip(&l.model.w) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!((r.b - l.model.b).abs() < 1e-6);
    }

    #[test]
    fn lasso_soft_threshold_hand_values() {
        let x = vec![vec![1.0], vec![-1.0]];
        let y = [1.0, -1.0];
        assert!((lasso(&x, &y, 2.0).model.w[0] - 0.5).abs() < 1e-12);
        assert_eq!(lasso(&x, &y, 4.0).model.w[0], 0.0);
        assert_eq!(lasso(&x, &y, 10.0).model.w[0], 0.0);
    }

    #[test]
    fn lasso_large_penalty_zeroes_weights_not_intercept() {
        let x = vec![vec![1.0, 3.0], vec![2.0, -1.0], vec![4.0, 0.0]];
        let y = [5.0, 6.0, 7.0];
        let fit = lasso(&x, &y, 1e6);
        assert!(fit.model.w.iter().all(|&w| w == 0.0));
        assert_eq!(fit.model.b, 6.0);
    }

    #[test]
    fn lasso_objective_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let d = rng.random_range(1..8);
            let m = rng.random_range(2..40);
            let x: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fit = lasso(&x, &y, rng.random_range(0.0..5.0));
            for w in fit.objective.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].max(1.0));
            }
        }
    }

    #[test]
    fn lasso_reports_non_convergence() {
        let x = vec![vec![1.0, 0.99], vec![0.5, 0.52], vec![0.1, 0.08]];
        let fit = lasso_fit(&x, &[1.0, 0.2, 0.3], &LassoConfig { lambda: 0.0, tol: 1e-15, max_iter: 2, fit_intercept: true }).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.sweeps, 2);
    }

    #[test]
    fn predict_cases() {
        let m = LinearModel { b: 0.0, w: vec![1.0, 2.0] };
        assert_eq!(m.predict(&[3.0, 4.0]).unwrap(), 11.0);
        let m0 = LinearModel { b: 0.25, w: vec![0.0, 0.0] };
        assert_eq!(m0.predict(&[3.0, 4.0]).unwrap(), 0.25);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn standardized_fit_folds_into_raw_model() {
        let x = vec![vec![1.0, 10.0], vec![2.0, 30.0], vec![4.0, 20.0], vec![3.0, 0.0]];
        let y = [1.0, 2.0, 2.5, 0.5];
        let s = Standardizer::fit(&x);
        let xs: Vec<Vec<f64>> = x.iter().map(|r| s.apply(r)).collect();
        let fitted = ridge(&xs, &y, 0.5);
        let raw = fitted.on_raw_inputs(&s);
        for (r, rs) in x.iter().zip(&xs) {
            assert!((raw.predict(r).unwrap() - fitted.predict(rs).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn file_round_trip() {
        let m = LinearModel { b: -0.125, w: vec![1.0 / 3.0, 2e-17, -5.5] };
        let back = from_text(&to_text(&m), Path::new("m")).unwrap();
        assert_eq!(back, m);
        let x = [0.3, 0.2, 0.1];
        assert_eq!(back.predict(&x).unwrap().to_bits(), m.predict(&x).unwrap().to_bits());
        assert!(from_text("psychfm-model v1 fm\n", Path::new("m")).is_err());
    }
}
