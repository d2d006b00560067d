//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::ensemble::{BlendSettings, TrainSettings};
use crate::error::{Error, Result};
use crate::fm::{FmConfig, Solver};
use crate::linear::LassoConfig;

/// Every tunable of a run. Keys in a config file map one-to-one onto fields.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fm: FmConfig,
    pub ridge_lambda: Option<f64>,
    pub lasso_lambda: Option<f64>,
    pub lasso_tol: f64,
    pub lasso_max_iter: usize,
    pub lasso_standardize: bool,
    pub blend_lambda: f64,
    pub blend_intercept: bool,
    pub test_per_subject: usize,
    pub val_frac: f64,
    pub seed: u64,
    pub clip_predictions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lasso = LassoConfig::default();
        let blend = BlendSettings::default();
        Self {
            fm: FmConfig::default(),
            ridge_lambda: None,
            lasso_lambda: None,
            lasso_tol: lasso.tol,
            lasso_max_iter: lasso.max_iter,
            lasso_standardize: true,
            blend_lambda: blend.lambda,
            blend_intercept: blend.intercept,
            test_per_subject: 5,
            val_frac: 0.10,
            seed: 0,
            clip_predictions: false,
        }
    }
}

/// Every accepted key, in `resolved` order.
pub const KEYS: [&str; 18] = [
    "fm.k",
    "fm.lr",
    "fm.epochs",
    "fm.reg_w",
    "fm.reg_v",
    "fm.init_std",
    "fm.solver",
    "ridge.lambda",
    "lasso.lambda",
    "lasso.tol",
    "lasso.max_iter",
    "lasso.standardize",
    "blend.lambda",
    "blend.intercept",
    "split.test_per_subject",
    "split.val_frac",
    "seed",
    "clip_predictions",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::validation(format!("bad value `{value}` for `{key}`")))
}

fn parse_lambda(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        return Ok(None);
    }
    let v: f64 = parse(key, value)?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::validation(format!("`{key}` must be >= 0 or `auto`")));
    }
    Ok(Some(v))
}

fn show_lambda(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), |l| l.to_string())
}

impl RunConfig {
    /// Apply one setting. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "fm.k" => self.fm.k = parse(key, value)?,
            "fm.lr" => self.fm.learning_rate = parse(key, value)?,
            "fm.epochs" => self.fm.epochs = parse(key, value)?,
            "fm.reg_w" => self.fm.reg_w = parse(key, value)?,
            "fm.reg_v" => self.fm.reg_v = parse(key, value)?,
            "fm.init_std" => self.fm.init_std = parse(key, value)?,
            "fm.solver" => self.fm.solver = value.parse::<Solver>()?,
            "ridge.lambda" => self.ridge_lambda = parse_lambda(key, value)?,
            "lasso.lambda" => self.lasso_lambda = parse_lambda(key, value)?,
            "lasso.tol" => self.lasso_tol = parse(key, value)?,
            "lasso.max_iter" => self.lasso_max_iter = parse(key, value)?,
            "lasso.standardize" => self.lasso_standardize = parse(key, value)?,
            "blend.lambda" => self.blend_lambda = parse(key, value)?,
            "blend.intercept" => self.blend_intercept = parse(key, value)?,
            "split.test_per_subject" => self.test_per_subject = parse(key, value)?,
            "split.val_frac" => self.val_frac = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "clip_predictions" => self.clip_predictions = parse(key, value)?,
            _ => return Err(Error::validation(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Parse config text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("config line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::validation(format!("config line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.val_frac) {
            return Err(Error::validation("split.val_frac must be in [0, 1]"));
        }
        if !(self.blend_lambda >= 0.0 && self.blend_lambda.is_finite()) {
            return Err(Error::validation("blend.lambda must be >= 0"));
        }
        if !(self.lasso_tol > 0.0) || self.lasso_max_iter == 0 {
            return Err(Error::validation("lasso.tol must be > 0 and lasso.max_iter >= 1"));
        }
        if self.fm.k == 0 {
            return Err(Error::validation("fm.k must be >= 1"));
        }
        Ok(())
    }

    /// Fully resolved settings in config-file syntax, one key per line.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        let rows: [(&str, String); 18] = [
            ("fm.k", self.fm.k.to_string()),
            ("fm.lr", self.fm.learning_rate.to_string()),
            ("fm.epochs", self.fm.epochs.to_string()),
            ("fm.reg_w", self.fm.reg_w.to_string()),
            ("fm.reg_v", self.fm.reg_v.to_string()),
            ("fm.init_std", self.fm.init_std.to_string()),
            ("fm.solver", self.fm.solver.to_string()),
            ("ridge.lambda", show_lambda(self.ridge_lambda)),
            ("lasso.lambda", show_lambda(self.lasso_lambda)),
            ("lasso.tol", self.lasso_tol.to_string()),
            ("lasso.max_iter", self.lasso_max_iter.to_string()),
            ("lasso.standardize", self.lasso_standardize.to_string()),
            ("blend.lambda", self.blend_lambda.to_string()),
            ("blend.intercept", self.blend_intercept.to_string()),
            ("split.test_per_subject", self.test_per_subject.to_string()),
            ("split.val_frac", self.val_frac.to_string()),
            ("seed", self.seed.to_string()),
            ("clip_predictions", self.clip_predictions.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings {
            fm: FmConfig {
                seed: self.seed,
                ..self.fm.clone()
            },
            ridge_lambda: self.ridge_lambda,
            lasso_lambda: self.lasso_lambda,
            lasso_tol: self.lasso_tol,
            lasso_max_iter: self.lasso_max_iter,
            lasso_standardize: self.lasso_standardize,
        }
    }

    pub fn blend_settings(&self) -> BlendSettings {
        BlendSettings {
            lambda: self.blend_lambda,
            intercept: self.blend_intercept,
        }
    }
}
