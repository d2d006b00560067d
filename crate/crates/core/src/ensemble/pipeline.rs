//! Layer-1 members and the train -> validate -> blend -> test pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::blend::{blend_fit, BlendModel};
use crate::data::{ChoiceProblem, Fold, Key, RatePoint, SplitAssignment};
use crate::error::{Error, Result};
use crate::eval::{mse_x100, BlendBreakdown, InputType, ReportRow};
use crate::features::{feature_table, IdentityEncoder, SparseVector, Standardizer, N_FEATURES};
use crate::fm::{self, FmConfig, FmModel};
use crate::linear::{self, lasso_fit, ridge_fit, LassoConfig, LinearModel, RidgeConfig, LAMBDA_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Fm,
    Ridge,
    Lasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputKind {
    OneHot,
    Psych,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fm" => Ok(ModelKind::Fm),
            "ridge" => Ok(ModelKind::Ridge),
            "lasso" => Ok(ModelKind::Lasso),
            other => Err(Error::validation(format!("unknown model `{other}`"))),
        }
    }
}

impl FromStr for InputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onehot" => Ok(InputKind::OneHot),
            "psych" => Ok(InputKind::Psych),
            other => Err(Error::validation(format!("unknown input `{other}`"))),
        }
    }
}

/// A layer-1 model choice such as `fm:onehot` or `ridge:psych`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MemberSpec {
    pub model: ModelKind,
    pub input: InputKind,
}

impl MemberSpec {
    pub fn new(model: ModelKind, input: InputKind) -> Result<Self> {
        if matches!((model, input), (ModelKind::Fm, InputKind::Psych)) {
            return Err(Error::Validation(String::new()));
        }
        Ok(Self { model, input })
    }

    /// Every supported member, in report order.
    pub const ALL: [MemberSpec; 5] = [
        MemberSpec { model: ModelKind::Fm, input: InputKind::OneHot },
        MemberSpec { model: ModelKind::Ridge, input: InputKind::OneHot },
        MemberSpec { model: ModelKind::Lasso, input: InputKind::OneHot },
        MemberSpec { model: ModelKind::Ridge, input: InputKind::Psych },
        MemberSpec { model: ModelKind::Lasso, input: InputKind::Psych },
    ];

    pub fn id(&self) -> String {
        format!("{}:{}", self.model_label(), self.input_label())
    }

    pub fn stem(&self) -> String {
        format!("{}_{}", self.model_label(), self.input_label())
    }

    fn model_label(&self) -> &'static str {
        match self.model {
            ModelKind::Fm => "fm",
            ModelKind::Ridge => "ridge",
            ModelKind::Lasso => "lasso",
        }
    }

    fn input_label(&self) -> &'static str {
        match self.input {
            InputKind::OneHot => "onehot",
            InputKind::Psych => "psych",
        }
    }

    /// Display name, e.g. "FM (A)" or "Ridge (B)".
    pub fn name(&self) -> String {
        let model = match self.model {
            ModelKind::Fm => "FM",
            ModelKind::Ridge => "Ridge",
            ModelKind::Lasso => "Lasso",
        };
        let input = match self.input {
            InputKind::OneHot => "A",
            InputKind::Psych => "B",
        };
        format!("{model} ({input})")
    }

    pub fn input_type(&self) -> InputType {
        match self.input {
            InputKind::OneHot => InputType::A,
            InputKind::Psych => InputType::B,
        }
    }
}

impl FromStr for MemberSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (model, input) = s
            .split_once(':')
            .ok_or_else(|| Error::validation(format!("member `{s}` is not of the form model:input")))?;
        let (model, input) = (model.trim().parse()?, input.trim().parse()?);
        MemberSpec::new(model, input)
            .map_err(|_| Error::validation("the factorization machine only takes one-hot input"))
    }
}

impl fmt::Display for MemberSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Parse a comma-separated member list.
pub fn parse_members(list: &str) -> Result<Vec<MemberSpec>> {
    let specs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<MemberSpec>>>()?;
    if specs.is_empty() {
        return Err(Error::validation("empty member list"));
    }
    Ok(specs)
}

/// Targets plus both input representations for every (subject, game) key.
#[derive(Debug, Clone)]
pub struct Dataset {
    targets: BTreeMap<Key, f64>,
    encoder: IdentityEncoder,
    features: BTreeMap<Key, [f64; N_FEATURES]>,
}

impl Dataset {
    pub fn new(problems: &[ChoiceProblem], points: &[RatePoint]) -> Result<Self> {
        Self::from_features(points, feature_table(problems, points)?)
    }

    pub fn from_features(points: &[RatePoint], features: BTreeMap<Key, [f64; N_FEATURES]>) -> Result<Self> {
        let mut targets = BTreeMap::new();
        for p in points {
            if targets.insert(p.key(), p.b_rate).is_some() {
                return Err(Error::validation(format!("duplicate rate point {:?}", p.key())));
            }
            if !features.contains_key(&p.key()) {
                return Err(Error::validation(format!("no features for {:?}", p.key())));
            }
        }
        Ok(Self {
            targets,
            encoder: IdentityEncoder::from_points(points),
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn target(&self, key: &Key) -> Result<f64> {
        self.targets
            .get(key)
            .copied()
            .ok_or_else(|| Error::validation(format!("no rate point for {key:?}")))
    }

    pub fn targets(&self, keys: &[Key]) -> Result<Vec<f64>> {
        keys.iter().map(|k| self.target(k)).collect()
    }

    pub fn onehot(&self, key: &Key) -> Result<SparseVector> {
        self.encoder.encode(key.0, key.1)
    }

    pub fn psych(&self, key: &Key) -> Result<&[f64; N_FEATURES]> {
        self.features
            .get(key)
            .ok_or_else(|| Error::validation(format!("no features for {key:?}")))
    }

    pub fn onehot_dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn dense_input(&self, key: &Key, input: InputKind) -> Result<Vec<f64>> {
        match input {
            InputKind::OneHot => Ok(self.onehot(key)?.to_dense()),
            InputKind::Psych => Ok(self.psych(key)?.to_vec()),
        }
    }

    /// Keys of one fold that this dataset knows about, ascending.
    pub fn fold_keys(&self, split: &SplitAssignment, fold: Fold) -> Vec<Key> {
        split.keys(fold).iter().copied().collect()
    }
}

/// Settings for training layer-1 members.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub fm: FmConfig,
    /// `None` selects lambda on the validation fold.
    pub ridge_lambda: Option<f64>,
    pub lasso_lambda: Option<f64>,
    pub lasso_tol: f64,
    pub lasso_max_iter: usize,
    pub lasso_standardize: bool,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            fm: FmConfig::default(),
            ridge_lambda: None,
            lasso_lambda: None,
            lasso_tol: LassoConfig::default().tol,
            lasso_max_iter: LassoConfig::default().max_iter,
            lasso_standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemberModel {
    Fm(FmModel),
    Linear(LinearModel),
}

/// A fitted member with a record of how it was fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMember {
    pub spec: MemberSpec,
    pub model: MemberModel,
    pub hyperparameters: String,
}

impl TrainedMember {
    pub fn predict(&self, ds: &Dataset, key: &Key) -> Result<f64> {
        match &self.model {
            MemberModel::Fm(m) => m.predict(&ds.onehot(key)?),
            MemberModel::Linear(m) => m.predict(&ds.dense_input(key, self.spec.input)?),
        }
    }

    pub fn predict_keys(&self, ds: &Dataset, keys: &[Key]) -> Result<Vec<f64>> {
        keys.iter().map(|k| self.predict(ds, k)).collect()
    }

    pub fn model_path(dir: &Path, spec: &MemberSpec) -> PathBuf {
        dir.join(format!("{}.model", spec.stem()))
    }

    fn meta_path(dir: &Path, spec: &MemberSpec) -> PathBuf {
        dir.join(format!("{}.meta", spec.stem()))
    }

    /// Writes `<stem>.model` and a one-line `<stem>.meta` with the
    /// hyperparameters.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = Self::model_path(dir, &self.spec);
        match &self.model {
            MemberModel::Fm(m) => fm::save(m, &path)?,
            MemberModel::Linear(m) => linear::save(m, &path)?,
        }
        crate::io::write_text(&Self::meta_path(dir, &self.spec), &format!("{}\n", self.hyperparameters))
    }

    pub fn load(dir: &Path, spec: MemberSpec) -> Result<Self> {
        let path = Self::model_path(dir, &spec);
        let model = match spec.model {
            ModelKind::Fm => MemberModel::Fm(fm::load(&path)?),
            _ => MemberModel::Linear(linear::load(&path)?),
        };
        let meta = Self::meta_path(dir, &spec);
        let hyperparameters = match std::fs::read_to_string(&meta) {
            Ok(s) => s.trim().to_string(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(Error::io(meta, e)),
        };
        Ok(Self { spec, model, hyperparameters })
    }
}

fn fit_linear(
    spec: MemberSpec,
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    settings: &TrainSettings,
) -> Result<(LinearModel, String)> {
    let standardize = spec.input == InputKind::Psych
        && (spec.model == ModelKind::Ridge || settings.lasso_standardize);
    let scaler = standardize.then(|| Standardizer::fit(x));
    let scaled: Vec<Vec<f64>>;
    let design: &[Vec<f64>] = match &scaler {
        Some(s) => {
            scaled = x.iter().map(|r| s.apply(r)).collect();
            &scaled
        }
        None => x,
    };
    let (model, note) = match spec.model {
        ModelKind::Ridge => {
            let fit = ridge_fit(design, y, &RidgeConfig { lambda, fit_intercept: true })?;
            let note = fit.jitter.map(|j| format!(" jitter={j:e}")).unwrap_or_default();
            (fit.model, note)
        }
        ModelKind::Lasso => {
            let fit = lasso_fit(
                design,
                y,
                &LassoConfig {
                    lambda,
                    tol: settings.lasso_tol,
                    max_iter: settings.lasso_max_iter,
                    fit_intercept: true,
                },
            )?;
            if !fit.converged {
                log::warn!("{}: lasso hit max_iter={} before tol", spec.name(), settings.lasso_max_iter);
            }
            (fit.model, format!(" converged={}", fit.converged))
        }
        ModelKind::Fm => unreachable!("FM is not a linear member"),
    };
    let model = match &scaler {
        Some(s) => model.on_raw_inputs(s),
        None => model,
    };
    Ok((model, format!("lambda={lambda} standardize={standardize}{note}")))
}

/// Fit one member on the training fold. Linear members without a fixed
/// lambda pick the grid value with the lowest validation MSE.
pub fn train_member(
    ds: &Dataset,
    split: &SplitAssignment,
    spec: MemberSpec,
    settings: &TrainSettings,
) -> Result<TrainedMember> {
    let train_keys = ds.fold_keys(split, Fold::Train);
    if train_keys.is_empty() {
        return Err(Error::validation("training fold is empty"));
    }
    let y = ds.targets(&train_keys)?;

    if spec.model == ModelKind::Fm {
        let data = train_keys
            .iter()
            .zip(&y)
            .map(|(k, &t)| Ok((ds.onehot(k)?, t)))
            .collect::<Result<Vec<_>>>()?;
        let fit = fm::train(&data, &settings.fm)?;
        return Ok(TrainedMember {
            spec,
            model: MemberModel::Fm(fit.model),
            hyperparameters: settings.fm.describe(),
        });
    }

    let x = train_keys
        .iter()
        .map(|k| ds.dense_input(k, spec.input))
        .collect::<Result<Vec<_>>>()?;
    let fixed = match spec.model {
        ModelKind::Ridge => settings.ridge_lambda,
        _ => settings.lasso_lambda,
    };
    if let Some(lambda) = fixed {
        let (model, hyper) = fit_linear(spec, &x, &y, lambda, settings)?;
        return Ok(TrainedMember { spec, model: MemberModel::Linear(model), hyperparameters: hyper });
    }

    let val_keys = ds.fold_keys(split, Fold::Val);
    if val_keys.is_empty() {
        return Err(Error::validation(format!(
            "{}: lambda selection needs a validation fold (or set a fixed lambda)",
            spec.name()
        )));
    }
    let val_y = ds.targets(&val_keys)?;
    let val_x = val_keys
        .iter()
        .map(|k| ds.dense_input(k, spec.input))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<(f64, LinearModel, String)> = None;
    for lambda in LAMBDA_GRID {
        let (model, hyper) = fit_linear(spec, &x, &y, lambda, settings)?;
        let preds = val_x.iter().map(|r| model.predict(r)).collect::<Result<Vec<_>>>()?;
        let score = mse_x100(&preds, &val_y)?;
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, model, hyper));
        }
    }
    let (_, model, hyper) = best.expect("non-empty grid");
    Ok(TrainedMember {
        spec,
        model: MemberModel::Linear(model),
        hyperparameters: format!("{hyper} (validation-selected)"),
    })
}

/// Train members independently, in parallel.
pub fn train_members(
    ds: &Dataset,
    split: &SplitAssignment,
    specs: &[MemberSpec],
    settings: &TrainSettings,
) -> Result<Vec<TrainedMember>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|&spec| scope.spawn(move || train_member(ds, split, spec, settings)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("member training panicked"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendSettings {
    pub lambda: f64,
    pub intercept: bool,
}

impl Default for BlendSettings {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            intercept: false,
        }
    }
}

/// Member predictions on one fold, row-major (one row per key).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub keys: Vec<Key>,
    pub targets: Vec<f64>,
    pub member_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PredictionMatrix {
    pub fn build(ds: &Dataset, split: &SplitAssignment, fold: Fold, members: &[&TrainedMember]) -> Result<Self> {
        let keys = ds.fold_keys(split, fold);
        let targets = ds.targets(&keys)?;
        let columns = members
            .iter()
            .map(|m| m.predict_keys(ds, &keys))
            .collect::<Result<Vec<_>>>()?;
        let rows = (0..keys.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        Ok(Self {
            keys,
            targets,
            member_ids: members.iter().map(|m| m.spec.id()).collect(),
            rows,
        })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// CSV with `SubjID,GameID,BRate` followed by one column per member and
    /// any `extra` named columns.
    pub fn to_csv(&self, extra: &[(String, Vec<f64>)]) -> String {
        let mut out = String::from("SubjID,GameID,BRate");
        for id in self.member_ids.iter().chain(extra.iter().map(|(n, _)| n)) {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (i, ((s, g), t)) in self.keys.iter().zip(&self.targets).enumerate() {
            out.push_str(&format!("{s},{g},{t}"));
            for v in self.rows[i].iter().chain(extra.iter().map(|(_, c)| &c[i])) {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Everything a blend run produces.
#[derive(Debug, Clone)]
pub struct BlendRun {
    pub blend: BlendModel,
    pub member_names: Vec<String>,
    pub val: PredictionMatrix,
    pub test: PredictionMatrix,
    pub blend_val: Vec<f64>,
    pub blend_test: Vec<f64>,
    pub hyperparameters: String,
}

impl BlendRun {
    pub fn name(&self) -> String {
        self.member_names.join(" + ")
    }

    /// File stem such as `blend_fm_onehot+ridge_psych`.
    pub fn stem(members: &[MemberSpec]) -> String {
        let parts: Vec<String> = members.iter().map(MemberSpec::stem).collect();
        format!("blend_{}", parts.join("+"))
    }
}

/// Fit the blend on validation predictions and apply it to test predictions.
pub fn fit_blend(
    ds: &Dataset,
    split: &SplitAssignment,
    members: &[&TrainedMember],
    settings: &BlendSettings,
) -> Result<BlendRun> {
    let val = PredictionMatrix::build(ds, split, Fold::Val, members)?;
    let blend = blend_fit(&val.member_ids, &val.rows, &val.targets, settings.lambda, settings.intercept)?;
    let hyper = format!("lambda={} intercept={}", settings.lambda, settings.intercept);
    apply_blend(ds, split, members, blend, hyper)
}

/// Score an already-fitted blend on the validation and test folds.
pub fn apply_blend(
    ds: &Dataset,
    split: &SplitAssignment,
    members: &[&TrainedMember],
    blend: BlendModel,
    hyperparameters: String,
) -> Result<BlendRun> {
    let ids: Vec<String> = members.iter().map(|m| m.spec.id()).collect();
    if ids != blend.member_ids {
        return Err(Error::validation(format!(
            "blend expects members {:?}, got {:?}",
            blend.member_ids, ids
        )));
    }
    let val = PredictionMatrix::build(ds, split, Fold::Val, members)?;
    let test = PredictionMatrix::build(ds, split, Fold::Test, members)?;
    let blend_val = val.rows.iter().map(|r| blend.predict(r)).collect::<Result<Vec<_>>>()?;
    let blend_test = test.rows.iter().map(|r| blend.predict(r)).collect::<Result<Vec<_>>>()?;
    Ok(BlendRun {
        blend,
        member_names: members.iter().map(|m| m.spec.name()).collect(),
        val,
        test,
        blend_val,
        blend_test,
        hyperparameters,
    })
}

/// Members fitted on train, blend fitted on validation, combined on test.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub members: Vec<TrainedMember>,
    pub blend: BlendRun,
}

pub fn run_pipeline(
    ds: &Dataset,
    split: &SplitAssignment,
    specs: &[MemberSpec],
    train: &TrainSettings,
    blend: &BlendSettings,
) -> Result<PipelineRun> {
    for fold in [Fold::Train, Fold::Val, Fold::Test] {
        if split.keys(fold).is_empty() {
            return Err(Error::validation(format!("{fold} fold is empty")));
        }
    }
    let members = train_members(ds, split, specs, train)?;
    let refs: Vec<&TrainedMember> = members.iter().collect();
    let blend = fit_blend(ds, split, &refs, blend)?;
    Ok(PipelineRun { members, blend })
}

fn clip(values: &[f64], enabled: bool) -> Vec<f64> {
    if enabled {
        values.iter().map(|v| v.clamp(0.0, 1.0)).collect()
    } else {
        values.to_vec()
    }
}

/// Report row for a single member.
pub fn member_row(
    member: &TrainedMember,
    ds: &Dataset,
    split: &SplitAssignment,
    clip_predictions: bool,
    seed: u64,
) -> Result<ReportRow> {
    let score = |fold| -> Result<f64> {
        let keys = ds.fold_keys(split, fold);
        let preds = member.predict_keys(ds, &keys)?;
        mse_x100(&clip(&preds, clip_predictions), &ds.targets(&keys)?)
    };
    Ok(ReportRow {
        model_name: member.spec.name(),
        input_type: member.spec.input_type(),
        test_mse_x100: score(Fold::Test)?,
        val_mse_x100: score(Fold::Val)?,
        hyperparameters: member.hyperparameters.clone(),
        seed,
        blend: None,
    })
}

/// Report row for a blend, with its coefficient breakdown.
pub fn blend_row(run: &BlendRun, clip_predictions: bool, seed: u64) -> Result<ReportRow> {
    Ok(ReportRow {
        model_name: run.name(),
        input_type: InputType::Ensemble,
        test_mse_x100: mse_x100(&clip(&run.blend_test, clip_predictions), &run.test.targets)?,
        val_mse_x100: mse_x100(&clip(&run.blend_val, clip_predictions), &run.val.targets)?,
        hyperparameters: run.hyperparameters.clone(),
        seed,
        blend: Some(BlendBreakdown {
            coefficients: run
                .member_names
                .iter()
                .cloned()
                .zip(run.blend.coefficients.iter().copied())
                .collect(),
            intercept: run.blend.intercept,
        }),
    })
}

/// Test MSE x 100 of predicting the training-fold mean everywhere.
pub fn global_mean_baseline(ds: &Dataset, split: &SplitAssignment) -> Result<f64> {
    let train = ds.targets(&ds.fold_keys(split, Fold::Train))?;
    if train.is_empty() {
        return Err(Error::validation("training fold is empty"));
    }
    let mean = train.iter().sum::<f64>() / train.len() as f64;
    let test = ds.targets(&ds.fold_keys(split, Fold::Test))?;
    mse_x100(&vec![mean; test.len()], &test)
}
