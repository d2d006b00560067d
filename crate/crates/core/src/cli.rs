//! Command-line front end: `ingest | synth | featurize | split | train |
//! blend | eval | run-all`.
//!
//! Every subcommand reads and writes plain files under `--out DIR`, so each
//! stage can be re-run on its own.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::data::{
    aggregate_b_rates, parse_raw_csv, read_problems_csv, read_rates_csv, split_dataset,
    synth_generate, write_problems_csv, write_raw_csv, write_rates_csv, ChoiceProblem, Fold,
    RatePoint, SplitAssignment,
};
use crate::ensemble::{
    self, apply_blend, blend_row, fit_blend, global_mean_baseline, member_row, parse_members,
    train_member, train_members, BlendRun, Dataset, InputKind, MemberSpec, ModelKind,
    PredictionMatrix, TrainedMember,
};
use crate::error::{Error, Result};
use crate::eval::{emit_report, EvalReport, ReportFormat};
use crate::features::{feature_table, read_feature_csv, write_feature_csv};
use crate::io::write_text;

const DEFAULT_MEMBERS: &str = "fm:onehot,ridge:psych";

/// Blends trained by `run-all` when `--members` is not given.
const REFERENCE_BLENDS: [&str; 3] = ["fm:onehot,ridge:psych", "ridge:onehot,ridge:psych", "fm:onehot,lasso:psych"];

#[derive(Debug, Parser)]
#[command(name = "psychfm", version, about = "Per-person B-rate prediction with blended FM and feature regressions")]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Run directory for all artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "run")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Fm,
    Ridge,
    Lasso,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputArg {
    Onehot,
    Psych,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long, value_enum, default_value = "markdown")]
    format: FormatArg,
    /// Clip predictions to [0, 1] before scoring.
    #[arg(long)]
    clip: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse raw trial-level CSV into problems.csv and rates.csv.
    Ingest {
        #[arg(long, value_name = "PATH")]
        raw: PathBuf,
    },
    /// Generate planted synthetic data: `subjects=N games=N trials=N`.
    Synth {
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Compute the feature table from problems.csv and rates.csv.
    Featurize,
    /// Assign each rate point to train, validation or test.
    Split,
    /// Fit one layer-1 member on the training fold.
    Train {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long, value_enum)]
        input: InputArg,
    },
    /// Fit a blend of trained members on the validation fold.
    Blend {
        #[arg(long, value_name = "LIST", default_value = DEFAULT_MEMBERS)]
        members: String,
        /// Fit an intercept in the blend.
        #[arg(long)]
        intercept: bool,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Score every trained member and blend in the run directory.
    Eval {
        #[command(flatten)]
        report: ReportArgs,
    },
    /// The whole pipeline on raw or synthetic data.
    RunAll {
        #[arg(long, value_name = "PATH", conflicts_with = "synth")]
        raw: Option<PathBuf>,
        /// Synthetic data parameters (default when --raw is absent).
        #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
        synth: Option<Vec<String>>,
        /// Train only these members and blend them.
        #[arg(long, value_name = "LIST")]
        members: Option<String>,
        #[arg(long)]
        intercept: bool,
        #[command(flatten)]
        report: ReportArgs,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Paths<'a>(&'a Path);

impl Paths<'_> {
    fn raw(&self) -> PathBuf {
        self.0.join("raw.csv")
    }
    fn problems(&self) -> PathBuf {
        self.0.join("problems.csv")
    }
    fn rates(&self) -> PathBuf {
        self.0.join("rates.csv")
    }
    fn features(&self) -> PathBuf {
        self.0.join("features.csv")
    }
    fn split(&self) -> PathBuf {
        self.0.join("split.csv")
    }
    fn models(&self) -> PathBuf {
        self.0.join("models")
    }
    fn blend(&self, members: &[MemberSpec]) -> PathBuf {
        self.models().join(format!("{}.model", BlendRun::stem(members)))
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Blend { intercept, report, .. } | Command::RunAll { intercept, report, .. } => {
            cfg.blend_intercept |= intercept;
            cfg.clip_predictions |= report.clip;
        }
        Command::Eval { report } => cfg.clip_predictions |= report.clip,
        _ => {}
    }
    cfg.validate()?;
    let resolved = cfg.resolved();
    log::info!("resolved config:\n{resolved}");
    write_text(&cli.out.join("config.txt"), &resolved)?;

    let paths = Paths(&cli.out);
    match cli.command {
        Command::Ingest { raw } => ingest(&raw, &paths),
        Command::Synth { params } => synth(&params, &cfg, &paths),
        Command::Featurize => featurize(&paths),
        Command::Split => split(&cfg, &paths),
        Command::Train { model, input } => {
            let spec = member_spec(model, input)?;
            let (ds, split) = load_stage(&cfg, &paths)?;
            let member = train_member(&ds, &split, spec, &cfg.train_settings())?;
            member.save(&paths.models())?;
            log::info!("{}: {}", spec.name(), member.hyperparameters);
            Ok(())
        }
        Command::Blend { members, report, .. } => {
            let specs = parse_members(&members)?;
            let (ds, split) = load_stage(&cfg, &paths)?;
            let trained = specs
                .iter()
                .map(|&s| TrainedMember::load(&paths.models(), s))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&TrainedMember> = trained.iter().collect();
            let run = fit_blend(&ds, &split, &refs, &cfg.blend_settings())?;
            save_blend(&run, &specs, &paths)?;
            write_predictions(&ds, &split, &refs, &[&run], &paths)?;
            let eval = build_report(&ds, &split, &refs, &[&run], &cfg)?;
            let format: ReportFormat = report.format.into();
            emit_report(&eval, format, &paths.0.join(format.file_name()))
        }
        Command::Eval { report } => evaluate(&cfg, &paths, report.format.into()),
        Command::RunAll { raw, synth: synth_args, members, report, .. } => {
            match raw {
                Some(raw) => ingest(&raw, &paths)?,
                None => synth(&synth_args.unwrap_or_default(), &cfg, &paths)?,
            }
            featurize(&paths)?;
            split(&cfg, &paths)?;
            run_all(&cfg, &paths, members.as_deref(), report.format.into())
        }
    }
}

fn member_spec(model: ModelArg, input: InputArg) -> Result<MemberSpec> {
    let model = match model {
        ModelArg::Fm => ModelKind::Fm,
        ModelArg::Ridge => ModelKind::Ridge,
        ModelArg::Lasso => ModelKind::Lasso,
    };
    let input = match input {
        InputArg::Onehot => InputKind::OneHot,
        InputArg::Psych => InputKind::Psych,
    };
    MemberSpec::new(model, input)
        .map_err(|_| Error::validation("the factorization machine only takes one-hot input"))
}

fn ingest(raw: &Path, paths: &Paths) -> Result<()> {
    let (problems, trials) = parse_raw_csv(raw)?;
    let rates = aggregate_b_rates(&trials);
    log::info!("ingested {} trials, {} problems, {} rate points", trials.len(), problems.len(), rates.len());
    write_problems_csv(&paths.problems(), &problems)?;
    write_rates_csv(&paths.rates(), &rates)
}

fn synth(params: &[String], cfg: &RunConfig, paths: &Paths) -> Result<()> {
    let (mut subjects, mut games, mut trials) = (40usize, 40usize, 25usize);
    for p in params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("synth parameter `{p}` is not KEY=VALUE")))?;
        let slot = match key {
            "subjects" => &mut subjects,
            "games" => &mut games,
            "trials" => &mut trials,
            other => return Err(Error::validation(format!("unknown synth parameter `{other}`"))),
        };
        *slot = value
            .parse()
            .map_err(|_| Error::validation(format!("bad value `{value}` for synth parameter `{key}`")))?;
    }
    let data = synth_generate(subjects, games, trials, cfg.seed)?;
    log::info!("synthetic data: {subjects} subjects, {games} games, {trials} trials per problem");
    write_raw_csv(&paths.raw(), &data.problems, &data.trials)?;
    write_problems_csv(&paths.problems(), &data.problems)?;
    write_rates_csv(&paths.rates(), &aggregate_b_rates(&data.trials))
}

fn read_inputs(paths: &Paths) -> Result<(Vec<ChoiceProblem>, Vec<RatePoint>)> {
    Ok((read_problems_csv(&paths.problems())?, read_rates_csv(&paths.rates())?))
}

fn featurize(paths: &Paths) -> Result<()> {
    let (problems, rates) = read_inputs(paths)?;
    write_feature_csv(&paths.features(), &feature_table(&problems, &rates)?)
}

fn split(cfg: &RunConfig, paths: &Paths) -> Result<()> {
    let rates = read_rates_csv(&paths.rates())?;
    let split = split_dataset(&rates, cfg.seed, cfg.test_per_subject, cfg.val_frac)?;
    log::info!(
        "split: {} train, {} validation, {} test",
        split.keys(Fold::Train).len(),
        split.keys(Fold::Val).len(),
        split.keys(Fold::Test).len()
    );
    split.write(&paths.split())
}

fn load_stage(cfg: &RunConfig, paths: &Paths) -> Result<(Dataset, SplitAssignment)> {
    let rates = read_rates_csv(&paths.rates())?;
    let features = read_feature_csv(&paths.features())?;
    let ds = Dataset::from_features(&rates, features)?;
    let split = SplitAssignment::read(&paths.split(), cfg.seed)?;
    Ok((ds, split))
}

fn save_blend(run: &BlendRun, specs: &[MemberSpec], paths: &Paths) -> Result<()> {
    let path = paths.blend(specs);
    ensemble::file::save(&run.blend, &path)?;
    write_text(&path.with_extension("meta"), &format!("{}\n", run.hyperparameters))
}

/// Load a blend saved by [`save_blend`] along with its recorded hyperparameters.
fn load_blend(path: &Path) -> Result<(ensemble::BlendModel, String)> {
    let blend = ensemble::file::load(path)?;
    let meta = path.with_extension("meta");
    let hyper = match std::fs::read_to_string(&meta) {
        Ok(s) => s.trim().to_string(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(Error::io(meta, e)),
    };
    Ok((blend, hyper))
}

fn write_predictions(
    ds: &Dataset,
    split: &SplitAssignment,
    members: &[&TrainedMember],
    blends: &[&BlendRun],
    paths: &Paths,
) -> Result<()> {
    for (fold, name) in [(Fold::Val, "val_predictions.csv"), (Fold::Test, "test_predictions.csv")] {
        let matrix = PredictionMatrix::build(ds, split, fold, members)?;
        let extra: Vec<(String, Vec<f64>)> = blends
            .iter()
            .map(|b| {
                let preds = if fold == Fold::Val { &b.blend_val } else { &b.blend_test };
                (format!("blend:{}", b.blend.member_ids.join("+")), preds.clone())
            })
            .collect();
        write_text(&paths.0.join(name), &matrix.to_csv(&extra))?;
    }
    Ok(())
}

fn build_report(
    ds: &Dataset,
    split: &SplitAssignment,
    members: &[&TrainedMember],
    blends: &[&BlendRun],
    cfg: &RunConfig,
) -> Result<EvalReport> {
    let mut rows = Vec::new();
    for m in members {
        rows.push(member_row(m, ds, split, cfg.clip_predictions, cfg.seed)?);
    }
    for b in blends {
        rows.push(blend_row(b, cfg.clip_predictions, cfg.seed)?);
    }
    Ok(EvalReport {
        rows,
        baseline_test_mse_x100: Some(global_mean_baseline(ds, split)?),
    })
}

fn evaluate(cfg: &RunConfig, paths: &Paths, format: ReportFormat) -> Result<()> {
    let (ds, split) = load_stage(cfg, paths)?;
    let mut members = Vec::new();
    for spec in MemberSpec::ALL {
        if TrainedMember::model_path(&paths.models(), &spec).exists() {
            members.push(TrainedMember::load(&paths.models(), spec)?);
        }
    }
    let mut blend_files: Vec<PathBuf> = match std::fs::read_dir(paths.models()) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "model")
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("blend_"))
            })
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(Error::io(paths.models(), e)),
    };
    blend_files.sort();
    let mut runs = Vec::new();
    for path in &blend_files {
        let (blend, hyper) = load_blend(path)?;
        let specs = blend
            .member_ids
            .iter()
            .map(|id| id.parse())
            .collect::<Result<Vec<MemberSpec>>>()?;
        let refs = specs
            .iter()
            .map(|s| {
                members
                    .iter()
                    .find(|m| m.spec == *s)
                    .ok_or_else(|| Error::validation(format!("{} needs member {s}, which is not trained", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        runs.push(apply_blend(&ds, &split, &refs, blend, hyper)?);
    }
    let member_refs: Vec<&TrainedMember> = members.iter().collect();
    let run_refs: Vec<&BlendRun> = runs.iter().collect();
    let report = build_report(&ds, &split, &member_refs, &run_refs, cfg)?;
    emit_report(&report, format, &paths.0.join(format.file_name()))
}

fn run_all(cfg: &RunConfig, paths: &Paths, members: Option<&str>, format: ReportFormat) -> Result<()> {
    let (ds, split) = load_stage(cfg, paths)?;
    let blend_lists: Vec<Vec<MemberSpec>> = match members {
        Some(list) => vec![parse_members(list)?],
        None => REFERENCE_BLENDS.iter().map(|l| parse_members(l)).collect::<Result<_>>()?,
    };
    let specs: Vec<MemberSpec> = match members {
        Some(_) => blend_lists[0].clone(),
        None => MemberSpec::ALL.to_vec(),
    };
    let trained = train_members(&ds, &split, &specs, &cfg.train_settings())?;
    for m in &trained {
        m.save(&paths.models())?;
    }
    let mut runs = Vec::new();
    for list in &blend_lists {
        let refs = list
            .iter()
            .map(|s| trained.iter().find(|m| m.spec == *s).expect("member was trained"))
            .collect::<Vec<_>>();
        let run = fit_blend(&ds, &split, &refs, &cfg.blend_settings())?;
        save_blend(&run, list, paths)?;
        runs.push(run);
    }
    let member_refs: Vec<&TrainedMember> = trained.iter().collect();
    let run_refs: Vec<&BlendRun> = runs.iter().collect();
    write_predictions(&ds, &split, &member_refs, &run_refs, paths)?;
    let report = build_report(&ds, &split, &member_refs, &run_refs, cfg)?;
    emit_report(&report, format, &paths.0.join(format.file_name()))
}
