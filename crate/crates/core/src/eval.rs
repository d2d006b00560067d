//! Error metrics, validation/test stability and report files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::write_text;

/// |test - val| in MSE x 100 units above which a model counts as unstable.
pub const STABILITY_GAP: f64 = 5.0;

pub fn mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    if preds.len() != targets.len() {
        return Err(Error::validation(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::validation("MSE of an empty set"));
    }
    Ok(preds
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / preds.len() as f64)
}

pub fn mse_x100(preds: &[f64], targets: &[f64]) -> Result<f64> {
    Ok(100.0 * mse(preds, targets)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputType {
    A,
    B,
    Ensemble,
}

impl InputType {
    fn label(self) -> &'static str {
        match self {
            InputType::A => "A",
            InputType::B => "B",
            InputType::Ensemble => "ensemble",
        }
    }

    fn section(self) -> &'static str {
        match self {
            InputType::A => "Naive Models on One Hot Encoded Input (A)",
            InputType::B => "Naive Models on Psychological Feature Input (B)",
            InputType::Ensemble => "Ensemble Models",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendBreakdown {
    /// (member name, coefficient)
    pub coefficients: Vec<(String, f64)>,
    pub intercept: f64,
}

impl BlendBreakdown {
    /// Each coefficient's share of the summed absolute coefficients.
    pub fn shares(&self) -> Vec<f64> {
        let total: f64 = self.coefficients.iter().map(|(_, c)| c.abs()).sum();
        self.coefficients
            .iter()
            .map(|(_, c)| if total > 0.0 { c.abs() / total } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model_name: String,
    pub input_type: InputType,
    pub test_mse_x100: f64,
    pub val_mse_x100: f64,
    pub hyperparameters: String,
    pub seed: u64,
    pub blend: Option<BlendBreakdown>,
}

impl ReportRow {
    pub fn gap(&self) -> f64 {
        (self.test_mse_x100 - self.val_mse_x100).abs()
    }

    pub fn is_stable(&self) -> bool {
        self.gap() <= STABILITY_GAP
    }

    /// Typical per-prediction error, sqrt(test MSE).
    pub fn test_rmse(&self) -> f64 {
        (self.test_mse_x100 / 100.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// Test MSE x 100 of predicting the training-fold mean everywhere.
    pub baseline_test_mse_x100: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub model_name: String,
    pub test_mse_x100: f64,
    pub val_mse_x100: f64,
    pub gap: f64,
    pub unstable: bool,
}

/// Per-model (test, validation) pairs with their absolute gap.
pub fn stability_report(report: &EvalReport) -> Vec<StabilityRow> {
    report
        .rows
        .iter()
        .map(|r| StabilityRow {
            model_name: r.model_name.clone(),
            test_mse_x100: r.test_mse_x100,
            val_mse_x100: r.val_mse_x100,
            gap: r.gap(),
            unstable: !r.is_stable(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::validation(format!("unknown report format `{other}`"))),
        }
    }
}

impl ReportFormat {
    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "report.md",
            ReportFormat::Csv => "report.csv",
        }
    }
}

fn coefficient_cell(b: &BlendBreakdown) -> String {
    let mut parts: Vec<String> = b
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, (_, c))| format!("c{}={c:.4}", i + 1))
        .collect();
    parts.push(format!("intercept={:.4}", b.intercept));
    parts.join(";")
}

pub fn render_markdown(report: &EvalReport) -> String {
    let mut out = String::from("# Mean Squared Error of Different Models\n\n");
    out.push_str("| Model | Test MSE*100 | Val MSE*100 | Test RMSE | Seed | Hyperparameters |\n");
    out.push_str("|---|---:|---:|---:|---:|---|\n");
    for section in [InputType::A, InputType::B, InputType::Ensemble] {
        let rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.input_type == section).collect();
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(out, "| **{}** | | | | | |", section.section());
        for r in rows {
            let _ = writeln!(
                out,
                "| {} | {:.4} | {:.4} | {:.4} | {} | {} |",
                r.model_name,
                r.test_mse_x100,
                r.val_mse_x100,
                r.test_rmse(),
                r.seed,
                r.hyperparameters
            );
        }
    }
    if let Some(b) = report.baseline_test_mse_x100 {
        let _ = writeln!(out, "\nGlobal-mean baseline test MSE*100: {b:.4}");
    }

    out.push_str("\n# Validation and Test Errors\n\n");
    out.push_str("| Model | Test MSE | Validation MSE | Gap | Stable |\n");
    out.push_str("|---|---:|---:|---:|---|\n");
    for s in stability_report(report) {
        let _ = writeln!(
            out,
            "| {} | {:.4} | {:.4} | {:.4} | {} |",
            s.model_name,
            s.test_mse_x100,
            s.val_mse_x100,
            s.gap,
            if s.unstable { "no" } else { "yes" }
        );
    }

    let blends: Vec<&ReportRow> = report.rows.iter().filter(|r| r.blend.is_some()).collect();
    if !blends.is_empty() {
        out.push_str("\n# Blend Coefficients\n");
        for r in blends {
            let b = r.blend.as_ref().expect("filtered");
            let _ = writeln!(out, "\n## {}\n", r.model_name);
            out.push_str("| Member | Coefficient | Share |\n|---|---:|---:|\n");
            for ((name, c), share) in b.coefficients.iter().zip(b.shares()) {
                let _ = writeln!(out, "| {name} | {c:.4} | {:.1}% |", 100.0 * share);
            }
            let _ = writeln!(out, "| intercept | {:.4} | |", b.intercept);
        }
    }
    out
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "model,input,test_mse_x100,val_mse_x100,gap,stable,test_rmse,seed,hyperparameters,coefficients\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{},{:.4},{},{},{}",
            csv_cell(&r.model_name),
            r.input_type.label(),
            r.test_mse_x100,
            r.val_mse_x100,
            r.gap(),
            r.is_stable(),
            r.test_rmse(),
            r.seed,
            csv_cell(&r.hyperparameters),
            r.blend.as_ref().map(coefficient_cell).unwrap_or_default()
        );
    }
    out
}

pub fn render(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
    }
}

pub fn emit_report(report: &EvalReport, format: ReportFormat, path: &Path) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::validation("refusing to write an empty report"));
    }
    write_text(path, &render(report, format))
}
