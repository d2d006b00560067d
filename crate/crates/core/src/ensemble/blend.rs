use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{parse_floats, read_lines, write_text, Lines};
use crate::linear::{ridge_fit, RidgeConfig};

pub const BLEND_HEADER: &str = "psychfm-model v1 blend";

/// Second-layer linear combination of member predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendModel {
    pub member_ids: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Zero when the blend was fitted without an intercept.
    pub intercept: f64,
}

impl BlendModel {
    pub fn predict(&self, member_preds: &[f64]) -> Result<f64> {
        if member_preds.len() != self.coefficients.len() {
            return Err(Error::validation(format!(
                "blend expects {} member predictions, got {}",
                self.coefficients.len(),
                member_preds.len()
            )));
        }
        Ok(self.intercept
            + self
                .coefficients
                .iter()
                .zip(member_preds)
                .map(|(c, p)| c * p)
                .sum::<f64>())
    }
}

/// Ridge-regress validation targets on the members' validation predictions.
///
/// `val_preds` is row-major: one row per validation example, one column per
/// member.
pub fn blend_fit(
    member_ids: &[String],
    val_preds: &[Vec<f64>],
    y_val: &[f64],
    lambda: f64,
    intercept: bool,
) -> Result<BlendModel> {
    let p = member_ids.len();
    if p == 0 {
        return Err(Error::validation("blend needs at least one member"));
    }
    if val_preds.len() < p {
        return Err(Error::validation(format!(
            "{} validation rows cannot determine {p} blend coefficients",
            val_preds.len()
        )));
    }
    if val_preds.iter().any(|r| r.len() != p) {
        return Err(Error::validation("validation prediction rows must have one entry per member"));
    }
    let fit = ridge_fit(
        val_preds,
        y_val,
        &RidgeConfig {
            lambda,
            fit_intercept: intercept,
        },
    )?;
    Ok(BlendModel {
        member_ids: member_ids.to_vec(),
        coefficients: fit.model.w,
        intercept: fit.model.b,
    })
}

pub fn to_text(b: &BlendModel) -> String {
    let coefs: Vec<String> = b.coefficients.iter().map(|c| c.to_string()).collect();
    format!(
        "{BLEND_HEADER}\n{}\n{}\n{}\n{}\n",
        b.member_ids.len(),
        b.member_ids.join(" "),
        coefs.join(" "),
        b.intercept
    )
}

pub fn from_text(text: &str, path: &Path) -> Result<BlendModel> {
    from_lines(Lines::new(text.to_string()), path)
}

fn from_lines(mut lines: Lines, path: &Path) -> Result<BlendModel> {
    lines.expect_header(BLEND_HEADER, path)?;
    let p: usize = lines
        .next_record(path)?
        .trim()
        .parse()
        .map_err(|_| Error::format(path, "bad member count"))?;
    let member_ids: Vec<String> = lines
        .next_record(path)?
        .split_whitespace()
        .map(str::to_string)
        .collect();
    if member_ids.len() != p {
        return Err(Error::format(path, format!("expected {p} member ids")));
    }
    let coefficients = parse_floats(lines.next_record(path)?, p, path)?;
    let intercept = parse_floats(lines.next_record(path)?, 1, path)?[0];
    Ok(BlendModel {
        member_ids,
        coefficients,
        intercept,
    })
}

pub fn save(b: &BlendModel, path: &Path) -> Result<()> {
    write_text(path, &to_text(b))
}

pub fn load(path: &Path) -> Result<BlendModel> {
    from_lines(read_lines(path)?, path)
}
