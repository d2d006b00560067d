//! Small helpers for the line-oriented model files.

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_lines(path: &Path) -> Result<Lines> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Lines::new(text))
}

/// Cursor over the records of a model file.
pub(crate) struct Lines {
    lines: Vec<String>,
    pos: usize,
}

impl Lines {
    pub(crate) fn new(text: String) -> Self {
        Self {
            lines: text.lines().map(str::to_string).collect(),
            pos: 0,
        }
    }

    pub(crate) fn next_record(&mut self, path: &Path) -> Result<&str> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::format(path, format!("truncated file: missing record {}", self.pos + 1)))?;
        self.pos += 1;
        Ok(line.as_str())
    }

    pub(crate) fn expect_header(&mut self, header: &str, path: &Path) -> Result<()> {
        let got = self.next_record(path)?;
        if got.trim_end() != header {
            return Err(Error::format(path, format!("expected header `{header}`, found `{got}`")));
        }
        Ok(())
    }
}

/// Parse exactly `count` whitespace-separated floats.
pub(crate) fn parse_floats(line: &str, count: usize, path: &Path) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(path, format!("bad numeric record `{line}`")))?;
    if values.len() != count {
        return Err(Error::format(
            path,
            format!("expected {count} values, found {}", values.len()),
        ));
    }
    Ok(values)
}
