//! Factorization machine regression over sparse identity inputs.

mod model;
mod train;

use std::fmt::Write as _;
use std::path::Path;

pub use model::{FmGradient, FmModel};
pub use train::{train, train_als, train_sgd, FmConfig, FmFit, Solver};

use crate::error::{Error, Result};
use crate::io::{parse_floats, read_lines, write_text, Lines};

pub const FM_HEADER: &str = "psychfm-model v1 fm";

/// Serialize as text: header, `n k`, `w0`, the `w` row, then one line per
/// latent row. Floats use shortest round-trip formatting.
pub fn to_text(m: &FmModel) -> String {
    let mut out = format!("{FM_HEADER}\n{} {}\n{}\n", m.n(), m.k(), m.w0);
    out.push_str(&join(&m.w));
    out.push('\n');
    for i in 0..m.n() {
        out.push_str(&join(m.factors(i)));
        out.push('\n');
    }
    out
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

pub fn save(m: &FmModel, path: &Path) -> Result<()> {
    write_text(path, &to_text(m))
}

pub fn load(path: &Path) -> Result<FmModel> {
    let text = read_lines(path)?;
    from_lines(text, path)
}

pub fn from_text(text: &str, path: &Path) -> Result<FmModel> {
    from_lines(Lines::new(text.to_string()), path)
}

fn from_lines(mut lines: Lines, path: &Path) -> Result<FmModel> {
    lines.expect_header(FM_HEADER, path)?;
    let dims: Vec<usize> = lines
        .next_record(path)?
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(path, "bad `n k` line"))?;
    let [n, k] = dims[..] else {
        return Err(Error::format(path, "expected `n k`"));
    };
    if n == 0 || k == 0 {
        return Err(Error::validation(format!("FM file declares n={n}, k={k}; both must be >= 1")));
    }
    let w0 = parse_floats(lines.next_record(path)?, 1, path)?[0];
    let w = parse_floats(lines.next_record(path)?, n, path)?;
    let mut v = Vec::with_capacity(n * k);
    for _ in 0..n {
        v.extend(parse_floats(lines.next_record(path)?, k, path)?);
    }
    FmModel::from_parts(w0, w, v, n, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64) -> FmModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, k) = (rng.random_range(1..12), rng.random_range(1..5));
        FmModel::from_parts(
            rng.random_range(-1.0..1.0),
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..n * k).map(|_| rng.random_range(-1.0..1.0) / 3.0).collect(),
            n,
            k,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let path = Path::new("model.fm");
        for seed in 0..10 {
            let m = random_model(seed);
            let back = from_text(&to_text(&m), path).unwrap();
            assert_eq!(back, m);
            let x = SparseVector::new(m.n(), (0..m.n()).step_by(2).collect()).unwrap();
            assert_eq!(back.predict(&x).unwrap().to_bits(), m.predict(&x).unwrap().to_bits());
        }
    }

    #[test]
    fn truncated_file() {
        let text = to_text(&random_model(3));
        let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(from_text(&cut, Path::new("m")), Err(Error::Format { .. })));
    }

    #[test]
    fn wrong_header() {
        let text = to_text(&random_model(3)).replace("v1 fm", "v2 fm");
        assert!(matches!(from_text(&text, Path::new("m")), Err(Error::Format { .. })));
    }

    #[test]
    fn zero_latent_dimension() {
        let text = format!("{FM_HEADER}\n1 0\n0\n0\n");
        assert!(matches!(from_text(&text, Path::new("m")), Err(Error::Validation(_))));
    }
}
