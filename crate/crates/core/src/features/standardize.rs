/// Per-column centring and scaling learned on a training fold.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant columns.
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Panics on an empty row set or ragged rows.
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        assert!(!rows.is_empty(), "cannot fit a standardizer on zero rows");
        let d = rows[0].as_ref().len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let first = rows[0].as_ref()[j];
            if rows.iter().all(|r| r.as_ref()[j] == first) {
                mean[j] = first;
                continue;
            }
            let m = rows.iter().map(|r| r.as_ref()[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r.as_ref()[j] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            if var > 0.0 {
                scale[j] = var.sqrt();
            }
        }
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        debug_assert_eq!(row.len(), self.dim());
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}
