use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower-triangular matrix: `rows[t][j]` is the accuracy on task `j`'s test
/// split after training through task `t` (both 0-based).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccuracyMatrix {
    rows: Vec<Vec<f64>>,
}

impl AccuracyMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut m = Self::new();
        for r in rows {
            m.push_row(r)?;
        }
        Ok(m)
    }

    /// Append the row for the next task; it must hold one more entry than
    /// the previous row.
    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.rows.len() + 1 {
            return Err(Error::Eval(format!(
                "row {} needs {} entries, got {}",
                self.rows.len(),
                self.rows.len() + 1,
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Eval(format!("accuracy {v} outside [0, 1]")));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn n_tasks(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Entry after task `t` on task `j`, 0-based.
    pub fn get(&self, t: usize, j: usize) -> Option<f64> {
        self.rows.get(t).and_then(|r| r.get(j)).copied()
    }

    fn require(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.rows.len() {
            return Err(Error::Eval(format!(
                "metric after task {t} requested, matrix has {} complete rows",
                self.rows.len()
            )));
        }
        Ok(())
    }
}

/// Mean accuracy over tasks `1..=t` after training task `t` (1-based).
pub fn avg_accuracy(matrix: &AccuracyMatrix, t: usize) -> Result<f64> {
    matrix.require(t)?;
    let row = &matrix.rows[t - 1];
    Ok(row.iter().sum::<f64>() / t as f64)
}

/// Mean over earlier tasks of best-ever accuracy (up to task `t - 1`)
/// minus accuracy after task `t`. Zero for `t = 1`; negative values mean
/// backward transfer.
pub fn avg_forgetting(matrix: &AccuracyMatrix, t: usize) -> Result<f64> {
    matrix.require(t)?;
    if t == 1 {
        return Ok(0.0);
    }
    let last = &matrix.rows[t - 1];
    let mut total = 0.0;
    for (j, current) in last.iter().take(t - 1).enumerate() {
        let best = (j..t - 1)
            .map(|k| matrix.rows[k][j])
            .fold(f64::NEG_INFINITY, f64::max);
        total += best - current;
    }
    Ok(total / (t - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        let m = AccuracyMatrix::from_rows(vec![vec![0.589]]).unwrap();
        assert_eq!(avg_accuracy(&m, 1).unwrap(), 0.589);
        let m = AccuracyMatrix::from_rows(vec![vec![0.9], vec![0.4, 0.6]]).unwrap();
        assert_eq!(avg_accuracy(&m, 2).unwrap(), 0.5);
        let m = AccuracyMatrix::from_rows(vec![vec![0.9], vec![0.4, 0.6], vec![0.2, 0.3, 0.4]]).unwrap();
        assert!((avg_accuracy(&m, 3).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn forgetting_examples() {
        let m = AccuracyMatrix::from_rows(vec![vec![0.8], vec![0.5, 0.9]]).unwrap();
        assert_eq!(avg_forgetting(&m, 1).unwrap(), 0.0);
        assert!((avg_forgetting(&m, 2).unwrap() - 0.3).abs() < 1e-15);
        let m = AccuracyMatrix::from_rows(vec![vec![0.5], vec![0.7, 0.9]]).unwrap();
        assert!(avg_forgetting(&m, 2).unwrap() < 0.0);
    }

    #[test]
    fn forgetting_uses_running_max() {
        // task 1 peaks after task 2, then drops
        let m = AccuracyMatrix::from_rows(vec![vec![0.5], vec![0.8, 0.9], vec![0.6, 0.7, 0.9]]).unwrap();
        let expected = ((0.8 - 0.6) + (0.9 - 0.7)) / 2.0;
        assert!((avg_forgetting(&m, 3).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn incomplete_or_malformed_rows() {
        let m = AccuracyMatrix::from_rows(vec![vec![0.8]]).unwrap();
        assert!(avg_accuracy(&m, 2).is_err());
        assert!(avg_forgetting(&m, 0).is_err());
        assert!(AccuracyMatrix::from_rows(vec![vec![0.8, 0.1]]).is_err());
        assert!(AccuracyMatrix::from_rows(vec![vec![1.5]]).is_err());
    }
}
