use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationScores {
    /// Sum of squared z-scores per row.
    pub scores: Vec<f64>,
    /// Row with the lowest score; ties go to the lowest index.
    pub best: usize,
}

/// Scores each row of a `[n_seeds x n_metrics]` matrix by how far it sits from
/// the column means, in units of the column's population standard deviation.
/// Zero-variance columns contribute nothing.
pub fn deviation_score(rows: &[Vec<f64>]) -> Result<DeviationScores, StatsError> {
    if rows.len() < 2 {
        return Err(StatsError::DegenerateInput(format!(
            "need at least 2 seeds, got {}",
            rows.len()
        )));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(StatsError::DegenerateInput(format!(
            "row {bad} has {} metrics, expected {width}",
            rows[bad].len()
        )));
    }
    let n = rows.len() as f64;
    let mut scores = vec![0.0; rows.len()];
    for col in 0..width {
        let first = rows[0][col];
        if rows.iter().all(|r| r[col] == first) {
            continue;
        }
        let mean = rows.iter().map(|r| r[col]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[col] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd == 0.0 {
            continue;
        }
        for (score, row) in scores.iter_mut().zip(rows) {
            let z = (row[col] - mean) / sd;
            *score += z * z;
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    Ok(DeviationScores { scores, best })
}
