use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub n_targets: usize,
    pub seconds_per_target: f64,
    pub rate_usd_per_hour: f64,
    pub total_usd: f64,
}

/// Compute cost of a run from user-supplied timing and an hourly rate.
pub fn cost_summary(n_targets: usize, seconds_per_target: f64, rate_usd_per_hour: f64) -> CostSummary {
    assert!(
        seconds_per_target >= 0.0 && rate_usd_per_hour >= 0.0,
        "cost inputs must be non-negative"
    );
    CostSummary {
        n_targets,
        seconds_per_target,
        rate_usd_per_hour,
        total_usd: seconds_per_target * n_targets as f64 * rate_usd_per_hour / 3600.0,
    }
}

/// One model on the accuracy/cost plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub model_id: String,
    pub metric: String,
    pub accuracy: f64,
    pub total_usd: f64,
    /// No other point is at least as accurate and at most as costly while
    /// strictly better on one of the two.
    pub on_frontier: bool,
}

pub fn pareto_points(metric: &str, models: &[(String, f64, f64)]) -> Vec<ParetoPoint> {
    models
        .iter()
        .map(|(id, acc, usd)| {
            let dominated = models
                .iter()
                .any(|(_, a, u)| a >= acc && u <= usd && (a > acc || u < usd));
            ParetoPoint {
                model_id: id.clone(),
                metric: metric.to_string(),
                accuracy: *acc,
                total_usd: *usd,
                on_frontier: !dominated,
            }
        })
        .collect()
}
