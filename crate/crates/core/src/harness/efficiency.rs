use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: usize,
    pub performance: f64,
    pub time_s: f64,
}

/// Marginal gain per second between two consecutive budgets. `efficiency`
/// is `None` when the time difference is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from_budget: usize,
    pub to_budget: usize,
    pub delta_performance: f64,
    pub delta_time_s: f64,
    pub efficiency: Option<f64>,
}

pub fn compute_efficiency(points: &[CurvePoint]) -> Result<Vec<Segment>, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::InsufficientPoints(points.len()));
    }
    if points.windows(2).any(|w| w[0].budget >= w[1].budget) {
        return Err(HarnessError::InvalidSpec(
            "budgets must increase along the curve".into(),
        ));
    }
    Ok(points
        .windows(2)
        .map(|w| {
            let dp = w[1].performance - w[0].performance;
            let dt = w[1].time_s - w[0].time_s;
            Segment {
                from_budget: w[0].budget,
                to_budget: w[1].budget,
                delta_performance: dp,
                delta_time_s: dt,
                efficiency: (dt != 0.0).then(|| dp / dt),
            }
        })
        .collect())
}
