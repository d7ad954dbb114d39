use serde::Serialize;

use super::{ObservationModel, Structure};
use crate::error::{Error, Result};

/// Scan certificate for the regularity constants: `gamma1` bounds
/// `I_j(theta0, theta) / (theta - theta0)^2` on `|theta - theta0| <= delta`,
/// `gamma2` bounds `E_{theta0} |q_j|`.  A certificate over the scanned set,
/// not a proof; for structured models the stage scan covers one full cycle
/// and is therefore exhaustive over stages.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionConstants {
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub scanned_stages: usize,
    pub scanned_thetas: usize,
}

impl AssumptionConstants {
    /// Lower bound `-(gamma1 / 8c + c)` on every limit value function.
    pub fn value_lower_bound(&self, c: f64) -> f64 {
        -(self.gamma1 / (8.0 * c) + c)
    }
}

pub fn estimate_assumption_constants(
    model: &ObservationModel,
    delta: f64,
    theta_grid: usize,
) -> Result<AssumptionConstants> {
    if delta <= 0.0 {
        return Err(Error::Config {
            field: "delta".into(),
            reason: "must be positive".into(),
        });
    }
    let theta0 = model.theta0();
    let (lo, hi) = model.theta_interval();
    let grid = theta_grid.max(8);

    let stages: Vec<usize> = match model.structure() {
        Structure::Iid => vec![1],
        Structure::Periodic { period } => (1..=period).collect(),
        Structure::FinitelyNonStationary { change_index } => (1..=change_index).collect(),
        Structure::Explicit { horizon } => (1..=horizon).collect(),
    };

    let mut gamma1: f64 = 0.0;
    let mut gamma2: f64 = 0.0;
    for &j in &stages {
        gamma2 = gamma2.max(model.stage(j).mean_abs_score());
        for i in 0..=grid {
            let theta = theta0 - delta + 2.0 * delta * i as f64 / grid as f64;
            if theta == theta0 || theta <= lo || theta >= hi {
                continue;
            }
            let kl = model.stage(j).kl_info(theta);
            if !kl.is_finite() {
                return Err(Error::AssumptionViolation {
                    stage: j,
                    theta,
                    reason: "infinite Kullback-Leibler information inside the scan".into(),
                });
            }
            gamma1 = gamma1.max(kl / ((theta - theta0) * (theta - theta0)));
        }
    }

    Ok(AssumptionConstants {
        delta,
        gamma1: gamma1.max(1e-12),
        gamma2,
        scanned_stages: stages.len(),
        scanned_thetas: grid + 1,
    })
}
