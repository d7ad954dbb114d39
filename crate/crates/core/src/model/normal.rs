use gauss_quad::GaussHermite;
use rand::RngCore;
use rand_distr::{Distribution, Normal};

use super::{Atom, ScoreLaw, StageFamily};
use crate::error::Result;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Normal mean family `N(theta, 1)`.  The score is `q(x) = x - theta0`, so
/// under the null the score is standard normal and expectations against it
/// are Gauss-Hermite sums.
pub struct NormalMeanFamily {
    theta0: f64,
    score_law: ScoreLaw,
}

impl NormalMeanFamily {
    pub fn new(theta0: f64, quad_nodes: usize) -> Self {
        let rule = GaussHermite::new(quad_nodes.max(2))
            .expect("Gauss-Hermite rule needs degree >= 2");
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        // E h(Z) = (1/sqrt(pi)) sum w_i h(sqrt(2) t_i) for Z ~ N(0,1).
        let mut pts: Vec<(f64, f64)> = rule
            .into_iter()
            .map(|(t, w)| (SQRT_2 * t, w * inv_sqrt_pi))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize so mirror-image node pairs carry identical weights.
        let n = pts.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let q = 0.5 * (pts[j].0 - pts[i].0);
            let w = 0.5 * (pts[i].1 + pts[j].1);
            pts[i] = (-q, w);
            pts[j] = (q, w);
        }
        let total: f64 = pts.iter().map(|&(_, w)| w).sum();
        for p in &mut pts {
            p.1 /= total;
        }
        Self {
            theta0,
            score_law: ScoreLaw::Quadrature(pts),
        }
    }
}

impl StageFamily for NormalMeanFamily {
    fn family_name(&self) -> &'static str {
        "normal"
    }

    fn theta0(&self) -> f64 {
        self.theta0
    }

    fn theta_interval(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn atoms(&self) -> Option<&[Atom]> {
        None
    }

    fn density(&self, theta: f64, x: f64) -> f64 {
        let d = x - theta;
        (-0.5 * d * d - 0.5 * LN_2PI).exp()
    }

    fn score(&self, x: f64) -> Result<f64> {
        Ok(x - self.theta0)
    }

    fn kl_info(&self, theta: f64) -> f64 {
        let d = theta - self.theta0;
        0.5 * d * d
    }

    fn mean_abs_score(&self) -> f64 {
        // E|Z| for standard normal.
        (2.0 / std::f64::consts::PI).sqrt()
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> f64 {
        Normal::new(theta, 1.0).unwrap().sample(rng)
    }

    fn score_law(&self) -> &ScoreLaw {
        &self.score_law
    }
}
