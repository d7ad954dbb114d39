use rand::Rng;
use rand::RngCore;

use super::{Atom, ScoreLaw, StageFamily};
use crate::error::{Error, Result};

/// Bernoulli(theta) family on {0, 1} with theta in (0, 1).
/// Score at the null: `q(x) = (x - theta0) / (theta0 (1 - theta0))`.
pub struct BernoulliFamily {
    theta0: f64,
    atoms: [Atom; 2],
    score_law: ScoreLaw,
}

impl BernoulliFamily {
    pub fn new(theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return Err(Error::Model(format!(
                "bernoulli theta0 must lie in (0,1), got {theta0}"
            )));
        }
        let denom = theta0 * (1.0 - theta0);
        let atoms = [
            Atom { x: 0.0, p: 1.0 - theta0, q: -theta0 / denom },
            Atom { x: 1.0, p: theta0, q: (1.0 - theta0) / denom },
        ];
        let score_law = ScoreLaw::Atoms(atoms.iter().map(|a| (a.q, a.p)).collect());
        Ok(Self { theta0, atoms, score_law })
    }
}

impl StageFamily for BernoulliFamily {
    fn family_name(&self) -> &'static str {
        "bernoulli"
    }

    fn theta0(&self) -> f64 {
        self.theta0
    }

    fn theta_interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn atoms(&self) -> Option<&[Atom]> {
        Some(&self.atoms)
    }

    fn density(&self, theta: f64, x: f64) -> f64 {
        if x == 1.0 {
            theta
        } else if x == 0.0 {
            1.0 - theta
        } else {
            0.0
        }
    }

    fn score(&self, x: f64) -> Result<f64> {
        match x {
            x if x == 0.0 => Ok(self.atoms[0].q),
            x if x == 1.0 => Ok(self.atoms[1].q),
            _ => Err(Error::ZeroDensity { stage: 0, x }),
        }
    }

    fn kl_info(&self, theta: f64) -> f64 {
        if theta <= 0.0 || theta >= 1.0 {
            return f64::INFINITY;
        }
        let t0 = self.theta0;
        t0 * (t0 / theta).ln() + (1.0 - t0) * ((1.0 - t0) / (1.0 - theta)).ln()
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.gen();
        if u < theta {
            1.0
        } else {
            0.0
        }
    }

    fn score_law(&self) -> &ScoreLaw {
        &self.score_law
    }
}
