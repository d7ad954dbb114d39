use rand::Rng;
use rand::RngCore;

use super::{Atom, ScoreLaw, StageFamily};
use crate::error::{Error, Result};

/// Finite-support family given by an explicit table of null masses and scores,
/// with theta entering linearly:
/// `f_theta(x) = f_{theta0}(x) * (1 + (theta - theta0) q(x))`,
/// valid on the open interval where every mass stays positive.
///
/// Every identity of the construction is exactly computable on this family,
/// which is why the oracle fixtures use it.
pub struct TableFamily {
    theta0: f64,
    atoms: Vec<Atom>,
    theta_interval: (f64, f64),
    score_law: ScoreLaw,
}

impl TableFamily {
    /// Builds the family from `(x, p, q)` atoms.  Masses must sum to one and
    /// the null score mean must vanish.
    pub fn new(theta0: f64, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Model("table family needs at least one atom".into()));
        }
        let mass: f64 = atoms.iter().map(|a| a.p).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!(
                "table masses sum to {mass}, expected 1"
            )));
        }
        if atoms.iter().any(|a| a.p < 0.0) {
            return Err(Error::Model("table masses must be nonnegative".into()));
        }
        let mean_q: f64 = atoms.iter().map(|a| a.p * a.q).sum();
        if mean_q.abs() > 1e-12 {
            return Err(Error::Model(format!(
                "null mean of the score must be 0, got {mean_q}"
            )));
        }
        // 1 + (theta - theta0) q > 0 on every positive-mass atom.
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for a in atoms.iter().filter(|a| a.p > 0.0) {
            if a.q > 0.0 {
                lo = lo.max(-1.0 / a.q);
            } else if a.q < 0.0 {
                hi = hi.min(-1.0 / a.q);
            }
        }
        let score_law = ScoreLaw::Atoms(
            atoms
                .iter()
                .filter(|a| a.p > 0.0)
                .map(|a| (a.q, a.p))
                .collect(),
        );
        Ok(Self {
            theta0,
            atoms,
            theta_interval: (theta0 + lo, theta0 + hi),
            score_law,
        })
    }

    /// A stage whose density does not depend on theta at all.
    pub fn degenerate(theta0: f64, atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(
            theta0,
            atoms
                .into_iter()
                .map(|(x, p)| Atom { x, p, q: 0.0 })
                .collect(),
        )
    }

    fn atom_at(&self, x: f64) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.x == x)
    }
}

impl StageFamily for TableFamily {
    fn family_name(&self) -> &'static str {
        "table"
    }

    fn theta0(&self) -> f64 {
        self.theta0
    }

    fn theta_interval(&self) -> (f64, f64) {
        self.theta_interval
    }

    fn atoms(&self) -> Option<&[Atom]> {
        Some(&self.atoms)
    }

    fn density(&self, theta: f64, x: f64) -> f64 {
        match self.atom_at(x) {
            Some(a) => a.p * (1.0 + (theta - self.theta0) * a.q),
            None => 0.0,
        }
    }

    fn score(&self, x: f64) -> Result<f64> {
        match self.atom_at(x) {
            Some(a) if a.p > 0.0 => Ok(a.q),
            _ => Err(Error::ZeroDensity { stage: 0, x }),
        }
    }

    fn kl_info(&self, theta: f64) -> f64 {
        let d = theta - self.theta0;
        let mut total = 0.0;
        for a in self.atoms.iter().filter(|a| a.p > 0.0) {
            let ratio = 1.0 + d * a.q;
            if ratio <= 0.0 {
                return f64::INFINITY;
            }
            total -= a.p * ratio.ln();
        }
        total.max(0.0)
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> f64 {
        let d = theta - self.theta0;
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.p * (1.0 + d * a.q);
            if u < acc {
                return a.x;
            }
        }
        self.atoms.last().unwrap().x
    }

    fn score_law(&self) -> &ScoreLaw {
        &self.score_law
    }
}
