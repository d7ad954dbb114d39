//! Observation models: independent stages with theta-indexed marginal densities.
//!
//! Every distribution family implements [`StageFamily`] and is registered by
//! name in [`FamilyRegistry`], so models are assembled from configuration at
//! runtime.  A stage exposes its density, the score at the null
//! `q(x) = f'_{theta0}(x) / f_{theta0}(x)`, the per-stage Kullback-Leibler
//! information, and a sampler.
//!
//! Stage laws repeat according to [`Structure`]: i.i.d., periodic with period
//! `T`, finitely non-stationary with change index `k` (constant from stage `k`
//! on), or an explicit finite list usable only with truncated designs.

mod assumptions;
mod bernoulli;
mod normal;
mod registry;
mod table;

pub use assumptions::{estimate_assumption_constants, AssumptionConstants};
pub use bernoulli::BernoulliFamily;
pub use normal::NormalMeanFamily;
pub use registry::{AtomSpec, FamilyRegistry, FamilySpec};
pub use table::TableFamily;

use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};

/// One support atom of a discrete stage: the observation value, its
/// probability under the null and the score at the null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
    pub q: f64,
}

/// Law of the score variable `q(X)` under the null, in the form the value
/// recursion consumes: exact atoms for discrete stages, quadrature nodes and
/// weights for continuous ones.  Weights sum to one in both variants.
#[derive(Debug, Clone)]
pub enum ScoreLaw {
    Atoms(Vec<(f64, f64)>),
    Quadrature(Vec<(f64, f64)>),
}

impl ScoreLaw {
    pub fn points(&self) -> &[(f64, f64)] {
        match self {
            ScoreLaw::Atoms(v) | ScoreLaw::Quadrature(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScoreLaw::Atoms(_))
    }

    /// Expectation of `h(q)` under the law.
    pub fn expect(&self, mut h: impl FnMut(f64) -> f64) -> f64 {
        self.points().iter().map(|&(q, w)| w * h(q)).sum()
    }

    pub fn max_abs_q(&self) -> f64 {
        self.points().iter().fold(0.0, |m, &(q, _)| m.max(q.abs()))
    }

    /// Standard deviation of the score under the null.
    pub fn std_dev(&self) -> f64 {
        let mean = self.expect(|q| q);
        self.expect(|q| (q - mean) * (q - mean)).max(0.0).sqrt()
    }

    /// True when the score is almost surely zero (a theta-constant stage).
    pub fn is_degenerate(&self) -> bool {
        self.points().iter().all(|&(q, w)| w == 0.0 || q.abs() < 1e-15)
    }
}

/// A single-stage distribution family with a fixed null parameter.
///
/// Implementations are immutable after construction and safe to share across
/// threads; sampling takes an explicit rng so no internal state is needed.
pub trait StageFamily: Send + Sync {
    /// Registry name of the family, e.g. `"normal"`.
    fn family_name(&self) -> &'static str;

    fn theta0(&self) -> f64;

    /// Open parameter interval on which the density is valid.
    fn theta_interval(&self) -> (f64, f64);

    fn atoms(&self) -> Option<&[Atom]>;

    fn is_discrete(&self) -> bool {
        self.atoms().is_some()
    }

    /// Density (or probability mass) of an observation at `theta`.
    fn density(&self, theta: f64, x: f64) -> f64;

    /// Score at the null, defined only where the null density is positive.
    fn score(&self, x: f64) -> Result<f64>;

    /// Kullback-Leibler information `I(theta0, theta)`; `+inf` when divergent.
    fn kl_info(&self, theta: f64) -> f64;

    /// `E_{theta0} |q(X)|`, used for the Assumption 3 constant.
    fn mean_abs_score(&self) -> f64 {
        self.score_law().expect(f64::abs)
    }

    fn sample(&self, theta: f64, rng: &mut dyn RngCore) -> f64;

    /// Law of the score under the null.
    fn score_law(&self) -> &ScoreLaw;

    fn check_theta(&self, theta: f64) -> Result<()> {
        let (lo, hi) = self.theta_interval();
        if theta > lo && theta < hi {
            Ok(())
        } else {
            Err(Error::ThetaOutOfRange { theta, lo, hi })
        }
    }
}

impl std::fmt::Debug for dyn StageFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(theta0={})", self.family_name(), self.theta0())
    }
}

/// How stage laws repeat along the observation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Iid,
    /// `StageModel(j) = StageModel(j + T)` for all `j`.
    Periodic { period: usize },
    /// `StageModel(j) = StageModel(k)` for all `j >= k`.
    FinitelyNonStationary { change_index: usize },
    /// Explicit finite list; only truncated designs up to `horizon` apply.
    Explicit { horizon: usize },
}

/// An independent-observation process: a structure rule over a finite list of
/// distinct stage laws sharing one null parameter.
#[derive(Debug, Clone)]
pub struct ObservationModel {
    theta0: f64,
    structure: Structure,
    stages: Vec<Arc<dyn StageFamily>>,
}

impl ObservationModel {
    pub fn iid(stage: Arc<dyn StageFamily>) -> Self {
        Self {
            theta0: stage.theta0(),
            structure: Structure::Iid,
            stages: vec![stage],
        }
    }

    pub fn periodic(stages: Vec<Arc<dyn StageFamily>>) -> Result<Self> {
        Self::multi(stages, |n| Structure::Periodic { period: n })
    }

    /// `stages[0..k-1]` are the pre-change laws, `stages[k-1]` repeats forever.
    pub fn finitely_nonstationary(stages: Vec<Arc<dyn StageFamily>>) -> Result<Self> {
        Self::multi(stages, |n| Structure::FinitelyNonStationary { change_index: n })
    }

    pub fn explicit(stages: Vec<Arc<dyn StageFamily>>) -> Result<Self> {
        Self::multi(stages, |n| Structure::Explicit { horizon: n })
    }

    fn multi(
        stages: Vec<Arc<dyn StageFamily>>,
        structure: impl FnOnce(usize) -> Structure,
    ) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::Model("at least one stage law is required".into()));
        }
        let theta0 = stages[0].theta0();
        if stages.iter().any(|s| s.theta0() != theta0) {
            return Err(Error::Model(
                "all stage laws must share the same theta0".into(),
            ));
        }
        Ok(Self {
            theta0,
            structure: structure(stages.len()),
            stages,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// Distinct stage laws, one structural cycle.
    pub fn cycle(&self) -> &[Arc<dyn StageFamily>] {
        &self.stages
    }

    /// The stage law for observation index `j >= 1`.
    pub fn stage(&self, j: usize) -> &dyn StageFamily {
        assert!(j >= 1, "stage indices start at 1");
        let idx = match self.structure {
            Structure::Iid => 0,
            Structure::Periodic { period } => (j - 1) % period,
            Structure::FinitelyNonStationary { change_index } => j.min(change_index) - 1,
            Structure::Explicit { horizon } => {
                assert!(j <= horizon, "stage {j} beyond explicit horizon {horizon}");
                j - 1
            }
        };
        self.stages[idx].as_ref()
    }

    /// True when the stage laws repeat, so untruncated limits exist.
    pub fn is_structured(&self) -> bool {
        !matches!(self.structure, Structure::Explicit { .. })
    }

    pub fn is_discrete(&self) -> bool {
        self.stages.iter().all(|s| s.is_discrete())
    }

    /// Intersection of the per-stage parameter intervals.
    pub fn theta_interval(&self) -> (f64, f64) {
        self.stages.iter().fold(
            (f64::NEG_INFINITY, f64::INFINITY),
            |(lo, hi), s| {
                let (a, b) = s.theta_interval();
                (lo.max(a), hi.min(b))
            },
        )
    }

    pub fn score(&self, j: usize, x: f64) -> Result<f64> {
        self.stage(j).score(x).map_err(|e| match e {
            Error::ZeroDensity { x, .. } => Error::ZeroDensity { stage: j, x },
            other => other,
        })
    }

    pub fn kl_info(&self, j: usize, theta: f64) -> Result<f64> {
        self.stage(j).check_theta(theta)?;
        Ok(self.stage(j).kl_info(theta))
    }

    pub fn sample(&self, j: usize, theta: f64, rng: &mut dyn RngCore) -> Result<f64> {
        self.stage(j).check_theta(theta)?;
        Ok(self.stage(j).sample(theta, rng))
    }

    /// Whether the cycle score sum is almost surely zero under the null.
    /// When false, the Stein argument certifies a finite ASN for every
    /// untruncated rule with these boundaries.
    pub fn cycle_score_degenerate(&self) -> bool {
        self.stages.iter().all(|s| s.score_law().is_degenerate())
    }

    /// A short stable description used in report headers.
    pub fn describe(&self) -> String {
        let names: Vec<&str> = self.stages.iter().map(|s| s.family_name()).collect();
        format!(
            "{:?} theta0={} stages=[{}]",
            self.structure,
            self.theta0,
            names.join(",")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn periodic_stage_laws_repeat() {
        let m = fixtures::periodic_two_stage();
        let Structure::Periodic { period } = m.structure() else {
            panic!("expected periodic structure");
        };
        for j in 1..=12 {
            for &(q, _) in m.stage(j).score_law().points() {
                let qq = m.stage(j + period).score_law().points();
                assert!(qq.iter().any(|&(q2, _)| (q - q2).abs() < 1e-15));
            }
            assert!(std::ptr::eq(
                m.stage(j) as *const dyn StageFamily as *const (),
                m.stage(j + period) as *const dyn StageFamily as *const ()
            ));
        }
    }

    #[test]
    fn finitely_nonstationary_constant_from_change_index() {
        let m = fixtures::fns_three_stage();
        let Structure::FinitelyNonStationary { change_index: k } = m.structure() else {
            panic!("expected finitely non-stationary structure");
        };
        for j in k..k + 10 {
            assert!(std::ptr::eq(
                m.stage(j) as *const dyn StageFamily as *const (),
                m.stage(k) as *const dyn StageFamily as *const ()
            ));
        }
        assert!(!std::ptr::eq(
            m.stage(1) as *const dyn StageFamily as *const (),
            m.stage(k) as *const dyn StageFamily as *const ()
        ));
    }

    #[test]
    fn discrete_masses_sum_to_one_across_thetas() {
        for m in [fixtures::two_point(), fixtures::three_point(), fixtures::bernoulli_iid()] {
            let (lo, hi) = m.theta_interval();
            for i in 1..20 {
                let theta = lo + (hi - lo) * i as f64 / 20.0;
                let s = m.stage(1);
                let total: f64 = s
                    .atoms()
                    .unwrap()
                    .iter()
                    .map(|a| s.density(theta, a.x))
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "mass {total} at theta {theta}");
            }
        }
    }

    #[test]
    fn null_score_has_mean_zero() {
        for m in [
            fixtures::two_point(),
            fixtures::three_point(),
            fixtures::bernoulli_iid(),
            fixtures::normal_iid(),
        ] {
            for s in m.cycle() {
                let mean = s.score_law().expect(|q| q);
                assert!(mean.abs() < 1e-8, "{}: E q = {mean}", s.family_name());
            }
        }
    }

    #[test]
    fn kl_nonnegative_and_zero_only_at_null() {
        for m in [fixtures::two_point(), fixtures::bernoulli_iid(), fixtures::normal_iid()] {
            let (lo, hi) = m.theta_interval();
            let t0 = m.theta0();
            let (lo, hi) = (lo.max(t0 - 2.0), hi.min(t0 + 2.0));
            for i in 1..40 {
                let theta = lo + (hi - lo) * i as f64 / 40.0;
                let kl = m.kl_info(1, theta).unwrap();
                assert!(kl >= 0.0);
                if (theta - t0).abs() > 1e-3 {
                    assert!(kl > 0.0, "kl {kl} at theta {theta}");
                } else if theta == t0 {
                    assert_eq!(kl, 0.0);
                }
            }
        }
    }
}
