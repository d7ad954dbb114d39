//! Exact evaluation on discrete models by exhaustive enumeration of all
//! positive-probability observation histories up to the truncation horizon.

use super::{Characteristics, Provenance, Side, TestDesign};
use crate::error::{Error, Result};
use crate::model::ObservationModel;
use crate::recursion::Horizon;

/// A deterministic truncated stopping rule, as enumeration sees it: given
/// the history so far, stop or continue.  Only consulted for `n < horizon`;
/// stage `horizon` always stops.
pub trait StoppingPolicy {
    fn horizon(&self) -> usize;
    fn stops(&self, atom_idxs: &[usize], xs: &[f64], z: f64) -> bool;
}

impl StoppingPolicy for TestDesign {
    fn horizon(&self) -> usize {
        match self.horizon {
            Horizon::Truncated(h) => h,
            Horizon::Untruncated => panic!("exact enumeration requires a truncated design"),
        }
    }

    fn stops(&self, _atom_idxs: &[usize], _xs: &[f64], z: f64) -> bool {
        TestDesign::stops(self, _xs.len(), z)
    }
}

/// One stopped history with its null probability.
#[derive(Debug, Clone)]
pub struct StoppedHistory {
    pub atom_idxs: Vec<usize>,
    pub xs: Vec<f64>,
    pub n: usize,
    pub z: f64,
    pub p_null: f64,
}

impl StoppedHistory {
    /// Probability of the history at an arbitrary parameter point.
    pub fn p_at(&self, model: &ObservationModel, theta: f64) -> f64 {
        self.xs
            .iter()
            .enumerate()
            .map(|(j, &x)| model.stage(j + 1).density(theta, x))
            .product()
    }

    /// Cumulative log-likelihood ratio `sum_j ln f_{theta0,j} / f_{theta,j}`.
    pub fn log_ratio(&self, model: &ObservationModel, theta: f64) -> f64 {
        self.xs
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let s = model.stage(j + 1);
                let f0 = s.density(s.theta0(), x);
                let ft = s.density(theta, x);
                if ft <= 0.0 {
                    f64::INFINITY
                } else {
                    (f0 / ft).ln()
                }
            })
            .sum()
    }
}

/// Enumerates every stopped history of a deterministic truncated rule on a
/// discrete model.  Zero-probability branches under the null are pruned.
pub fn enumerate_stopped(
    model: &ObservationModel,
    policy: &dyn StoppingPolicy,
    budget: usize,
) -> Result<Vec<StoppedHistory>> {
    if !model.is_discrete() {
        return Err(Error::Model(
            "exact enumeration requires a discrete model".into(),
        ));
    }
    let horizon = policy.horizon();
    let mut out = Vec::new();
    let mut visited = 0usize;
    let mut atom_idxs = Vec::new();
    let mut xs = Vec::new();
    descend(
        model, policy, horizon, budget, &mut visited, &mut atom_idxs, &mut xs, 0.0, 1.0, &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn descend(
    model: &ObservationModel,
    policy: &dyn StoppingPolicy,
    horizon: usize,
    budget: usize,
    visited: &mut usize,
    atom_idxs: &mut Vec<usize>,
    xs: &mut Vec<f64>,
    z: f64,
    p: f64,
    out: &mut Vec<StoppedHistory>,
) -> Result<()> {
    let n = xs.len();
    let stage = model.stage(n + 1);
    let atoms = stage.atoms().expect("discrete stage");
    for (i, atom) in atoms.iter().enumerate() {
        if atom.p == 0.0 {
            continue;
        }
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded(format!(
                "history enumeration exceeded {budget} nodes at depth {}",
                n + 1
            )));
        }
        atom_idxs.push(i);
        xs.push(atom.x);
        let z2 = z + atom.q;
        let p2 = p * atom.p;
        let depth = xs.len();
        if depth == horizon || policy.stops(atom_idxs, xs, z2) {
            out.push(StoppedHistory {
                atom_idxs: atom_idxs.clone(),
                xs: xs.clone(),
                n: depth,
                z: z2,
                p_null: p2,
            });
        } else {
            descend(
                model, policy, horizon, budget, visited, atom_idxs, xs, z2, p2, out,
            )?;
        }
        atom_idxs.pop();
        xs.pop();
    }
    Ok(())
}

/// `P_theta(tau >= j)` for `j = 1..=horizon`, from the stopped histories.
pub fn tau_tail_probs(
    histories: &[StoppedHistory],
    model: &ObservationModel,
    theta: f64,
    horizon: usize,
) -> Vec<f64> {
    let mut tail = vec![0.0; horizon + 1];
    for h in histories {
        let p = h.p_at(model, theta);
        for j in 1..=h.n {
            tail[j] += p;
        }
    }
    tail.remove(0);
    tail
}

/// Exact operating characteristics of a truncated design on a discrete model.
pub fn exact_characteristics(
    design: &TestDesign,
    model: &ObservationModel,
    thetas: &[f64],
    budget: usize,
    side: Side,
) -> Result<Characteristics> {
    let histories = enumerate_stopped(model, design, budget)?;
    Ok(characteristics_from_histories(
        &histories, design, model, thetas, side,
    ))
}

pub(crate) fn characteristics_from_histories(
    histories: &[StoppedHistory],
    design: &TestDesign,
    model: &ObservationModel,
    thetas: &[f64],
    side: Side,
) -> Characteristics {
    let rejects = |h: &StoppedHistory| -> bool {
        matches!(design.decide(h.z, side), super::Decision::Reject)
    };
    let mut alpha = 0.0;
    let mut asn = 0.0;
    let mut beta_dot = 0.0;
    for h in histories {
        asn += h.p_null * h.n as f64;
        if rejects(h) {
            alpha += h.p_null;
            beta_dot += h.p_null * h.z;
        }
    }
    if side == Side::Lower {
        // The mirrored test targets theta < theta0; report the derivative of
        // its own power function.
        beta_dot = histories
            .iter()
            .filter(|h| rejects(h))
            .map(|h| h.p_null * h.z)
            .sum();
    }
    let mut power = Vec::with_capacity(thetas.len());
    let mut kl = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let mut p_reject = 0.0;
        let mut info = 0.0;
        for h in histories {
            if rejects(h) {
                p_reject += h.p_at(model, theta);
            }
            info += h.p_null * h.log_ratio(model, theta);
        }
        power.push((theta, p_reject));
        kl.push((theta, info));
    }
    Characteristics {
        alpha,
        asn,
        power,
        power_derivative: beta_dot,
        kl_to_stop: kl,
        provenance: Provenance::Exact,
        errors: None,
    }
}
