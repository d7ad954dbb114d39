//! Brute-force certification of the dynamic-programming optimality identity
//! on tiny discrete models.
//!
//! The Lagrange function of a truncated stopping rule `psi` is
//!
//!   L_N(psi; b, c) = sum_n E_{theta0} s_n (n c + min{0, b - z_n}),
//!
//! whose minimum over the truncated class equals `c + r_0^N(b; c)`.  The
//! oracle evaluates `L_N` by exhaustive history enumeration, minimizes it by
//! exact dynamic programming over histories and, on small enough instances,
//! by enumerating every deterministic rule outright.  Only deterministic
//! rules are enumerated: randomized rules are convex mixtures of them, so
//! the minimum is attained on the deterministic subset.

use std::collections::HashMap;

use crate::engine::{enumerate_stopped, StoppingPolicy};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::ObservationModel;
use crate::recursion::{backward_induction, terminal_value, RecursionOutput};

/// A deterministic truncated stopping rule given extensionally: one
/// stop/continue bit per positive-probability history of length `< horizon`.
#[derive(Debug, Clone)]
pub struct ExplicitRule {
    pub horizon: usize,
    /// Keyed by the atom-index history `(i_1..i_n)`, `1 <= n < horizon`.
    pub stop: HashMap<Vec<usize>, bool>,
}

impl ExplicitRule {
    fn uniform(model: &ObservationModel, horizon: usize, stops: bool) -> Self {
        let stop = interior_histories(model, horizon)
            .into_iter()
            .map(|(h, _)| (h, stops))
            .collect();
        Self { horizon, stop }
    }

    /// The rule that stops at the first stage regardless of the outcome.
    pub fn stop_at_one(model: &ObservationModel, horizon: usize) -> Self {
        Self::uniform(model, horizon, true)
    }

    pub fn always_continue(model: &ObservationModel, horizon: usize) -> Self {
        Self::uniform(model, horizon, false)
    }
}

impl StoppingPolicy for ExplicitRule {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn stops(&self, atom_idxs: &[usize], _xs: &[f64], _z: f64) -> bool {
        *self
            .stop
            .get(atom_idxs)
            .expect("rule table covers every reachable history")
    }
}

/// All positive-probability histories of length `1..horizon` with their
/// accumulated statistic `z`, in depth-first order.
fn interior_histories(model: &ObservationModel, horizon: usize) -> Vec<(Vec<usize>, f64)> {
    fn go(
        model: &ObservationModel,
        horizon: usize,
        prefix: &mut Vec<usize>,
        z: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        let depth = prefix.len() + 1;
        if depth >= horizon {
            return;
        }
        let atoms = model.stage(depth).atoms().expect("discrete stage");
        for (i, a) in atoms.iter().enumerate() {
            if a.p == 0.0 {
                continue;
            }
            prefix.push(i);
            out.push((prefix.clone(), z + a.q));
            go(model, horizon, prefix, z + a.q, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(model, horizon, &mut Vec::new(), 0.0, &mut out);
    out
}

/// Exact `L_N(psi; b, c)` by history enumeration.
pub fn lagrange_value(
    model: &ObservationModel,
    rule: &ExplicitRule,
    b: f64,
    c: f64,
    budget: usize,
) -> Result<f64> {
    let histories = enumerate_stopped(model, rule, budget)?;
    Ok(histories
        .iter()
        .map(|h| h.p_null * (h.n as f64 * c + terminal_value(b - h.z)))
        .sum())
}

/// Result of the brute-force minimization.
pub struct BruteForceResult {
    /// Minimum by exact dynamic programming over histories.
    pub dp_min: f64,
    /// Minimum by exhaustive rule enumeration, when the instance is small
    /// enough (`<= 2^12` rules).
    pub enum_min: Option<f64>,
    /// Every enumerated rule attaining the minimum within `1e-12`.
    pub argmin: Vec<ExplicitRule>,
    pub rules_enumerated: Option<usize>,
}

/// Minimizes `L_N` over all deterministic truncated stopping rules.
pub fn brute_force_min(
    model: &ObservationModel,
    horizon: usize,
    b: f64,
    c: f64,
    budget: usize,
) -> Result<BruteForceResult> {
    if !model.is_discrete() {
        return Err(Error::Model("the oracle requires a discrete model".into()));
    }
    let mut visited = 0usize;
    let dp_min = dp_value(model, horizon, b, c, budget, &mut visited, 0, 0.0)?;

    let interior = interior_histories(model, horizon);
    let (enum_min, argmin, rules_enumerated) = if interior.len() <= 12 {
        let count = 1usize << interior.len();
        let mut best = f64::INFINITY;
        let mut evaluated: Vec<(f64, ExplicitRule)> = Vec::with_capacity(count);
        for mask in 0..count {
            let stop: HashMap<Vec<usize>, bool> = interior
                .iter()
                .enumerate()
                .map(|(bit, (h, _))| (h.clone(), mask >> bit & 1 == 1))
                .collect();
            let rule = ExplicitRule { horizon, stop };
            let value = lagrange_value(model, &rule, b, c, budget)?;
            best = best.min(value);
            evaluated.push((value, rule));
        }
        let argmin = evaluated
            .into_iter()
            .filter(|(v, _)| *v <= best + 1e-12)
            .map(|(_, r)| r)
            .collect();
        (Some(best), argmin, Some(count))
    } else {
        (None, Vec::new(), None)
    };

    Ok(BruteForceResult { dp_min, enum_min, argmin, rules_enumerated })
}

/// Expected optimal cost of everything from stage `depth + 1` on, given the
/// statistic `z` after `depth` observations: one forced observation, then the
/// better of stopping (`(depth+1) c + g(b - z')`, costs carried incrementally
/// as `c` per step) or continuing.  Ties go to stopping.
#[allow(clippy::too_many_arguments)]
fn dp_value(
    model: &ObservationModel,
    horizon: usize,
    b: f64,
    c: f64,
    budget: usize,
    visited: &mut usize,
    depth: usize,
    z: f64,
) -> Result<f64> {
    let stage = depth + 1;
    let atoms = model.stage(stage).atoms().expect("discrete stage");
    let mut acc = 0.0;
    for a in atoms {
        if a.p == 0.0 {
            continue;
        }
        *visited += 1;
        if *visited > budget {
            return Err(Error::BudgetExceeded(format!(
                "oracle DP exceeded {budget} histories at depth {stage}"
            )));
        }
        let z2 = z + a.q;
        let stop = terminal_value(b - z2);
        let value = if stage < horizon {
            let cont = dp_value(model, horizon, b, c, budget, visited, stage, z2)?;
            stop.min(cont)
        } else {
            stop
        };
        acc += a.p * value;
    }
    Ok(c + acc)
}

/// Certificate comparing the oracle minima against the recursion value.
pub struct OracleCertificate {
    pub horizon: usize,
    pub b: f64,
    pub c: f64,
    pub dp_min: f64,
    pub enum_min: Option<f64>,
    /// `c + r_0^N(b; c)` from the value recursion.
    pub recursion_value: f64,
    /// Largest pairwise gap among the available minima and the recursion
    /// value.
    pub max_delta: f64,
    pub rules_enumerated: Option<usize>,
    /// Whether every enumerated minimizer obeys the optimal-rule sandwich.
    pub argmin_sandwich_ok: bool,
}

/// Runs the full certificate: DP minimum, exhaustive minimum where feasible,
/// recursion value, and the sandwich check on every enumerated minimizer.
pub fn certify(
    model: &ObservationModel,
    horizon: usize,
    b: f64,
    c: f64,
    spec: GridSpec,
    budget: usize,
) -> Result<OracleCertificate> {
    let result = brute_force_min(model, horizon, b, c, budget)?;
    let rec = backward_induction(model, horizon, c, spec)?;
    let recursion_value = c + rec.r_at(0).expect("r_0 exists for N >= 1").eval(b);
    let mut vals = vec![result.dp_min, recursion_value];
    if let Some(e) = result.enum_min {
        vals.push(e);
    }
    let max_delta = vals
        .iter()
        .flat_map(|x| vals.iter().map(move |y| (x - y).abs()))
        .fold(0.0, f64::max);
    let argmin_sandwich_ok = result
        .argmin
        .iter()
        .all(|rule| sandwich_satisfied(model, rule, &rec, b, c, 1e-12));
    Ok(OracleCertificate {
        horizon,
        b,
        c,
        dp_min: result.dp_min,
        enum_min: result.enum_min,
        recursion_value,
        max_delta,
        rules_enumerated: result.rules_enumerated,
        argmin_sandwich_ok,
    })
}

/// Checks the optimal-rule characterization on every positive-probability
/// history the rule reaches: where stopping is strictly better
/// (`g(b - z) < c + r_n(b - z)`) the rule must stop, and where continuing is
/// strictly better it must continue.
pub fn sandwich_satisfied(
    model: &ObservationModel,
    rule: &ExplicitRule,
    rec: &RecursionOutput,
    b: f64,
    c: f64,
    tol: f64,
) -> bool {
    fn go(
        model: &ObservationModel,
        rule: &ExplicitRule,
        rec: &RecursionOutput,
        b: f64,
        c: f64,
        tol: f64,
        prefix: &mut Vec<usize>,
        z: f64,
    ) -> bool {
        let depth = prefix.len() + 1;
        if depth >= rule.horizon {
            return true;
        }
        let atoms = model.stage(depth).atoms().expect("discrete stage");
        for (i, a) in atoms.iter().enumerate() {
            if a.p == 0.0 {
                continue;
            }
            prefix.push(i);
            let z2 = z + a.q;
            let stops = *rule.stop.get(prefix).expect("covered history");
            let g = terminal_value(b - z2);
            let r = rec.r_at(depth).expect("interior stage").eval(b - z2);
            let ok = if g < c + r - tol {
                stops
            } else if g > c + r + tol {
                !stops
            } else {
                true
            };
            let deeper = ok && (stops || go(model, rule, rec, b, c, tol, prefix, z2));
            prefix.pop();
            if !deeper {
                return false;
            }
        }
        true
    }
    go(model, rule, rec, b, c, tol, &mut Vec::new(), 0.0)
}
