//! Backward induction for the value functions `v_n^N`, `r_n^N` and their
//! monotone untruncated limits `v_n`, `r_n`.
//!
//! Truncated: starting from the terminal `v_N^N = g` with `g(z) = min(0, z)`,
//! the recursion is
//!
//!   r_{n-1}(z) = E_{theta0} v_n(z - q_n),
//!   v_{n-1}(z) = min(g(z), c + r_{n-1}(z)).
//!
//! Untruncated limits exist stagewise because the iterates are nonincreasing
//! in the horizon; for structured models only finitely many distinct stage
//! functions occur, so the limit is a fixed point (constant tail) or a
//! periodic cycle, reached by monotone value iteration from `g`.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ValueGrid};
use crate::model::{ObservationModel, ScoreLaw, Structure};

/// Terminal payoff `g(z) = min(0, z)`.
pub fn terminal_value(z: f64) -> f64 {
    z.min(0.0)
}

/// Grid tolerance matched to the arithmetic: discrete models are exact up to
/// rounding, continuous ones are limited by quadrature.
pub fn default_tol(model: &ObservationModel) -> f64 {
    if model.is_discrete() {
        1e-9
    } else {
        1e-6
    }
}

/// `z -> E_{theta0} v(z - q)` under the given score law, on the same nodes.
pub fn expect_shift(v: &ValueGrid, law: &ScoreLaw) -> ValueGrid {
    let spec = v.spec();
    let values = (0..spec.len())
        .map(|i| {
            let z = spec.node(i);
            law.expect(|q| v.eval(z - q))
        })
        .collect();
    ValueGrid::new(spec, values, v.c())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Truncated(usize),
    Untruncated,
}

/// How stage functions continue beyond the stored prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageTail {
    /// Stage `N` forces a stop; nothing beyond `r_{N-1}`.
    Truncated { horizon: usize },
    /// `r_n = r_from` for all `n >= from`.
    Constant { from: usize },
    /// `r_n = r_{n mod period}`.
    Periodic { period: usize },
}

/// Value functions per stage plus the tail rule that extends them.
pub struct RecursionOutput {
    pub horizon: Horizon,
    /// `v[n]` for the stored prefix of stage indices `n`.
    pub v: Vec<ValueGrid>,
    /// `r[n]` for the stored prefix.
    pub r: Vec<ValueGrid>,
    pub tail: StageTail,
    /// Sup-norm deltas per sweep of the untruncated iteration.
    pub convergence_log: Vec<f64>,
}

impl RecursionOutput {
    /// The function `r_n` governing the stage-`n` stopping comparison, or
    /// `None` when stage `n` forces a stop.
    pub fn r_at(&self, n: usize) -> Option<&ValueGrid> {
        match self.tail {
            StageTail::Truncated { horizon } => {
                if n < horizon {
                    Some(&self.r[n])
                } else {
                    None
                }
            }
            StageTail::Constant { from } => Some(&self.r[n.min(from)]),
            StageTail::Periodic { period } => Some(&self.r[n % period]),
        }
    }

    pub fn v_at(&self, n: usize) -> &ValueGrid {
        match self.tail {
            StageTail::Truncated { .. } => &self.v[n],
            StageTail::Constant { from } => &self.v[n.min(from)],
            StageTail::Periodic { period } => &self.v[n % period],
        }
    }

    fn validate_all(&self, tol: f64) -> Result<()> {
        for grid in self.v.iter().chain(self.r.iter()) {
            grid.validate(tol)?;
        }
        // r_n <= v_n pointwise.
        for (r, v) in self.r.iter().zip(self.v.iter()) {
            if r.max_excess_over(v) > tol {
                return Err(Error::InvariantViolation(
                    "r exceeds v at some node".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Truncated recursion over horizon `N`.
pub fn backward_induction(
    model: &ObservationModel,
    horizon: usize,
    c: f64,
    spec: GridSpec,
) -> Result<RecursionOutput> {
    assert!(horizon >= 1, "horizon must be at least 1");
    assert!(c > 0.0, "observation cost must be positive");
    let tol = default_tol(model);
    let g = ValueGrid::terminal(spec, c);
    let mut v: Vec<Option<ValueGrid>> = vec![None; horizon + 1];
    let mut r: Vec<Option<ValueGrid>> = vec![None; horizon];
    v[horizon] = Some(g);
    for n in (1..=horizon).rev() {
        let law = model.stage(n).score_law();
        let shifted = expect_shift(v[n].as_ref().unwrap(), law);
        // Averaging a concave function can only lower it.
        if shifted.max_excess_over(v[n].as_ref().unwrap()) > tol {
            return Err(Error::InvariantViolation(
                "expect_shift output exceeds its input".into(),
            ));
        }
        v[n - 1] = Some(shifted.bellman_min());
        r[n - 1] = Some(shifted);
    }
    let out = RecursionOutput {
        horizon: Horizon::Truncated(horizon),
        v: v.into_iter().map(Option::unwrap).collect(),
        r: r.into_iter().map(Option::unwrap).collect(),
        tail: StageTail::Truncated { horizon },
        convergence_log: vec![],
    };
    out.validate_all(tol)?;
    Ok(out)
}

/// Untruncated limits for structured models, by monotone value iteration.
///
/// `lower_bound`, when given, is the `-(gamma1/8c + c)` floor from the
/// Lagrange-value bound; iterates drifting below it indicate a broken setup.
pub fn iterate_to_limit(
    model: &ObservationModel,
    c: f64,
    spec: GridSpec,
    sup_norm_tol: f64,
    max_sweeps: usize,
    lower_bound: Option<f64>,
) -> Result<RecursionOutput> {
    assert!(c > 0.0, "observation cost must be positive");
    let tol = default_tol(model);
    match model.structure() {
        Structure::Explicit { .. } => Err(Error::UnstructuredLimit),
        Structure::Iid | Structure::FinitelyNonStationary { .. } => {
            let k = match model.structure() {
                Structure::FinitelyNonStationary { change_index } => change_index,
                _ => 1,
            };
            let law = model.stage(k).score_law().clone();
            let (v_star, log) =
                fixed_point(ValueGrid::terminal(spec, c), &law, sup_norm_tol, max_sweeps, lower_bound)?;
            let r_star = expect_shift(&v_star, &law);
            let from = k - 1;
            let mut v = vec![v_star; from + 1];
            let mut r = vec![r_star; from + 1];
            for n in (1..=from).rev() {
                let shifted = expect_shift(&v[n], model.stage(n).score_law());
                v[n - 1] = shifted.bellman_min();
                r[n - 1] = shifted;
            }
            let out = RecursionOutput {
                horizon: Horizon::Untruncated,
                v,
                r,
                tail: StageTail::Constant { from },
                convergence_log: log,
            };
            out.validate_all(tol)?;
            Ok(out)
        }
        Structure::Periodic { period } => {
            let g = ValueGrid::terminal(spec, c);
            // vs[i] holds v_{i+1} for i = 0..period-1.
            let mut vs: Vec<ValueGrid> = vec![g.clone(); period];
            let mut log = Vec::new();
            let mut converged = false;
            for _sweep in 0..max_sweeps {
                let mut max_delta: f64 = 0.0;
                for n in (1..=period).rev() {
                    let next = if n == period { vs[0].clone() } else { vs[n].clone() };
                    let law = model.stage(n + 1).score_law();
                    let updated = expect_shift(&next, law).bellman_min();
                    let old = &vs[n - 1];
                    if updated.max_excess_over(old) > 1e-12 {
                        return Err(Error::InvariantViolation(
                            "periodic value iteration is not monotone".into(),
                        ));
                    }
                    check_floor(&updated, lower_bound)?;
                    max_delta = max_delta.max(updated.sup_dist(old));
                    vs[n - 1] = updated;
                }
                log.push(max_delta);
                if max_delta < sup_norm_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                let last = log.last().copied().unwrap_or(f64::NAN);
                return Err(Error::ConvergenceFailure {
                    iterations: log.len(),
                    last_delta: last,
                    log,
                });
            }
            // Reindex to v_0..v_{T-1}, r_0..r_{T-1}.
            let mut v = Vec::with_capacity(period);
            let mut r = Vec::with_capacity(period);
            let r0 = expect_shift(&vs[0], model.stage(1).score_law());
            v.push(r0.bellman_min());
            r.push(r0);
            for n in 1..period {
                // r_n = E v_{n+1}(. - q_{n+1}) and v_n = vs[n-1].
                r.push(expect_shift(&vs[n % period], model.stage(n + 1).score_law()));
                v.push(vs[n - 1].clone());
            }
            let out = RecursionOutput {
                horizon: Horizon::Untruncated,
                v,
                r,
                tail: StageTail::Periodic { period },
                convergence_log: log,
            };
            out.validate_all(tol)?;
            Ok(out)
        }
    }
}

fn fixed_point(
    start: ValueGrid,
    law: &ScoreLaw,
    sup_norm_tol: f64,
    max_sweeps: usize,
    lower_bound: Option<f64>,
) -> Result<(ValueGrid, Vec<f64>)> {
    let mut v = start;
    let mut log = Vec::new();
    for _ in 0..max_sweeps {
        let next = expect_shift(&v, law).bellman_min();
        if next.max_excess_over(&v) > 1e-12 {
            return Err(Error::InvariantViolation(
                "value iteration is not monotone".into(),
            ));
        }
        check_floor(&next, lower_bound)?;
        let delta = next.sup_dist(&v);
        log.push(delta);
        v = next;
        if delta < sup_norm_tol {
            return Ok((v, log));
        }
    }
    let last = log.last().copied().unwrap_or(f64::NAN);
    Err(Error::ConvergenceFailure {
        iterations: log.len(),
        last_delta: last,
        log,
    })
}

fn check_floor(v: &ValueGrid, lower_bound: Option<f64>) -> Result<()> {
    if let Some(lb) = lower_bound {
        let min = v.values().iter().fold(f64::INFINITY, |m, &x| m.min(x));
        // Values below the grid follow the z + offset tail, so only the
        // g-distance is bounded: check v(0) and the offsets instead of the
        // raw minimum for the left tail.
        let gap = -v.eval(0.0);
        if gap > -lb + 1e-9 {
            return Err(Error::InvariantViolation(format!(
                "value at 0 ({}) drifted below the Lagrange floor {lb}",
                -gap
            )));
        }
        let _ = min;
    }
    Ok(())
}
