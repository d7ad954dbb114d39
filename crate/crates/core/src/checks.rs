//! Executable diagnostics for the standalone identities and inequalities
//! relating a test's operating characteristics:
//!
//! - sequential Jensen inequality for weighted history sums,
//! - Wald's identity `E sum_{j<=tau} Y_j = sum_j E Y_j P(tau >= j)`,
//! - the KL-to-stop decomposition `I(theta0,theta;psi) = sum_j I_j P(tau>=j)`,
//! - the information envelope `w(beta_theta) <= I <= gamma1 (theta-theta0)^2 E tau`,
//! - the derivative bound `(beta')^2 <= 2 gamma1 beta0 (1-beta0) E tau`,
//! - agreement of the exact derivative with central finite differences.
//!
//! Every check evaluates both sides exactly (discrete truncated instances)
//! and reports the `(lhs, rhs, slack)` triple with a pass/fail verdict.

use crate::engine::{
    enumerate_stopped, tau_tail_probs, Decision, Side, StoppedHistory, TestDesign,
};
use crate::error::{Error, Result};
use crate::model::{estimate_assumption_constants, ObservationModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

/// One evaluated identity or inequality.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    /// How far inside the relation the instance sits; negative means
    /// violated.
    pub slack: f64,
    pub pass: bool,
    pub provenance: &'static str,
}

impl CheckReport {
    fn new(
        name: &str,
        instance: String,
        lhs: f64,
        rhs: f64,
        relation: Relation,
        tol: f64,
    ) -> Self {
        let slack = match relation {
            Relation::Le => rhs - lhs,
            Relation::Ge => lhs - rhs,
            Relation::Eq => -(lhs - rhs).abs(),
        };
        Self {
            name: name.to_string(),
            instance,
            lhs,
            rhs,
            relation,
            slack,
            pass: slack >= -tol,
            provenance: "exact",
        }
    }
}

/// Exact identity tolerance.
pub const EXACT_TOL: f64 = 1e-12;

fn stopped(model: &ObservationModel, design: &TestDesign, budget: usize) -> Result<Vec<StoppedHistory>> {
    enumerate_stopped(model, design, budget)
}

fn rejects(design: &TestDesign, h: &StoppedHistory) -> bool {
    design.decide(h.z, Side::Upper) == Decision::Reject
}

/// Sequential Jensen inequality: for nonnegative weights `a` and values `v`
/// over stopped histories, with `G` convex,
/// `sum p a G(v) / sum p a >= G(sum p a v / sum p a)`.
pub fn jensen_check(
    model: &ObservationModel,
    design: &TestDesign,
    g: &dyn Fn(f64) -> f64,
    a: &dyn Fn(&StoppedHistory) -> f64,
    v: &dyn Fn(&StoppedHistory) -> f64,
    label: &str,
    budget: usize,
) -> Result<CheckReport> {
    let histories = stopped(model, design, budget)?;
    let norm: f64 = histories.iter().map(|h| h.p_null * a(h)).sum();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Config {
            field: "a".into(),
            reason: format!("normalizer sum p*a = {norm} must be positive and finite"),
        });
    }
    let lhs = histories.iter().map(|h| h.p_null * a(h) * g(v(h))).sum::<f64>() / norm;
    let mean = histories.iter().map(|h| h.p_null * a(h) * v(h)).sum::<f64>() / norm;
    let rhs = g(mean);
    Ok(CheckReport::new(
        "jensen",
        format!("{label} on {}", model.describe()),
        lhs,
        rhs,
        Relation::Ge,
        EXACT_TOL,
    ))
}

/// Wald's identity for non-identically distributed summands.
pub fn wald_identity_check(
    model: &ObservationModel,
    design: &TestDesign,
    y: &dyn Fn(usize, f64) -> f64,
    label: &str,
    budget: usize,
) -> Result<CheckReport> {
    let histories = stopped(model, design, budget)?;
    let horizon = histories.iter().map(|h| h.n).max().unwrap_or(0);
    let lhs: f64 = histories
        .iter()
        .map(|h| {
            h.p_null
                * h.xs
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| y(j + 1, x))
                    .sum::<f64>()
        })
        .sum();
    let tails = tau_tail_probs(&histories, model, model.theta0(), horizon);
    let rhs: f64 = tails
        .iter()
        .enumerate()
        .map(|(j0, &p_tail)| {
            let j = j0 + 1;
            let stage = model.stage(j);
            let mean_y: f64 = stage
                .atoms()
                .expect("discrete stage")
                .iter()
                .map(|a| a.p * y(j, a.x))
                .sum();
            mean_y * p_tail
        })
        .sum();
    Ok(CheckReport::new(
        "wald_identity",
        format!("Y={label} on {}", model.describe()),
        lhs,
        rhs,
        Relation::Eq,
        EXACT_TOL,
    ))
}

/// KL-to-stop decomposition: `I(theta0, theta; psi) = sum_j I_j P(tau >= j)`.
pub fn kl_decomposition_check(
    model: &ObservationModel,
    design: &TestDesign,
    theta: f64,
    budget: usize,
) -> Result<CheckReport> {
    let histories = stopped(model, design, budget)?;
    let horizon = histories.iter().map(|h| h.n).max().unwrap_or(0);
    for j in 1..=horizon {
        let info = model.kl_info(j, theta)?;
        if !info.is_finite() {
            return Err(Error::AssumptionViolation {
                stage: j,
                theta,
                reason: "infinite stage information in the KL decomposition".into(),
            });
        }
    }
    let lhs: f64 = histories.iter().map(|h| h.p_null * h.log_ratio(model, theta)).sum();
    let tails = tau_tail_probs(&histories, model, model.theta0(), horizon);
    let rhs: f64 = tails
        .iter()
        .enumerate()
        .map(|(j0, &p_tail)| model.stage(j0 + 1).kl_info(theta) * p_tail)
        .sum();
    Ok(CheckReport::new(
        "kl_decomposition",
        format!("theta={theta} on {}", model.describe()),
        lhs,
        rhs,
        Relation::Eq,
        EXACT_TOL,
    ))
}

/// `w(x)` from the information lower bound: the binary divergence between
/// `beta0` and `x`.
fn w_binary(beta0: f64, x: f64) -> f64 {
    if beta0 == 0.0 {
        return -(1.0 - x).ln();
    }
    if beta0 == 1.0 {
        return -x.ln();
    }
    beta0 * (beta0 / x).ln() + (1.0 - beta0) * ((1.0 - beta0) / (1.0 - x)).ln()
}

/// The two-sided information envelope at one alternative `theta`:
/// `w(beta_theta) <= I(theta0, theta; psi)` and
/// `I(theta0, theta; psi) <= gamma1 (theta - theta0)^2 E_{theta0} tau`.
pub fn info_inequality_check(
    model: &ObservationModel,
    design: &TestDesign,
    theta: f64,
    gamma1: f64,
    budget: usize,
) -> Result<Vec<CheckReport>> {
    let histories = stopped(model, design, budget)?;
    let info: f64 = histories.iter().map(|h| h.p_null * h.log_ratio(model, theta)).sum();
    let beta0: f64 = histories.iter().filter(|h| rejects(design, h)).map(|h| h.p_null).sum();
    let beta_theta: f64 = histories
        .iter()
        .filter(|h| rejects(design, h))
        .map(|h| h.p_at(model, theta))
        .sum();
    let asn: f64 = histories.iter().map(|h| h.p_null * h.n as f64).sum();
    let d = theta - model.theta0();
    let instance = format!("theta={theta} on {}", model.describe());
    Ok(vec![
        CheckReport::new(
            "info_lower",
            instance.clone(),
            info,
            w_binary(beta0, beta_theta),
            Relation::Ge,
            EXACT_TOL,
        ),
        CheckReport::new(
            "info_upper",
            instance,
            info,
            gamma1 * d * d * asn,
            Relation::Le,
            EXACT_TOL,
        ),
    ])
}

/// `(beta')^2 <= 2 gamma1 beta0 (1 - beta0) E_{theta0} tau`; when `beta0` is
/// zero the derivative itself must vanish.
pub fn derivative_bound_check(
    model: &ObservationModel,
    design: &TestDesign,
    gamma1: f64,
    budget: usize,
) -> Result<Vec<CheckReport>> {
    let histories = stopped(model, design, budget)?;
    let beta0: f64 = histories.iter().filter(|h| rejects(design, h)).map(|h| h.p_null).sum();
    let beta_dot: f64 = histories
        .iter()
        .filter(|h| rejects(design, h))
        .map(|h| h.p_null * h.z)
        .sum();
    let asn: f64 = histories.iter().map(|h| h.p_null * h.n as f64).sum();
    let instance = model.describe();
    let mut reports = vec![CheckReport::new(
        "derivative_bound",
        instance.clone(),
        beta_dot * beta_dot,
        2.0 * gamma1 * beta0 * (1.0 - beta0) * asn,
        Relation::Le,
        EXACT_TOL,
    )];
    if beta0 == 0.0 || beta0 == 1.0 {
        reports.push(CheckReport::new(
            "derivative_vanishes_at_degenerate_power",
            format!("beta0={beta0} on {instance}"),
            beta_dot.abs(),
            0.0,
            Relation::Le,
            EXACT_TOL,
        ));
    }
    Ok(reports)
}

/// Exact power at one theta, by enumeration of the design's histories.
fn exact_power(
    model: &ObservationModel,
    design: &TestDesign,
    theta: f64,
    budget: usize,
) -> Result<f64> {
    model.stage(1).check_theta(theta)?;
    let histories = stopped(model, design, budget)?;
    Ok(histories
        .iter()
        .filter(|h| rejects(design, h))
        .map(|h| h.p_at(model, theta))
        .sum())
}

/// Central finite differences of the exact power against the exact
/// derivative, over a decreasing `h` sweep: errors must shrink at least
/// quadratically (or already sit at rounding level).
pub fn derivative_formula_check(
    model: &ObservationModel,
    design: &TestDesign,
    h_sweep: &[f64],
    budget: usize,
) -> Result<Vec<CheckReport>> {
    assert!(h_sweep.windows(2).all(|w| w[1] < w[0]), "sweep must decrease");
    let histories = stopped(model, design, budget)?;
    let beta_dot: f64 = histories
        .iter()
        .filter(|h| rejects(design, h))
        .map(|h| h.p_null * h.z)
        .sum();
    let theta0 = model.theta0();
    let errs: Vec<f64> = h_sweep
        .iter()
        .map(|&h| {
            let hi = exact_power(model, design, theta0 + h, budget)?;
            let lo = exact_power(model, design, theta0 - h, budget)?;
            Ok((((hi - lo) / (2.0 * h)) - beta_dot).abs())
        })
        .collect::<Result<_>>()?;
    let mut reports = Vec::new();
    for (i, w) in errs.windows(2).enumerate() {
        let ratio = h_sweep[i + 1] / h_sweep[i];
        // Quadratic decay with slack factor 2; machine-zero errors pass via
        // the absolute floor.
        let allowed = (2.0 * w[0] * ratio * ratio).max(1e-9);
        reports.push(CheckReport::new(
            "derivative_quadratic_decay",
            format!(
                "h {} -> {} on {}",
                h_sweep[i],
                h_sweep[i + 1],
                model.describe()
            ),
            w[1],
            allowed,
            Relation::Le,
            0.0,
        ));
    }
    // Agreement at the smallest h: quadratic extrapolation from the largest
    // h with a factor-4 margin, floored at rounding level.
    let ratio = h_sweep[h_sweep.len() - 1] / h_sweep[0];
    reports.push(CheckReport::new(
        "derivative_finite_difference_agreement",
        format!("h={} on {}", h_sweep[h_sweep.len() - 1], model.describe()),
        *errs.last().expect("nonempty sweep"),
        (4.0 * errs[0] * ratio * ratio).max(1e-9),
        Relation::Le,
        0.0,
    ));
    Ok(reports)
}

/// Runs every check against one discrete truncated design.
pub fn run_battery(
    model: &ObservationModel,
    design: &TestDesign,
    thetas: &[f64],
    budget: usize,
) -> Result<Vec<CheckReport>> {
    let (lo, hi) = model.theta_interval();
    let theta0 = model.theta0();
    let delta = 0.5 * (hi - theta0).min(theta0 - lo).min(1.0);
    let constants = estimate_assumption_constants(model, delta, 64)?;
    let mut reports = Vec::new();

    reports.push(jensen_check(
        model,
        design,
        &|x| x * x,
        &|_| 1.0,
        &|h| h.z.abs(),
        "G=x^2, a=1, v=|z|",
        budget,
    )?);
    reports.push(jensen_check(
        model,
        design,
        &|x| -(x.max(1e-300)).ln(),
        &|_| 1.0,
        &|h| h.n as f64,
        "G=-ln, a=1, v=tau",
        budget,
    )?);

    reports.push(wald_identity_check(model, design, &|_, _| 1.0, "1", budget)?);
    reports.push(wald_identity_check(
        model,
        design,
        &|j, x| model.score(j, x).map(f64::abs).unwrap_or(0.0),
        "|q_j|",
        budget,
    )?);
    reports.push(wald_identity_check(model, design, &|j, x| (j as f64) + x * x, "j+x^2", budget)?);

    for &theta in thetas {
        reports.push(kl_decomposition_check(model, design, theta, budget)?);
        if (theta - theta0).abs() <= constants.delta {
            reports.extend(info_inequality_check(
                model,
                design,
                theta,
                constants.gamma1,
                budget,
            )?);
        }
    }
    reports.extend(derivative_bound_check(model, design, constants.gamma1, budget)?);

    let max_h = 0.9 * delta;
    let sweep: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .into_iter()
        .filter(|&h| h < max_h)
        .collect();
    if sweep.len() >= 2 {
        reports.extend(derivative_formula_check(model, design, &sweep, budget)?);
    }
    Ok(reports)
}
