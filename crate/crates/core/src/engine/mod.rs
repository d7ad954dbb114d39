//! Execution of a sequential test `(psi, phi)` and computation of its
//! operating characteristics.
//!
//! Rule conventions are deterministic: stop at the first stage `n` with
//! `b - z_n` outside the open continuation interval (so the closed boundary
//! stops), and reject exactly when `z_n >= b` (ties reject).  Both choices
//! sit inside the optimal sandwiches, so any other choice there is equally
//! optimal; determinism maximizes testability.

mod exact;
mod mc;
mod pipeline;

pub use exact::{
    enumerate_stopped, exact_characteristics, tau_tail_probs, StoppedHistory, StoppingPolicy,
};
pub use mc::{simulate, SimulateOpts, TraceRow};
pub use pipeline::{characterize_design, invert_targets, DesignReport, PipelineOpts};

use crate::boundary::ContinuationRegions;
use crate::error::{Error, Result};
use crate::recursion::Horizon;

/// Default hard cap on a single untruncated trajectory.
pub const DEFAULT_RUNAWAY_CAP: usize = 10_000_000;

/// A fully determined sequential test: continuation regions plus the
/// decision threshold `b` and the cost `c` they were derived from.
#[derive(Debug, Clone)]
pub struct TestDesign {
    pub regions: ContinuationRegions,
    pub horizon: Horizon,
    pub b: f64,
    pub c: f64,
    /// Whether the Stein finiteness argument applies (untruncated designs):
    /// the cycle score sum is not almost surely zero.
    pub stein_certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Accept,
}

/// Outcome of one executed trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub stopped_at: usize,
    pub z_at_stop: f64,
    pub decision: Decision,
}

/// Which alternative the decision rule targets: `Upper` rejects on
/// `z >= b` (theta > theta0), `Lower` is the mirrored rule `1 - phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

impl TestDesign {
    /// True when stage `n` with statistic `z` stops.
    pub fn stops(&self, n: usize, z: f64) -> bool {
        if let Horizon::Truncated(h) = self.horizon {
            if n >= h {
                return true;
            }
        }
        match self.regions.interval_at(n) {
            None => true,
            Some(iv) => !iv.contains_open(self.b - z),
        }
    }

    pub fn decide(&self, z: f64, side: Side) -> Decision {
        let reject = match side {
            Side::Upper => z >= self.b,
            Side::Lower => z < self.b,
        };
        if reject {
            Decision::Reject
        } else {
            Decision::Accept
        }
    }

    pub fn truncation(&self) -> Option<usize> {
        match self.horizon {
            Horizon::Truncated(h) => Some(h),
            Horizon::Untruncated => None,
        }
    }
}

/// Runs the test over a stream of per-stage scores `q_1, q_2, ...`.
pub fn run_test(
    design: &TestDesign,
    scores: impl IntoIterator<Item = f64>,
    cap: usize,
) -> Result<TrajectoryOutcome> {
    let mut z = 0.0;
    let mut n = 0;
    for q in scores {
        n += 1;
        z += q;
        if design.stops(n, z) {
            return Ok(TrajectoryOutcome {
                stopped_at: n,
                z_at_stop: z,
                decision: design.decide(z, Side::Upper),
            });
        }
        if n >= cap {
            return Err(Error::Runaway { cap });
        }
    }
    Err(Error::Runaway { cap: n })
}

/// Operating characteristics of a design, exact or Monte Carlo.
#[derive(Debug, Clone)]
pub struct Characteristics {
    /// Type-I error probability, `power(theta0)`.
    pub alpha: f64,
    /// Average sample number under the null.
    pub asn: f64,
    /// Power at each evaluated theta.
    pub power: Vec<(f64, f64)>,
    /// Derivative of the power function at the null.
    pub power_derivative: f64,
    /// Kullback-Leibler information to stop, per evaluated theta.
    pub kl_to_stop: Vec<(f64, f64)>,
    pub provenance: Provenance,
    pub errors: Option<McErrors>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Exact,
    MonteCarlo { reps: usize, seed: u64 },
}

/// Standard errors of the Monte Carlo estimates, in the same order as the
/// point estimates.
#[derive(Debug, Clone)]
pub struct McErrors {
    pub alpha_se: f64,
    pub asn_se: f64,
    pub power_se: Vec<(f64, f64)>,
    pub power_derivative_se: f64,
}

impl Characteristics {
    pub fn power_at(&self, theta: f64) -> Option<f64> {
        self.power
            .iter()
            .find(|(t, _)| *t == theta)
            .map(|&(_, p)| p)
    }
}
