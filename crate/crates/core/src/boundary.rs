//! Continuation-interval boundaries: the roots `A_n(c) <= 0 <= B_n(c)` of
//! `c + r_n(z) = g(z)` on each half-line, and their assembly into per-stage
//! regions.  The interval is empty exactly when `c + r_n(0) > 0`; otherwise
//! `g(z) > c + r_n(z)` holds strictly inside `(A_n, B_n)` and nowhere else.

use crate::error::{Error, Result};
use crate::grid::ValueGrid;
use crate::recursion::{RecursionOutput, StageTail};

/// Continuation interval of one stage, or `Empty` when stopping is always at
/// least as good.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StageInterval {
    Empty,
    Interval { a: f64, b: f64 },
}

impl StageInterval {
    /// Membership in the open interval `(A, B)`.
    pub fn contains_open(&self, z: f64) -> bool {
        match *self {
            StageInterval::Empty => false,
            StageInterval::Interval { a, b } => a < z && z < b,
        }
    }

    /// Membership in the closed interval `[A, B]`.
    pub fn contains_closed(&self, z: f64) -> bool {
        match *self {
            StageInterval::Empty => false,
            StageInterval::Interval { a, b } => a <= z && z <= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageBoundary {
    pub stage: usize,
    pub interval: StageInterval,
}

/// How the stored per-stage boundaries extend to all stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTail {
    /// Stage `horizon` forces a stop; stages above it do not occur.
    Truncated { horizon: usize },
    /// Boundaries constant from stage `from` on.
    Constant { from: usize },
    Periodic { period: usize },
}

/// Per-stage continuation regions of a test design.
#[derive(Debug, Clone)]
pub struct ContinuationRegions {
    pub b: f64,
    pub c: f64,
    /// Boundaries for stages `1..=per_stage.len()`.
    pub per_stage: Vec<StageBoundary>,
    pub tail: RegionTail,
}

impl ContinuationRegions {
    /// The continuation interval governing stage `n >= 1`, or `None` when the
    /// stage forces a stop (truncation).
    pub fn interval_at(&self, n: usize) -> Option<StageInterval> {
        assert!(n >= 1);
        match self.tail {
            RegionTail::Truncated { horizon } => {
                if n < horizon {
                    Some(self.per_stage[n - 1].interval)
                } else {
                    None
                }
            }
            RegionTail::Constant { from } => {
                let idx = n.min(from.max(1));
                Some(self.per_stage[idx - 1].interval)
            }
            RegionTail::Periodic { period } => {
                Some(self.per_stage[(n - 1) % period].interval)
            }
        }
    }
}

/// Bisection iterations; the bracket is one grid cell at most, so this
/// reaches machine precision.
const BISECT_ITERS: usize = 200;

/// Solves `c + r(z) = g(z)` on each half-line.
pub fn solve_stage_boundary(r: &ValueGrid, c: f64) -> Result<StageInterval> {
    let r0 = r.eval(0.0);
    if c + r0 > 0.0 {
        return Ok(StageInterval::Empty);
    }
    if c + r0 == 0.0 {
        // Exact boundary case: the interval degenerates to the point 0,
        // nonempty closed but empty open.
        return Ok(StageInterval::Interval { a: 0.0, b: 0.0 });
    }
    let spec = r.spec();

    // Left root: h(z) = z - r(z) - c is convex, continuous, nondecreasing on
    // z <= 0 with h(0) >= 0; bracket the sign change scanning nodes leftward.
    let h = |z: f64| z - r.eval(z) - c;
    let mut lo = None;
    let mut prev = 0.0_f64;
    let mut i = ((0.0 - spec.z_min) / spec.step).floor() as usize;
    loop {
        let z = spec.node(i).min(0.0);
        if h(z) < 0.0 {
            lo = Some((z, prev));
            break;
        }
        prev = z;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    let (mut la, mut lb) = lo.ok_or_else(|| Error::GridTooNarrow {
        reason: format!("left boundary root below grid minimum {}", spec.z_min),
        suggest_lo: spec.z_min * 2.0,
        suggest_hi: spec.z_max,
    })?;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (la + lb);
        if h(mid) < 0.0 {
            la = mid;
        } else {
            lb = mid;
        }
    }
    let a = 0.5 * (la + lb);

    // Right root: k(z) = -r(z) - c is nonincreasing on z >= 0 with k(0) >= 0.
    let k = |z: f64| -r.eval(z) - c;
    let mut hi = None;
    let mut prev = 0.0_f64;
    let mut i = ((0.0 - spec.z_min) / spec.step).ceil() as usize;
    while i < spec.len() {
        let z = spec.node(i).max(0.0);
        if k(z) < 0.0 {
            hi = Some((prev, z));
            break;
        }
        prev = z;
        i += 1;
    }
    let (mut ra, mut rb) = hi.ok_or_else(|| Error::GridTooNarrow {
        reason: format!("right boundary root above grid maximum {}", spec.z_max),
        suggest_lo: spec.z_min,
        suggest_hi: spec.z_max * 2.0,
    })?;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (ra + rb);
        if k(mid) < 0.0 {
            rb = mid;
        } else {
            ra = mid;
        }
    }
    let b = 0.5 * (ra + rb);

    Ok(StageInterval::Interval { a: a.min(0.0), b: b.max(0.0) })
}

/// One boundary per stage in scope, with the structural tail carried over
/// from the recursion output.
pub fn assemble_regions(rec: &RecursionOutput, b: f64, c: f64) -> Result<ContinuationRegions> {
    let (count, tail) = match rec.tail {
        StageTail::Truncated { horizon } => {
            (horizon.saturating_sub(1), RegionTail::Truncated { horizon })
        }
        StageTail::Constant { from } => (from.max(1), RegionTail::Constant { from: from.max(1) }),
        StageTail::Periodic { period } => (period, RegionTail::Periodic { period }),
    };
    let mut per_stage = Vec::with_capacity(count);
    for n in 1..=count {
        let r = rec
            .r_at(n)
            .expect("stage within scope always has a continuation function");
        per_stage.push(StageBoundary {
            stage: n,
            interval: solve_stage_boundary(r, c)?,
        });
    }
    Ok(ContinuationRegions { b, c, per_stage, tail })
}
