//! Seeded Monte Carlo evaluation of a design's operating characteristics.
//!
//! Determinism: replication `i` of the pass for the `t`-th evaluated theta
//! draws from ChaCha8 stream `(t << 32) | i` of the master seed, and the
//! parallel map preserves replication order before the sequential reduction,
//! so results are bitwise identical regardless of worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Characteristics, Decision, McErrors, Provenance, Side, TestDesign};
use crate::error::{Error, Result};
use crate::model::ObservationModel;

#[derive(Debug, Clone)]
pub struct SimulateOpts {
    pub reps: usize,
    pub seed: u64,
    /// Parameter points at which to estimate power; `theta0` reuses the null
    /// pass.
    pub thetas: Vec<f64>,
    /// Hard cap on a single trajectory length.
    pub cap: usize,
    pub side: Side,
    /// Collect one row per replication of the null pass.
    pub record_trace: bool,
}

impl Default for SimulateOpts {
    fn default() -> Self {
        Self {
            reps: 100_000,
            seed: 0,
            thetas: Vec::new(),
            cap: super::DEFAULT_RUNAWAY_CAP,
            side: Side::Upper,
            record_trace: false,
        }
    }
}

/// One simulated trajectory of the null pass, for trace output.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub rep: usize,
    pub stopped_at: usize,
    pub z_at_stop: f64,
    pub rejected: bool,
}

struct NullRep {
    n: usize,
    z: f64,
    /// Cumulative log-likelihood ratio at each requested theta.
    llr: Vec<f64>,
}

/// Runs one trajectory at `theta`, accumulating the score statistic and,
/// when `llr_thetas` is nonempty, the log-likelihood ratios to the null.
fn run_one(
    design: &TestDesign,
    model: &ObservationModel,
    theta: f64,
    llr_thetas: &[f64],
    rng: &mut ChaCha8Rng,
    cap: usize,
) -> Result<NullRep> {
    let mut z = 0.0;
    let mut llr = vec![0.0; llr_thetas.len()];
    let mut n = 0usize;
    loop {
        n += 1;
        let x = model.sample(n, theta, rng)?;
        z += model.score(n, x)?;
        let stage = model.stage(n);
        for (acc, &t) in llr.iter_mut().zip(llr_thetas) {
            let f0 = stage.density(stage.theta0(), x);
            let ft = stage.density(t, x);
            *acc += if ft <= 0.0 { f64::INFINITY } else { (f0 / ft).ln() };
        }
        if design.stops(n, z) {
            return Ok(NullRep { n, z, llr });
        }
        if n >= cap {
            return Err(Error::Runaway { cap });
        }
    }
}

fn pass(
    design: &TestDesign,
    model: &ObservationModel,
    theta: f64,
    theta_idx: u64,
    llr_thetas: &[f64],
    opts: &SimulateOpts,
) -> Result<Vec<NullRep>> {
    (0..opts.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream((theta_idx << 32) | rep as u64);
            run_one(design, model, theta, llr_thetas, &mut rng, opts.cap)
        })
        .collect()
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, reps: usize) -> (f64, f64) {
    let n = reps as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo operating characteristics; `trace` is present when requested.
pub fn simulate(
    design: &TestDesign,
    model: &ObservationModel,
    opts: &SimulateOpts,
) -> Result<(Characteristics, Option<Vec<TraceRow>>)> {
    if opts.reps < 1 {
        return Err(Error::Config {
            field: "reps".into(),
            reason: "at least one replication is required".into(),
        });
    }
    let kl_thetas: Vec<f64> = opts.thetas.clone();
    let null_reps = pass(design, model, model.theta0(), 0, &kl_thetas, opts)?;

    let decide = |z: f64| design.decide(z, opts.side) == Decision::Reject;
    let (alpha, alpha_se) = mean_and_se(
        null_reps.iter().map(|r| if decide(r.z) { 1.0 } else { 0.0 }),
        opts.reps,
    );
    let (asn, asn_se) = mean_and_se(null_reps.iter().map(|r| r.n as f64), opts.reps);
    // Exact-derivative estimator: beta' = E_{theta0} 1{reject} z_tau.
    let (beta_dot, beta_dot_se) = mean_and_se(
        null_reps
            .iter()
            .map(|r| if decide(r.z) { r.z } else { 0.0 }),
        opts.reps,
    );
    let kl_to_stop: Vec<(f64, f64)> = kl_thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean = null_reps.iter().map(|r| r.llr[i]).sum::<f64>() / opts.reps as f64;
            (t, mean)
        })
        .collect();

    let mut power = Vec::with_capacity(opts.thetas.len());
    let mut power_se = Vec::with_capacity(opts.thetas.len());
    for (i, &theta) in opts.thetas.iter().enumerate() {
        if theta == model.theta0() {
            power.push((theta, alpha));
            power_se.push((theta, alpha_se));
            continue;
        }
        let reps = pass(design, model, theta, i as u64 + 1, &[], opts)?;
        let (p, se) = mean_and_se(
            reps.iter().map(|r| if decide(r.z) { 1.0 } else { 0.0 }),
            opts.reps,
        );
        power.push((theta, p));
        power_se.push((theta, se));
    }

    let trace = opts.record_trace.then(|| {
        null_reps
            .iter()
            .enumerate()
            .map(|(rep, r)| TraceRow {
                rep,
                stopped_at: r.n,
                z_at_stop: r.z,
                rejected: decide(r.z),
            })
            .collect()
    });

    Ok((
        Characteristics {
            alpha,
            asn,
            power,
            power_derivative: beta_dot,
            kl_to_stop,
            provenance: Provenance::MonteCarlo {
                reps: opts.reps,
                seed: opts.seed,
            },
            errors: Some(McErrors {
                alpha_se,
                asn_se,
                power_se,
                power_derivative_se: beta_dot_se,
            }),
        },
        trace,
    ))
}
