//! End-to-end composition: value recursion, boundary solve, test execution
//! and operating characteristics, with provenance chosen automatically
//! (exact for discrete truncated designs, Monte Carlo otherwise).

use super::mc::{simulate, SimulateOpts, TraceRow};
use super::{exact_characteristics, Characteristics, Side, TestDesign};
use crate::boundary::{assemble_regions, StageInterval};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::ObservationModel;
use crate::recursion::{backward_induction, iterate_to_limit, Horizon, RecursionOutput};

#[derive(Debug, Clone)]
pub struct PipelineOpts {
    pub horizon: Horizon,
    /// Grid override; a model-sized default is derived when absent.
    pub grid: Option<GridSpec>,
    /// Parameter points at which power and KL-to-stop are evaluated.
    pub thetas: Vec<f64>,
    /// Node budget for exact enumeration.
    pub budget: usize,
    /// Monte Carlo settings, used when exact evaluation is impossible.
    pub sim: SimulateOpts,
    /// Sup-norm tolerance for the untruncated iteration; defaults per model.
    pub sup_norm_tol: Option<f64>,
    pub max_sweeps: usize,
    /// Lower floor `-(gamma1/(8c) + c)` for the untruncated iteration.
    pub value_floor: Option<f64>,
    /// Use Monte Carlo even where exact evaluation is possible.
    pub force_mc: bool,
}

impl PipelineOpts {
    pub fn truncated(horizon: usize) -> Self {
        Self::with_horizon(Horizon::Truncated(horizon))
    }

    pub fn untruncated() -> Self {
        Self::with_horizon(Horizon::Untruncated)
    }

    fn with_horizon(horizon: Horizon) -> Self {
        Self {
            horizon,
            grid: None,
            thetas: Vec::new(),
            budget: 1_000_000,
            sim: SimulateOpts::default(),
            sup_norm_tol: None,
            max_sweeps: 100_000,
            value_floor: None,
            force_mc: false,
        }
    }
}

/// Everything the pipeline produced for one `(b, c)` pair.
pub struct DesignReport {
    pub design: TestDesign,
    pub recursion: RecursionOutput,
    pub grid: GridSpec,
    pub characteristics: Characteristics,
    /// Characteristics of the mirrored test `(psi, 1 - phi)`, reported when
    /// `b <= 0` (the mirrored rule is then itself of interest).
    pub mirrored: Option<Characteristics>,
    pub trace: Option<Vec<TraceRow>>,
}

/// Runs recursion, boundary assembly and evaluation for one `(b, c)`.
pub fn characterize_design(
    model: &ObservationModel,
    b: f64,
    c: f64,
    opts: &PipelineOpts,
) -> Result<DesignReport> {
    if c <= 0.0 {
        return Err(Error::Config {
            field: "c".into(),
            reason: "observation cost must be positive".into(),
        });
    }
    let grid = opts
        .grid
        .unwrap_or_else(|| GridSpec::default_for(model, b, c, opts.horizon_len()));
    let recursion = match opts.horizon {
        Horizon::Truncated(n) => backward_induction(model, n, c, grid)?,
        Horizon::Untruncated => {
            let tol = opts
                .sup_norm_tol
                .unwrap_or_else(|| crate::recursion::default_tol(model));
            iterate_to_limit(model, c, grid, tol, opts.max_sweeps, opts.value_floor)?
        }
    };
    let regions = assemble_regions(&recursion, b, c)?;
    let stein_certified = !model.cycle_score_degenerate();
    if opts.horizon == Horizon::Untruncated
        && !stein_certified
        && regions
            .per_stage
            .iter()
            .any(|s| s.interval != StageInterval::Empty)
    {
        return Err(Error::Model(
            "untruncated design on a degenerate-score model cannot certify a finite ASN".into(),
        ));
    }
    let design = TestDesign {
        regions,
        horizon: opts.horizon,
        b,
        c,
        stein_certified,
    };

    let exact_possible =
        model.is_discrete() && matches!(opts.horizon, Horizon::Truncated(_)) && !opts.force_mc;
    let (characteristics, mirrored, trace) = if exact_possible {
        let ch = exact_characteristics(&design, model, &opts.thetas, opts.budget, Side::Upper)?;
        let mir = (b <= 0.0)
            .then(|| exact_characteristics(&design, model, &opts.thetas, opts.budget, Side::Lower))
            .transpose()?;
        (ch, mir, None)
    } else {
        let sim_opts = SimulateOpts {
            thetas: opts.thetas.clone(),
            ..opts.sim.clone()
        };
        let (ch, trace) = simulate(&design, model, &sim_opts)?;
        let mir = if b <= 0.0 {
            let (m, _) = simulate(
                &design,
                model,
                &SimulateOpts {
                    side: Side::Lower,
                    record_trace: false,
                    ..sim_opts
                },
            )?;
            Some(m)
        } else {
            None
        };
        (ch, mir, trace)
    };

    Ok(DesignReport {
        design,
        recursion,
        grid,
        characteristics,
        mirrored,
        trace,
    })
}

impl PipelineOpts {
    fn horizon_len(&self) -> Option<usize> {
        match self.horizon {
            Horizon::Truncated(n) => Some(n),
            Horizon::Untruncated => None,
        }
    }
}

/// Searches `(b, c)` for given target error and sampling-cost levels.
///
/// This utility is not part of the optimal-design theory, which takes `(b, c)`
/// as given Lagrange data; it is a convenience inversion: for each candidate
/// `c`, bisect on `b` (type-I error is nonincreasing in `b`) to meet
/// `target_alpha`, then keep the candidate whose ASN is closest to
/// `target_asn`.  Requires a discrete model and a truncated horizon so every
/// evaluation is exact.
pub fn invert_targets(
    model: &ObservationModel,
    target_alpha: f64,
    target_asn: f64,
    c_grid: &[f64],
    b_range: (f64, f64),
    opts: &PipelineOpts,
) -> Result<DesignReport> {
    if !model.is_discrete() || !matches!(opts.horizon, Horizon::Truncated(_)) {
        return Err(Error::Config {
            field: "horizon".into(),
            reason: "target inversion requires a discrete model and truncated horizon".into(),
        });
    }
    if c_grid.is_empty() {
        return Err(Error::Config {
            field: "c_grid".into(),
            reason: "at least one candidate cost is required".into(),
        });
    }
    let alpha_of = |b: f64, c: f64| -> Result<f64> {
        Ok(characterize_design(model, b, c, opts)?.characteristics.alpha)
    };
    let mut best: Option<(f64, DesignReport)> = None;
    for &c in c_grid {
        let (mut lo, mut hi) = b_range;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if alpha_of(mid, c)? > target_alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let report = characterize_design(model, hi, c, opts)?;
        let gap = (report.characteristics.asn - target_asn).abs();
        if best.as_ref().map_or(true, |(g, _)| gap < *g) {
            best = Some((gap, report));
        }
    }
    Ok(best.expect("nonempty candidate grid").1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn degenerate_model_gives_empty_regions_and_asn_one() {
        let m = fixtures::degenerate();
        let report = characterize_design(&m, 0.5, 0.1, &PipelineOpts::truncated(4)).unwrap();
        assert!(report
            .design
            .regions
            .per_stage
            .iter()
            .all(|s| s.interval == StageInterval::Empty));
        assert_eq!(report.characteristics.asn, 1.0);
        // b > 0 and z_1 = 0 < b: never rejects.
        assert_eq!(report.characteristics.alpha, 0.0);
    }

    #[test]
    fn alpha_equals_power_at_null_through_pipeline() {
        let m = fixtures::two_point();
        let mut opts = PipelineOpts::truncated(4);
        opts.thetas = vec![0.0, 0.2];
        let report = characterize_design(&m, 0.0, 0.1, &opts).unwrap();
        let ch = &report.characteristics;
        assert!((ch.alpha - ch.power_at(0.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn mirrored_report_present_only_for_nonpositive_b() {
        let m = fixtures::two_point();
        let opts = PipelineOpts::truncated(3);
        assert!(characterize_design(&m, 0.0, 0.1, &opts).unwrap().mirrored.is_some());
        assert!(characterize_design(&m, 0.5, 0.1, &opts).unwrap().mirrored.is_none());
    }

    #[test]
    fn mirrored_alpha_complements_at_symmetric_b_zero() {
        // b = 0 on a symmetric model: phi and 1 - phi split every outcome,
        // so the two alphas sum to one.
        let m = fixtures::two_point();
        let report = characterize_design(&m, 0.0, 0.1, &PipelineOpts::truncated(4)).unwrap();
        let mir = report.mirrored.as_ref().unwrap();
        assert!((report.characteristics.alpha + mir.alpha - 1.0).abs() < 1e-12);
        assert!((report.characteristics.asn - mir.asn).abs() < 1e-12);
    }

    #[test]
    fn untruncated_pipeline_uses_monte_carlo() {
        let m = fixtures::two_point();
        let mut opts = PipelineOpts::untruncated();
        opts.sim.reps = 400;
        opts.sim.seed = 5;
        let report = characterize_design(&m, 0.5, 0.1, &opts).unwrap();
        assert!(matches!(
            report.characteristics.provenance,
            super::super::Provenance::MonteCarlo { .. }
        ));
        assert!(report.characteristics.asn >= 1.0);
    }

    #[test]
    fn inversion_meets_alpha_target() {
        let m = fixtures::three_point();
        let report = invert_targets(
            &m,
            0.3,
            2.0,
            &[0.05, 0.1, 0.2],
            (-3.0, 3.0),
            &PipelineOpts::truncated(4),
        )
        .unwrap();
        assert!(report.characteristics.alpha <= 0.3 + 1e-9);
    }

    #[test]
    fn rejects_nonpositive_cost() {
        let m = fixtures::two_point();
        let err = characterize_design(&m, 0.0, 0.0, &PipelineOpts::truncated(2));
        assert!(matches!(err, Err(Error::Config { .. })));
    }
}
