//! Acceptance gate: one test per criterion, each printing a single
//! `criterion N: pass` / `criterion N: FAIL` line (visible with
//! `--nocapture`).  Everything numerical is checked against exact
//! enumeration or analytically derived bounds; no tolerances are looser
//! than the stated gates.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmpseq::boundary::{solve_stage_boundary, StageInterval};
use lmpseq::checks::{
    derivative_bound_check, derivative_formula_check, kl_decomposition_check, run_battery,
    wald_identity_check,
};
use lmpseq::engine::{
    characterize_design, enumerate_stopped, exact_characteristics, simulate, PipelineOpts, Side,
    SimulateOpts, StoppedHistory, TestDesign,
};
use lmpseq::fixtures;
use lmpseq::grid::GridSpec;
use lmpseq::model::{estimate_assumption_constants, ObservationModel};
use lmpseq::oracle::{certify, sandwich_satisfied, ExplicitRule};
use lmpseq::recursion::{backward_induction, terminal_value, RecursionOutput};

const BUDGET: usize = 1_000_000;

fn conclude(criterion: u32, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {criterion}: pass");
    } else {
        println!("criterion {criterion}: FAIL");
        panic!("criterion {criterion} failed:\n{}", failures.join("\n"));
    }
}

fn lattice_grid() -> GridSpec {
    GridSpec::new(-12.0, 12.0, 0.1).unwrap()
}

fn discrete_fixtures() -> Vec<(&'static str, ObservationModel)> {
    vec![
        ("two_point", fixtures::two_point()),
        ("two_point_skewed", fixtures::two_point_skewed()),
        ("three_point", fixtures::three_point()),
        ("bernoulli", fixtures::bernoulli_iid()),
    ]
}

fn design_for(model: &ObservationModel, b: f64, c: f64, horizon: usize) -> TestDesign {
    characterize_design(model, b, c, &PipelineOpts::truncated(horizon))
        .unwrap()
        .design
}

fn c_sweep() -> Vec<f64> {
    (0..20).map(|k| 0.02 + 0.03 * k as f64).collect()
}

/// Criterion 1: on every oracle instance the brute-force minimum of the
/// Lagrange function equals `c + r_0^N(b; c)` within 1e-9, and every
/// enumerated minimizer sits inside the optimal-rule sandwich.
#[test]
fn criterion_01_optimality_certificate() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let models = [
        ("two_point", fixtures::two_point()),
        ("two_point_skewed", fixtures::two_point_skewed()),
        ("three_point", fixtures::three_point()),
    ];
    for (name, model) in &models {
        for horizon in [2usize, 3, 4] {
            for b in [-0.5, 0.0, 0.7] {
                for c in [0.05, 0.2] {
                    let cert = certify(model, horizon, b, c, lattice_grid(), BUDGET).unwrap();
                    if cert.max_delta > 1e-9 {
                        failures.push(format!(
                            "{name} N={horizon} b={b} c={c}: delta {}",
                            cert.max_delta
                        ));
                    }
                    if !cert.argmin_sandwich_ok {
                        failures.push(format!(
                            "{name} N={horizon} b={b} c={c}: a minimizer violates the sandwich"
                        ));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 60 {
        failures.push(format!("runtime {elapsed:?} exceeds 60 s"));
    }
    conclude(1, failures);
}

/// Criterion 2: value-function laws on every recursion output produced here:
/// v <= g, monotone, concave, z - v nondecreasing, r <= v, and pointwise
/// monotonicity in the horizon.
#[test]
fn criterion_02_value_function_laws() {
    let mut failures = Vec::new();
    let mut check = |name: &str, model: &ObservationModel, spec: GridSpec, tol: f64| {
        let shorter = backward_induction(model, 5, 0.1, spec).unwrap();
        let longer = backward_induction(model, 6, 0.1, spec).unwrap();
        for rec in [&shorter, &longer] {
            for (n, v) in rec.v.iter().enumerate() {
                if let Err(e) = v.validate(tol) {
                    failures.push(format!("{name} v_{n}: {e}"));
                }
                if let Some(r) = rec.r_at(n) {
                    if let Err(e) = r.validate(tol) {
                        failures.push(format!("{name} r_{n}: {e}"));
                    }
                    let excess = r.max_excess_over(v);
                    if excess > tol {
                        failures.push(format!("{name} r_{n} > v_{n} by {excess:e}"));
                    }
                }
            }
        }
        for n in 0..=5 {
            let excess = longer.v[n].max_excess_over(&shorter.v[n]);
            if excess > tol {
                failures.push(format!("{name} v_{n}^7 > v_{n}^6 by {excess:e}"));
            }
        }
    };
    for (name, model) in discrete_fixtures() {
        check(name, &model, lattice_grid(), 1e-9);
    }
    check(
        "normal",
        &fixtures::normal_iid(),
        GridSpec::new(-10.0, 10.0, 0.05).unwrap(),
        1e-6,
    );
    conclude(2, failures);
}

/// Criterion 3: boundary dichotomy across a 20-value c-sweep, root residuals
/// at the stated tolerances, and 10^4 random probes of the equivalence
/// between the interval form of the stopping rule and the value comparison.
#[test]
fn criterion_03_boundary_dichotomy() {
    let mut failures = Vec::new();
    let mut probes = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sweep = |name: &str, model: &ObservationModel, spec: GridSpec, res_tol: f64| {
        for c in c_sweep() {
            let rec = backward_induction(model, 4, c, spec).unwrap();
            let r = rec.r_at(1).unwrap();
            let iv = solve_stage_boundary(r, c).unwrap();
            match iv {
                StageInterval::Empty => {
                    if c + r.eval(0.0) <= 0.0 {
                        failures.push(format!("{name} c={c}: empty but c + r(0) <= 0"));
                    }
                }
                StageInterval::Interval { a, b } => {
                    if c + r.eval(0.0) > 0.0 {
                        failures.push(format!("{name} c={c}: nonempty but c + r(0) > 0"));
                    }
                    for root in [a, b] {
                        let res = (c + r.eval(root) - terminal_value(root)).abs();
                        if res > res_tol && (a - b).abs() > 0.0 {
                            failures.push(format!("{name} c={c}: residual {res:e} at {root}"));
                        }
                    }
                }
            }
            // Equivalence probes: strictly better to continue iff inside the
            // open interval, strictly better to stop iff outside the closed.
            for _ in 0..100 {
                probes += 1;
                let z: f64 = rng.gen_range(-3.0..3.0);
                let gap = terminal_value(z) - (c + r.eval(z));
                if gap > 1e-9 && !iv.contains_open(z) {
                    failures.push(format!("{name} c={c} z={z}: g > c + r outside the interval"));
                } else if gap < -1e-9 && iv.contains_closed(z) {
                    failures.push(format!("{name} c={c} z={z}: g < c + r inside the interval"));
                }
            }
        }
    };
    for (name, model) in discrete_fixtures() {
        sweep(name, &model, lattice_grid(), 1e-10);
    }
    sweep(
        "normal",
        &fixtures::normal_iid(),
        GridSpec::new(-10.0, 10.0, 0.05).unwrap(),
        1e-7,
    );
    if probes < 10_000 {
        failures.push(format!("only {probes} probes run"));
    }
    conclude(3, failures);
}

/// Criterion 4: symmetric score laws give symmetric continuation intervals,
/// `|A(c) + B(c)| <= 1e-6`, across the c-sweep.
#[test]
fn criterion_04_symmetric_boundaries() {
    let mut failures = Vec::new();
    let cases = [
        ("two_point", fixtures::two_point(), lattice_grid()),
        (
            "normal",
            fixtures::normal_iid(),
            GridSpec::new(-10.0, 10.0, 0.05).unwrap(),
        ),
    ];
    for (name, model, spec) in cases {
        let mut nonempty = 0usize;
        for c in c_sweep() {
            let rec = backward_induction(&model, 6, c, spec).unwrap();
            let r = rec.r_at(1).unwrap();
            if let StageInterval::Interval { a, b } = solve_stage_boundary(r, c).unwrap() {
                nonempty += 1;
                if (a + b).abs() > 1e-6 {
                    failures.push(format!("{name} c={c}: A + B = {:e}", a + b));
                }
            }
        }
        if nonempty < 5 {
            failures.push(format!("{name}: only {nonempty} nonempty intervals in the sweep"));
        }
    }
    conclude(4, failures);
}

/// Criterion 5: Wald identity with three summand choices and the KL
/// decomposition at three parameter points, exact to 1e-12, on every
/// discrete truncated fixture.
#[test]
fn criterion_05_exact_identities() {
    let mut failures = Vec::new();
    for (name, model) in discrete_fixtures() {
        let design = design_for(&model, 0.3, 0.1, 4);
        let summands: [(&str, Box<dyn Fn(usize, f64) -> f64>); 3] = [
            ("1", Box::new(|_, _| 1.0)),
            ("x^2", Box::new(|_, x| x * x)),
            ("j+|x|", Box::new(|j, x| j as f64 + x.abs())),
        ];
        for (label, y) in &summands {
            let rep = wald_identity_check(&model, &design, y.as_ref(), label, BUDGET).unwrap();
            if !rep.pass {
                failures.push(format!("{name} wald[{label}]: slack {:e}", rep.slack));
            }
        }
        let theta0 = model.theta0();
        for dt in [0.05, 0.15, 0.25] {
            let rep = kl_decomposition_check(&model, &design, theta0 + dt, BUDGET).unwrap();
            if !rep.pass {
                failures.push(format!("{name} kl[{dt}]: slack {:e}", rep.slack));
            }
        }
    }
    conclude(5, failures);
}

/// Criterion 6: the exact power derivative matches central finite
/// differences with quadratic error decay, and the Monte Carlo estimator
/// agrees within 4 standard errors at 10^5 replications.
#[test]
fn criterion_06_derivative_machinery() {
    let mut failures = Vec::new();
    for (name, model) in discrete_fixtures() {
        let design = design_for(&model, 0.3, 0.1, 4);
        for rep in derivative_formula_check(&model, &design, &[1e-1, 1e-2, 1e-3], BUDGET).unwrap()
        {
            if !rep.pass {
                failures.push(format!("{name} {} [{}]: slack {:e}", rep.name, rep.instance, rep.slack));
            }
        }
        let exact = exact_characteristics(&design, &model, &[], BUDGET, Side::Upper).unwrap();
        let opts = SimulateOpts { reps: 100_000, seed: 6, ..SimulateOpts::default() };
        let (mc, _) = simulate(&design, &model, &opts).unwrap();
        let se = mc.errors.as_ref().unwrap().power_derivative_se;
        let gap = (mc.power_derivative - exact.power_derivative).abs();
        if gap > 4.0 * se {
            failures.push(format!(
                "{name}: MC derivative {} vs exact {} (gap {gap:e}, se {se:e})",
                mc.power_derivative, exact.power_derivative
            ));
        }
    }
    conclude(6, failures);
}

/// Criterion 7: the information envelope and the derivative bound hold on
/// every fixture/theta pair, and a design that never rejects has a
/// derivative of exactly zero.
#[test]
fn criterion_07_inequality_envelope() {
    let mut failures = Vec::new();
    for (name, model) in discrete_fixtures() {
        let design = design_for(&model, 0.3, 0.1, 4);
        let theta0 = model.theta0();
        let reports = run_battery(&model, &design, &[theta0 + 0.1, theta0 + 0.25], BUDGET).unwrap();
        for rep in reports {
            if !rep.pass {
                failures.push(format!("{name} {} [{}]: slack {:e}", rep.name, rep.instance, rep.slack));
            }
        }
    }
    // beta_{theta0} = 0 edge case: a threshold out of reach never rejects.
    let model = fixtures::two_point();
    let design = design_for(&model, 5.0, 0.1, 2);
    let chars = exact_characteristics(&design, &model, &[], BUDGET, Side::Upper).unwrap();
    if chars.alpha != 0.0 {
        failures.push(format!("edge case has alpha = {}", chars.alpha));
    }
    if chars.power_derivative.abs() > 1e-12 {
        failures.push(format!("edge case derivative {:e}", chars.power_derivative));
    }
    let constants = estimate_assumption_constants(&model, 0.5, 64).unwrap();
    for rep in derivative_bound_check(&model, &design, constants.gamma1, BUDGET).unwrap() {
        if !rep.pass {
            failures.push(format!("edge case {}: slack {:e}", rep.name, rep.slack));
        }
    }
    conclude(7, failures);
}

/// All positive-probability atom-index histories of length `1..horizon`.
fn interior_histories(model: &ObservationModel, horizon: usize) -> Vec<Vec<usize>> {
    fn go(model: &ObservationModel, horizon: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
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
            out.push(prefix.clone());
            go(model, horizon, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(model, horizon, &mut Vec::new(), &mut out);
    out
}

/// `(alpha, asn, beta_dot)` of a stopping rule paired with the decision
/// rule given by `reject` bits over its stopped histories.
fn test_characteristics(histories: &[StoppedHistory], reject_mask: usize) -> (f64, f64, f64) {
    let mut alpha = 0.0;
    let mut asn = 0.0;
    let mut beta_dot = 0.0;
    for (i, h) in histories.iter().enumerate() {
        asn += h.p_null * h.n as f64;
        if reject_mask >> i & 1 == 1 {
            alpha += h.p_null;
            beta_dot += h.p_null * h.z;
        }
    }
    (alpha, asn, beta_dot)
}

/// Criterion 8: exhaustive LMP dominance on the two-point model at N = 3.
/// Every deterministic truncated test (stopping rule x decision rule) with
/// no larger type-I error and no larger ASN has no larger derivative, and
/// the ones attaining it satisfy both optimal-rule sandwiches.
#[test]
fn criterion_08_lmp_dominance() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let model = fixtures::two_point();
    let horizon = 3;
    for (b, c) in [(0.0, 0.1), (0.3, 0.15)] {
        let design = design_for(&model, b, c, horizon);
        let star = exact_characteristics(&design, &model, &[], BUDGET, Side::Upper).unwrap();
        let rec = backward_induction(&model, horizon, c, lattice_grid()).unwrap();

        let interior = interior_histories(&model, horizon);
        assert_eq!(interior.len(), 6);
        let mut equal_count = 0usize;
        for stop_mask in 0usize..1 << interior.len() {
            let stop: HashMap<Vec<usize>, bool> = interior
                .iter()
                .enumerate()
                .map(|(bit, h)| (h.clone(), stop_mask >> bit & 1 == 1))
                .collect();
            let rule = ExplicitRule { horizon, stop };
            let histories = enumerate_stopped(&model, &rule, BUDGET).unwrap();
            assert!(histories.len() <= 8);
            for reject_mask in 0usize..1 << histories.len() {
                let (alpha, asn, beta_dot) = test_characteristics(&histories, reject_mask);
                if alpha > star.alpha + 1e-12 || asn > star.asn + 1e-12 {
                    continue;
                }
                if beta_dot > star.power_derivative + 1e-9 {
                    failures.push(format!(
                        "b={b} c={c} masks ({stop_mask},{reject_mask}): beta_dot {beta_dot} > {}",
                        star.power_derivative
                    ));
                } else if beta_dot >= star.power_derivative - 1e-9 {
                    equal_count += 1;
                    check_optimal_sandwiches(
                        &model, &rule, &rec, &histories, reject_mask, b, c, &mut failures,
                    );
                }
            }
        }
        if equal_count == 0 {
            failures.push(format!("b={b} c={c}: no test attained the optimum"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 300 {
        failures.push(format!("runtime {elapsed:?} exceeds 5 min"));
    }
    conclude(8, failures);
}

/// The stopping sandwich (stop where stopping is strictly better, continue
/// where continuing is) and the decision sandwich (reject strictly above
/// the threshold, accept strictly below).
#[allow(clippy::too_many_arguments)]
fn check_optimal_sandwiches(
    model: &ObservationModel,
    rule: &ExplicitRule,
    rec: &RecursionOutput,
    histories: &[StoppedHistory],
    reject_mask: usize,
    b: f64,
    c: f64,
    failures: &mut Vec<String>,
) {
    if !sandwich_satisfied(model, rule, rec, b, c, 1e-12) {
        failures.push(format!("b={b} c={c}: optimal test violates the stopping sandwich"));
    }
    for (i, h) in histories.iter().enumerate() {
        let rejected = reject_mask >> i & 1 == 1;
        if rejected && h.z < b - 1e-12 {
            failures.push(format!("b={b} c={c}: optimal test rejects at z = {} < b", h.z));
        }
        if !rejected && h.z > b + 1e-12 {
            failures.push(format!("b={b} c={c}: optimal test accepts at z = {} > b", h.z));
        }
    }
}

fn interval_gap(a: StageInterval, b: StageInterval) -> f64 {
    match (a, b) {
        (StageInterval::Empty, StageInterval::Empty) => 0.0,
        (StageInterval::Interval { a: a1, b: b1 }, StageInterval::Interval { a: a2, b: b2 }) => {
            (a1 - a2).abs().max((b1 - b2).abs())
        }
        _ => f64::INFINITY,
    }
}

/// Criterion 9: boundary structure follows the model structure: constant
/// for iid, period-2 for the periodic fixture, constant from stage 2 (but
/// distinct at stage 1) for the finitely non-stationary fixture.
#[test]
fn criterion_09_structural_shapes() {
    let mut failures = Vec::new();
    let mut opts = PipelineOpts::untruncated();
    opts.sim.reps = 1000;
    opts.sup_norm_tol = Some(1e-12);

    let iid = characterize_design(&fixtures::two_point(), 0.2, 0.05, &opts).unwrap();
    let stages: Vec<StageInterval> =
        (1..=6).map(|n| iid.design.regions.interval_at(n).unwrap()).collect();
    let spread = stages[1..]
        .iter()
        .map(|&iv| interval_gap(stages[0], iv))
        .fold(0.0, f64::max);
    if spread > 1e-9 {
        failures.push(format!("iid boundaries vary across stages by {spread:e}"));
    }

    let periodic = characterize_design(&fixtures::periodic_two_stage(), 0.2, 0.05, &opts).unwrap();
    let r = &periodic.design.regions;
    for n in 1..=4 {
        let gap = interval_gap(r.interval_at(n).unwrap(), r.interval_at(n + 2).unwrap());
        if gap > 1e-9 {
            failures.push(format!("periodic boundaries not period-2 at stage {n}: gap {gap:e}"));
        }
    }
    if interval_gap(r.interval_at(1).unwrap(), r.interval_at(2).unwrap()) < 1e-6 {
        failures.push("periodic stages 1 and 2 indistinguishable; fixture too weak".into());
    }

    let fns = characterize_design(&fixtures::fns_three_stage(), 0.2, 0.05, &opts).unwrap();
    let r = &fns.design.regions;
    for n in 2..=6 {
        let gap = interval_gap(r.interval_at(2).unwrap(), r.interval_at(n).unwrap());
        if gap > 1e-9 {
            failures.push(format!("fns boundaries not constant from stage 2 at {n}: gap {gap:e}"));
        }
    }
    if interval_gap(r.interval_at(1).unwrap(), r.interval_at(2).unwrap()) < 1e-6 {
        failures.push("fns stage 1 boundary should differ from the tail".into());
    }
    conclude(9, failures);
}

/// Criterion 10: every CLI command is byte-identical across reruns with the
/// same config and seed, including under different worker counts.
#[test]
fn criterion_10_cli_determinism() {
    let mut failures = Vec::new();
    let exe = env!("CARGO_BIN_EXE_lmpseq");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/bernoulli_truncated.toml");
    let run = |cmd: &str, threads: &str| -> HashMap<String, Vec<u8>> {
        let dir = tempfile::tempdir().unwrap();
        let status = std::process::Command::new(exe)
            .args([cmd, "--config", config, "--out"])
            .arg(dir.path())
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(status.status.success(), "{cmd}: {}", String::from_utf8_lossy(&status.stderr));
        std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                )
            })
            .collect()
    };
    for cmd in ["design", "simulate", "verify", "oracle", "export"] {
        let first = run(cmd, "2");
        let again = run(cmd, "2");
        let serial = run(cmd, "1");
        if first.is_empty() {
            failures.push(format!("{cmd}: produced no artifacts"));
        }
        for (variant, other) in [("rerun", &again), ("single-threaded", &serial)] {
            if first.len() != other.len() {
                failures.push(format!("{cmd}: {variant} produced a different file set"));
                continue;
            }
            for (name, bytes) in &first {
                if other.get(name) != Some(bytes) {
                    failures.push(format!("{cmd}: {name} differs on {variant}"));
                }
            }
        }
    }
    conclude(10, failures);
}
