//! Config-driven command line for designing, simulating and verifying
//! locally most powerful sequential tests.
//!
//! Subcommands: `design` (value functions + boundaries), `simulate`
//! (operating characteristics), `verify` (identity/inequality battery),
//! `oracle` (brute-force optimality certificate), `export` (value-grid
//! dump).  Exit codes: 0 ok, 1 validation error, 2 check failure, 3 budget
//! exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lmpseq::checks::run_battery;
use lmpseq::config::RunConfig;
use lmpseq::engine::{characterize_design, PipelineOpts, Provenance, SimulateOpts};
use lmpseq::error::Error;
use lmpseq::oracle::certify;
use lmpseq::recursion::Horizon;
use lmpseq::report;

#[derive(Parser)]
#[command(name = "lmpseq", version, about = "Locally most powerful sequential tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute value functions and continuation boundaries.
    Design(Common),
    /// Evaluate operating characteristics (Monte Carlo, plus exact where
    /// possible).
    Simulate(Common),
    /// Run the identity and inequality battery.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also cross-check a previously written boundaries CSV.
        #[arg(long)]
        boundaries: Option<PathBuf>,
    },
    /// Brute-force optimality certificate on a discrete model.
    Oracle(Common),
    /// Dump the value grids.
    Export(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(c) => run(c, cmd_design),
        Command::Simulate(c) => run(c, cmd_simulate),
        Command::Verify { common, boundaries } => {
            run(common, |ctx| cmd_verify(ctx, boundaries.as_deref()))
        }
        Command::Oracle(c) => run(c, cmd_oracle),
        Command::Export(c) => run(c, cmd_export),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err.downcast_ref::<Error>() {
                Some(Error::BudgetExceeded(_)) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

struct Ctx {
    config: RunConfig,
    seed: u64,
    out: PathBuf,
    head: String,
}

impl Ctx {
    fn write(&self, name: &str, body: &str) -> anyhow::Result<()> {
        let path = self.out.join(name);
        fs::write(&path, body)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn pipeline_opts(&self) -> PipelineOpts {
        let d = &self.config.design;
        let e = &self.config.evaluation;
        let mut opts = match d.horizon {
            Some(n) => PipelineOpts::truncated(n),
            None => PipelineOpts::untruncated(),
        };
        opts.grid = self.config.grid().unwrap_or(None);
        opts.thetas = e.thetas.clone();
        opts.budget = e.budget;
        opts.sup_norm_tol = d.sup_norm_tol;
        opts.max_sweeps = d.max_sweeps;
        opts.sim = SimulateOpts {
            reps: e.reps,
            seed: self.seed,
            thetas: e.thetas.clone(),
            cap: e.cap,
            record_trace: e.reps <= 1000,
            ..SimulateOpts::default()
        };
        opts
    }
}

fn run(
    common: &Common,
    body: impl FnOnce(&Ctx) -> anyhow::Result<ExitCode>,
) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&common.config)?;
    let config = RunConfig::from_toml(&text)?;
    let seed = common.seed.unwrap_or(config.evaluation.seed);
    let out = common
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out)?;
    let head = report::header(&config.hash(), seed);
    body(&Ctx { config, seed, out, head })
}

fn cmd_design(ctx: &Ctx) -> anyhow::Result<ExitCode> {
    let model = ctx.config.build_model()?;
    let mut opts = ctx.pipeline_opts();
    // Boundary construction needs no characteristics; keep evaluation cheap.
    opts.thetas.clear();
    opts.sim.reps = 1;
    opts.sim.record_trace = false;
    let report_out = characterize_design(&model, ctx.config.design.b, ctx.config.design.c, &opts)?;
    ctx.write("boundaries.csv", &report::boundaries_csv(&report_out.design.regions, &ctx.head))?;
    ctx.write(
        "value_functions.csv",
        &report::value_functions_csv(&report_out.recursion, &ctx.head),
    )?;
    println!("model: {}", model.describe());
    println!(
        "design: b={} c={} horizon={:?}",
        ctx.config.design.b, ctx.config.design.c, ctx.config.design.horizon
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(ctx: &Ctx) -> anyhow::Result<ExitCode> {
    let model = ctx.config.build_model()?;
    let mut opts = ctx.pipeline_opts();

    // Monte Carlo pass.
    opts.force_mc = true;
    let mc = characterize_design(&model, ctx.config.design.b, ctx.config.design.c, &opts)?;
    let mut body = report::characteristics_csv(&mc.characteristics, &ctx.head);

    // Exact pass alongside, where the model admits one.
    if model.is_discrete() && matches!(opts.horizon, Horizon::Truncated(_)) {
        opts.force_mc = false;
        let exact = characterize_design(&model, ctx.config.design.b, ctx.config.design.c, &opts)?;
        debug_assert!(matches!(exact.characteristics.provenance, Provenance::Exact));
        body.push_str(&report::characteristics_csv(&exact.characteristics, ""));
    }
    ctx.write("characteristics.csv", &body)?;
    if let Some(trace) = &mc.trace {
        ctx.write("trace.csv", &report::trace_csv(trace, &ctx.head))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(ctx: &Ctx, boundaries: Option<&Path>) -> anyhow::Result<ExitCode> {
    let model = ctx.config.build_model()?;
    let mut opts = ctx.pipeline_opts();
    opts.force_mc = false;
    if !model.is_discrete() || !matches!(opts.horizon, Horizon::Truncated(_)) {
        anyhow::bail!("verify requires a discrete model with a truncated horizon");
    }
    let pipeline = characterize_design(&model, ctx.config.design.b, ctx.config.design.c, &opts)?;
    let mut reports = run_battery(
        &model,
        &pipeline.design,
        &ctx.config.evaluation.thetas,
        ctx.config.evaluation.budget,
    )?;
    if let Some(path) = boundaries {
        reports.push(boundary_file_check(&pipeline.design.regions, path)?);
    }
    let all_pass = reports.iter().all(|r| r.pass);
    ctx.write("checks.csv", &report::checks_csv(&reports, &ctx.head))?;
    for r in &reports {
        println!(
            "{}: {} [{}] {} {} {}",
            if r.pass { "pass" } else { "FAIL" },
            r.name,
            r.instance,
            r.lhs,
            r.relation.symbol(),
            r.rhs
        );
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

/// Compares a previously exported boundaries CSV against the recomputed
/// regions; any drift is reported as a failed check.
fn boundary_file_check(
    regions: &lmpseq::boundary::ContinuationRegions,
    path: &Path,
) -> anyhow::Result<lmpseq::checks::CheckReport> {
    use lmpseq::boundary::StageInterval;
    use lmpseq::checks::{CheckReport, Relation};

    let text = fs::read_to_string(path)?;
    let mut max_drift: f64 = 0.0;
    let mut rows = 0usize;
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("stage,") || line.is_empty() {
            continue;
        }
        rows += 1;
        let fields: Vec<&str> = line.split(',').collect();
        let drift = (|| -> Option<f64> {
            let stage: usize = fields.first()?.parse().ok()?;
            let found = regions
                .per_stage
                .iter()
                .find(|s| s.stage == stage)?
                .interval;
            match (fields.get(1)?, fields.get(2)?, found) {
                (&"EMPTY", &"EMPTY", StageInterval::Empty) => Some(0.0),
                (a_txt, b_txt, StageInterval::Interval { a, b }) => {
                    let fa: f64 = a_txt.parse().ok()?;
                    let fb: f64 = b_txt.parse().ok()?;
                    Some((fa - a).abs().max((fb - b).abs()))
                }
                _ => None,
            }
        })()
        .unwrap_or(f64::INFINITY);
        max_drift = max_drift.max(drift);
    }
    if rows != regions.per_stage.len() {
        max_drift = f64::INFINITY;
    }
    Ok(CheckReport {
        name: "boundary_file_agreement".into(),
        instance: path.display().to_string(),
        lhs: max_drift,
        rhs: 1e-9,
        relation: Relation::Le,
        slack: 1e-9 - max_drift,
        pass: max_drift <= 1e-9,
        provenance: "exact",
    })
}

fn cmd_oracle(ctx: &Ctx) -> anyhow::Result<ExitCode> {
    let model = ctx.config.build_model()?;
    let horizon = ctx
        .config
        .design
        .horizon
        .ok_or_else(|| anyhow::anyhow!("oracle requires design.horizon"))?;
    let grid = ctx
        .config
        .grid()?
        .unwrap_or_else(|| lmpseq::grid::GridSpec::default_for(&model, ctx.config.design.b, ctx.config.design.c, Some(horizon)));
    let cert = certify(
        &model,
        horizon,
        ctx.config.design.b,
        ctx.config.design.c,
        grid,
        ctx.config.evaluation.budget,
    )?;
    let ok = cert.max_delta <= 1e-9 && cert.argmin_sandwich_ok;
    ctx.write(
        "certificate.csv",
        &report::certificate_csv(&cert, &ctx.config.hash(), &ctx.head),
    )?;
    println!(
        "dp_min={} enum_min={:?} recursion_value={} max_delta={}",
        cert.dp_min, cert.enum_min, cert.recursion_value, cert.max_delta
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_export(ctx: &Ctx) -> anyhow::Result<ExitCode> {
    let model = ctx.config.build_model()?;
    let mut opts = ctx.pipeline_opts();
    opts.thetas.clear();
    opts.sim.reps = 1;
    opts.sim.record_trace = false;
    let pipeline = characterize_design(&model, ctx.config.design.b, ctx.config.design.c, &opts)?;
    ctx.write(
        "value_functions.csv",
        &report::value_functions_csv(&pipeline.recursion, &ctx.head),
    )?;
    Ok(ExitCode::SUCCESS)
}
