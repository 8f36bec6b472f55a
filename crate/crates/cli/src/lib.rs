//! `pinn-lab`: runs the experiments, reference solvers and checks, and
//! lays results out as `out/<exp>/<timestamp>/`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pinn_core::field::{l2_field_error, FieldMeta, Grid1, SolutionField};
use pinn_core::problems::{make_burgers, make_hamilton_jacobi, make_heat, make_transport, sample_collocation, InitialCondition, ProblemKind, Sampler};
use pinn_core::solvers::burgers::SpectralConfig;
use pinn_core::solvers::heat::solve_heat_kernel;
use pinn_core::solvers::hj::hj_family;
use pinn_core::solvers::transport::solve_transport_exact;
use pinn_core::training::{train_with, TrainTarget};
use pinn_experiments::exp_e::{self, EConfig};
use pinn_experiments::plot::heatmap;
use pinn_experiments::render::emit_plots;
use pinn_experiments::{gradcheck, refcheck, run_experiment, Artifacts, ExperimentError, ExperimentId, ExperimentReport, Outcome, ReferenceCache};

pub mod config;

use config::LabConfig;

const SCHEMA_HINT: &str = "run `pinn-lab config --defaults` for every key and its default";

#[derive(Parser, Debug)]
#[command(name = "pinn-lab", version, about = "Experiments on failure modes of physics-informed neural networks")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Output root; results go to <out>/<exp>/<timestamp>/.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reference-solution cache directory.
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Worker threads for parallel cells.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Master seed applied to every experiment.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    pub no_plots: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one experiment (A, B, C, D1, D2, E) or all of them.
    Exp {
        id: Option<String>,
        /// Precision bits for D2, comma separated.
        #[arg(long, value_delimiter = ',')]
        ps: Option<Vec<u32>>,
        /// Grid spacings for D2, comma separated.
        #[arg(long, value_delimiter = ',')]
        dxs: Option<Vec<f64>>,
    },
    /// Compute and store a reference solution.
    SolveRef { problem: String },
    /// Train a PINN on a problem with the `[train]` settings.
    Train { problem: String },
    /// Compare tape gradients with finite differences.
    Gradcheck,
    /// Self-check the reference solvers.
    Refcheck,
    /// Re-render plots from a stored report directory.
    Report { dir: PathBuf },
    /// Print the effective configuration as TOML.
    Config {
        /// Ignore the file and flags and print the defaults.
        #[arg(long)]
        defaults: bool,
    },
}

/// Exit status for a set of outcomes: 0 when all pass, 2 when something is
/// inconclusive and nothing failed, 1 otherwise.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if outcomes.contains(&Outcome::Fail) {
        1
    } else if outcomes.contains(&Outcome::Inconclusive) {
        2
    } else {
        0
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, S>(argv: I, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: invalid configuration: {e}\n{SCHEMA_HINT}");
            return 1;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli, &cfg, stdout)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn effective_config(cli: &Cli) -> Result<LabConfig, config::ConfigError> {
    let mut cfg = match (&cli.config, &cli.command) {
        (_, Command::Config { defaults: true }) => return Ok(LabConfig::default()),
        (Some(p), _) => LabConfig::load(p)?,
        (None, _) => LabConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(c) = &cli.cache {
        cfg.cache_dir = c.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cli.no_plots {
        cfg.plots = false;
    }
    if let Some(s) = cli.seed.or(cfg.seed) {
        cfg.apply_seed(s);
    }
    if let Command::Exp { id, ps, dxs } = &cli.command {
        if id.is_some() {
            cfg.experiment = id.clone();
        }
        if let Some(ps) = ps {
            cfg.experiments.d2.ps = ps.clone();
        }
        if let Some(dxs) = dxs {
            cfg.experiments.d2.dxs = dxs.clone();
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A fresh `<root>/<name>/<UTC timestamp>` directory.
pub fn run_dir(root: &Path, name: &str) -> Result<PathBuf, ExperimentError> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string();
    let base = root.join(name);
    let mut dir = base.join(&stamp);
    let mut k = 1;
    while dir.exists() {
        dir = base.join(format!("{stamp}-{k}"));
        k += 1;
    }
    fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
    Ok(dir)
}

fn artifacts(cfg: &LabConfig, dir: &Path) -> Artifacts {
    let a = Artifacts::to_dir(dir);
    if cfg.plots {
        a
    } else {
        a.without_plots()
    }
}

fn finish(rep: &ExperimentReport, dir: &Path, out: &mut dyn Write) -> Outcome {
    let _ = writeln!(out, "{}", rep.summary());
    let _ = writeln!(out, "results in {}", dir.display());
    rep.outcome()
}

fn dispatch(cli: &Cli, cfg: &LabConfig, out: &mut (dyn Write + Send)) -> Result<i32, ExperimentError> {
    let cache = ReferenceCache::at(&cfg.cache_dir);
    match &cli.command {
        Command::Config { .. } => {
            let _ = write!(out, "{}", cfg.to_toml());
            Ok(0)
        }
        Command::Exp { .. } => {
            let which = cfg.experiment.as_deref().unwrap_or("all");
            let ids: Vec<ExperimentId> =
                if which.eq_ignore_ascii_case("all") { ExperimentId::ALL.to_vec() } else { vec![which.parse()?] };
            let mut outcomes = Vec::new();
            for id in ids {
                let dir = run_dir(&cfg.out_dir, id.name())?;
                let rep = run_experiment(id, &cfg.experiments, &cache, &artifacts(cfg, &dir))?;
                outcomes.push(finish(&rep, &dir, out));
            }
            Ok(exit_code(&outcomes))
        }
        Command::Gradcheck => {
            let (rep, summary) = gradcheck::run(&cfg.gradcheck)?;
            for s in &summary {
                let _ = writeln!(
                    out,
                    "{:<8} configs {:>4}  redrawn {:>4}  max relative deviation {:.3e}",
                    s.activation.name(),
                    s.configs,
                    s.redrawn,
                    s.max_deviation
                );
            }
            let worst = summary.iter().map(|s| s.max_deviation).fold(0.0, f64::max);
            let _ = writeln!(out, "max relative deviation {worst:.3e} (tolerance {:.0e})", cfg.gradcheck.tolerance);
            let dir = run_dir(&cfg.out_dir, "gradcheck")?;
            artifacts(cfg, &dir).report(&rep)?;
            Ok(exit_code(&[rep.outcome()]))
        }
        Command::Refcheck => {
            let rep = refcheck::run(&cfg.refcheck, &cache)?;
            let dir = run_dir(&cfg.out_dir, "refcheck")?;
            artifacts(cfg, &dir).report(&rep)?;
            Ok(exit_code(&[finish(&rep, &dir, out)]))
        }
        Command::Report { dir } => {
            let path = dir.join("report.json");
            let rep = ExperimentReport::load(&path).map_err(|e| ExperimentError::io(&path, e))?;
            let r = emit_plots(&rep, dir)?;
            for s in &r.skipped {
                let _ = writeln!(out, "warning: skipped {s}");
            }
            let _ = writeln!(out, "{}", rep.summary());
            let _ = writeln!(out, "wrote {} plot(s)", r.written.len());
            Ok(0)
        }
        Command::SolveRef { problem } => {
            let kind: ProblemKind = problem.parse()?;
            let dir = run_dir(&cfg.out_dir, &format!("solve-ref-{}", kind.name()))?;
            let field = reference_field(kind, cfg, &cache)?;
            let a = artifacts(cfg, &dir);
            a.field("field.bin", &field)?;
            let mut csv = Vec::new();
            field.write_csv(&mut csv)?;
            a.text("field.csv", &String::from_utf8_lossy(&csv))?;
            a.svg("field", || heatmap(&field, kind.name(), 200))?;
            let _ = writeln!(out, "{} reference on {}x{} grid, max |u| = {:.6}", kind, field.x.n, field.t.n, field.max_abs());
            let _ = writeln!(out, "results in {}", dir.display());
            Ok(0)
        }
        Command::Train { problem } => train_problem(problem, cfg, &cache, out),
    }
}

fn reference_field(kind: ProblemKind, cfg: &LabConfig, cache: &ReferenceCache) -> Result<SolutionField<f64>, ExperimentError> {
    let p = &cfg.problem;
    let gx = Grid1::new(-1.0, 1.0, p.nx)?;
    let gt = Grid1::new(0.0, 1.0, p.nt)?;
    Ok(match kind {
        ProblemKind::Transport => solve_transport_exact(p.transport_b, p.transport_c, &InitialCondition::half_sine(), gx, gt)?,
        ProblemKind::HamiltonJacobi => hj_family(0.0, gx, gt)?,
        ProblemKind::Heat => solve_heat_kernel(&heat_ic(), gx, gt, &Default::default())?,
        ProblemKind::Burgers => {
            let e = EConfig {
                reference: SpectralConfig { mu: p.burgers_mu, nu: p.burgers_nu, ..SpectralConfig::default() },
                ref_dx: gx.spacing(),
                ref_dt: gt.spacing(),
                ..EConfig::default()
            };
            exp_e::reference(&e, cache)?.field
        }
    })
}

fn heat_ic() -> InitialCondition<f64> {
    InitialCondition::Bump { center: 0.0, radius: 1.0, height: 1.0 }
}

fn train_problem(problem: &str, cfg: &LabConfig, cache: &ReferenceCache, out: &mut dyn Write) -> Result<i32, ExperimentError> {
    let kind: ProblemKind = problem.parse()?;
    let p = &cfg.problem;
    let prob = match kind {
        ProblemKind::Transport => make_transport(p.transport_b, p.transport_c, InitialCondition::half_sine()),
        ProblemKind::HamiltonJacobi => make_hamilton_jacobi(),
        ProblemKind::Heat => make_heat(heat_ic()),
        ProblemKind::Burgers => make_burgers(p.burgers_mu, p.burgers_nu)?,
    };
    let t = &cfg.train;
    let colloc = sample_collocation(
        &prob.domain,
        Sampler::Uniform { interior: t.interior, initial: t.initial, seed: t.colloc_seed },
    )?;
    let dir = run_dir(&cfg.out_dir, &format!("train-{}", kind.name()))?;
    let a = artifacts(cfg, &dir);
    let mut checkpoint_err = None;
    let outcome = train_with(&t.net.build()?, TrainTarget::pinn(&prob, &colloc), &t.config, &mut |step, params| {
        let body = pinn_core::checkpoint::Checkpoint::from_params(params).to_json();
        if let Err(e) = a.text(&format!("checkpoints/step_{step:08}.json"), &body) {
            checkpoint_err.get_or_insert(e);
        }
    });
    if let Some(e) = checkpoint_err {
        return Err(e);
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            if let Some(log) = e.log() {
                a.text("train_log.csv", &log.to_csv_string())?;
            }
            return Err(e.into());
        }
    };
    a.text("train_log.csv", &outcome.log.to_csv_string())?;
    a.text("checkpoint.json", &pinn_core::checkpoint::Checkpoint::from_params(&outcome.params).to_json())?;

    let mut rep = ExperimentReport::new(format!("train-{}", kind.name()), cfg, t.config.seed);
    rep.metric("steps_run", outcome.steps_run as f64);
    if let Some(last) = outcome.log.last() {
        rep.metric("loss_total", last.loss_total);
        rep.metric("loss_res", last.loss_res);
        rep.metric("loss_ic", last.loss_ic);
    }
    rep.series("loss", outcome.log.rows.iter().map(|r| r.loss_total).collect());
    let reference = reference_field(kind, cfg, cache)?;
    let learned = exp_e::net_field(&outcome.params, &reference, "pinn")?;
    let zero = SolutionField::from_fn(reference.x, reference.t, FieldMeta::new("zero"), |_, _| 0.0)?;
    let err = l2_field_error(&learned, &reference)?;
    rep.metric("l2_error", err);
    rep.metric("reference_l2_norm", l2_field_error(&reference, &zero)?);
    a.field("prediction.bin", &learned)?;
    a.svg("prediction", || heatmap(&learned, &format!("PINN, {kind}"), 200))?;
    a.report(&rep)?;
    let _ = writeln!(out, "{}", rep.summary());
    for (k, v) in &rep.metrics {
        let _ = writeln!(out, "  {k} = {v:.6e}");
    }
    let _ = writeln!(out, "results in {}", dir.display());
    Ok(0)
}
