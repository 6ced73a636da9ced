//! The `simulate`, `restore` and `validate` commands as library calls.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use stoprox_core::degradation::{
    nominal_blur_response, DegradationConfig, DegradationModel, ObservationSource, ReplayStream,
};
use stoprox_core::diagnostics::{snr, trace_residual_curve};
use stoprox_core::image::synthetic_scene;
use stoprox_core::linops::{estimate_norm_squared, DiscreteGradient, NORM_SAFETY_FACTOR};
use stoprox_core::oracles::{EmpiricalGradientOracle, ExactMaskGradient, GradientOracle};
use stoprox_core::prox::{BoxConstraint, GroupShrinkSpec, ProxPerturbation};
use stoprox_core::schedules::{
    validate_online_schedules, validate_pd_stepsizes, BatchSchedule, PdStepsizeConfig, PowerLawSchedule,
};
use stoprox_core::solvers::{
    kkt_residual, pd_solve, DualBlock, PdOperators, PdOutcome, PdProblem, SolveFailure, SolveOptions,
    StoppingRule, Trace,
};
use stoprox_core::Image;

use crate::config::{ImageSource, RunConfig};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::pgm::{read_pgm, write_pgm};
use crate::spf1::write_spf1;
use crate::trace_csv::{curve_to_csv, trace_to_csv};

pub const PREVIEWS: usize = 2;

/// Ground truth and the matching observation model. Image dimensions
/// override `width`/`height` when a PGM is given.
pub fn load_scene(cfg: &RunConfig) -> Result<(Image, DegradationConfig)> {
    let truth = match &cfg.image {
        ImageSource::Synthetic => synthetic_scene(cfg.width, cfg.height),
        ImageSource::Pgm(path) => read_pgm(path)?,
    };
    let dcfg = DegradationConfig { width: truth.width, height: truth.height, ..cfg.degradation() };
    dcfg.validate()?;
    Ok((truth, dcfg))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preview {
    pub index: usize,
    pub path: Option<PathBuf>,
    /// Computed on the unclamped observation.
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub manifest: PathBuf,
    pub count: usize,
    pub previews: Vec<Preview>,
}

/// SNRs of the first `PREVIEWS` observations of the stream.
pub fn preview_snrs(model: &impl ObservationSource, truth: &Image, count: usize) -> Result<Vec<f64>> {
    (0..count.min(PREVIEWS))
        .map(|n| {
            let (_, z) = model.observation(n)?;
            Ok(snr(&truth.data, &z)?.snr_db)
        })
        .collect()
}

/// Writes `manifest.txt` with `count` records and PGM previews of the first
/// degraded images.
pub fn simulate(cfg: &RunConfig, count: usize, out: &Path) -> Result<SimulateReport> {
    let (truth, dcfg) = load_scene(cfg)?;
    create_dir(out)?;
    let manifest = Manifest::generate(dcfg, count);
    let manifest_path = out.join("manifest.txt");
    manifest.write(&manifest_path)?;

    let model = DegradationModel::new(dcfg, truth.clone())?;
    let mut previews = Vec::new();
    for record in manifest.records.iter().take(PREVIEWS) {
        let (_, z) = model.observe(record);
        let snr_db = snr(&truth.data, &z)?.snr_db;
        let path = out.join(format!("degraded_{}.pgm", record.index));
        write_pgm(&path, &Image::new(dcfg.width, dcfg.height, z)?)?;
        previews.push(Preview { index: record.index, path: Some(path), snr_db });
    }
    Ok(SimulateReport { manifest: manifest_path, count, previews })
}

/// Step sizes for the restoration, with the quantities they derive from.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes {
    /// Lipschitz constant of `∇h`, `keepProb · max|b|²`.
    pub lipschitz: f64,
    /// Power-iteration estimate of `‖∇‖²`, before the safety factor.
    pub norm_estimate: f64,
    pub sigma: f64,
    pub rho: f64,
    pub config: PdStepsizeConfig,
}

pub fn resolve_stepsizes(cfg: &RunConfig, dcfg: &DegradationConfig) -> Result<StepSizes> {
    let lipschitz = dcfg.keep_prob * nominal_blur_response(dcfg).max_gain_squared();
    let mu = if lipschitz > 0.0 { 1.0 / lipschitz } else { f64::INFINITY };
    let grad = DiscreteGradient::new(dcfg.width, dcfg.height);
    let norm_estimate = estimate_norm_squared(&grad, cfg.power_iterations, dcfg.master_seed)?;
    let norm_squared = NORM_SAFETY_FACTOR * norm_estimate;
    let sigma = cfg.sigma.unwrap_or(cfg.theta / norm_squared);
    let rho = cfg.rho.unwrap_or(0.9 / (sigma * norm_squared + lipschitz / 2.0));
    let config = PdStepsizeConfig { rho, sigmas: vec![sigma], operator_norm_squares: vec![norm_squared], mu };
    Ok(StepSizes { lipschitz, norm_estimate, sigma, rho, config })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub delta: f64,
    pub kappa: f64,
    pub online: bool,
    pub lambda_divergent: bool,
    pub steps: StepSizes,
    pub pd: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.online && self.lambda_divergent && self.pd
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "online.delta = {}", self.delta)?;
        writeln!(f, "online.kappa = {}", self.kappa)?;
        writeln!(f, "online.valid = {} (need kappa in ]1 - delta, 1])", self.online)?;
        writeln!(f, "lambda.sum_diverges = {}", self.lambda_divergent)?;
        writeln!(f, "h.lipschitz = {}", self.steps.lipschitz)?;
        writeln!(f, "L.norm_estimate = {}", self.steps.norm_estimate)?;
        writeln!(f, "{}", self.steps.config)?;
        write!(f, "overall = {}", self.passed())
    }
}

fn lambda_schedule(cfg: &RunConfig) -> PowerLawSchedule {
    PowerLawSchedule::saturating(cfg.lambda_exp, cfg.lambda_pivot)
}

pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let dcfg = match &cfg.image {
        ImageSource::Synthetic => cfg.degradation(),
        ImageSource::Pgm(_) => load_scene(cfg)?.1,
    };
    dcfg.validate()?;
    let steps = resolve_stepsizes(cfg, &dcfg)?;
    let delta = BatchSchedule::new(cfg.batch_exp).delta_exponent();
    let kappa = cfg.lambda_exp;
    Ok(ValidationReport {
        delta,
        kappa,
        online: validate_online_schedules(delta, kappa),
        lambda_divergent: !lambda_schedule(cfg).is_summable(),
        pd: validate_pd_stepsizes(&steps.config),
        steps,
    })
}

#[derive(Debug, Clone)]
pub struct RestoreOptions {
    pub force: bool,
    /// Write result files; tests that only need numbers can skip this.
    pub write_outputs: bool,
}

impl Default for RestoreOptions {
    fn default() -> Self {
        Self { force: false, write_outputs: true }
    }
}

#[derive(Debug, Clone)]
pub struct RestoreReport {
    pub steps: StepSizes,
    pub restored: Image,
    pub dual: Vec<Vec<f64>>,
    pub trace: Trace,
    pub residual_curve: Vec<(usize, f64)>,
    pub snr_db: f64,
    pub preview_snrs: Vec<f64>,
    /// KKT residual of the output against the exact gradient.
    pub kkt: f64,
    pub output: PathBuf,
}

impl RestoreReport {
    pub fn best_preview_snr(&self) -> f64 {
        self.preview_snrs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

enum Source {
    Live(DegradationModel),
    Replay(ReplayStream),
}

impl ObservationSource for Source {
    fn available(&self) -> Option<usize> {
        match self {
            Source::Live(m) => m.available(),
            Source::Replay(r) => r.available(),
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Source::Live(m) => m.dims(),
            Source::Replay(r) => r.dims(),
        }
    }

    fn observation(&self, n: usize) -> stoprox_core::Result<(stoprox_core::linops::FrequencyOperator, Vec<f64>)> {
        match self {
            Source::Live(m) => m.observation(n),
            Source::Replay(r) => r.observation(n),
        }
    }
}

fn open_source(cfg: &RunConfig, truth: &Image, dcfg: DegradationConfig) -> Result<Source> {
    let model = DegradationModel::new(dcfg, truth.clone())?;
    let Some(path) = &cfg.manifest else { return Ok(Source::Live(model)) };
    let manifest = Manifest::read(path)?;
    if manifest.config != dcfg {
        return Err(Error::format(path, "manifest degradation settings differ from the run configuration"));
    }
    Ok(Source::Replay(ReplayStream::new(model, manifest.records)))
}

/// Online restoration with box constraint, isotropic TV and the growing
/// mini-batch gradient.
pub fn restore(cfg: &RunConfig, opts: &RestoreOptions) -> Result<RestoreReport> {
    let (truth, dcfg) = load_scene(cfg)?;
    let steps = resolve_stepsizes(cfg, &dcfg)?;
    let source = open_source(cfg, &truth, dcfg)?;
    let preview_snrs = preview_snrs(&source, &truth, source.available().unwrap_or(PREVIEWS))?;

    let boxc = BoxConstraint::new(cfg.box_lo, cfg.box_hi)?;
    let tv = GroupShrinkSpec::isotropic_tv(cfg.tv_weight);
    let grad_op = DiscreteGradient::new(dcfg.width, dcfg.height);
    let ops = PdOperators {
        prox_f: &boxc,
        blocks: vec![DualBlock {
            prox_g: &tv,
            op: &grad_op,
            sigma: steps.sigma,
            norm_squared: steps.config.operator_norm_squares[0],
            error: None,
        }],
        rho: steps.rho,
    };

    let (_, z0) = source.observation(0)?;
    let mut x0 = z0;
    boxc.project(&mut x0);
    let v0 = vec![vec![0.0; 2 * dcfg.pixels()]];

    let mut oracle = EmpiricalGradientOracle::new(source, BatchSchedule::new(cfg.batch_exp), cfg.oracle);
    let mut problem = PdProblem {
        ops,
        perturbation: ProxPerturbation::off(),
        gradient: &mut oracle,
        lambda: lambda_schedule(cfg),
        mu: steps.config.mu,
        primal_error: None,
    };
    let started = Instant::now();
    let clock = move || started.elapsed().as_secs_f64() * 1e3;
    let solve_opts = SolveOptions {
        stop: StoppingRule { max_iterations: cfg.max_iterations, rel_tol: cfg.rel_tol, patience: 10 },
        stride: cfg.checkpoint_stride,
        truth: Some(&truth.data),
        clock: if cfg.wall_clock { Some(&clock) } else { None },
        force: opts.force,
    };

    let out = &cfg.output;
    let result = pd_solve(&mut problem, x0, v0, &solve_opts);
    let PdOutcome { x, v, trace } = match result {
        Ok(o) => o,
        Err(failure) => {
            if opts.write_outputs && !failure.trace.rows.is_empty() {
                write_partial(cfg, &dcfg, &failure)?;
            }
            return Err(failure.into());
        }
    };

    let ops = problem.ops;
    let mut exact = ExactMaskGradient::new(&dcfg, &truth.data)?;
    let kkt = kkt_residual(&ops, &mut exact as &mut dyn GradientOracle, &x, &v)?;
    let residual_curve = trace_residual_curve(&trace, &x)?;
    let restored = Image::new(dcfg.width, dcfg.height, x)?;
    let snr_db = snr(&truth.data, &restored.data)?.snr_db;

    let report = RestoreReport {
        steps,
        restored,
        dual: v,
        trace,
        residual_curve,
        snr_db,
        preview_snrs,
        kkt,
        output: out.clone(),
    };
    if opts.write_outputs {
        write_outputs(cfg, &report)?;
    }
    Ok(report)
}

fn resolved(cfg: &RunConfig, steps: &StepSizes) -> RunConfig {
    RunConfig { rho: Some(steps.rho), sigma: Some(steps.sigma), ..cfg.clone() }
}

fn conditions_text(cfg: &RunConfig, steps: &StepSizes, trace: &Trace) -> String {
    let delta = BatchSchedule::new(cfg.batch_exp).delta_exponent();
    let mut s = format!(
        "h.lipschitz = {}\nL.norm_estimate = {}\n{}\nonline.valid = {}\n",
        steps.lipschitz,
        steps.norm_estimate,
        steps.config,
        validate_online_schedules(delta, cfg.lambda_exp)
    );
    if trace.overridden {
        s.push_str("validation overridden\n");
    }
    for w in &trace.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

fn write_outputs(cfg: &RunConfig, report: &RestoreReport) -> Result<()> {
    let out = &cfg.output;
    create_dir(out)?;
    write_pgm(&out.join("restored.pgm"), &report.restored)?;
    write_spf1(&out.join("restored.spf1"), &report.restored)?;
    write_file(&out.join("trace.csv"), trace_to_csv(&report.trace))?;
    write_file(&out.join("residual.csv"), curve_to_csv(&report.residual_curve))?;
    let mut conditions = conditions_text(cfg, &report.steps, &report.trace);
    conditions.push_str(&format!(
        "snr.restored = {}\nsnr.previews = {:?}\nkkt = {}\n",
        report.snr_db, report.preview_snrs, report.kkt
    ));
    write_file(&out.join("conditions.txt"), conditions)?;
    write_file(&out.join("config.resolved.txt"), resolved(cfg, &report.steps).to_text())
}

fn write_partial(cfg: &RunConfig, dcfg: &DegradationConfig, failure: &SolveFailure) -> Result<()> {
    let out = &cfg.output;
    create_dir(out)?;
    write_file(&out.join("trace.csv"), trace_to_csv(&failure.trace))?;
    write_spf1(&out.join("partial.spf1"), &Image::new(dcfg.width, dcfg.height, failure.x.clone())?)?;
    write_file(&out.join("failure.txt"), failure.to_string())
}
