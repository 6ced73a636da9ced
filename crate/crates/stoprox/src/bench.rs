//! Synthetic benchmark problems with known answers.
//!
//! Each suite returns a table of checks. The same problem builders back the
//! acceptance tests.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use stoprox_core::degradation::{DegradationConfig, DegradationModel};
use stoprox_core::image::synthetic_scene;
use stoprox_core::linops::{estimate_norm_squared, DiscreteGradient, FrequencyOperator, LinearOperator};
use stoprox_core::oracles::{CachePolicy, EmpiricalGradientOracle, ExactMaskGradient, GradientOracle};
use stoprox_core::prox::{prox_conjugate, BoxConstraint, GroupBall, GroupShrinkSpec, ProxOperator, ProxPerturbation};
use stoprox_core::schedules::{BatchSchedule, PowerLawSchedule};
use stoprox_core::solvers::{
    fb_solve, kkt_residual, pd_solve, pd_step, DualBlock, FbProblem, PdOperators, PdProblem, PdState, SolveOptions,
    StoppingRule, Trace,
};
use stoprox_core::vector::{dist, dot, norm};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Prox,
    Linops,
    FbQuadratic,
    PdTinyTv,
    OracleStats,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Prox, Suite::Linops, Suite::FbQuadratic, Suite::PdTinyTv, Suite::OracleStats];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prox => "prox",
            Suite::Linops => "linops",
            Suite::FbQuadratic => "fb-quadratic",
            Suite::PdTinyTv => "pd-tiny-tv",
            Suite::OracleStats => "oracle-stats",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
}

impl Check {
    pub fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Self { name, value, relation: Relation::AtMost, bound }
    }

    pub fn at_least(name: &'static str, value: f64, bound: f64) -> Self {
        Self { name, value, relation: Relation::AtLeast, bound }
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.bound,
            Relation::AtLeast => self.value >= self.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite\tcheck\tvalue\trelation\tbound\tstatus")?;
        for c in &self.checks {
            let rel = match c.relation {
                Relation::AtMost => "<=",
                Relation::AtLeast => ">=",
            };
            let status = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(f, "{}\t{}\t{:e}\t{}\t{:e}\t{}", self.suite.name(), c.name, c.value, rel, c.bound, status)?;
        }
        Ok(())
    }
}

pub fn run_suite(suite: Suite) -> Result<BenchReport> {
    let checks = match suite {
        Suite::Prox => vec![
            Check::at_most("moreau_identity_rel_error", moreau_max_error(2000, 1)?, 1e-12),
            Check::at_most("group_shrink_radial_oracle_error", group_shrink_radial_max_error(500, 2)?, 1e-3),
            Check::at_most("nonexpansive_violations", nonexpansive_violations(10_000, 3)? as f64, 0.0),
        ],
        Suite::Linops => vec![
            Check::at_most("adjoint_rel_error", adjoint_max_error(50, 4)?, 1e-10),
            Check::at_least("grad_norm_sq_16x16_lower", gradient_norm_estimate(16, 16, 200, 5)?, 7.0),
            Check::at_most("grad_norm_sq_16x16_upper", gradient_norm_estimate(16, 16, 200, 5)?, 8.0),
            Check::at_least("grad_norm_sq_128x128", gradient_norm_estimate(128, 128, 200, 6)?, 7.9),
            Check::at_most("frequency_norm_error", frequency_norm_error(7)?, 1e-6),
        ],
        Suite::FbQuadratic => {
            let run = QuadraticBox::standard().solve(2000, 0)?;
            vec![Check::at_most("rel_error_vs_clamp", run.rel_error, 1e-3)]
        }
        Suite::PdTinyTv => {
            let tiny = TinyTv::new();
            let reference = tiny.reference(1e-10, 1_000_000)?;
            let stochastic = tiny.stochastic(5000, 0)?;
            vec![
                Check::at_most("reference_kkt", reference.kkt, 1e-6),
                Check::at_most("fixed_point_shift", tiny.fixed_point_shift(&reference.x, &reference.v)?, 1e-6),
                Check::at_most(
                    "stochastic_kkt_ratio",
                    stochastic.final_kkt / stochastic.initial_kkt,
                    1e-2,
                ),
            ]
        }
        Suite::OracleStats => {
            let noiseless = DegradationConfig { noise_sigma: 0.0, ..DegradationConfig::standard(64, 64, 0) };
            let small = DegradationConfig { noise_sigma: 0.0, ..DegradationConfig::standard(16, 16, 0) };
            vec![
                Check::at_most("mc_mean_rel_error_2000", monte_carlo_gradient_error(&noiseless, 2000)?, 0.02),
                Check::at_most("mc_mean_rel_error_20000_16x16", monte_carlo_gradient_error(&small, 20_000)?, 0.02),
                Check::at_least("variance_slope_lower", variance_slope(0, 40)?, -1.15),
                Check::at_most("variance_slope_upper", variance_slope(0, 40)?, -0.85),
            ]
        }
    };
    Ok(BenchReport { suite, checks })
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        })
        .collect()
}

/// Largest relative gap between the Moreau-based conjugate prox and the
/// closed-form conjugate prox: the conjugate of `w‖·‖` (grouped) is the
/// indicator of the `w`-ball, that of the `r`-ball indicator is `r‖·‖`, and
/// that of a box indicator is a piecewise-linear support function.
pub fn moreau_max_error(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let x = gaussian_vec(&mut rng, 16, 3.0);
        let sigma = rng.random_range(0.05..5.0);
        let a = rng.random_range(0.1..3.0);
        let (moreau, closed) = match t % 3 {
            0 => (
                prox_conjugate(&GroupShrinkSpec::isotropic_tv(a), sigma, &x)?,
                GroupBall { group_size: 2, radius: a }.prox(sigma, &x)?,
            ),
            1 => (
                prox_conjugate(&GroupBall { group_size: 2, radius: a }, sigma, &x)?,
                GroupShrinkSpec::isotropic_tv(a).prox(sigma, &x)?,
            ),
            _ => {
                let (lo, hi) = (-a, 2.0 * a);
                let closed = x
                    .iter()
                    .map(|v| {
                        if *v > sigma * hi {
                            v - sigma * hi
                        } else if *v < sigma * lo {
                            v - sigma * lo
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (prox_conjugate(&BoxConstraint::new(lo, hi)?, sigma, &x)?, closed)
            }
        };
        worst = worst.max(dist(&moreau, &closed) / norm(&x).max(1e-300));
    }
    Ok(worst)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iterations: usize) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    for _ in 0..iterations {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    0.5 * (a + b)
}

/// Group shrinkage against the scalar problem
/// `min_{r ≥ 0} γη r + ½ (r − ‖x_g‖)²` solved by golden-section search,
/// per group; largest absolute error.
pub fn group_shrink_radial_max_error(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let weight = rng.random_range(0.0..3.0);
        let gamma = rng.random_range(0.1..2.0);
        let groups = 8;
        let x = gaussian_vec(&mut rng, 2 * groups, 2.0);
        let got = GroupShrinkSpec::isotropic_tv(weight).prox(gamma, &x)?;
        for g in 0..groups {
            let (a, b) = (x[g], x[groups + g]);
            let r = (a * a + b * b).sqrt();
            let t = gamma * weight;
            let r_star = golden_section(|s| t * s + 0.5 * (s - r) * (s - r), 0.0, r.max(1e-12), 200);
            let scale = if r > 0.0 { r_star / r } else { 0.0 };
            worst = worst.max((got[g] - scale * a).abs()).max((got[groups + g] - scale * b).abs());
        }
    }
    Ok(worst)
}

/// Pairs on which `‖Px − Py‖ > ‖x − y‖`.
pub fn nonexpansive_violations(pairs: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tv = GroupShrinkSpec::isotropic_tv(1.1);
    let boxc = BoxConstraint::new(-0.5, 0.5)?;
    let ball = GroupBall { group_size: 2, radius: 0.8 };
    let fns: [&dyn ProxOperator; 3] = [&tv, &boxc, &ball];
    let mut violations = 0;
    for i in 0..pairs {
        let f = fns[i % fns.len()];
        let gamma = rng.random_range(0.01..4.0);
        let x = gaussian_vec(&mut rng, 12, 2.0);
        let y = gaussian_vec(&mut rng, 12, 2.0);
        let (px, py) = (f.prox(gamma, &x)?, f.prox(gamma, &y)?);
        if dist(&px, &py) > dist(&x, &y) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    Ok(violations)
}

fn adjoint_error(op: &dyn LinearOperator, rng: &mut ChaCha8Rng) -> Result<f64> {
    let x = gaussian_vec(rng, op.input_len(), 1.0);
    let y = gaussian_vec(rng, op.output_len(), 1.0);
    let ax = op.apply(&x)?;
    let aty = op.adjoint(&y)?;
    let scale = (norm(&ax) * norm(&y)).max(norm(&x) * norm(&aty)).max(1e-300);
    Ok((dot(&ax, &y) - dot(&x, &aty)).abs() / scale)
}

/// `|⟨Ax, y⟩ − ⟨x, Aᵀy⟩|` relative to `‖Ax‖‖y‖`, over the discrete gradient
/// and sampled blur operators of several shapes.
pub fn adjoint_max_error(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (w, h) = [(16, 16), (7, 5), (1, 9), (12, 30)][t % 4];
        worst = worst.max(adjoint_error(&DiscreteGradient::new(w, h), &mut rng)?);
        if w >= 5 && h >= 5 {
            let cfg = DegradationConfig::standard(w, h, seed + t as u64);
            let model = DegradationModel::new(cfg, synthetic_scene(w, h))?;
            let op = model.operator_for(&model.record(t));
            worst = worst.max(adjoint_error(&op, &mut rng)?);
        }
    }
    Ok(worst)
}

pub fn gradient_norm_estimate(width: usize, height: usize, iterations: usize, seed: u64) -> Result<f64> {
    Ok(estimate_norm_squared(&DiscreteGradient::new(width, height), iterations, seed)?)
}

/// `|power-iteration estimate − max|r|²|` for a sampled blur operator.
pub fn frequency_norm_error(seed: u64) -> Result<f64> {
    let cfg = DegradationConfig::standard(16, 16, seed);
    let model = DegradationModel::new(cfg, synthetic_scene(16, 16))?;
    let op: FrequencyOperator = model.operator_for(&model.record(0));
    let estimate = estimate_norm_squared(&op, 500, seed)?;
    Ok((estimate - op.max_gain_squared()).abs())
}

/// `h(x) = ½ E‖x − z‖²` with `z = c + e`, constrained to a box: the solution
/// is the projection of `c` onto the box. Built on the blur model with
/// `blurSize = keepProb = 1`, so `K_n = I`.
#[derive(Debug, Clone)]
pub struct QuadraticBox {
    pub config: DegradationConfig,
    pub c: Vec<f64>,
    pub boxc: BoxConstraint,
    pub gamma: f64,
    pub lambda: PowerLawSchedule,
    pub batch: BatchSchedule,
}

#[derive(Debug, Clone)]
pub struct QuadraticRun {
    pub x: Vec<f64>,
    pub target: Vec<f64>,
    pub rel_error: f64,
    pub trace: Trace,
}

impl QuadraticBox {
    /// 16×16, noise σ = 5, box `[60, 200]`, `γ = 1`, default relaxation and batch schedules.
    pub fn standard() -> Self {
        let config = DegradationConfig {
            blur_size: 1,
            keep_prob: 1.0,
            ..DegradationConfig::standard(16, 16, 0)
        };
        Self {
            config,
            c: synthetic_scene(16, 16).data,
            boxc: BoxConstraint { lo: 60.0, hi: 200.0 },
            gamma: 1.0,
            lambda: PowerLawSchedule::saturating(0.95, 500.0),
            batch: BatchSchedule::new(1.1),
        }
    }

    pub fn target(&self) -> Vec<f64> {
        let mut t = self.c.clone();
        self.boxc.project(&mut t);
        t
    }

    pub fn solve(&self, iterations: usize, seed: u64) -> Result<QuadraticRun> {
        let cfg = DegradationConfig { master_seed: seed, ..self.config };
        let truth = stoprox_core::Image::new(cfg.width, cfg.height, self.c.clone())?;
        let model = DegradationModel::new(cfg, truth)?;
        let mut oracle = EmpiricalGradientOracle::new(model, self.batch, CachePolicy::Incremental);
        self.run(&mut oracle, iterations, 1)
    }

    /// The same problem with the exact gradient `x − c`.
    pub fn solve_exact(&self, iterations: usize) -> Result<QuadraticRun> {
        let c = self.c.clone();
        let mut oracle = stoprox_core::oracles::ExactGradient(move |x: &[f64], out: &mut [f64]| {
            for ((o, xi), ci) in out.iter_mut().zip(x).zip(&c) {
                *o = xi - ci;
            }
        });
        self.run(&mut oracle, iterations, 1)
    }

    fn run(&self, oracle: &mut dyn GradientOracle, iterations: usize, stride: usize) -> Result<QuadraticRun> {
        let mut problem = FbProblem {
            prox_f: &self.boxc,
            perturbation: ProxPerturbation::off(),
            gradient: oracle,
            vartheta: 1.0,
            gamma: PowerLawSchedule::constant(self.gamma),
            lambda: self.lambda,
            tau: PowerLawSchedule::zero(),
            prox_error: None,
        };
        let opts = SolveOptions { stop: StoppingRule::iterations(iterations), stride, ..SolveOptions::default() };
        let out = fb_solve(&mut problem, vec![self.boxc.lo; self.c.len()], &opts)?;
        let target = self.target();
        let rel_error = dist(&out.x, &target) / norm(&target);
        Ok(QuadraticRun { x: out.x, target, rel_error, trace: out.trace })
    }
}

/// 8×8 restoration with box constraint and isotropic TV under the random
/// Fourier-subsampling model with no blur (`blurSize = 1`, `keepProb = 0.3`),
/// for which `∇h = 0.3 (x − x̄)`.
#[derive(Debug, Clone)]
pub struct TinyTv {
    pub config: DegradationConfig,
    pub truth: Vec<f64>,
    pub tv_weight: f64,
    pub boxc: BoxConstraint,
    pub sigma: f64,
    pub rho: f64,
    pub norm_squared: f64,
    pub tv: GroupShrinkSpec,
    pub grad: DiscreteGradient,
}

#[derive(Debug, Clone)]
pub struct ReferencePair {
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub kkt: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct StochasticRun {
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub initial_kkt: f64,
    pub final_kkt: f64,
    pub trace: Trace,
}

impl Default for TinyTv {
    fn default() -> Self {
        Self::new()
    }
}

impl TinyTv {
    pub fn new() -> Self {
        Self::with_size(8, 8)
    }

    pub fn with_size(width: usize, height: usize) -> Self {
        let config = DegradationConfig { blur_size: 1, ..DegradationConfig::standard(width, height, 0) };
        let lipschitz = config.keep_prob;
        let norm_squared = 8.0;
        let sigma = 1.0 / norm_squared;
        let rho = 0.9 / (sigma * norm_squared + lipschitz / 2.0);
        Self {
            config,
            truth: synthetic_scene(width, height).data,
            tv_weight: 10.0,
            boxc: BoxConstraint { lo: 0.0, hi: 255.0 },
            sigma,
            rho,
            norm_squared,
            tv: GroupShrinkSpec::isotropic_tv(10.0),
            grad: DiscreteGradient::new(width, height),
        }
    }

    pub fn mu(&self) -> f64 {
        1.0 / self.config.keep_prob
    }

    pub fn ops(&self) -> PdOperators<'_> {
        PdOperators {
            prox_f: &self.boxc,
            blocks: vec![DualBlock {
                prox_g: &self.tv,
                op: &self.grad,
                sigma: self.sigma,
                norm_squared: self.norm_squared,
                error: None,
            }],
            rho: self.rho,
        }
    }

    pub fn exact_gradient(&self) -> Result<ExactMaskGradient> {
        Ok(ExactMaskGradient::new(&self.config, &self.truth)?)
    }

    pub fn kkt(&self, x: &[f64], v: &[Vec<f64>]) -> Result<f64> {
        let mut exact = self.exact_gradient()?;
        Ok(kkt_residual(&self.ops(), &mut exact, x, v)?)
    }

    fn start(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        (vec![0.0; self.truth.len()], vec![vec![0.0; 2 * self.truth.len()]])
    }

    /// Deterministic run with `λ = 1` until the KKT residual drops to `tol`
    /// or `cap` iterations are spent.
    pub fn reference(&self, tol: f64, cap: usize) -> Result<ReferencePair> {
        let mut exact = self.exact_gradient()?;
        let (x0, v0) = self.start();
        let mut problem = PdProblem {
            ops: self.ops(),
            perturbation: ProxPerturbation::off(),
            gradient: &mut exact,
            lambda: PowerLawSchedule::constant(1.0),
            mu: self.mu(),
            primal_error: None,
        };
        let mut state = PdState { n: 0, x: x0, v: v0 };
        let mut kkt = f64::INFINITY;
        while state.n < cap {
            pd_step(&mut state, &mut problem)?;
            if state.n.is_multiple_of(100) {
                kkt = self.kkt(&state.x, &state.v)?;
                if kkt <= tol {
                    break;
                }
            }
        }
        Ok(ReferencePair { kkt, iterations: state.n, x: state.x, v: state.v })
    }

    /// Distance moved by one exact, unrelaxed step from `(x, v)`.
    pub fn fixed_point_shift(&self, x: &[f64], v: &[Vec<f64>]) -> Result<f64> {
        let mut exact = self.exact_gradient()?;
        let mut problem = PdProblem {
            ops: self.ops(),
            perturbation: ProxPerturbation::off(),
            gradient: &mut exact,
            lambda: PowerLawSchedule::constant(1.0),
            mu: self.mu(),
            primal_error: None,
        };
        let mut state = PdState { n: 0, x: x.to_vec(), v: v.to_vec() };
        pd_step(&mut state, &mut problem)?;
        let dv: f64 = state.v.iter().zip(v).map(|(a, b)| dist(a, b).powi(2)).sum();
        Ok((dist(&state.x, x).powi(2) + dv).sqrt())
    }

    /// Growing-batch run with the default relaxation schedule.
    pub fn stochastic(&self, iterations: usize, seed: u64) -> Result<StochasticRun> {
        let cfg = DegradationConfig { master_seed: seed, ..self.config };
        let truth = stoprox_core::Image::new(cfg.width, cfg.height, self.truth.clone())?;
        let model = DegradationModel::new(cfg, truth)?;
        let mut oracle = EmpiricalGradientOracle::new(model, BatchSchedule::new(1.1), CachePolicy::Incremental);
        let (x0, v0) = self.start();
        let initial_kkt = self.kkt(&x0, &v0)?;
        let mut problem = PdProblem {
            ops: self.ops(),
            perturbation: ProxPerturbation::off(),
            gradient: &mut oracle,
            lambda: PowerLawSchedule::saturating(0.95, 500.0),
            mu: self.mu(),
            primal_error: None,
        };
        let opts = SolveOptions { stop: StoppingRule::iterations(iterations), ..SolveOptions::default() };
        let out = pd_solve(&mut problem, x0, v0, &opts)?;
        let final_kkt = self.kkt(&out.x, &out.v)?;
        Ok(StochasticRun { x: out.x, v: out.v, initial_kkt, final_kkt, trace: out.trace })
    }
}

/// Relative error of the mean of `draws` single-sample gradients at `x = 0`
/// against the closed form. Record `i` of the stream is draw `i`.
pub fn monte_carlo_gradient_error(cfg: &DegradationConfig, draws: usize) -> Result<f64> {
    let truth = synthetic_scene(cfg.width, cfg.height);
    let x = vec![0.0; cfg.pixels()];
    let exact = stoprox_core::oracles::exact_gradient(cfg, &truth.data, &x)?;
    let model = DegradationModel::new(*cfg, truth)?;
    let oracle = EmpiricalGradientOracle::new(model, BatchSchedule::new(1.1), CachePolicy::RecomputeAll);
    let mut mean = vec![0.0; x.len()];
    oracle.recompute(&x, draws, &mut mean)?;
    Ok(dist(&mean, &exact) / norm(&exact))
}

/// Expected relative error of that mean: `((1 − p) / (p · draws))^½`,
/// whatever `x` is.
pub fn monte_carlo_rms_prediction(keep_prob: f64, draws: usize) -> f64 {
    ((1.0 - keep_prob) / (keep_prob * draws as f64)).sqrt()
}

pub const VARIANCE_BATCHES: [usize; 5] = [1, 4, 16, 64, 256];

/// Least-squares slope of `ln E‖u − ∇h‖²` against `ln m` for the batches in
/// [`VARIANCE_BATCHES`], each variance averaged over `replicates`
/// independent streams (16×16, default noise and mask).
pub fn variance_slope(seed: u64, replicates: usize) -> Result<f64> {
    let base = DegradationConfig::standard(16, 16, seed);
    let truth = synthetic_scene(16, 16);
    let x: Vec<f64> = truth.data.iter().map(|v| 0.5 * v + 30.0).collect();
    let exact = stoprox_core::oracles::exact_gradient(&base, &truth.data, &x)?;
    let mut points = Vec::new();
    for (bi, &m) in VARIANCE_BATCHES.iter().enumerate() {
        let mut total = 0.0;
        for r in 0..replicates {
            let master_seed = seed.wrapping_mul(0x9e37_79b9).wrapping_add((bi * 1_000_003 + r) as u64);
            let cfg = DegradationConfig { master_seed, ..base };
            let model = DegradationModel::new(cfg, truth.clone())?;
            let oracle = EmpiricalGradientOracle::new(model, BatchSchedule::new(1.1), CachePolicy::RecomputeAll);
            let mut u = vec![0.0; x.len()];
            oracle.recompute(&x, m, &mut u)?;
            total += dist(&u, &exact).powi(2);
        }
        points.push(((m as f64).ln(), (total / replicates as f64).ln()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
