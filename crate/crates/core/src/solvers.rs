//! Relaxed stochastic forward-backward and primal-dual iterations.
//!
//! Both solvers are sequential: each iterate depends on the previous one, and
//! every source of randomness (gradient oracle, perturbation, additive errors)
//! is a deterministic function of its seed and the iteration index. A run is
//! therefore bit-reproducible whatever the thread layout of the caller.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::diagnostics::snr;
use crate::linops::LinearOperator;
use crate::oracles::{AdditiveError, GradientOracle};
use crate::prox::{perturbed_prox, Conjugate, ProxOperator, ProxPerturbation};
use crate::schedules::{validate_fb_conditions, validate_pd_stepsizes, PdStepsizeConfig, PowerLawSchedule};
use crate::vector::{all_finite, dist, norm, norm_sq, relax};
use crate::{Error, Result};

/// Stochastic forward-backward problem `min f + g`.
pub struct FbProblem<'a> {
    pub prox_f: &'a dyn ProxOperator,
    pub perturbation: ProxPerturbation,
    pub gradient: &'a mut dyn GradientOracle,
    /// `∇g` is `1/ϑ`-Lipschitz.
    pub vartheta: f64,
    pub gamma: PowerLawSchedule,
    pub lambda: PowerLawSchedule,
    /// Relative variance bound of the gradient estimates, used by validation.
    pub tau: PowerLawSchedule,
    pub prox_error: Option<AdditiveError>,
}

impl core::fmt::Debug for FbProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FbProblem")
            .field("vartheta", &self.vartheta)
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .field("tau", &self.tau)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbState {
    pub n: usize,
    pub x: Vec<f64>,
}

impl FbState {
    pub fn new(x0: Vec<f64>) -> Self {
        Self { n: 0, x: x0 }
    }
}

/// What one iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub lambda: f64,
    pub batch: Option<usize>,
    /// `‖x_{n+1} − x_n‖`
    pub step_change: f64,
    /// `‖y_n − x_n‖`, the unrelaxed displacement.
    pub displacement: f64,
    /// `(Σ_k ‖v_{k,n+1} − v_{k,n}‖²)^½` for primal-dual steps.
    pub dual_step_change: Option<f64>,
}

/// `x_{n+1} = x_n + λ_n (prox_{γ_n f_n}(x_n − γ_n u_n) + a_n − x_n)`.
pub fn fb_step(state: &mut FbState, problem: &mut FbProblem<'_>) -> Result<StepInfo> {
    let n = state.n;
    let gamma = problem.gamma.evaluate(n);
    let bound = 2.0 * problem.vartheta;
    if !(gamma > 0.0 && gamma < bound) {
        return Err(Error::StepOutOfRange { iteration: n, gamma, bound });
    }
    let lambda = problem.lambda.evaluate(n);
    let x = &state.x;

    let mut u = vec![0.0; x.len()];
    problem.gradient.gradient(x, n, &mut u)?;
    let forward: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi - gamma * ui).collect();
    let mut y = perturbed_prox(problem.prox_f, &problem.perturbation, n, gamma, &forward)?;
    if let Some(a) = &problem.prox_error {
        a.add_to(n, &mut y);
    }
    let displacement = dist(&y, x);

    let mut next = state.x.clone();
    relax(lambda, &mut next, &y);
    if !all_finite(&next) {
        return Err(Error::Diverged { iteration: n });
    }
    let step_change = dist(&next, &state.x);
    state.x = next;
    state.n += 1;
    Ok(StepInfo {
        lambda,
        batch: problem.gradient.batch_size(n),
        step_change,
        displacement,
        dual_step_change: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub max_iterations: usize,
    /// Stop once `‖x_{n+1} − x_n‖ / ‖x_n‖` stays below this for `patience`
    /// consecutive iterations.
    pub rel_tol: Option<f64>,
    pub patience: usize,
}

impl StoppingRule {
    pub const fn iterations(max_iterations: usize) -> Self {
        Self { max_iterations, rel_tol: None, patience: 10 }
    }
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { max_iterations: 1000, rel_tol: Some(1e-6), patience: 10 }
    }
}

pub struct SolveOptions<'c> {
    pub stop: StoppingRule,
    /// Iterates whose index is a multiple of `stride` are kept, along with
    /// `x_0` and the final iterate.
    pub stride: usize,
    /// Ground truth for the per-row SNR column.
    pub truth: Option<&'c [f64]>,
    /// Milliseconds since an arbitrary origin. Leave unset for byte-stable
    /// traces.
    pub clock: Option<&'c dyn Fn() -> f64>,
    /// Run even when the convergence conditions fail; the override is
    /// recorded in the trace.
    pub force: bool,
}

impl core::fmt::Debug for SolveOptions<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SolveOptions")
            .field("stop", &self.stop)
            .field("stride", &self.stride)
            .field("force", &self.force)
            .finish_non_exhaustive()
    }
}

impl Default for SolveOptions<'_> {
    fn default() -> Self {
        Self { stop: StoppingRule::default(), stride: 10, truth: None, clock: None, force: false }
    }
}

/// One row per iteration; row `n` describes the step from `x_n` to `x_{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub lambda: f64,
    pub batch: Option<usize>,
    pub step_change: f64,
    pub dual_step_change: Option<f64>,
    /// `‖x_{n+1} − x_∞‖`, available where `x_{n+1}` was kept.
    pub residual_to_final: Option<f64>,
    /// SNR of `x_{n+1}` in dB.
    pub snr: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
    pub stride: usize,
    pub warnings: Vec<String>,
    /// The run went ahead although validation failed.
    pub overridden: bool,
}

impl Trace {
    fn new(stride: usize) -> Self {
        Self { stride, ..Self::default() }
    }

    fn keep(&mut self, n: usize, x: &[f64], last: bool) {
        if n == 0 || last || (self.stride > 0 && n.is_multiple_of(self.stride)) {
            if self.snapshots.last().is_some_and(|s| s.n == n) {
                return;
            }
            self.snapshots.push(Snapshot { n, x: x.to_vec() });
        }
    }

    /// Second pass: distances of the kept iterates to the final one.
    fn fill_residuals(&mut self) {
        let Some(last) = self.snapshots.last() else { return };
        let fin = last.x.clone();
        for s in &self.snapshots {
            if s.n == 0 {
                continue;
            }
            if let Some(row) = self.rows.get_mut(s.n - 1) {
                row.residual_to_final = Some(dist(&s.x, &fin));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbOutcome {
    pub x: Vec<f64>,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdOutcome {
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub trace: Trace,
}

/// A failed solve with everything computed up to the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{error} (after {} completed iterations)", trace.rows.len())]
pub struct SolveFailure {
    pub error: Error,
    pub x: Vec<f64>,
    pub trace: Trace,
}

struct Recorder<'c> {
    trace: Trace,
    truth: Option<&'c [f64]>,
    clock: Option<&'c dyn Fn() -> f64>,
    start: f64,
    quiet_steps: usize,
    stop: StoppingRule,
}

impl<'c> Recorder<'c> {
    fn new(opts: &SolveOptions<'c>, x0: &[f64]) -> Self {
        let mut trace = Trace::new(opts.stride);
        trace.keep(0, x0, opts.stop.max_iterations == 0);
        Self {
            trace,
            truth: opts.truth,
            clock: opts.clock,
            start: opts.clock.map_or(0.0, |c| c()),
            quiet_steps: 0,
            stop: opts.stop,
        }
    }

    /// Records the step that produced `x`; returns true when the run should stop.
    fn record(&mut self, n: usize, info: &StepInfo, prev_norm: f64, x: &[f64]) -> bool {
        let snr_db = self.truth.and_then(|t| snr(t, x).ok()).map(|r| r.snr_db);
        self.trace.rows.push(TraceRow {
            n,
            lambda: info.lambda,
            batch: info.batch,
            step_change: info.step_change,
            dual_step_change: info.dual_step_change,
            residual_to_final: None,
            snr: snr_db,
            wall_ms: self.clock.map(|c| c() - self.start),
        });
        let mut done = n + 1 >= self.stop.max_iterations;
        if let Some(tol) = self.stop.rel_tol {
            let rel = info.step_change / prev_norm.max(f64::MIN_POSITIVE);
            self.quiet_steps = if rel < tol { self.quiet_steps + 1 } else { 0 };
            if self.quiet_steps >= self.stop.patience.max(1) {
                done = true;
            }
        }
        self.trace.keep(n + 1, x, done);
        done
    }

    fn finish(mut self) -> Trace {
        self.trace.fill_residuals();
        self.trace
    }
}

/// Runs [`fb_step`] from `x0` until the stopping rule fires.
pub fn fb_solve(
    problem: &mut FbProblem<'_>,
    x0: Vec<f64>,
    opts: &SolveOptions<'_>,
) -> core::result::Result<FbOutcome, SolveFailure> {
    let mut rec = Recorder::new(opts, &x0);
    let report = validate_fb_conditions(&problem.gamma, &problem.lambda, &problem.tau, problem.vartheta);
    if !report.overall {
        let reason = report.first_failure().unwrap_or("relaxation parameters must lie in [0, 1]");
        if !opts.force {
            return Err(SolveFailure { error: Error::ConditionsViolated(reason), x: x0, trace: rec.finish() });
        }
        rec.trace.overridden = true;
        rec.trace.warnings.push(format!("forced past failed validation: {reason}"));
    }
    if problem.lambda.is_summable() {
        rec.trace.warnings.push(String::from("sum of lambda_n is finite"));
    }

    let mut state = FbState::new(x0);
    while state.n < opts.stop.max_iterations {
        let n = state.n;
        let prev_norm = norm(&state.x);
        match fb_step(&mut state, problem) {
            Ok(info) => {
                if rec.record(n, &info, prev_norm, &state.x) {
                    break;
                }
            }
            Err(error) => return Err(SolveFailure { error, x: state.x, trace: rec.finish() }),
        }
    }
    Ok(FbOutcome { x: state.x, trace: rec.finish() })
}

/// One composite term `g_k ∘ L_k`.
pub struct DualBlock<'a> {
    /// Proximity operator of `g_k`; the dual step uses its conjugate.
    pub prox_g: &'a dyn ProxOperator,
    pub op: &'a dyn LinearOperator,
    pub sigma: f64,
    /// Estimate of `‖L_k‖²` used by step-size validation.
    pub norm_squared: f64,
    /// `c_{k,n}`
    pub error: Option<AdditiveError>,
}

impl core::fmt::Debug for DualBlock<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DualBlock")
            .field("sigma", &self.sigma)
            .field("norm_squared", &self.norm_squared)
            .finish_non_exhaustive()
    }
}

/// The deterministic parts of the primal-dual problem
/// `min f + Σ_k g_k ∘ L_k + h`.
pub struct PdOperators<'a> {
    pub prox_f: &'a dyn ProxOperator,
    pub blocks: Vec<DualBlock<'a>>,
    pub rho: f64,
}

impl core::fmt::Debug for PdOperators<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PdOperators")
            .field("blocks", &self.blocks)
            .field("rho", &self.rho)
            .finish_non_exhaustive()
    }
}

impl PdOperators<'_> {
    pub fn stepsize_config(&self, mu: f64) -> PdStepsizeConfig {
        PdStepsizeConfig {
            rho: self.rho,
            sigmas: self.blocks.iter().map(|b| b.sigma).collect(),
            operator_norm_squares: self.blocks.iter().map(|b| b.norm_squared).collect(),
            mu,
        }
    }

    /// `(y_n, w_n)` from `(x_n, v_n)` and the gradient estimate `u`.
    fn candidate(
        &self,
        x: &[f64],
        v: &[Vec<f64>],
        u: &[f64],
        n: usize,
        perturbation: &ProxPerturbation,
        primal_error: Option<&AdditiveError>,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        if v.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch { expected: self.blocks.len(), got: v.len() });
        }
        let mut lt_v = vec![0.0; x.len()];
        let mut tmp = vec![0.0; x.len()];
        for (block, vk) in self.blocks.iter().zip(v) {
            block.op.adjoint_into(vk, &mut tmp)?;
            for (a, t) in lt_v.iter_mut().zip(&tmp) {
                *a += t;
            }
        }
        let rho = self.rho;
        let forward: Vec<f64> = x
            .iter()
            .zip(&lt_v)
            .zip(u)
            .map(|((xi, li), ui)| xi - rho * (li + ui))
            .collect();
        let mut y = perturbed_prox(self.prox_f, perturbation, n, rho, &forward)?;
        if let Some(b) = primal_error {
            b.add_to(n, &mut y);
        }

        let reflected: Vec<f64> = y.iter().zip(x).map(|(yi, xi)| 2.0 * yi - xi).collect();
        let mut w = Vec::with_capacity(v.len());
        for (block, vk) in self.blocks.iter().zip(v) {
            let l = block.op.apply(&reflected)?;
            let s = block.sigma;
            let arg: Vec<f64> = vk.iter().zip(&l).map(|(vi, li)| vi + s * li).collect();
            let mut wk = Conjugate(block.prox_g).prox(s, &arg)?;
            if let Some(c) = &block.error {
                c.add_to(n, &mut wk);
            }
            w.push(wk);
        }
        Ok((y, w))
    }
}

impl<P: ProxOperator + ?Sized> ProxOperator for &P {
    fn prox_into(&self, gamma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).prox_into(gamma, x, out)
    }

    fn restore_feasibility(&self, x: &mut [f64]) {
        (**self).restore_feasibility(x)
    }
}

pub struct PdProblem<'a> {
    pub ops: PdOperators<'a>,
    pub perturbation: ProxPerturbation,
    /// Estimates of `∇h`.
    pub gradient: &'a mut dyn GradientOracle,
    pub lambda: PowerLawSchedule,
    /// `∇h` is `1/μ`-Lipschitz.
    pub mu: f64,
    /// `b_n`
    pub primal_error: Option<AdditiveError>,
}

impl core::fmt::Debug for PdProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PdProblem")
            .field("ops", &self.ops)
            .field("lambda", &self.lambda)
            .field("mu", &self.mu)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdState {
    pub n: usize,
    pub x: Vec<f64>,
    pub v: Vec<Vec<f64>>,
}

impl PdState {
    /// `v_0 = 0` for every block.
    pub fn new(x0: Vec<f64>, ops: &PdOperators<'_>) -> Self {
        let v = ops.blocks.iter().map(|b| vec![0.0; b.op.output_len()]).collect();
        Self { n: 0, x: x0, v }
    }
}

/// One relaxed primal-dual iteration. The dual argument uses the reflection
/// `2y_n − x_n`.
pub fn pd_step(state: &mut PdState, problem: &mut PdProblem<'_>) -> Result<StepInfo> {
    let n = state.n;
    let lambda = problem.lambda.evaluate(n);
    let mut u = vec![0.0; state.x.len()];
    problem.gradient.gradient(&state.x, n, &mut u)?;
    let (y, w) =
        problem
            .ops
            .candidate(&state.x, &state.v, &u, n, &problem.perturbation, problem.primal_error.as_ref())?;
    let displacement = dist(&y, &state.x);

    let mut x_next = state.x.clone();
    relax(lambda, &mut x_next, &y);
    let mut v_next = state.v.clone();
    for (vk, wk) in v_next.iter_mut().zip(&w) {
        relax(lambda, vk, wk);
    }
    if !all_finite(&x_next) || !v_next.iter().all(|vk| all_finite(vk)) {
        return Err(Error::Diverged { iteration: n });
    }
    let step_change = dist(&x_next, &state.x);
    let dual_sq: f64 = v_next.iter().zip(&state.v).map(|(a, b)| sq_dist(a, b)).sum();
    state.x = x_next;
    state.v = v_next;
    state.n += 1;
    Ok(StepInfo {
        lambda,
        batch: problem.gradient.batch_size(n),
        step_change,
        displacement,
        dual_step_change: Some(libm::sqrt(dual_sq)),
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs [`pd_step`] from `(x0, v0)` until the stopping rule fires.
pub fn pd_solve(
    problem: &mut PdProblem<'_>,
    x0: Vec<f64>,
    v0: Vec<Vec<f64>>,
    opts: &SolveOptions<'_>,
) -> core::result::Result<PdOutcome, SolveFailure> {
    let mut rec = Recorder::new(opts, &x0);
    let steps = problem.ops.stepsize_config(problem.mu);
    if !validate_pd_stepsizes(&steps) {
        if !opts.force {
            return Err(SolveFailure {
                error: Error::ConditionsViolated("(1/rho - sum sigma_k |L_k|^2) mu must exceed 1/2"),
                x: x0,
                trace: rec.finish(),
            });
        }
        rec.trace.overridden = true;
        rec.trace.warnings.push(format!("forced past failed step-size validation (margin {})", steps.margin()));
    }
    if problem.lambda.is_summable() {
        rec.trace.warnings.push(String::from("sum of lambda_n is finite"));
    }
    if problem.lambda.supremum() > 1.0 || problem.lambda.infimum() < 0.0 {
        rec.trace.warnings.push(String::from("lambda_n leaves [0, 1]"));
    }

    let mut state = PdState { n: 0, x: x0, v: v0 };
    while state.n < opts.stop.max_iterations {
        let n = state.n;
        let prev_norm = norm(&state.x);
        match pd_step(&mut state, problem) {
            Ok(info) => {
                if rec.record(n, &info, prev_norm, &state.x) {
                    break;
                }
            }
            Err(error) => return Err(SolveFailure { error, x: state.x, trace: rec.finish() }),
        }
    }
    Ok(PdOutcome { x: state.x, v: state.v, trace: rec.finish() })
}

/// Displacement of `(x, v)` under one exact, unrelaxed primal-dual step,
/// divided by `1 + ‖x‖ + ‖v‖`. Zero exactly at primal-dual solutions.
pub fn kkt_residual(
    ops: &PdOperators<'_>,
    exact_gradient: &mut dyn GradientOracle,
    x: &[f64],
    v: &[Vec<f64>],
) -> Result<f64> {
    let mut u = vec![0.0; x.len()];
    exact_gradient.gradient(x, 0, &mut u)?;
    let (y, w) = ops.candidate(x, v, &u, 0, &ProxPerturbation::off(), None)?;
    let mut sq = sq_dist(&y, x);
    let mut v_sq = 0.0;
    for (wk, vk) in w.iter().zip(v) {
        sq += sq_dist(wk, vk);
        v_sq += norm_sq(vk);
    }
    Ok(libm::sqrt(sq) / (1.0 + norm(x) + libm::sqrt(v_sq)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DiscreteGradient, ZeroOperator};
    use crate::oracles::ExactGradient;
    use crate::prox::{BoxConstraint, GroupShrinkSpec, ZeroFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shift_gradient(c: Vec<f64>) -> ExactGradient<impl FnMut(&[f64], &mut [f64])> {
        ExactGradient(move |x: &[f64], out: &mut [f64]| {
            for ((o, xi), ci) in out.iter_mut().zip(x).zip(&c) {
                *o = xi - ci;
            }
        })
    }

    fn fb<'a>(prox: &'a dyn ProxOperator, grad: &'a mut dyn GradientOracle, gamma: f64) -> FbProblem<'a> {
        FbProblem {
            prox_f: prox,
            perturbation: ProxPerturbation::off(),
            gradient: grad,
            vartheta: 1.0,
            gamma: PowerLawSchedule::constant(gamma),
            lambda: PowerLawSchedule::constant(1.0),
            tau: PowerLawSchedule::zero(),
            prox_error: None,
        }
    }

    #[test]
    fn fb_with_zero_f_is_gradient_descent() {
        let c = vec![1.0, -2.0, 3.0];
        let mut g = shift_gradient(c.clone());
        let mut p = fb(&ZeroFunction, &mut g, 0.5);
        let x = vec![4.0, 4.0, 4.0];
        let mut s = FbState::new(x.clone());
        fb_step(&mut s, &mut p).unwrap();
        let expected: Vec<f64> = x.iter().zip(&c).map(|(xi, ci)| xi - 0.5 * (xi - ci)).collect();
        assert_eq!(s.x, expected);
        assert_eq!(s.n, 1);
    }

    #[test]
    fn fb_box_quadratic_converges_to_clamp() {
        let c: Vec<f64> = vec![-3.0, 0.5, 2.0, 7.0, 1.0];
        let boxc = BoxConstraint::new(0.0, 1.5).unwrap();
        let target: Vec<f64> = c.iter().map(|v| v.clamp(0.0, 1.5)).collect();
        for gamma in [0.3, 1.0, 1.7] {
            let mut g = shift_gradient(c.clone());
            let mut p = fb(&boxc, &mut g, gamma);
            let mut s = FbState::new(vec![0.0; 5]);
            let mut prev = dist(&s.x, &target);
            for _ in 0..200 {
                fb_step(&mut s, &mut p).unwrap();
                let d = dist(&s.x, &target);
                assert!(d <= prev + 1e-15);
                prev = d;
            }
            assert!(prev <= 1e-8, "gamma={gamma}: {prev}");
        }
    }

    #[test]
    fn step_out_of_range_is_rejected() {
        let mut g = shift_gradient(vec![0.0]);
        let mut p = fb(&ZeroFunction, &mut g, 2.0);
        let mut s = FbState::new(vec![1.0]);
        assert_eq!(
            fb_step(&mut s, &mut p).unwrap_err(),
            Error::StepOutOfRange { iteration: 0, gamma: 2.0, bound: 2.0 }
        );
    }

    #[test]
    fn divergence_names_iteration() {
        let mut calls = 0;
        let mut g = ExactGradient(move |_x: &[f64], out: &mut [f64]| {
            calls += 1;
            out.fill(if calls == 3 { f64::NAN } else { 0.0 });
        });
        let mut p = fb(&ZeroFunction, &mut g, 0.5);
        let opts = SolveOptions { stop: StoppingRule::iterations(10), ..SolveOptions::default() };
        let fail = fb_solve(&mut p, vec![1.0, 2.0], &opts).unwrap_err();
        assert_eq!(fail.error, Error::Diverged { iteration: 2 });
        assert_eq!(fail.trace.rows.len(), 2);
    }

    #[test]
    fn zero_iterations_returns_start() {
        let mut g = shift_gradient(vec![0.0; 2]);
        let mut p = fb(&ZeroFunction, &mut g, 0.5);
        let opts = SolveOptions { stop: StoppingRule::iterations(0), ..SolveOptions::default() };
        let out = fb_solve(&mut p, vec![1.0, 2.0], &opts).unwrap();
        assert_eq!(out.x, vec![1.0, 2.0]);
        assert!(out.trace.rows.is_empty());
    }

    #[test]
    fn fb_solve_rejects_bad_conditions_unless_forced() {
        let mut g = shift_gradient(vec![0.0; 2]);
        let mut p = fb(&ZeroFunction, &mut g, 0.5);
        p.lambda = PowerLawSchedule::pure(1.0, 2.0);
        let opts = SolveOptions { stop: StoppingRule::iterations(5), ..SolveOptions::default() };
        assert!(matches!(fb_solve(&mut p, vec![1.0, 2.0], &opts).unwrap_err().error, Error::ConditionsViolated(_)));
        let forced = SolveOptions { force: true, ..opts };
        let out = fb_solve(&mut p, vec![1.0, 2.0], &forced).unwrap();
        assert!(out.trace.overridden);
        assert_eq!(out.trace.rows.len(), 5);
    }

    #[test]
    fn trace_integrity() {
        let c = vec![3.0, -1.0, 0.25, 9.0];
        let boxc = BoxConstraint::new(0.0, 2.0).unwrap();
        let mut g = shift_gradient(c);
        let mut p = fb(&boxc, &mut g, 0.8);
        p.lambda = PowerLawSchedule::saturating(0.95, 500.0);
        let opts = SolveOptions { stop: StoppingRule::iterations(37), stride: 5, ..SolveOptions::default() };
        let out = fb_solve(&mut p, vec![1.0; 4], &opts).unwrap();
        let rows = &out.trace.rows;
        assert_eq!(rows.len(), 37);
        assert_eq!(rows.last().unwrap().residual_to_final, Some(0.0));
        let kept: Vec<usize> = out.trace.snapshots.iter().map(|s| s.n).collect();
        assert_eq!(kept, vec![0, 5, 10, 15, 20, 25, 30, 35, 37]);
        assert!(rows[4].residual_to_final.is_some());
        assert!(rows[5].residual_to_final.is_none());
    }

    #[test]
    fn step_change_is_lambda_times_displacement() {
        let c = vec![3.0, -1.0, 0.25, 9.0];
        let boxc = BoxConstraint::new(0.0, 2.0).unwrap();
        let mut g = shift_gradient(c);
        let mut p = fb(&boxc, &mut g, 0.8);
        p.lambda = PowerLawSchedule::saturating(0.95, 5.0);
        let mut s = FbState::new(vec![1.0, 0.5, 0.0, 4.0]);
        for _ in 0..30 {
            let info = fb_step(&mut s, &mut p).unwrap();
            assert!((info.step_change - info.lambda * info.displacement).abs() <= 1e-12 * (1.0 + info.displacement));
        }
    }

    #[test]
    fn relaxation_zero_keeps_state() {
        let mut g = shift_gradient(vec![5.0; 3]);
        let mut p = fb(&ZeroFunction, &mut g, 0.5);
        p.lambda = PowerLawSchedule::zero();
        let mut s = FbState::new(vec![1.0, 2.0, 3.0]);
        fb_step(&mut s, &mut p).unwrap();
        assert_eq!(s.x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pd_with_inert_dual_matches_fb() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let boxc = BoxConstraint::new(-1.0, 1.0).unwrap();
        let zero = ZeroOperator { input: 6, output: 4 };
        for _ in 0..50 {
            let c: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mut g1 = shift_gradient(c.clone());
            let mut p = fb(&boxc, &mut g1, 0.7);
            let mut fs = FbState::new(x.clone());
            fb_step(&mut fs, &mut p).unwrap();

            let mut g2 = shift_gradient(c);
            let ops = PdOperators {
                prox_f: &boxc,
                blocks: vec![DualBlock { prox_g: &ZeroFunction, op: &zero, sigma: 1.0, norm_squared: 0.0, error: None }],
                rho: 0.7,
            };
            let mut pd = PdProblem {
                ops,
                perturbation: ProxPerturbation::off(),
                gradient: &mut g2,
                lambda: PowerLawSchedule::constant(1.0),
                mu: 1.0,
                primal_error: None,
            };
            let mut ps = PdState::new(x, &pd.ops);
            pd_step(&mut ps, &mut pd).unwrap();
            assert_eq!(ps.x, fs.x);
            assert!(ps.v[0].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn pd_zero_relaxation_keeps_state() {
        let grad = DiscreteGradient::new(4, 4);
        let tv = GroupShrinkSpec::isotropic_tv(1.0);
        let boxc = BoxConstraint::new(0.0, 10.0).unwrap();
        let mut g = shift_gradient((0..16).map(|i| i as f64 * 0.5).collect());
        let mut pd = PdProblem {
            ops: PdOperators {
                prox_f: &boxc,
                blocks: vec![DualBlock { prox_g: &tv, op: &grad, sigma: 0.1, norm_squared: 8.0, error: None }],
                rho: 0.5,
            },
            perturbation: ProxPerturbation::off(),
            gradient: &mut g,
            lambda: PowerLawSchedule::zero(),
            mu: 1.0,
            primal_error: None,
        };
        let mut s = PdState::new(vec![1.0; 16], &pd.ops);
        s.v[0] = (0..32).map(|i| (i as f64 * 0.1).sin() * 0.5).collect();
        let before = s.clone();
        pd_step(&mut s, &mut pd).unwrap();
        assert_eq!(s.x, before.x);
        assert_eq!(s.v, before.v);
    }

    #[test]
    fn pd_solve_warns_on_summable_relaxation() {
        let grad = DiscreteGradient::new(4, 4);
        let tv = GroupShrinkSpec::isotropic_tv(1.0);
        let boxc = BoxConstraint::new(0.0, 10.0).unwrap();
        let mut g = shift_gradient(vec![3.0; 16]);
        let mut pd = PdProblem {
            ops: PdOperators {
                prox_f: &boxc,
                blocks: vec![DualBlock { prox_g: &tv, op: &grad, sigma: 0.1, norm_squared: 8.0, error: None }],
                rho: 0.5,
            },
            perturbation: ProxPerturbation::off(),
            gradient: &mut g,
            lambda: PowerLawSchedule::pure(1.0, 2.0),
            mu: 1.0,
            primal_error: None,
        };
        let x0 = vec![0.0; 16];
        let v0 = PdState::new(x0.clone(), &pd.ops).v;
        let opts = SolveOptions { stop: StoppingRule::iterations(5), ..SolveOptions::default() };
        let out = pd_solve(&mut pd, x0, v0, &opts).unwrap();
        assert!(out.trace.warnings.iter().any(|w| w.contains("lambda")));
        assert!(out.trace.rows.iter().all(|r| r.dual_step_change.is_some()));
    }

    #[test]
    fn pd_solve_rejects_large_rho() {
        let grad = DiscreteGradient::new(4, 4);
        let tv = GroupShrinkSpec::isotropic_tv(1.0);
        let mut g = shift_gradient(vec![3.0; 16]);
        let mut pd = PdProblem {
            ops: PdOperators {
                prox_f: &ZeroFunction,
                blocks: vec![DualBlock { prox_g: &tv, op: &grad, sigma: 0.1, norm_squared: 8.0, error: None }],
                rho: 5.0,
            },
            perturbation: ProxPerturbation::off(),
            gradient: &mut g,
            lambda: PowerLawSchedule::constant(1.0),
            mu: 1.0,
            primal_error: None,
        };
        let opts = SolveOptions::default();
        let v0 = vec![vec![0.0; 32]];
        let fail = pd_solve(&mut pd, vec![0.0; 16], v0, &opts).unwrap_err();
        assert!(matches!(fail.error, Error::ConditionsViolated(_)));
    }

    #[test]
    fn kkt_is_pure_and_positive_away_from_solution() {
        let grad = DiscreteGradient::new(4, 4);
        let tv = GroupShrinkSpec::isotropic_tv(1.0);
        let boxc = BoxConstraint::new(0.0, 255.0).unwrap();
        let c: Vec<f64> = (0..16).map(|i| if i % 4 < 2 { 50.0 } else { 200.0 }).collect();
        let ops = PdOperators {
            prox_f: &boxc,
            blocks: vec![DualBlock { prox_g: &tv, op: &grad, sigma: 0.1, norm_squared: 8.0, error: None }],
            rho: 0.5,
        };
        let mut g = shift_gradient(c);
        let x = vec![0.0; 16];
        let v = vec![vec![0.0; 32]];
        let a = kkt_residual(&ops, &mut g, &x, &v).unwrap();
        let b = kkt_residual(&ops, &mut g, &x, &v).unwrap();
        assert_eq!(a, b);
        assert!(a > 1e-2);
    }
}
