//! First-order information for the smooth term.
//!
//! [`EmpiricalGradientOracle`] is the growing mini-batch estimator
//! `u_n = (1/m) Σ_{i<m} K_iᵀ(K_i x − z_i)` with `m = m_{n+1}`.
//! [`ExactMaskGradient`] is the closed-form gradient of
//! `h(x) = ½ E‖K_0 x − z_0‖²` for the Bernoulli-mask blur model, and the
//! injectors add controlled bias, variance and additive errors.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::degradation::{nominal_blur_response, DegradationConfig, ObservationSource};
use crate::fft::{Complex64, Fft2d};
use crate::linops::{FrequencyOperator, LinearOperator};
use crate::prox::seeded_direction;
use crate::schedules::{BatchSchedule, PowerLawSchedule};
use crate::vector::{dist, norm_sq};
use crate::{Error, Result};

pub trait GradientOracle {
    /// Writes the gradient estimate used at iteration `n` to `out`.
    fn gradient(&mut self, x: &[f64], n: usize, out: &mut [f64]) -> Result<()>;

    /// Number of samples behind the estimate at iteration `n`, if any.
    fn batch_size(&self, _n: usize) -> Option<usize> {
        None
    }
}

/// Deterministic gradient given by a closure.
pub struct ExactGradient<F>(pub F);

impl<F> core::fmt::Debug for ExactGradient<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("ExactGradient")
    }
}

impl<F: FnMut(&[f64], &mut [f64])> GradientOracle for ExactGradient<F> {
    fn gradient(&mut self, x: &[f64], _n: usize, out: &mut [f64]) -> Result<()> {
        if x.len() != out.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: out.len() });
        }
        (self.0)(x, out);
        Ok(())
    }
}

impl<G: GradientOracle + ?Sized> GradientOracle for &mut G {
    fn gradient(&mut self, x: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
        (**self).gradient(x, n, out)
    }

    fn batch_size(&self, n: usize) -> Option<usize> {
        (**self).batch_size(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    /// Re-materialize every record at every call.
    RecomputeAll,
    /// Accumulate `Σ|r_i|²` and `Σ K_iᵀ z_i` once per record. Valid because
    /// each term is affine in `x` and every `K_i` is Fourier-diagonal.
    Incremental,
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    count: usize,
    symbol: Vec<f64>,
    rhs: Vec<f64>,
    plan: Option<Arc<Fft2d>>,
}

/// Growing mini-batch estimate of `∇h`.
#[derive(Debug, Clone)]
pub struct EmpiricalGradientOracle<S> {
    source: S,
    batch: BatchSchedule,
    policy: CachePolicy,
    acc: Accumulator,
}

impl<S: ObservationSource> EmpiricalGradientOracle<S> {
    pub fn new(source: S, batch: BatchSchedule, policy: CachePolicy) -> Self {
        Self { source, batch, policy, acc: Accumulator::default() }
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn batch(&self) -> &BatchSchedule {
        &self.batch
    }

    pub fn empirical_gradient(&mut self, x: &[f64], n: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.gradient(x, n, &mut out)?;
        Ok(out)
    }

    fn check_available(&self, m: usize) -> Result<()> {
        match self.source.available() {
            Some(available) if available < m => Err(Error::StreamExhausted { needed: m, available }),
            _ => Ok(()),
        }
    }

    /// Mean of `K_iᵀ(K_i x − z_i)` over the first `m` records, summed in
    /// record order.
    pub fn recompute(&self, x: &[f64], m: usize, out: &mut [f64]) -> Result<()> {
        self.check_available(m)?;
        out.fill(0.0);
        let mut resid = vec![0.0; x.len()];
        let mut term = vec![0.0; x.len()];
        for i in 0..m {
            let (op, z) = self.source.observation(i)?;
            op.apply_into(x, &mut resid)?;
            for (r, zi) in resid.iter_mut().zip(&z) {
                *r -= zi;
            }
            op.adjoint_into(&resid, &mut term)?;
            for (o, t) in out.iter_mut().zip(&term) {
                *o += t;
            }
        }
        let inv = 1.0 / m as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        Ok(())
    }

    fn extend_to(&mut self, m: usize) -> Result<()> {
        self.check_available(m)?;
        while self.acc.count < m {
            let (op, z) = self.source.observation(self.acc.count)?;
            if self.acc.plan.is_none() {
                self.acc.plan = Some(op.plan().clone());
                self.acc.symbol = vec![0.0; z.len()];
                self.acc.rhs = vec![0.0; z.len()];
            }
            for (s, r) in self.acc.symbol.iter_mut().zip(op.response()) {
                *s += r.norm_sqr();
            }
            let ktz = op.adjoint(&z)?;
            for (a, v) in self.acc.rhs.iter_mut().zip(&ktz) {
                *a += v;
            }
            self.acc.count += 1;
        }
        Ok(())
    }

    fn incremental(&mut self, x: &[f64], m: usize, out: &mut [f64]) -> Result<()> {
        self.extend_to(m)?;
        let plan = self.acc.plan.as_ref().expect("at least one record accumulated");
        if x.len() != self.acc.symbol.len() {
            return Err(Error::DimensionMismatch { expected: self.acc.symbol.len(), got: x.len() });
        }
        let inv = 1.0 / m as f64;
        let mut buf: Vec<Complex64> = plan.forward_real(x);
        for (b, s) in buf.iter_mut().zip(&self.acc.symbol) {
            *b *= s * inv;
        }
        plan.inverse(&mut buf);
        for ((o, b), r) in out.iter_mut().zip(&buf).zip(&self.acc.rhs) {
            *o = b.re - r * inv;
        }
        Ok(())
    }
}

impl<S: ObservationSource> GradientOracle for EmpiricalGradientOracle<S> {
    fn gradient(&mut self, x: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
        let m = self.batch.value(n + 1);
        let (w, h) = self.source.dims();
        if x.len() != w * h || out.len() != w * h {
            return Err(Error::DimensionMismatch { expected: w * h, got: x.len() });
        }
        match self.policy {
            // a shrinking batch cannot be served from the accumulator
            CachePolicy::Incremental if m >= self.acc.count => self.incremental(x, m, out),
            _ => self.recompute(x, m, out),
        }
    }

    fn batch_size(&self, n: usize) -> Option<usize> {
        Some(self.batch.value(n + 1))
    }
}

/// `∇h(x) = C(x − x̄)` with `C` Fourier-diagonal of symbol
/// `keep_prob · |b|²`, `b` the nominal blur response.
#[derive(Debug, Clone)]
pub struct ExactMaskGradient {
    symbol: FrequencyOperator,
    xbar: Vec<f64>,
}

impl ExactMaskGradient {
    pub fn new(cfg: &DegradationConfig, xbar: &[f64]) -> Result<Self> {
        cfg.validate()?;
        if xbar.len() != cfg.pixels() {
            return Err(Error::DimensionMismatch { expected: cfg.pixels(), got: xbar.len() });
        }
        let nominal = nominal_blur_response(cfg);
        let response = nominal
            .response()
            .iter()
            .map(|r| Complex64::new(cfg.keep_prob * r.norm_sqr(), 0.0))
            .collect();
        let symbol = FrequencyOperator::with_plan(nominal.plan().clone(), response)?;
        Ok(Self { symbol, xbar: xbar.to_vec() })
    }

    /// Lipschitz constant of `∇h`, i.e. `1/μ`.
    pub fn lipschitz(&self) -> f64 {
        libm::sqrt(self.symbol.max_gain_squared())
    }

    /// `h(x)` up to the additive noise constant: `½ ⟨C(x − x̄), x − x̄⟩`.
    pub fn excess_objective(&self, x: &[f64]) -> Result<f64> {
        let d: Vec<f64> = x.iter().zip(&self.xbar).map(|(a, b)| a - b).collect();
        let cd = self.symbol.apply(&d)?;
        Ok(0.5 * crate::vector::dot(&cd, &d))
    }
}

impl GradientOracle for ExactMaskGradient {
    fn gradient(&mut self, x: &[f64], _n: usize, out: &mut [f64]) -> Result<()> {
        if x.len() != self.xbar.len() {
            return Err(Error::DimensionMismatch { expected: self.xbar.len(), got: x.len() });
        }
        let d: Vec<f64> = x.iter().zip(&self.xbar).map(|(a, b)| a - b).collect();
        self.symbol.apply_into(&d, out)
    }
}

pub fn exact_gradient(cfg: &DegradationConfig, xbar: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut oracle = ExactMaskGradient::new(cfg, xbar)?;
    let mut out = vec![0.0; x.len()];
    oracle.gradient(x, 0, &mut out)?;
    Ok(out)
}

/// Bias and variance injected on top of a gradient.
///
/// The bias at iteration `n` has norm exactly `bias(n)` along a direction fixed
/// by `(seed, n)`; the noise is zero-mean Gaussian with
/// `E‖noise‖² = τ ‖g − g*‖² + ζ_n`.
#[derive(Debug, Clone)]
pub struct GradientErrorInjector {
    pub bias: PowerLawSchedule,
    pub variance: PowerLawSchedule,
    pub relative_variance: f64,
    pub seed: u64,
    rng: ChaCha8Rng,
}

impl GradientErrorInjector {
    pub fn new(bias: PowerLawSchedule, variance: PowerLawSchedule, relative_variance: f64, seed: u64) -> Self {
        Self { bias, variance, relative_variance, seed, rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15) }
    }

    pub fn none() -> Self {
        Self::new(PowerLawSchedule::zero(), PowerLawSchedule::zero(), 0.0, 0)
    }

    /// Second-moment bound of the injected noise.
    pub fn variance_bound(&self, true_grad: &[f64], ref_grad: &[f64], n: usize) -> f64 {
        let rel = if self.relative_variance > 0.0 {
            let d = dist(true_grad, ref_grad);
            self.relative_variance * d * d
        } else {
            0.0
        };
        rel + self.variance.evaluate(n)
    }

    pub fn inject(&mut self, true_grad: &[f64], ref_grad: &[f64], n: usize) -> Vec<f64> {
        let mut out = true_grad.to_vec();
        let b = self.bias.evaluate(n);
        if b > 0.0 {
            let dir = seeded_direction(self.seed, n, &[], out.len());
            for (o, d) in out.iter_mut().zip(&dir) {
                *o += b * d;
            }
        }
        let bound = self.variance_bound(true_grad, ref_grad, n);
        if bound > 0.0 {
            let scale = libm::sqrt(bound / out.len() as f64);
            for o in out.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut self.rng);
                *o += scale * g;
            }
        }
        out
    }
}

/// Wraps an oracle and perturbs its output with a [`GradientErrorInjector`].
#[derive(Debug, Clone)]
pub struct InjectedGradient<G> {
    pub inner: G,
    pub injector: GradientErrorInjector,
    /// `∇g(z)` at a known solution; zero when absent.
    pub reference: Option<Vec<f64>>,
}

impl<G: GradientOracle> GradientOracle for InjectedGradient<G> {
    fn gradient(&mut self, x: &[f64], n: usize, out: &mut [f64]) -> Result<()> {
        self.inner.gradient(x, n, out)?;
        let zero;
        let reference = match &self.reference {
            Some(r) => r.as_slice(),
            None => {
                zero = vec![0.0; out.len()];
                &zero
            }
        };
        let noisy = self.injector.inject(out, reference, n);
        out.copy_from_slice(&noisy);
        Ok(())
    }

    fn batch_size(&self, n: usize) -> Option<usize> {
        self.inner.batch_size(n)
    }
}

/// Additive error term with `‖e_n‖ = amplitude(n)` along a seeded direction;
/// used for inexact proximity steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveError {
    pub amplitude: PowerLawSchedule,
    pub seed: u64,
}

impl AdditiveError {
    pub fn draw(&self, n: usize, len: usize) -> Option<Vec<f64>> {
        let a = self.amplitude.evaluate(n);
        if a == 0.0 || len == 0 {
            return None;
        }
        let mut d = seeded_direction(self.seed, n, &[], len);
        d.iter_mut().for_each(|v| *v *= a);
        Some(d)
    }

    pub fn add_to(&self, n: usize, x: &mut [f64]) {
        if let Some(e) = self.draw(n, x.len()) {
            for (xi, ei) in x.iter_mut().zip(&e) {
                *xi += ei;
            }
        }
    }
}

/// `E‖noise‖²` realized by an injector, averaged over `draws` calls.
pub fn empirical_injected_variance(injector: &mut GradientErrorInjector, grad: &[f64], n: usize, draws: usize) -> f64 {
    let zero = vec![0.0; grad.len()];
    let bias_free = GradientErrorInjector { bias: PowerLawSchedule::zero(), ..injector.clone() };
    let mut probe = bias_free;
    let total: f64 = (0..draws)
        .map(|_| {
            let noisy = probe.inject(grad, &zero, n);
            norm_sq(&noisy.iter().zip(grad).map(|(a, b)| a - b).collect::<Vec<_>>())
        })
        .sum();
    injector.rng = probe.rng;
    total / draws as f64
}
