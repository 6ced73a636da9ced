//! Linear operators on flattened images.
//!
//! [`DiscreteGradient`] maps an image to two stacked planes (horizontal then
//! vertical forward differences). [`FrequencyOperator`] is a circular
//! convolution written as a pointwise multiplication in the 2-D DFT domain.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::{Complex64, Fft2d};
use crate::vector::norm_sq;
use crate::{Error, Result};

/// Safety factor applied to power-iteration norm estimates before they are
/// used in step-size rules.
pub const NORM_SAFETY_FACTOR: f64 = 1.05;

pub trait LinearOperator {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) -> Result<()>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_len()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.input_len()];
        self.adjoint_into(y, &mut out)?;
        Ok(out)
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Replicate the last row/column: the difference leaving the image is 0.
    Neumann,
}

/// Forward-difference gradient `R^(W·H) → R^(2·W·H)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteGradient {
    pub width: usize,
    pub height: usize,
    pub boundary: Boundary,
}

impl DiscreteGradient {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, boundary: Boundary::Neumann }
    }

    fn pixels(&self) -> usize {
        self.width * self.height
    }
}

impl LinearOperator for DiscreteGradient {
    fn input_len(&self) -> usize {
        self.pixels()
    }

    fn output_len(&self) -> usize {
        2 * self.pixels()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.input_len(), x.len())?;
        check_len(self.output_len(), out.len())?;
        let (w, h, n) = (self.width, self.height, self.pixels());
        let (horiz, vert) = out.split_at_mut(n);
        for r in 0..h {
            let row = r * w;
            for c in 0..w {
                let i = row + c;
                horiz[i] = if c + 1 < w { x[i + 1] - x[i] } else { 0.0 };
                vert[i] = if r + 1 < h { x[i + w] - x[i] } else { 0.0 };
            }
        }
        Ok(())
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.output_len(), y.len())?;
        check_len(self.input_len(), out.len())?;
        let (w, h, n) = (self.width, self.height, self.pixels());
        let (horiz, vert) = y.split_at(n);
        for r in 0..h {
            let row = r * w;
            for c in 0..w {
                let i = row + c;
                let mut acc = 0.0;
                if c + 1 < w {
                    acc -= horiz[i];
                }
                if c > 0 {
                    acc += horiz[i - 1];
                }
                if r + 1 < h {
                    acc -= vert[i];
                }
                if r > 0 {
                    acc += vert[i - w];
                }
                out[i] = acc;
            }
        }
        Ok(())
    }
}

/// Fourier-diagonal operator `x ↦ Re F⁻¹(response ⊙ F x)`.
///
/// The response must be conjugate symmetric (`r[−k] = conj r[k]` with indices
/// taken modulo the image size) so the operator maps real images to real
/// images.
#[derive(Debug, Clone)]
pub struct FrequencyOperator {
    width: usize,
    height: usize,
    response: Vec<Complex64>,
    plan: Arc<Fft2d>,
}

/// Index of the bin `(−k, −l)` mirrored through the origin.
#[inline]
pub fn mirror_index(width: usize, height: usize, index: usize) -> usize {
    let (r, c) = (index / width, index % width);
    let mr = (height - r) % height;
    let mc = (width - c) % width;
    mr * width + mc
}

impl FrequencyOperator {
    pub fn new(width: usize, height: usize, response: Vec<Complex64>) -> Result<Self> {
        let plan = Arc::new(Fft2d::new(width, height));
        Self::with_plan(plan, response)
    }

    /// Builds an operator that reuses an existing transform plan.
    pub fn with_plan(plan: Arc<Fft2d>, response: Vec<Complex64>) -> Result<Self> {
        let (width, height) = (plan.width(), plan.height());
        check_len(width * height, response.len())?;
        let scale = response.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(1e-300);
        for (i, r) in response.iter().enumerate() {
            let m = mirror_index(width, height, i);
            if (response[m] - r.conj()).norm() > tol {
                return Err(Error::NotConjugateSymmetric { row: i / width, col: i % width });
            }
        }
        Ok(Self { width, height, response, plan })
    }

    pub fn identity(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![Complex64::new(1.0, 0.0); width * height])
            .expect("constant real response is conjugate symmetric")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn response(&self) -> &[Complex64] {
        &self.response
    }

    pub fn plan(&self) -> &Arc<Fft2d> {
        &self.plan
    }

    /// `max_k |r_k|²`, the exact squared operator norm.
    pub fn max_gain_squared(&self) -> f64 {
        self.response.iter().map(|r| r.norm_sqr()).fold(0.0, f64::max)
    }

    /// Operator whose response is the pointwise product of both responses.
    pub fn compose(&self, other: &FrequencyOperator) -> Result<FrequencyOperator> {
        check_len(self.response.len(), other.response.len())?;
        let response = self.response.iter().zip(&other.response).map(|(a, b)| a * b).collect();
        FrequencyOperator::with_plan(self.plan.clone(), response)
    }

    /// Applies the operator and returns the largest imaginary part discarded
    /// when going back to the real domain.
    pub fn apply_with_residue(&self, x: &[f64], adjoint: bool) -> Result<(Vec<f64>, f64)> {
        check_len(self.response.len(), x.len())?;
        let mut buf = self.plan.forward_real(x);
        if adjoint {
            for (b, r) in buf.iter_mut().zip(&self.response) {
                *b *= r.conj();
            }
        } else {
            for (b, r) in buf.iter_mut().zip(&self.response) {
                *b *= r;
            }
        }
        self.plan.inverse(&mut buf);
        let residue = buf.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        Ok((buf.into_iter().map(|v| v.re).collect(), residue))
    }

    fn apply_real(&self, x: &[f64], out: &mut [f64], adjoint: bool) -> Result<()> {
        check_len(self.response.len(), out.len())?;
        let (y, residue) = self.apply_with_residue(x, adjoint)?;
        debug_assert!(
            residue <= 1e-10 * libm::sqrt(norm_sq(x)).max(1e-300),
            "imaginary residue {residue} after frequency-domain apply"
        );
        out.copy_from_slice(&y);
        Ok(())
    }
}

impl LinearOperator for FrequencyOperator {
    fn input_len(&self) -> usize {
        self.response.len()
    }

    fn output_len(&self) -> usize {
        self.response.len()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_real(x, out, false)
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_real(y, out, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn input_len(&self) -> usize {
        self.0
    }

    fn output_len(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.0, x.len())?;
        check_len(self.0, out.len())?;
        out.copy_from_slice(x);
        Ok(())
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_into(y, out)
    }
}

/// The zero map `R^input → R^output`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroOperator {
    pub input: usize,
    pub output: usize,
}

impl LinearOperator for ZeroOperator {
    fn input_len(&self) -> usize {
        self.input
    }

    fn output_len(&self) -> usize {
        self.output
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.input, x.len())?;
        check_len(self.output, out.len())?;
        out.fill(0.0);
        Ok(())
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.output, y.len())?;
        check_len(self.input, out.len())?;
        out.fill(0.0);
        Ok(())
    }
}

/// Power iteration on `AᵀA`, returning the Rayleigh quotient `‖A v‖²` of the
/// final unit vector.
///
/// The estimate never exceeds `‖A‖²` and does not decrease with more
/// iterations. Callers that need an upper bound multiply by
/// [`NORM_SAFETY_FACTOR`].
pub fn estimate_norm_squared(op: &dyn LinearOperator, iterations: usize, seed: u64) -> Result<f64> {
    if iterations == 0 {
        return Err(Error::InvalidConfig("power iteration needs at least one iteration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..op.input_len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let start = libm::sqrt(norm_sq(&v));
    if start == 0.0 {
        return Ok(0.0);
    }
    v.iter_mut().for_each(|x| *x /= start);
    let mut av = vec![0.0; op.output_len()];
    let mut estimate = 0.0;
    for _ in 0..iterations {
        op.apply_into(&v, &mut av)?;
        estimate = norm_sq(&av);
        if estimate == 0.0 {
            return Ok(0.0);
        }
        op.adjoint_into(&av, &mut v)?;
        let nv = libm::sqrt(norm_sq(&v));
        if nv == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    Ok(estimate)
}
