//! Proximity operators.
//!
//! `prox_{γf}(x) = argmin_y f(y) + ‖x − y‖² / (2γ)`. Implementations write into
//! a caller-provided buffer; [`ProxOperator::prox`] allocates.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::schedules::PowerLawSchedule;
use crate::vector::norm;
use crate::{Error, Result};

pub trait ProxOperator {
    /// Writes `prox_{γf}(x)` to `out`.
    fn prox_into(&self, gamma: f64, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn prox(&self, gamma: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.prox_into(gamma, x, &mut out)?;
        Ok(out)
    }

    /// Maps a point back into `dom f`. Only indicators need to do anything.
    fn restore_feasibility(&self, _x: &mut [f64]) {}
}

/// Function values, used for optimality certificates and objective traces.
pub trait ConvexFunction {
    fn eval(&self, x: &[f64]) -> f64;
}

fn check_step(gamma: f64) -> Result<()> {
    if gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveStep(gamma))
    }
}

fn check_out(x: &[f64], out: &[f64]) -> Result<()> {
    if x.len() != out.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: out.len() });
    }
    Ok(())
}

/// `f = 0`; its proximity operator is the identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ZeroFunction;

impl ProxOperator for ZeroFunction {
    fn prox_into(&self, _gamma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_out(x, out)?;
        out.copy_from_slice(x);
        Ok(())
    }
}

impl ConvexFunction for ZeroFunction {
    fn eval(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Indicator of `[lo, hi]^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxConstraint {
    pub lo: f64,
    pub hi: f64,
}

impl BoxConstraint {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidConfig("box constraint needs lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn project(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = v.clamp(self.lo, self.hi);
        }
    }
}

impl ProxOperator for BoxConstraint {
    fn prox_into(&self, _gamma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_out(x, out)?;
        for (o, v) in out.iter_mut().zip(x) {
            *o = v.clamp(self.lo, self.hi);
        }
        Ok(())
    }

    fn restore_feasibility(&self, x: &mut [f64]) {
        self.project(x);
    }
}

impl ConvexFunction for BoxConstraint {
    fn eval(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| (self.lo..=self.hi).contains(v)) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Weighted mixed norm `η Σ_i ‖g_i‖₂` over planar groups.
///
/// A vector of length `G·P` holds `G` stacked planes of `P` entries; group `i`
/// collects entry `i` of every plane. For isotropic TV, `G = 2` and the planes
/// are the horizontal and vertical differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupShrinkSpec {
    pub group_size: usize,
    pub weight: f64,
}

impl GroupShrinkSpec {
    pub fn isotropic_tv(weight: f64) -> Self {
        Self { group_size: 2, weight }
    }

    fn plane_len(&self, len: usize) -> Result<usize> {
        if self.group_size == 0 || !len.is_multiple_of(self.group_size) {
            return Err(Error::GroupLayout { len, group_size: self.group_size });
        }
        Ok(len / self.group_size)
    }

    fn group_norm(&self, x: &[f64], plane: usize, i: usize) -> f64 {
        let mut s = 0.0;
        for j in 0..self.group_size {
            let v = x[i + j * plane];
            s += v * v;
        }
        libm::sqrt(s)
    }
}

impl ProxOperator for GroupShrinkSpec {
    fn prox_into(&self, gamma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_out(x, out)?;
        let plane = self.plane_len(x.len())?;
        let threshold = gamma * self.weight;
        if threshold == 0.0 {
            out.copy_from_slice(x);
            return Ok(());
        }
        for i in 0..plane {
            let nrm = self.group_norm(x, plane, i);
            let factor = if nrm > threshold { 1.0 - threshold / nrm } else { 0.0 };
            for j in 0..self.group_size {
                out[i + j * plane] = factor * x[i + j * plane];
            }
        }
        Ok(())
    }
}

impl ConvexFunction for GroupShrinkSpec {
    fn eval(&self, x: &[f64]) -> f64 {
        let Ok(plane) = self.plane_len(x.len()) else {
            return f64::NAN;
        };
        self.weight * (0..plane).map(|i| self.group_norm(x, plane, i)).sum::<f64>()
    }
}

/// Indicator of `{ ‖g_i‖₂ ≤ radius for every group }`, the convex conjugate of
/// `radius · Σ‖g_i‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupBall {
    pub group_size: usize,
    pub radius: f64,
}

impl ProxOperator for GroupBall {
    fn prox_into(&self, _gamma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_out(x, out)?;
        let spec = GroupShrinkSpec { group_size: self.group_size, weight: self.radius };
        let plane = spec.plane_len(x.len())?;
        for i in 0..plane {
            let nrm = spec.group_norm(x, plane, i);
            let factor = if nrm > self.radius { self.radius / nrm } else { 1.0 };
            for j in 0..self.group_size {
                out[i + j * plane] = factor * x[i + j * plane];
            }
        }
        Ok(())
    }

    fn restore_feasibility(&self, x: &mut [f64]) {
        let copy = x.to_vec();
        let _ = self.prox_into(1.0, &copy, x);
    }
}

impl ConvexFunction for GroupBall {
    fn eval(&self, x: &[f64]) -> f64 {
        let spec = GroupShrinkSpec { group_size: self.group_size, weight: self.radius };
        let Ok(plane) = spec.plane_len(x.len()) else {
            return f64::NAN;
        };
        let tol = 1e-12 * (1.0 + self.radius);
        if (0..plane).all(|i| spec.group_norm(x, plane, i) <= self.radius + tol) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Proximity operator of the convex conjugate `g*`, obtained from that of `g`
/// by Moreau decomposition: `prox_{σg*}(x) = x − σ prox_{g/σ}(x/σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conjugate<P>(pub P);

impl<P: ProxOperator> ProxOperator for Conjugate<P> {
    fn prox_into(&self, sigma: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_step(sigma)?;
        check_out(x, out)?;
        let scaled: Vec<f64> = x.iter().map(|v| v / sigma).collect();
        self.0.prox_into(1.0 / sigma, &scaled, out)?;
        for (o, v) in out.iter_mut().zip(x) {
            *o = v - sigma * *o;
        }
        Ok(())
    }
}

pub fn prox_conjugate(prox_primal: &dyn ProxOperator, sigma: f64, x: &[f64]) -> Result<Vec<f64>> {
    check_step(sigma)?;
    let scaled: Vec<f64> = x.iter().map(|v| v / sigma).collect();
    let inner = prox_primal.prox(1.0 / sigma, &scaled)?;
    Ok(x.iter().zip(&inner).map(|(v, p)| v - sigma * p).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    Off,
    ScaledShift,
}

/// Synthetic inexactness for the proximity step: the perturbed operator stays
/// within `α_n ‖x‖ + β_n` of the exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxPerturbation {
    pub alpha: PowerLawSchedule,
    pub beta: PowerLawSchedule,
    pub mode: PerturbationMode,
    pub seed: u64,
}

impl ProxPerturbation {
    pub const fn off() -> Self {
        Self {
            alpha: PowerLawSchedule::zero(),
            beta: PowerLawSchedule::zero(),
            mode: PerturbationMode::Off,
            seed: 0,
        }
    }

    pub fn radius(&self, n: usize, x_norm: f64) -> f64 {
        self.alpha.evaluate(n) * x_norm + self.beta.evaluate(n)
    }
}

fn point_hash(seed: u64, n: usize, x: &[f64]) -> u64 {
    // FNV-1a over the iteration index and the bit patterns of x
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for word in core::iter::once(n as u64).chain(x.iter().map(|v| v.to_bits())) {
        h ^= word;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Unit vector determined by `(seed, n, x)`.
pub(crate) fn seeded_direction(seed: u64, n: usize, x: &[f64], len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(point_hash(seed, n, x));
    loop {
        let mut d: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nd = norm(&d);
        if nd > 0.0 {
            d.iter_mut().for_each(|v| *v /= nd);
            return d;
        }
    }
}

/// Evaluates the perturbed operator `prox_{γ f_n}(x)`.
///
/// In `ScaledShift` mode the exact result is moved along a seeded unit
/// direction by exactly `α_n ‖x‖ + β_n`, then mapped back into `dom f`; the
/// projection is nonexpansive, so the distance to the exact value stays within
/// the bound.
pub fn perturbed_prox(
    exact: &dyn ProxOperator,
    pert: &ProxPerturbation,
    n: usize,
    gamma: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut p = exact.prox(gamma, x)?;
    if pert.mode == PerturbationMode::Off {
        return Ok(p);
    }
    let radius = pert.radius(n, norm(x));
    if radius == 0.0 {
        return Ok(p);
    }
    let dir = seeded_direction(pert.seed, n, x, x.len());
    for (pi, di) in p.iter_mut().zip(&dir) {
        *pi += radius * di;
    }
    exact.restore_feasibility(&mut p);
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{dist, dot};
    use proptest::prelude::*;

    #[test]
    fn box_examples() {
        let b = BoxConstraint::new(0.0, 255.0).unwrap();
        let x = [0.0, 12.5, 255.0, 100.0];
        assert_eq!(b.prox(1.0, &x).unwrap(), x.to_vec());
        assert_eq!(b.prox(1.0, &[300.0, -7.0]).unwrap(), vec![255.0, 0.0]);
        assert!(BoxConstraint::new(1.0, 0.0).is_err());
    }

    #[test]
    fn group_shrink_examples() {
        let g = GroupShrinkSpec { group_size: 2, weight: 5.0 };
        assert_eq!(g.prox(1.0, &[3.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(g.prox(1.0, &[6.0, 8.0]).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn group_shrink_planar_layout() {
        // two pixels; planes [h0, h1] and [v0, v1]
        let g = GroupShrinkSpec::isotropic_tv(5.0);
        let out = g.prox(1.0, &[6.0, 3.0, 8.0, 4.0]).unwrap();
        assert_eq!(out, vec![3.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn group_shrink_malformed_grouping() {
        let g = GroupShrinkSpec::isotropic_tv(1.0);
        assert!(matches!(g.prox(1.0, &[1.0, 2.0, 3.0]), Err(Error::GroupLayout { len: 3, group_size: 2 })));
    }

    #[test]
    fn group_shrink_weight_zero_is_identity() {
        let g = GroupShrinkSpec::isotropic_tv(0.0);
        let x = [0.3, -1.2, 5.0, 2.0];
        assert_eq!(g.prox(3.0, &x).unwrap(), x.to_vec());
    }

    /// Golden-section minimization of `t ↦ c·t + (r − t)²/2` over `[0, r]`,
    /// i.e. the objective restricted to the ray through x.
    fn radial_oracle(r: f64, c: f64) -> f64 {
        let f = |t: f64| c * t + 0.5 * (r - t) * (r - t);
        let (mut a, mut b) = (0.0, r);
        let phi = (libm::sqrt(5.0) - 1.0) / 2.0;
        for _ in 0..200 {
            let m1 = b - phi * (b - a);
            let m2 = a + phi * (b - a);
            if f(m1) <= f(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn group_shrink_matches_radial_and_grid_oracles() {
        let x = [1.0, 1.0];
        let threshold = 0.3;
        let g = GroupShrinkSpec { group_size: 2, weight: threshold };
        let p = g.prox(1.0, &x).unwrap();
        let r = norm(&x);
        let t = radial_oracle(r, threshold);
        assert!((p[0] - t * x[0] / r).abs() < 1e-3);
        assert!((p[1] - t * x[1] / r).abs() < 1e-3);

        let obj = |y0: f64, y1: f64| threshold * libm::sqrt(y0 * y0 + y1 * y1) + 0.5 * ((y0 - 1.0).powi(2) + (y1 - 1.0).powi(2));
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let step = 5e-4;
        for i in 0..=2000 {
            for j in 0..=2000 {
                let (y0, y1) = (0.5 + i as f64 * step / 2.0, 0.5 + j as f64 * step / 2.0);
                let v = obj(y0, y1);
                if v < best.0 {
                    best = (v, y0, y1);
                }
            }
        }
        assert!((p[0] - best.1).abs() < 1e-3 && (p[1] - best.2).abs() < 1e-3);
    }

    #[test]
    fn conjugate_of_l2_is_disk_projection() {
        let g = GroupShrinkSpec { group_size: 2, weight: 1.0 };
        assert_eq!(prox_conjugate(&g, 1.0, &[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
        let p = prox_conjugate(&g, 1.0, &[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert!(matches!(prox_conjugate(&g, 0.0, &[1.0, 1.0]), Err(Error::NonPositiveStep(_))));
        assert!(Conjugate(g).prox(-1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn perturbation_off_is_bitwise_exact() {
        let b = BoxConstraint::new(0.0, 1.0).unwrap();
        let x = [0.2, 1.7, -0.3];
        let exact = b.prox(0.5, &x).unwrap();
        let mut pert = ProxPerturbation::off();
        assert_eq!(perturbed_prox(&b, &pert, 3, 0.5, &x).unwrap(), exact);
        pert.mode = PerturbationMode::ScaledShift;
        assert_eq!(perturbed_prox(&b, &pert, 3, 0.5, &x).unwrap(), exact);
    }

    #[test]
    fn perturbation_radius_bound() {
        let pert = ProxPerturbation {
            alpha: PowerLawSchedule::constant(1e-3),
            beta: PowerLawSchedule::constant(1e-4),
            mode: PerturbationMode::ScaledShift,
            seed: 11,
        };
        let x = [2.0, 0.0];
        let exact = ZeroFunction.prox(1.0, &x).unwrap();
        let p = perturbed_prox(&ZeroFunction, &pert, 1, 1.0, &x).unwrap();
        let d = dist(&p, &exact);
        assert!(d <= 2.1e-3 + 1e-15);
        // without a constraint the shift is exactly the radius
        assert!((d - 2.1e-3).abs() < 1e-15);
        // same (n, x) gives the same direction
        assert_eq!(p, perturbed_prox(&ZeroFunction, &pert, 1, 1.0, &x).unwrap());
    }

    #[test]
    fn perturbation_keeps_box_feasibility() {
        let b = BoxConstraint::new(0.0, 1.0).unwrap();
        let pert = ProxPerturbation {
            alpha: PowerLawSchedule::constant(0.1),
            beta: PowerLawSchedule::constant(0.05),
            mode: PerturbationMode::ScaledShift,
            seed: 5,
        };
        let x = [1.5, -2.0, 0.5, 0.99];
        for n in 0..20 {
            let p = perturbed_prox(&b, &pert, n, 1.0, &x).unwrap();
            assert_eq!(b.eval(&p), 0.0);
            assert!(dist(&p, &b.prox(1.0, &x).unwrap()) <= pert.radius(n, norm(&x)) + 1e-15);
        }
    }

    fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-20.0f64..20.0, len)
    }

    fn check_firm(p: &dyn ProxOperator, gamma: f64, x: &[f64], y: &[f64]) -> bool {
        let px = p.prox(gamma, x).unwrap();
        let py = p.prox(gamma, y).unwrap();
        let dp: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        dist(&px, &py) <= dist(x, y) + 1e-12 && dot(&dp, &dp) <= dot(&dp, &dx) + 1e-10
    }

    proptest! {
        #[test]
        fn firm_nonexpansiveness(x in vec_strategy(8), y in vec_strategy(8), gamma in 0.01f64..5.0, w in 0.0f64..4.0) {
            let b = BoxConstraint { lo: -3.0, hi: 7.0 };
            prop_assert!(check_firm(&b, gamma, &x, &y));
            prop_assert!(check_firm(&GroupShrinkSpec::isotropic_tv(w), gamma, &x, &y));
            prop_assert!(check_firm(&Conjugate(GroupShrinkSpec::isotropic_tv(w)), gamma, &x, &y));
            prop_assert!(check_firm(&ZeroFunction, gamma, &x, &y));
        }

        #[test]
        fn moreau_identity(x in vec_strategy(6), sigma in 0.01f64..10.0, w in 0.0f64..4.0) {
            let g = GroupShrinkSpec::isotropic_tv(w);
            let conj = prox_conjugate(&g, sigma, &x).unwrap();
            let scaled: Vec<f64> = x.iter().map(|v| v / sigma).collect();
            let primal = g.prox(1.0 / sigma, &scaled).unwrap();
            let scale = 1.0 + norm(&x);
            for i in 0..x.len() {
                prop_assert!((conj[i] + sigma * primal[i] - x[i]).abs() <= 1e-12 * scale);
            }
            // and it matches the direct projection onto the radius-w disks
            let direct = GroupBall { group_size: 2, radius: w }.prox(sigma, &x).unwrap();
            for i in 0..x.len() {
                prop_assert!((conj[i] - direct[i]).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn prox_optimality_certificate(x in vec_strategy(4), gamma in 0.05f64..3.0, w in 0.0f64..3.0, probes in proptest::collection::vec(vec_strategy(4), 100)) {
            let obj = |f: &dyn ConvexFunction, y: &[f64]| f.eval(y) + dist(&x, y).powi(2) / (2.0 * gamma);
            let funcs: [(&dyn ProxOperator, &dyn ConvexFunction); 3] = [
                (&GroupShrinkSpec::isotropic_tv(w), &GroupShrinkSpec::isotropic_tv(w)),
                (&BoxConstraint { lo: -1.0, hi: 2.0 }, &BoxConstraint { lo: -1.0, hi: 2.0 }),
                (&GroupBall { group_size: 2, radius: w }, &GroupBall { group_size: 2, radius: w }),
            ];
            for (p, f) in funcs {
                let px = p.prox(gamma, &x).unwrap();
                let at_prox = obj(f, &px);
                for y in &probes {
                    prop_assert!(at_prox <= obj(f, y) + 1e-10);
                }
            }
        }
    }
}
