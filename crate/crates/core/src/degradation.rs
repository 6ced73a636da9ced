//! Stochastic blur observation model `z_n = K_n x̄ + e_n`.
//!
//! `K_n` keeps each DFT bin of a uniform `s × s` box blur with probability
//! `keep_prob` and zeroes it otherwise; `e_n` is white Gaussian noise. Masks are
//! drawn on pairs of mirrored bins so that `K_n` stays real.
//!
//! Every record is random-access: its seeds are derived from the master seed
//! and the record index in counter mode, so any record can be rebuilt without
//! replaying the ones before it.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::{Complex64, Fft2d};
use crate::image::Image;
use crate::linops::{mirror_index, FrequencyOperator};
use crate::{Error, Result};

const MASK_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationConfig {
    pub blur_size: usize,
    pub keep_prob: f64,
    pub noise_sigma: f64,
    pub width: usize,
    pub height: usize,
    pub master_seed: u64,
}

impl DegradationConfig {
    /// 5×5 box blur, keep probability 0.3, noise σ = 5.
    pub fn standard(width: usize, height: usize, master_seed: u64) -> Self {
        Self { blur_size: 5, keep_prob: 0.3, noise_sigma: 5.0, width, height, master_seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive"));
        }
        if self.blur_size == 0 || self.blur_size.is_multiple_of(2) {
            return Err(Error::InvalidConfig("blur size must be a positive odd integer"));
        }
        if self.blur_size > self.width.min(self.height) {
            return Err(Error::InvalidConfig("blur size exceeds image size"));
        }
        if !(0.0..=1.0).contains(&self.keep_prob) {
            return Err(Error::InvalidConfig("keep probability must lie in [0, 1]"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise sigma must be nonnegative"));
        }
        Ok(())
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// Seeds that fully determine `(K_n, e_n)` for record `index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ObservationRecord {
    pub index: usize,
    pub mask_seed: u64,
    pub noise_seed: u64,
}

/// Counter-mode seed derivation: word `2·index` of ChaCha8 keyed by
/// `master` on `stream`.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

pub fn record_for(cfg: &DegradationConfig, index: usize) -> ObservationRecord {
    ObservationRecord {
        index,
        mask_seed: derive_seed(cfg.master_seed, MASK_STREAM, index as u64),
        noise_seed: derive_seed(cfg.master_seed, NOISE_STREAM, index as u64),
    }
}

/// Frequency response of the centred, unit-sum `s × s` box kernel.
pub fn nominal_blur_response(cfg: &DegradationConfig) -> FrequencyOperator {
    nominal_blur_with_plan(cfg, Arc::new(Fft2d::new(cfg.width, cfg.height)))
}

fn nominal_blur_with_plan(cfg: &DegradationConfig, plan: Arc<Fft2d>) -> FrequencyOperator {
    let (w, h) = (cfg.width, cfg.height);
    let half = (cfg.blur_size / 2) as isize;
    let tap = 1.0 / (cfg.blur_size * cfg.blur_size) as f64;
    let mut kernel = vec![0.0; w * h];
    for dr in -half..=half {
        for dc in -half..=half {
            let r = dr.rem_euclid(h as isize) as usize;
            let c = dc.rem_euclid(w as isize) as usize;
            kernel[r * w + c] += tap;
        }
    }
    let mut response = plan.forward_real(&kernel);
    // the kernel is even, so the response is real up to rounding
    for v in response.iter_mut() {
        v.im = 0.0;
    }
    for i in 0..w * h {
        let m = mirror_index(w, h, i);
        if m < i {
            let avg = 0.5 * (response[i].re + response[m].re);
            response[i].re = avg;
            response[m].re = avg;
        }
    }
    FrequencyOperator::with_plan(plan, response).expect("real response is conjugate symmetric")
}

/// Bernoulli keep-mask on the DFT grid, sampled once per mirrored pair.
pub fn sample_mask(width: usize, height: usize, keep_prob: f64, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = width * height;
    let mut mask = vec![false; n];
    for i in 0..n {
        let m = mirror_index(width, height, i);
        mask[i] = if m < i { mask[m] } else { rng.random::<f64>() < keep_prob };
    }
    mask
}

/// Simulator of the observation stream for a fixed ground truth `x̄`.
#[derive(Debug, Clone)]
pub struct DegradationModel {
    cfg: DegradationConfig,
    xbar: Image,
    nominal: FrequencyOperator,
    xbar_hat: Vec<Complex64>,
}

impl DegradationModel {
    pub fn new(cfg: DegradationConfig, xbar: Image) -> Result<Self> {
        cfg.validate()?;
        if xbar.width != cfg.width || xbar.height != cfg.height {
            return Err(Error::DimensionMismatch { expected: cfg.pixels(), got: xbar.len() });
        }
        let plan = Arc::new(Fft2d::new(cfg.width, cfg.height));
        let nominal = nominal_blur_with_plan(&cfg, plan.clone());
        let xbar_hat = plan.forward_real(&xbar.data);
        Ok(Self { cfg, xbar, nominal, xbar_hat })
    }

    pub fn config(&self) -> &DegradationConfig {
        &self.cfg
    }

    pub fn ground_truth(&self) -> &Image {
        &self.xbar
    }

    pub fn nominal(&self) -> &FrequencyOperator {
        &self.nominal
    }

    pub fn record(&self, index: usize) -> ObservationRecord {
        record_for(&self.cfg, index)
    }

    pub fn operator_for(&self, record: &ObservationRecord) -> FrequencyOperator {
        let mask = sample_mask(self.cfg.width, self.cfg.height, self.cfg.keep_prob, record.mask_seed);
        let response = self
            .nominal
            .response()
            .iter()
            .zip(&mask)
            .map(|(r, keep)| if *keep { *r } else { Complex64::new(0.0, 0.0) })
            .collect();
        FrequencyOperator::with_plan(self.nominal.plan().clone(), response)
            .expect("mirrored mask preserves conjugate symmetry")
    }

    pub fn noise_for(&self, record: &ObservationRecord) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(record.noise_seed);
        let sigma = self.cfg.noise_sigma;
        (0..self.cfg.pixels())
            .map(|_| {
                let g: f64 = StandardNormal.sample(&mut rng);
                sigma * g
            })
            .collect()
    }

    /// `K x̄` for the given operator, using the cached spectrum of `x̄`.
    pub fn blurred_truth(&self, op: &FrequencyOperator) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self.xbar_hat.iter().zip(op.response()).map(|(x, r)| x * r).collect();
        op.plan().inverse(&mut buf);
        buf.into_iter().map(|v| v.re).collect()
    }

    /// Materializes `(K_n, z_n)` for a record.
    pub fn observe(&self, record: &ObservationRecord) -> (FrequencyOperator, Vec<f64>) {
        let op = self.operator_for(record);
        let mut z = self.blurred_truth(&op);
        if self.cfg.noise_sigma > 0.0 {
            for (zi, ei) in z.iter_mut().zip(self.noise_for(record)) {
                *zi += ei;
            }
        }
        (op, z)
    }
}

pub fn sample_operator(cfg: &DegradationConfig, n: usize) -> Result<FrequencyOperator> {
    cfg.validate()?;
    let nominal = nominal_blur_response(cfg);
    let mask = sample_mask(cfg.width, cfg.height, cfg.keep_prob, record_for(cfg, n).mask_seed);
    let response = nominal
        .response()
        .iter()
        .zip(&mask)
        .map(|(r, keep)| if *keep { *r } else { Complex64::new(0.0, 0.0) })
        .collect();
    FrequencyOperator::with_plan(nominal.plan().clone(), response)
}

pub fn sample_observation(cfg: &DegradationConfig, xbar: &Image, n: usize) -> Result<(ObservationRecord, Image)> {
    let model = DegradationModel::new(*cfg, xbar.clone())?;
    let record = model.record(n);
    let (_, z) = model.observe(&record);
    Ok((record, Image { width: cfg.width, height: cfg.height, data: z }))
}

/// A source of `(K_n, z_n)` pairs indexed by `n`.
pub trait ObservationSource {
    /// Number of available records, `None` when unbounded.
    fn available(&self) -> Option<usize>;
    fn dims(&self) -> (usize, usize);
    fn observation(&self, n: usize) -> Result<(FrequencyOperator, Vec<f64>)>;
}

impl ObservationSource for DegradationModel {
    fn available(&self) -> Option<usize> {
        None
    }

    fn dims(&self) -> (usize, usize) {
        (self.cfg.width, self.cfg.height)
    }

    fn observation(&self, n: usize) -> Result<(FrequencyOperator, Vec<f64>)> {
        Ok(self.observe(&self.record(n)))
    }
}

/// Finite stream replaying a fixed list of records (e.g. from a manifest).
#[derive(Debug, Clone)]
pub struct ReplayStream {
    model: DegradationModel,
    records: Vec<ObservationRecord>,
}

impl ReplayStream {
    pub fn new(model: DegradationModel, records: Vec<ObservationRecord>) -> Self {
        Self { model, records }
    }

    pub fn records(&self) -> &[ObservationRecord] {
        &self.records
    }
}

impl ObservationSource for ReplayStream {
    fn available(&self) -> Option<usize> {
        Some(self.records.len())
    }

    fn dims(&self) -> (usize, usize) {
        self.model.dims()
    }

    fn observation(&self, n: usize) -> Result<(FrequencyOperator, Vec<f64>)> {
        let record = self
            .records
            .get(n)
            .ok_or(Error::StreamExhausted { needed: n + 1, available: self.records.len() })?;
        Ok(self.model.observe(record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::LinearOperator;
    use core::f64::consts::PI;

    fn dirichlet(size: usize, k: usize, n: usize) -> f64 {
        let s = size as f64;
        let x = PI * k as f64 / n as f64;
        if libm::fabs(libm::sin(x)) < 1e-15 {
            return 1.0;
        }
        libm::sin(s * x) / (s * libm::sin(x))
    }

    #[test]
    fn nominal_response_dc_and_bound() {
        let cfg = DegradationConfig::standard(32, 24, 0);
        let op = nominal_blur_response(&cfg);
        assert!((op.response()[0].re - 1.0).abs() < 1e-14);
        let max = op.response().iter().map(|r| r.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-14);
        assert!(op.response().iter().all(|r| r.norm() <= 1.0 + 1e-14));
    }

    #[test]
    fn nominal_response_is_product_of_dirichlet_kernels() {
        let (w, h) = (30, 22);
        let cfg = DegradationConfig::standard(w, h, 0);
        let op = nominal_blur_response(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let k = rng.random_range(0..h);
            let l = rng.random_range(0..w);
            let expected = dirichlet(5, k, h) * dirichlet(5, l, w);
            let got = op.response()[k * w + l];
            assert!((got.re - expected).abs() < 1e-10 && got.im.abs() < 1e-10, "({k},{l})");
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let cfg = DegradationConfig::standard(16, 16, 0);
        let op = nominal_blur_response(&cfg);
        let y = op.apply(&[42.0; 256]).unwrap();
        assert!(y.iter().all(|v| (v - 42.0).abs() < 1e-10));
    }

    #[test]
    fn keep_all_and_keep_none() {
        let mut cfg = DegradationConfig::standard(12, 10, 3);
        cfg.keep_prob = 1.0;
        let full = sample_operator(&cfg, 4).unwrap();
        assert_eq!(full.response(), nominal_blur_response(&cfg).response());
        cfg.keep_prob = 0.0;
        let none = sample_operator(&cfg, 4).unwrap();
        assert!(none.response().iter().all(|r| r.norm() == 0.0));
    }

    #[test]
    fn keep_fraction_near_probability() {
        let mask = sample_mask(100, 100, 0.3, record_for(&DegradationConfig::standard(100, 100, 0), 0).mask_seed);
        let frac = mask.iter().filter(|m| **m).count() as f64 / mask.len() as f64;
        assert!((frac - 0.3).abs() <= 0.02, "{frac}");
    }

    #[test]
    fn sampled_operators_are_conjugate_symmetric() {
        for (w, h) in [(8, 8), (7, 5), (16, 9)] {
            let cfg = DegradationConfig { blur_size: 3, ..DegradationConfig::standard(w, h, 17) };
            for n in 0..10 {
                let op = sample_operator(&cfg, n).unwrap();
                for i in 0..w * h {
                    let m = mirror_index(w, h, i);
                    assert_eq!(op.response()[m], op.response()[i].conj());
                }
            }
        }
    }

    #[test]
    fn noiseless_full_keep_is_plain_blur() {
        let cfg = DegradationConfig { keep_prob: 1.0, noise_sigma: 0.0, ..DegradationConfig::standard(16, 12, 5) };
        let xbar = crate::image::synthetic_scene(16, 12);
        let (_, z) = sample_observation(&cfg, &xbar, 0).unwrap();
        let blurred = nominal_blur_response(&cfg).apply(&xbar.data).unwrap();
        for (a, b) in z.data.iter().zip(&blurred) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn noise_standard_deviation() {
        let cfg = DegradationConfig::standard(256, 256, 0);
        let xbar = crate::image::synthetic_scene(256, 256);
        let model = DegradationModel::new(cfg, xbar).unwrap();
        let rec = model.record(0);
        let (op, z) = model.observe(&rec);
        let clean = op.apply(&model.ground_truth().data).unwrap();
        let resid: Vec<f64> = z.iter().zip(&clean).map(|(a, b)| a - b).collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var = resid.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((var.sqrt() - 5.0).abs() <= 0.1, "{}", var.sqrt());
    }

    #[test]
    fn replay_is_bit_identical() {
        let cfg = DegradationConfig::standard(16, 16, 8);
        let xbar = crate::image::synthetic_scene(16, 16);
        let (r1, z1) = sample_observation(&cfg, &xbar, 5).unwrap();
        let (r2, z2) = sample_observation(&cfg, &xbar, 5).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(z1, z2);
        let (r3, z3) = sample_observation(&cfg, &xbar, 6).unwrap();
        assert_ne!(r1, r3);
        assert_ne!(z1, z3);
    }

    #[test]
    fn record_seeds_are_random_access() {
        let cfg = DegradationConfig::standard(8, 8, 123);
        let forward: Vec<_> = (0..20).map(|n| record_for(&cfg, n)).collect();
        for n in (0..20).rev() {
            assert_eq!(record_for(&cfg, n), forward[n]);
        }
        let mut seeds: Vec<u64> = forward.iter().flat_map(|r| [r.mask_seed, r.noise_seed]).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 40);
    }

    #[test]
    fn replay_stream_exhaustion() {
        let cfg = DegradationConfig::standard(8, 8, 1);
        let model = DegradationModel::new(cfg, Image::zeros(8, 8)).unwrap();
        let records = (0..3).map(|n| model.record(n)).collect();
        let stream = ReplayStream::new(model.clone(), records);
        assert_eq!(stream.observation(1).unwrap().1, model.observation(1).unwrap().1);
        assert_eq!(stream.observation(3).unwrap_err(), Error::StreamExhausted { needed: 4, available: 3 });
    }

    #[test]
    fn config_validation() {
        let ok = DegradationConfig::standard(8, 8, 0);
        assert!(ok.validate().is_ok());
        assert!(DegradationConfig { blur_size: 4, ..ok }.validate().is_err());
        assert!(DegradationConfig { blur_size: 9, ..ok }.validate().is_err());
        assert!(DegradationConfig { keep_prob: 1.5, ..ok }.validate().is_err());
        assert!(DegradationConfig { noise_sigma: -1.0, ..ok }.validate().is_err());
        assert!(DegradationModel::new(ok, Image::zeros(4, 8)).is_err());
    }
}
