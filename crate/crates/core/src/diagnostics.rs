//! Quality metrics and trace post-processing.

use alloc::vec::Vec;

use crate::oracles::GradientOracle;
use crate::prox::ProxOperator;
use crate::schedules::PowerLawSchedule;
use crate::solvers::{Snapshot, Trace};
use crate::vector::{dist, norm_sq};
use crate::{Error, Result};

pub const SNR_CAP_DB: f64 = 300.0;
pub const SNR_ERROR_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub snr_db: f64,
    /// `Σ x̄²`
    pub numerator: f64,
    /// `Σ (x − x̄)²`
    pub denominator: f64,
    pub capped: bool,
}

/// `10 log₁₀(Σ x̄² / Σ (x − x̄)²)`, without mean removal.
pub fn snr(reference: &[f64], estimate: &[f64]) -> Result<SnrReport> {
    if reference.len() != estimate.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), got: estimate.len() });
    }
    let numerator = norm_sq(reference);
    if numerator == 0.0 {
        return Err(Error::ZeroReference);
    }
    let denominator: f64 = reference.iter().zip(estimate).map(|(r, e)| (e - r) * (e - r)).sum();
    let raw = 10.0 * libm::log10(numerator / denominator.max(SNR_ERROR_FLOOR));
    let capped = denominator < SNR_ERROR_FLOOR || raw > SNR_CAP_DB;
    Ok(SnrReport { snr_db: raw.min(SNR_CAP_DB), numerator, denominator, capped })
}

/// `(n, ‖x_n − x_final‖)` for every kept iterate, `x_0` included.
///
/// Needs the iterates at `0, stride, 2·stride, …` and the last one; a gap is
/// reported against the stride setting.
pub fn residual_curve(snapshots: &[Snapshot], stride: usize, x_final: &[f64]) -> Result<Vec<(usize, f64)>> {
    let Some(last) = snapshots.last() else {
        return Err(Error::MissingSnapshot { iteration: 0, stride });
    };
    let mut expected = 0;
    for s in snapshots {
        if s.n != expected && s.n != last.n {
            return Err(Error::MissingSnapshot { iteration: expected, stride });
        }
        expected = if stride == 0 { last.n } else { s.n + stride };
        if expected > last.n {
            expected = last.n;
        }
    }
    if snapshots[0].n != 0 {
        return Err(Error::MissingSnapshot { iteration: 0, stride });
    }
    Ok(snapshots.iter().map(|s| (s.n, dist(&s.x, x_final))).collect())
}

pub fn trace_residual_curve(trace: &Trace, x_final: &[f64]) -> Result<Vec<(usize, f64)>> {
    residual_curve(&trace.snapshots, trace.stride, x_final)
}

/// Partial sums of the two forward-backward series
/// `Σ λ_n ‖∇g(x_n) − ∇g(z)‖²` and
/// `Σ λ_n ‖x_n − γ_n ∇g(x_n) − prox_{γ_n f}(x_n − γ_n ∇g(x_n)) + γ_n ∇g(z)‖²`,
/// evaluated on the kept iterates with `z` standing in for a solution (usually
/// the final iterate). Only the snapshot terms enter, so with a stride above 1
/// the sums are a subsample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub n: usize,
    pub gradient_series: f64,
    pub prox_series: f64,
}

pub fn fb_series_monitor(
    snapshots: &[Snapshot],
    gamma: &PowerLawSchedule,
    lambda: &PowerLawSchedule,
    prox_f: &dyn ProxOperator,
    exact_gradient: &mut dyn GradientOracle,
    z: &[f64],
) -> Result<Vec<SeriesPoint>> {
    let mut grad_z = alloc::vec![0.0; z.len()];
    exact_gradient.gradient(z, 0, &mut grad_z)?;
    let mut g = alloc::vec![0.0; z.len()];
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let n = snap.n;
        let (lam, gam) = (lambda.evaluate(n), gamma.evaluate(n));
        exact_gradient.gradient(&snap.x, n, &mut g)?;
        s1 += lam * g.iter().zip(&grad_z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let fwd: Vec<f64> = snap.x.iter().zip(&g).map(|(x, gi)| x - gam * gi).collect();
        let p = prox_f.prox(gam, &fwd)?;
        s2 += lam
            * fwd
                .iter()
                .zip(&p)
                .zip(&grad_z)
                .map(|((f, pi), gz)| {
                    let r = f - pi + gam * gz;
                    r * r
                })
                .sum::<f64>();
        out.push(SeriesPoint { n, gradient_series: s1, prox_series: s2 });
    }
    Ok(out)
}

/// Median of each consecutive window of `width` values.
pub fn windowed_medians(values: &[f64], width: usize) -> Vec<f64> {
    if width == 0 {
        return Vec::new();
    }
    values
        .chunks_exact(width)
        .map(|w| {
            let mut s = w.to_vec();
            s.sort_by(f64::total_cmp);
            let mid = s.len() / 2;
            if s.len() % 2 == 0 {
                0.5 * (s[mid - 1] + s[mid])
            } else {
                s[mid]
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn snr_examples() {
        let r = vec![100.0; 16];
        assert!(snr(&r, &r).unwrap().capped);
        assert_eq!(snr(&r, &r).unwrap().snr_db, SNR_CAP_DB);
        let e: Vec<f64> = r.iter().map(|v| v + 10.0).collect();
        assert!((snr(&r, &e).unwrap().snr_db - 20.0).abs() < 1e-12);
        assert_eq!(snr(&[0.0; 4], &[1.0; 4]).unwrap_err(), Error::ZeroReference);
    }

    #[test]
    fn doubling_error_costs_six_db() {
        let r: Vec<f64> = (0..30).map(|i| 50.0 + i as f64).collect();
        let e1: Vec<f64> = r.iter().enumerate().map(|(i, v)| v + libm::sin(i as f64)).collect();
        let e2: Vec<f64> = r.iter().enumerate().map(|(i, v)| v + 2.0 * libm::sin(i as f64)).collect();
        let d = snr(&r, &e1).unwrap().snr_db - snr(&r, &e2).unwrap().snr_db;
        assert!((d - 20.0 * libm::log10(2.0)).abs() < 1e-10);
    }

    #[test]
    fn residual_curve_examples() {
        let snaps = vec![Snapshot { n: 0, x: vec![1.0, 1.0] }, Snapshot { n: 1, x: vec![4.0, 5.0] }];
        assert_eq!(residual_curve(&snaps, 10, &[4.0, 5.0]).unwrap(), vec![(0, 5.0), (1, 0.0)]);
        let flat: Vec<Snapshot> = (0..4).map(|k| Snapshot { n: 2 * k, x: vec![3.0] }).collect();
        assert!(residual_curve(&flat, 2, &[3.0]).unwrap().iter().all(|p| p.1 == 0.0));
    }

    #[test]
    fn residual_curve_reports_gaps() {
        let snaps = vec![
            Snapshot { n: 0, x: vec![0.0] },
            Snapshot { n: 10, x: vec![0.0] },
            Snapshot { n: 30, x: vec![0.0] },
            Snapshot { n: 33, x: vec![0.0] },
        ];
        assert_eq!(residual_curve(&snaps, 10, &[0.0]).unwrap_err(), Error::MissingSnapshot { iteration: 20, stride: 10 });
        assert!(residual_curve(&[], 10, &[0.0]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(windowed_medians(&[3.0, 1.0, 2.0, 9.0, 8.0, 7.0, 5.0], 3), vec![2.0, 8.0]);
        assert_eq!(windowed_medians(&[4.0, 1.0], 2), vec![2.5]);
    }

    proptest! {
        #[test]
        fn snr_is_scale_invariant(
            r in proptest::collection::vec(1.0f64..200.0, 8),
            e in proptest::collection::vec(-5.0f64..5.0, 8),
            alpha in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        ) {
            let x: Vec<f64> = r.iter().zip(&e).map(|(a, b)| a + b).collect();
            let ar: Vec<f64> = r.iter().map(|v| alpha * v).collect();
            let ax: Vec<f64> = x.iter().map(|v| alpha * v).collect();
            let s1 = snr(&r, &x).unwrap();
            let s2 = snr(&ar, &ax).unwrap();
            prop_assume!(!s1.capped);
            prop_assert!((s1.snr_db - s2.snr_db).abs() < 1e-9);
        }
    }
}
