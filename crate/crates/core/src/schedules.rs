//! Parametric scalar sequences and symbolic checks of the convergence
//! hypotheses that involve them.
//!
//! Every sequence used by the solvers (relaxation λ_n, step γ_n, batch size
//! m_n, error magnitudes) is a [`PowerLawSchedule`]. Because the closed form is
//! known, questions such as "is Σ λ_n β_n finite?" reduce to comparing decay
//! exponents, which is what the validators here do.

use core::fmt;

use alloc::vec::Vec;

/// Closed form of a [`PowerLawSchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleForm {
    /// `c · max(n, 1)^(−p)`
    Pure,
    /// `c / (1 + (n / pivot)^p)`
    Saturating,
    /// `ceil(c · n^p)`
    PowerGrowth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawSchedule {
    pub amplitude: f64,
    pub exponent: f64,
    pub pivot: f64,
    pub form: ScheduleForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Constant,
    NonIncreasing,
    NonDecreasing,
}

/// Asymptotic behaviour of a schedule: identically zero, or `~ C n^(−q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    Zero,
    Power(f64),
}

impl PowerLawSchedule {
    pub const fn constant(value: f64) -> Self {
        Self { amplitude: value, exponent: 0.0, pivot: 1.0, form: ScheduleForm::Pure }
    }

    pub const fn zero() -> Self {
        Self::constant(0.0)
    }

    pub const fn pure(amplitude: f64, exponent: f64) -> Self {
        Self { amplitude, exponent, pivot: 1.0, form: ScheduleForm::Pure }
    }

    /// `(1 + (n / pivot)^p)^(−1)`, values in `]0, 1]` for `p ≥ 0`.
    pub const fn saturating(exponent: f64, pivot: f64) -> Self {
        Self { amplitude: 1.0, exponent, pivot, form: ScheduleForm::Saturating }
    }

    pub const fn power_growth(exponent: f64) -> Self {
        Self { amplitude: 1.0, exponent, pivot: 1.0, form: ScheduleForm::PowerGrowth }
    }

    pub fn evaluate(&self, n: usize) -> f64 {
        let c = self.amplitude;
        let p = self.exponent;
        let nf = n as f64;
        match self.form {
            ScheduleForm::Pure => {
                if p == 0.0 {
                    c
                } else {
                    c * libm::pow(nf.max(1.0), -p)
                }
            }
            ScheduleForm::Saturating => c / (1.0 + libm::pow(nf / self.pivot, p)),
            // The relative slack keeps exact integer powers (e.g. 3^2) from
            // being rounded up by representation error.
            ScheduleForm::PowerGrowth => libm::ceil(c * libm::pow(nf, p) * (1.0 - 1e-12)),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.monotonicity() == Monotonicity::Constant
    }

    pub fn monotonicity(&self) -> Monotonicity {
        let (c, p) = (self.amplitude, self.exponent);
        if c == 0.0 || (p == 0.0 && self.form != ScheduleForm::Saturating) {
            return Monotonicity::Constant;
        }
        let increasing = match self.form {
            ScheduleForm::Pure => p < 0.0,
            ScheduleForm::Saturating => {
                if p == 0.0 {
                    return Monotonicity::Constant;
                }
                p < 0.0
            }
            ScheduleForm::PowerGrowth => p > 0.0,
        };
        // amplitude sign flips the direction
        if increasing == (c > 0.0) {
            Monotonicity::NonDecreasing
        } else {
            Monotonicity::NonIncreasing
        }
    }

    /// `lim_{n→∞}` of the schedule (possibly infinite).
    pub fn limit(&self) -> f64 {
        let (c, p) = (self.amplitude, self.exponent);
        if c == 0.0 {
            return 0.0;
        }
        match self.form {
            ScheduleForm::Pure => match p {
                p if p > 0.0 => 0.0,
                0.0 => c,
                _ => c * f64::INFINITY,
            },
            ScheduleForm::Saturating => match p {
                p if p > 0.0 => 0.0,
                0.0 => c / 2.0,
                _ => c,
            },
            ScheduleForm::PowerGrowth => match p {
                p if p > 0.0 => c * f64::INFINITY,
                0.0 => self.evaluate(1),
                _ => libm::ceil(c * 1e-300),
            },
        }
    }

    pub fn infimum(&self) -> f64 {
        match self.monotonicity() {
            Monotonicity::Constant => self.evaluate(1).min(self.evaluate(0)),
            Monotonicity::NonIncreasing => self.limit(),
            Monotonicity::NonDecreasing => self.evaluate(0),
        }
    }

    pub fn supremum(&self) -> f64 {
        match self.monotonicity() {
            Monotonicity::Constant => self.evaluate(1).max(self.evaluate(0)),
            Monotonicity::NonIncreasing => self.evaluate(0),
            Monotonicity::NonDecreasing => self.limit(),
        }
    }

    pub fn decay(&self) -> Decay {
        if self.amplitude == 0.0 {
            return Decay::Zero;
        }
        match self.form {
            ScheduleForm::Pure => Decay::Power(self.exponent),
            ScheduleForm::Saturating => Decay::Power(self.exponent.max(0.0)),
            ScheduleForm::PowerGrowth => Decay::Power(-self.exponent.max(0.0)),
        }
    }

    /// Whether `Σ_n s_n` is finite.
    pub fn is_summable(&self) -> bool {
        series_converges(&[(self, 1.0)])
    }
}

/// Decides convergence of `Σ_n Π_i s_i(n)^(r_i)` for nonnegative power-law
/// schedules `s_i` and powers `r_i > 0`.
///
/// The product behaves like `n^(−Σ r_i q_i)`; the series converges iff that
/// effective exponent exceeds 1, or if any factor is identically zero.
pub fn series_converges(factors: &[(&PowerLawSchedule, f64)]) -> bool {
    let mut effective = 0.0;
    for (s, r) in factors {
        match s.decay() {
            Decay::Zero => return true,
            Decay::Power(q) => effective += r * q,
        }
    }
    effective > 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Sum,
    SumOfSqrt,
}

/// p-series test for a pure power law `c · n^(−p)`.
pub fn check_power_law_summability(exponent: f64, kind: SeriesKind) -> bool {
    let effective = match kind {
        SeriesKind::Sum => exponent,
        SeriesKind::SumOfSqrt => exponent / 2.0,
    };
    effective > 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

/// Finite-horizon look at an arbitrary nonnegative sequence.
///
/// Summability cannot be decided from finitely many terms, so the verdict is
/// `Inconclusive` unless a term is non-finite or negative (`Fails`).
pub fn finite_horizon_summability(terms: &[f64]) -> (Verdict, f64) {
    if terms.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return (Verdict::Fails, f64::NAN);
    }
    (Verdict::Inconclusive, terms.iter().sum())
}

/// Batch sizes `m_n`: strictly increasing, `m_0 = 1`,
/// `m_n = max(m_{n−1} + 1, ceil(n^p))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSchedule {
    pub growth: PowerLawSchedule,
}

impl BatchSchedule {
    pub const fn new(exponent: f64) -> Self {
        Self { growth: PowerLawSchedule::power_growth(exponent) }
    }

    pub fn value(&self, n: usize) -> usize {
        let raw = |k: usize| self.growth.evaluate(k).max(0.0) as usize;
        if self.growth.form == ScheduleForm::PowerGrowth
            && self.growth.exponent >= 1.0
            && self.growth.amplitude == 1.0
        {
            // ceil(k^p) − k is nondecreasing for p ≥ 1, so the running max
            // is attained at k = n.
            return raw(n).max(n + 1);
        }
        let mut m = raw(0).max(1);
        for k in 1..=n {
            m = (m + 1).max(raw(k));
        }
        m
    }

    pub fn delta_exponent(&self) -> f64 {
        self.growth.exponent - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelaxationBranch {
    /// `inf λ_n > 0`
    InfLambdaPositive,
    /// `γ_n ≡ γ`, `Σ τ_n < ∞` and `Σ λ_n = ∞`
    ConstantGammaSummableTau,
}

/// Step-size and relaxation conditions for the stochastic forward-backward
/// iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbConditionReport {
    pub gamma_inf_positive: bool,
    pub tau_sup_finite: bool,
    /// `sup (1 + τ_n) γ_n < 2ϑ`
    pub step_bound_holds: bool,
    pub step_bound_value: f64,
    pub relaxation_branch: Option<RelaxationBranch>,
    pub overall: bool,
}

impl FbConditionReport {
    pub fn first_failure(&self) -> Option<&'static str> {
        if !self.gamma_inf_positive {
            Some("inf gamma_n must be positive")
        } else if !self.tau_sup_finite {
            Some("sup tau_n must be finite")
        } else if !self.step_bound_holds {
            Some("sup (1 + tau_n) gamma_n must be < 2 vartheta")
        } else if self.relaxation_branch.is_none() {
            Some("need inf lambda_n > 0, or constant gamma with summable tau and sum lambda_n = inf")
        } else {
            None
        }
    }
}

impl fmt::Display for FbConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fb.gamma_inf_positive = {}", self.gamma_inf_positive)?;
        writeln!(f, "fb.tau_sup_finite = {}", self.tau_sup_finite)?;
        writeln!(
            f,
            "fb.step_bound_holds = {} (sup (1+tau)gamma = {})",
            self.step_bound_holds, self.step_bound_value
        )?;
        let branch = match self.relaxation_branch {
            Some(RelaxationBranch::InfLambdaPositive) => "inf_lambda_positive",
            Some(RelaxationBranch::ConstantGammaSummableTau) => "constant_gamma_summable_tau",
            None => "none",
        };
        writeln!(f, "fb.relaxation_branch = {branch}")?;
        write!(f, "fb.overall = {}", self.overall)
    }
}

/// `sup_n (1 + τ_n) γ_n`.
///
/// Exact when both schedules are monotone in the same direction (the usual
/// case: constant or decaying); otherwise the product of the two suprema,
/// which is an upper bound.
fn sup_step_product(gamma: &PowerLawSchedule, tau: &PowerLawSchedule) -> f64 {
    use Monotonicity::*;
    match (gamma.monotonicity(), tau.monotonicity()) {
        (Constant | NonIncreasing, Constant | NonIncreasing) => {
            ((1.0 + tau.evaluate(0)) * gamma.evaluate(0))
                .max((1.0 + tau.evaluate(1)) * gamma.evaluate(1))
        }
        (Constant | NonDecreasing, Constant | NonDecreasing) => {
            (1.0 + tau.limit()) * gamma.limit()
        }
        _ => (1.0 + tau.supremum()) * gamma.supremum(),
    }
}

pub fn validate_fb_conditions(
    gamma: &PowerLawSchedule,
    lambda: &PowerLawSchedule,
    tau: &PowerLawSchedule,
    vartheta: f64,
) -> FbConditionReport {
    let gamma_inf_positive = gamma.infimum() > 0.0;
    let tau_sup_finite = tau.supremum().is_finite();
    let step_bound_value = sup_step_product(gamma, tau);
    let step_bound_holds = step_bound_value < 2.0 * vartheta;

    let relaxation_branch = if lambda.infimum() > 0.0 {
        Some(RelaxationBranch::InfLambdaPositive)
    } else if gamma.is_constant() && tau.is_summable() && !lambda.is_summable() {
        Some(RelaxationBranch::ConstantGammaSummableTau)
    } else {
        None
    };

    let lambda_in_range = lambda.supremum() <= 1.0 && lambda.infimum() >= 0.0;
    let overall = gamma_inf_positive
        && tau_sup_finite
        && step_bound_holds
        && relaxation_branch.is_some()
        && lambda_in_range;
    FbConditionReport {
        gamma_inf_positive,
        tau_sup_finite,
        step_bound_holds,
        step_bound_value,
        relaxation_branch,
        overall,
    }
}

/// Summability hypotheses on the error magnitudes of the forward-backward
/// iteration, checked from their closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FbErrorReport {
    /// `Σ λ_n ‖a_n‖ < ∞`
    pub prox_error_summable: bool,
    /// `Σ √λ_n ‖E[u_n] − ∇g(x_n)‖ < ∞`
    pub bias_summable: bool,
    /// `sup ζ_n < ∞` and `Σ √(λ_n ζ_n) < ∞`
    pub variance_summable: bool,
    /// `Σ √λ_n α_n < ∞` and `Σ λ_n β_n < ∞`
    pub prox_approximation_summable: bool,
}

impl FbErrorReport {
    pub fn overall(&self) -> bool {
        self.prox_error_summable
            && self.bias_summable
            && self.variance_summable
            && self.prox_approximation_summable
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ErrorSchedules {
    pub prox_error: PowerLawSchedule,
    pub bias: PowerLawSchedule,
    pub zeta: PowerLawSchedule,
    pub alpha: PowerLawSchedule,
    pub beta: PowerLawSchedule,
}

impl Default for ErrorSchedules {
    fn default() -> Self {
        Self {
            prox_error: PowerLawSchedule::zero(),
            bias: PowerLawSchedule::zero(),
            zeta: PowerLawSchedule::zero(),
            alpha: PowerLawSchedule::zero(),
            beta: PowerLawSchedule::zero(),
        }
    }
}

pub fn validate_fb_error_schedules(lambda: &PowerLawSchedule, errors: &ErrorSchedules) -> FbErrorReport {
    FbErrorReport {
        prox_error_summable: series_converges(&[(lambda, 1.0), (&errors.prox_error, 1.0)]),
        bias_summable: series_converges(&[(lambda, 0.5), (&errors.bias, 1.0)]),
        variance_summable: errors.zeta.supremum().is_finite()
            && series_converges(&[(lambda, 0.5), (&errors.zeta, 0.5)]),
        prox_approximation_summable: series_converges(&[(lambda, 0.5), (&errors.alpha, 1.0)])
            && series_converges(&[(lambda, 1.0), (&errors.beta, 1.0)]),
    }
}

/// Primal and dual step sizes of the primal-dual iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PdStepsizeConfig {
    pub rho: f64,
    pub sigmas: Vec<f64>,
    pub operator_norm_squares: Vec<f64>,
    /// Reciprocal Lipschitz constant of ∇h.
    pub mu: f64,
}

impl PdStepsizeConfig {
    /// `(1/ρ − Σ_k σ_k ‖L_k‖²) μ`; the step sizes are admissible when this
    /// exceeds 1/2.
    pub fn margin(&self) -> f64 {
        let dual: f64 = self
            .sigmas
            .iter()
            .zip(&self.operator_norm_squares)
            .map(|(s, l)| s * l)
            .sum();
        (1.0 / self.rho - dual) * self.mu
    }

    fn well_formed(&self) -> bool {
        !self.sigmas.is_empty()
            && self.sigmas.len() == self.operator_norm_squares.len()
            && self.rho > 0.0
            && self.mu > 0.0
            && self.sigmas.iter().all(|s| *s > 0.0)
            && self.operator_norm_squares.iter().all(|l| *l >= 0.0)
    }
}

impl fmt::Display for PdStepsizeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pd.rho = {}", self.rho)?;
        writeln!(f, "pd.sigmas = {:?}", self.sigmas)?;
        writeln!(f, "pd.operator_norm_squares = {:?}", self.operator_norm_squares)?;
        writeln!(f, "pd.mu = {}", self.mu)?;
        writeln!(f, "pd.margin = {} (must exceed 0.5)", self.margin())?;
        write!(f, "pd.stepsizes_valid = {}", validate_pd_stepsizes(self))
    }
}

pub fn validate_pd_stepsizes(cfg: &PdStepsizeConfig) -> bool {
    cfg.well_formed() && cfg.margin() > 0.5
}

/// Relaxation decay `λ_n = O(n^(−κ))` against batch growth
/// `m_n = O(n^(1+δ))`: admissible iff `κ ∈ ]1 − δ, 1] ∩ [0, 1]`.
pub fn validate_online_schedules(delta: f64, kappa: f64) -> bool {
    delta > 0.0 && kappa > 1.0 - delta && (0.0..=1.0).contains(&kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn saturating_values() {
        let s = PowerLawSchedule::saturating(0.95, 500.0);
        assert_eq!(s.evaluate(0), 1.0);
        assert_eq!(s.evaluate(500), 0.5);
    }

    #[test]
    fn power_growth_value() {
        // 10^1.1 = 12.589...
        let expected = libm::ceil(libm::pow(10.0, 1.1));
        assert_eq!(expected, 13.0);
        assert_eq!(PowerLawSchedule::power_growth(1.1).evaluate(10), 13.0);
        assert_eq!(PowerLawSchedule::power_growth(2.0).evaluate(3), 9.0);
    }

    #[test]
    fn batch_schedule_starts_at_one_and_increases() {
        let b = BatchSchedule::new(1.1);
        assert_eq!(b.value(0), 1);
        assert_eq!(b.value(1), 2);
        assert_eq!(b.value(10), 13);
        let mut prev = 0;
        for n in 0..3000 {
            let m = b.value(n);
            assert!(m > prev, "m_{n} = {m} not > {prev}");
            prev = m;
        }
    }

    #[test]
    fn batch_schedule_closed_form_matches_recursion() {
        let b = BatchSchedule::new(1.1);
        let g = b.growth;
        let mut m = 1usize;
        for n in 1..2000 {
            m = (m + 1).max(g.evaluate(n) as usize);
            assert_eq!(b.value(n), m);
        }
        // sublinear growth goes through the loop path
        let slow = BatchSchedule::new(0.5);
        assert_eq!(slow.value(0), 1);
        assert_eq!(slow.value(5), 6);
    }

    #[test]
    fn p_series() {
        assert!(check_power_law_summability(1.5, SeriesKind::Sum));
        assert!(!check_power_law_summability(1.0, SeriesKind::Sum));
        assert!(check_power_law_summability(2.5, SeriesKind::SumOfSqrt));
        assert!(!check_power_law_summability(2.0, SeriesKind::SumOfSqrt));
    }

    #[test]
    fn p_series_agrees_with_partial_sums() {
        let partial = |p: f64, sqrt: bool, n: usize| -> f64 {
            (1..=n)
                .map(|k| {
                    let t = libm::pow(k as f64, -p);
                    if sqrt {
                        libm::sqrt(t)
                    } else {
                        t
                    }
                })
                .sum()
        };
        for (p, kind) in [(1.5, SeriesKind::Sum), (2.5, SeriesKind::SumOfSqrt), (3.0, SeriesKind::Sum)] {
            let sqrt = kind == SeriesKind::SumOfSqrt;
            let a = partial(p, sqrt, 500_000);
            let b = partial(p, sqrt, 1_000_000);
            assert!(check_power_law_summability(p, kind));
            // the increment matches the integral tail, which vanishes as n grows
            let q = if sqrt { p / 2.0 } else { p };
            let tail = (libm::pow(5e5, 1.0 - q) - libm::pow(1e6, 1.0 - q)) / (q - 1.0);
            assert!((b - a - tail).abs() <= 1e-3 * tail + 1e-10, "p={p}: {a} vs {b}");
        }
        for (p, kind) in [(1.0, SeriesKind::Sum), (0.5, SeriesKind::Sum), (2.0, SeriesKind::SumOfSqrt)] {
            let sqrt = kind == SeriesKind::SumOfSqrt;
            assert!(!check_power_law_summability(p, kind));
            // divergent partial sums keep growing by at least log(2) per doubling
            let a = partial(p, sqrt, 500_000);
            let b = partial(p, sqrt, 1_000_000);
            assert!(b - a > 0.69, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn fb_constant_gamma_inf_lambda_positive() {
        let vt = 2.0;
        let r = validate_fb_conditions(
            &PowerLawSchedule::constant(vt),
            &PowerLawSchedule::constant(0.5),
            &PowerLawSchedule::zero(),
            vt,
        );
        assert!(r.overall);
        assert_eq!(r.relaxation_branch, Some(RelaxationBranch::InfLambdaPositive));
    }

    #[test]
    fn fb_gamma_at_twice_vartheta_fails() {
        let vt = 1.5;
        for tau in [PowerLawSchedule::zero(), PowerLawSchedule::pure(1.0, 2.0)] {
            for lambda in [PowerLawSchedule::constant(1.0), PowerLawSchedule::saturating(0.95, 500.0)] {
                let r = validate_fb_conditions(&PowerLawSchedule::constant(2.0 * vt), &lambda, &tau, vt);
                assert!(!r.step_bound_holds);
                assert!(!r.overall);
                assert!(r.first_failure().is_some());
            }
        }
    }

    #[test]
    fn fb_decaying_lambda_uses_summable_tau_branch() {
        let vt = 1.0;
        let tau = PowerLawSchedule::pure(1.0, 2.0);
        let lambda = PowerLawSchedule::saturating(0.95, 500.0);
        let r = validate_fb_conditions(&PowerLawSchedule::constant(vt), &lambda, &tau, vt);
        assert_eq!(r.relaxation_branch, Some(RelaxationBranch::ConstantGammaSummableTau));
        // τ_0 = 1 puts (1 + τ_0) γ exactly on the strict bound 2ϑ
        assert_eq!(r.step_bound_value, 2.0);
        assert!(!r.step_bound_holds);
        let r = validate_fb_conditions(&PowerLawSchedule::constant(0.9 * vt), &lambda, &tau, vt);
        assert!(r.overall);
        assert_eq!(r.relaxation_branch, Some(RelaxationBranch::ConstantGammaSummableTau));
    }

    #[test]
    fn fb_no_branch_when_lambda_summable() {
        let r = validate_fb_conditions(
            &PowerLawSchedule::constant(1.0),
            &PowerLawSchedule::pure(1.0, 2.0),
            &PowerLawSchedule::zero(),
            1.0,
        );
        assert_eq!(r.relaxation_branch, None);
        assert!(!r.overall);
    }

    #[test]
    fn fb_decaying_gamma_fails_inf() {
        let r = validate_fb_conditions(
            &PowerLawSchedule::pure(1.0, 0.5),
            &PowerLawSchedule::constant(1.0),
            &PowerLawSchedule::zero(),
            1.0,
        );
        assert!(!r.gamma_inf_positive);
        assert!(!r.overall);
    }

    #[test]
    fn fb_error_schedules() {
        let lambda = PowerLawSchedule::saturating(0.95, 500.0);
        let ok = ErrorSchedules {
            prox_error: PowerLawSchedule::pure(1.0, 1.5),
            bias: PowerLawSchedule::pure(1.0, 2.0),
            zeta: PowerLawSchedule::pure(1.0, 2.0),
            alpha: PowerLawSchedule::pure(1e-3, 1.5),
            beta: PowerLawSchedule::pure(1e-4, 1.5),
        };
        assert!(validate_fb_error_schedules(&lambda, &ok).overall());
        let bad = ErrorSchedules { bias: PowerLawSchedule::pure(1.0, 0.5), ..ok };
        let r = validate_fb_error_schedules(&lambda, &bad);
        assert!(!r.bias_summable);
        assert!(!r.overall());
        assert!(validate_fb_error_schedules(&lambda, &ErrorSchedules::default()).overall());
    }

    #[test]
    fn pd_stepsizes() {
        let cfg = |rho: f64, sigma: f64, mu: f64| PdStepsizeConfig {
            rho,
            sigmas: vec![sigma],
            operator_norm_squares: vec![8.0],
            mu,
        };
        assert!(validate_pd_stepsizes(&cfg(0.5, 0.1, 2.0)));
        assert!(!validate_pd_stepsizes(&cfg(1.0, 0.2, 1.0)));
        // (4 − 1) · 0.3 = 0.9 > 0.5
        let c = cfg(0.25, 0.125, 0.3);
        assert!((c.margin() - 0.9).abs() < 1e-12);
        assert!(validate_pd_stepsizes(&c));
    }

    #[test]
    fn pd_stepsizes_reject_malformed() {
        let c = PdStepsizeConfig { rho: 0.1, sigmas: vec![0.1, 0.1], operator_norm_squares: vec![1.0], mu: 1.0 };
        assert!(!validate_pd_stepsizes(&c));
        let c = PdStepsizeConfig { rho: 0.1, sigmas: vec![], operator_norm_squares: vec![], mu: 1.0 };
        assert!(!validate_pd_stepsizes(&c));
    }

    #[test]
    fn online_schedules() {
        assert!(validate_online_schedules(0.1, 0.95));
        assert!(!validate_online_schedules(0.1, 0.85));
        assert!(!validate_online_schedules(0.1, 0.9));
        assert!(validate_online_schedules(0.1, 1.0));
        assert!(!validate_online_schedules(0.1, 1.01));
        assert!(validate_online_schedules(2.0, 0.0));
    }

    #[test]
    fn finite_horizon_is_inconclusive() {
        let (v, s) = finite_horizon_summability(&[1.0, 0.5, 0.25]);
        assert_eq!(v, Verdict::Inconclusive);
        assert_eq!(s, 1.75);
        assert_eq!(finite_horizon_summability(&[1.0, f64::NAN]).0, Verdict::Fails);
    }

    proptest! {
        #[test]
        fn saturating_in_unit_interval_and_decreasing(p in 0.01f64..3.0, pivot in 1.0f64..1000.0, n in 1usize..100_000) {
            let s = PowerLawSchedule::saturating(p, pivot);
            let a = s.evaluate(n);
            let b = s.evaluate(n + 1);
            prop_assert!(a > 0.0 && a <= 1.0);
            prop_assert!(b < a || (a - b).abs() < 1e-15);
        }

        #[test]
        fn power_growth_nondecreasing(p in 0.1f64..2.5, n in 0usize..50_000) {
            let s = PowerLawSchedule::power_growth(p);
            prop_assert!(s.evaluate(n + 1) >= s.evaluate(n));
        }

        #[test]
        fn pure_nonincreasing(c in 0.0f64..10.0, p in 0.0f64..3.0, n in 1usize..100_000) {
            let s = PowerLawSchedule::pure(c, p);
            prop_assert!(s.evaluate(n + 1) <= s.evaluate(n));
        }

        #[test]
        fn pd_validator_monotone_in_steps(
            rho in 0.01f64..5.0, sigma in 0.001f64..1.0, l in 0.0f64..10.0, mu in 0.01f64..10.0,
            bump_rho in 1.0f64..4.0, bump_sigma in 1.0f64..4.0,
        ) {
            let base = PdStepsizeConfig { rho, sigmas: vec![sigma], operator_norm_squares: vec![l], mu };
            let bigger = PdStepsizeConfig { rho: rho * bump_rho, sigmas: vec![sigma * bump_sigma], ..base.clone() };
            prop_assert!(!(validate_pd_stepsizes(&bigger) && !validate_pd_stepsizes(&base)));
        }
    }
}
