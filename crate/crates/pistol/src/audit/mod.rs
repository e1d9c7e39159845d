//! Numeric certification of the learners' guarantees.
//!
//! Every guarantee the algorithms come with is turned into something a
//! machine can check: regret certificates compare a PiSTOL run's actual
//! regret against the closed-form bound, mistake-bound checks do the same
//! for the Perceptron, and randomized suites hammer the technical
//! inequalities the analysis rests on (see [`check_lemma`]).
//!
//! A *refusal* is not a *failure*: asking for a certificate outside the
//! bound's hypotheses (say `a < 2.25·L`, the experiment regime) returns
//! an error rather than a `holds = false` verdict, so parameter regimes
//! the bound does not speak about can never be reported as violations.

mod lemmas;
mod suites;

pub use lemmas::{check_lemma, LemmaId};
pub use suites::{
    run_certificate_suite, run_perceptron_suite, CertSuiteConfig, CertSuiteOutcome,
    PerceptronSuiteConfig,
};

use thiserror::Error;

use crate::data::{Dataset, LabeledExample};
use crate::kernels::Expansion;
use crate::learners::{Predict, Trace};
use crate::losses::Loss;

/// Relative slack allowed when comparing a quantity against its bound.
pub(crate) const CERT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("phi is undefined here: 1 - x·exp(x/2) - x <= 0 at x = {0} (needs a >= 2.25·L)")]
    PhiDomain(f64),
    #[error("refused: trace has no PiSTOL parameters attached")]
    MissingParams,
    #[error("refused: a = {a} is below 2.25·L = {min}; outside the regret bound's hypotheses")]
    ParameterRegime { a: f64, min: f64 },
    #[error("refused: ‖k(x,·)‖ = {norm} > 1 at round {round}")]
    SelfNormExceeded { round: usize, norm: f64 },
    #[error("refused: {0} loss is outside the certificate's scope")]
    UnsupportedLoss(Loss),
    #[error("trace covers {trace} rounds but the stream has {stream}")]
    StreamMismatch { trace: usize, stream: usize },
    #[error("eta must lie in (0, 1/4], got {0}")]
    EtaOutOfRange(f64),
    #[error("beta must lie in (0, 1/2], got {0}")]
    BetaOutOfRange(f64),
    #[error("alpha must lie in [0, 1] and c_alpha must be positive")]
    NoiseParamOutOfRange,
    #[error(
        "{0} loss does not satisfy the risk-comparison hypotheses (needs ℓ'(0) < 0 and ℓ''(0) > 0)"
    )]
    LossNotApplicable(Loss),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("learner failed during an audit run: {0}")]
    Learner(#[from] crate::learners::LearnerError),
    #[error("data generation failed during an audit run: {0}")]
    Data(#[from] crate::data::DataError),
}

/// The constant φ from the PiSTOL regret bound:
///
/// ```text
/// φ(x) = (x/2) · (e^{x/2}(x+1) + 2) / (1 − x·e^{x/2} − x) · (e^{x/2}(x+1) + 2)
/// ```
///
/// Defined for x ≥ 0 with positive denominator, which holds up to
/// x = 1/2.25 and a little beyond; the argument in use is L/a.
pub fn phi(x: f64) -> Result<f64, AuditError> {
    if !x.is_finite() || x < 0.0 {
        return Err(AuditError::PhiDomain(x));
    }
    let a = (x / 2.0).exp() * (x + 1.0) + 2.0;
    let denom = 1.0 - x * (x / 2.0).exp() - x;
    if denom <= 0.0 {
        return Err(AuditError::PhiDomain(x));
    }
    Ok(x / 2.0 * a / denom * a)
}

/// Right-hand side of the PiSTOL regret bound:
///
/// ```text
/// ‖h‖·√(2a(L + Σ|s_t|)·ln(‖h‖√(aLT)/b + 1)) + b·φ(L/a)·ln(1 + T)
/// ```
pub fn pistol_bound_rhs(
    norm_h: f64,
    a: f64,
    b: f64,
    lipschitz: f64,
    rounds: usize,
    sum_abs_s: f64,
) -> Result<f64, AuditError> {
    let t = rounds as f64;
    let log_term = (norm_h * (a * lipschitz * t).sqrt() / b + 1.0).ln();
    let first = norm_h * (2.0 * a * (lipschitz + sum_abs_s) * log_term).sqrt();
    let second = b * phi(lipschitz / a)? * (1.0 + t).ln();
    Ok(first + second)
}

/// Outcome of checking one PiSTOL run against one competitor.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCertificate {
    pub actual_regret: f64,
    pub bound_rhs: f64,
    pub competitor_norm: f64,
    pub a: f64,
    pub b: f64,
    pub lipschitz: f64,
    pub rounds: usize,
    /// Σ_{t=1}^{T-1} |s_t|, exactly the sum the bound is stated with.
    pub sum_abs_s: f64,
    pub holds: bool,
}

/// Compare the actual regret of a PiSTOL trace against the bound, for a
/// fixed competitor. Refuses (with an error) when the trace was produced
/// outside the bound's hypotheses: missing parameters, `a < 2.25·L`,
/// inputs with `‖k(x,·)‖ > 1`, or the square loss (not Lipschitz on
/// unbounded margins).
pub fn certify_regret(
    trace: &Trace,
    stream: &[LabeledExample],
    competitor: &Expansion,
    loss: Loss,
) -> Result<RegretCertificate, AuditError> {
    let params = trace.pistol.ok_or(AuditError::MissingParams)?;
    let min_a = 2.25 * params.lipschitz;
    if params.a < min_a {
        return Err(AuditError::ParameterRegime {
            a: params.a,
            min: min_a,
        });
    }
    if loss == Loss::Square {
        return Err(AuditError::UnsupportedLoss(loss));
    }
    if trace.rounds() != stream.len() {
        return Err(AuditError::StreamMismatch {
            trace: trace.rounds(),
            stream: stream.len(),
        });
    }
    for (i, rec) in trace.records.iter().enumerate() {
        if rec.self_norm > 1.0 + 1e-9 {
            return Err(AuditError::SelfNormExceeded {
                round: i + 1,
                norm: rec.self_norm,
            });
        }
    }

    let competitor_loss: f64 = stream
        .iter()
        .map(|ex| loss.value(ex.y * competitor.eval(&ex.x)))
        .sum();
    let actual_regret = trace.cumulative_loss - competitor_loss;
    let rounds = trace.rounds();
    let sum_abs_s: f64 = trace
        .records
        .iter()
        .take(rounds.saturating_sub(1))
        .map(|r| r.subgradient.abs())
        .sum();
    let norm_h = competitor.norm();
    let bound_rhs = pistol_bound_rhs(
        norm_h,
        params.a,
        params.b,
        params.lipschitz,
        rounds,
        sum_abs_s,
    )?;
    let holds = actual_regret <= bound_rhs + CERT_TOLERANCE * bound_rhs.abs().max(1.0);
    Ok(RegretCertificate {
        actual_regret,
        bound_rhs,
        competitor_norm: norm_h,
        a: params.a,
        b: params.b,
        lipschitz: params.lipschitz,
        rounds,
        sum_abs_s,
        holds,
    })
}

/// Result of a randomized (or enumerated) check suite.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    /// Which suite this is (`log_bound`, `certificates`, ...).
    pub suite: String,
    pub trials: usize,
    pub violations: usize,
    /// max(LHS − RHS) observed; negative means the inequality held with
    /// margin everywhere.
    pub worst_slack: f64,
}

impl LemmaReport {
    pub(crate) fn new(suite: &str) -> Self {
        LemmaReport {
            suite: suite.to_string(),
            trials: 0,
            violations: 0,
            worst_slack: f64::NEG_INFINITY,
        }
    }

    /// Record one inequality check with the given allowed slack.
    pub(crate) fn record(&mut self, lhs: f64, rhs: f64, tolerance: f64) {
        self.trials += 1;
        let slack = lhs - rhs;
        if slack > self.worst_slack {
            self.worst_slack = slack;
        }
        if slack > tolerance {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Verify the Perceptron mistake bound
///
/// ```text
/// mistakes ≤ Σ_t ℓʰ(y_t h(x_t)) + ‖h‖² + ‖h‖·√(Σ_t ℓʰ(y_t h(x_t)))
/// ```
///
/// (hinge loss ℓʰ) for each supplied competitor. Inputs are assumed to
/// satisfy `‖k(x,·)‖ ≤ 1`.
pub fn perceptron_bound_check(
    mistakes: usize,
    stream: &[LabeledExample],
    competitors: &[Expansion],
) -> LemmaReport {
    let mut report = LemmaReport::new("perceptron_bound");
    for h in competitors {
        debug_assert!(
            stream
                .iter()
                .all(|ex| h.kernel().self_norm(&ex.x) <= 1.0 + 1e-9),
            "mistake bound assumes unit-bounded kernel sections"
        );
        let hinge_sum: f64 = stream
            .iter()
            .map(|ex| Loss::Hinge.value(ex.y * h.eval(&ex.x)))
            .sum();
        let norm = h.norm();
        let rhs = hinge_sum + norm * norm + norm * hinge_sum.sqrt();
        report.record(mistakes as f64, rhs, CERT_TOLERANCE * rhs.abs().max(1.0));
    }
    report
}

/// Right-hand side of the ASGD risk bound: `risk_h + ‖h‖²/(ηT) + 4η`.
pub fn asgd_bound_rhs(
    risk_h: f64,
    norm_h: f64,
    eta: f64,
    rounds: usize,
) -> Result<f64, AuditError> {
    if !eta.is_finite() || eta <= 0.0 || eta > 0.25 {
        return Err(AuditError::EtaOutOfRange(eta));
    }
    Ok(risk_h + norm_h * norm_h / (eta * rounds as f64) + 4.0 * eta)
}

/// Empirical risks of a predictor on a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEstimate {
    /// Mean of ℓ(y·f(x)).
    pub ell_risk: f64,
    /// Mean of 1(y ≠ sign(f(x))), with sign(0) = +1.
    pub misclass: f64,
}

pub fn estimate_risks<P: Predict>(
    predictor: &P,
    test: &[LabeledExample],
    loss: Loss,
) -> Result<RiskEstimate, AuditError> {
    if test.is_empty() {
        return Err(AuditError::EmptyTestSet);
    }
    let mut ell = 0.0;
    let mut wrong = 0usize;
    for ex in test {
        let fx = predictor.predict(&ex.x);
        ell += loss.value(ex.y * fx);
        let sign = if fx >= 0.0 { 1.0 } else { -1.0 };
        if ex.y != sign {
            wrong += 1;
        }
    }
    let n = test.len() as f64;
    Ok(RiskEstimate {
        ell_risk: ell / n,
        misclass: wrong as f64 / n,
    })
}

/// Convenience wrapper over a whole [`Dataset`].
pub fn estimate_risks_on<P: Predict>(
    predictor: &P,
    test: &Dataset,
    loss: Loss,
) -> Result<RiskEstimate, AuditError> {
    estimate_risks(predictor, &test.examples, loss)
}

/// The excess-misclassification bound derived from an excess ℓ-risk under
/// a low-noise exponent `alpha` with constant `c_alpha`:
///
/// ```text
/// (32·c_α/C · excess)^{1/(2-α)},   C = min{−ℓ'(0), ℓ'(0)²/ℓ''(0)}
/// ```
///
/// Requires a loss with ℓ'(0) < 0 and ℓ''(0) > 0 (curvature taken from
/// the right); the hinge loss is rejected. A (statistically possible)
/// negative excess is clamped to zero.
pub fn misclass_bound(
    excess_ell_risk: f64,
    alpha: f64,
    c_alpha: f64,
    loss: Loss,
) -> Result<f64, AuditError> {
    if !(0.0..=1.0).contains(&alpha) || !c_alpha.is_finite() || c_alpha <= 0.0 {
        return Err(AuditError::NoiseParamOutOfRange);
    }
    let d = loss.derivative(0.0);
    let curvature = loss.curvature_at_zero();
    if d >= 0.0 || curvature <= 0.0 {
        return Err(AuditError::LossNotApplicable(loss));
    }
    let c = (-d).min(d * d / curvature);
    let excess = excess_ell_risk.max(0.0);
    Ok((32.0 * c_alpha / c * excess).powf(1.0 / (2.0 - alpha)))
}

/// Reference convergence-rate exponent for learning curves: the averaged
/// predictor's excess ℓ-risk decays as `T^{-3β/(2β+1)}` when the optimal
/// ℓ-risk is zero and `T^{-2β/(2β+1)}` otherwise, for source-smoothness
/// `β` in (0, 1/2].
pub fn rate_exponent(beta: f64, zero_optimal_risk: bool) -> Result<f64, AuditError> {
    if !beta.is_finite() || beta <= 0.0 || beta > 0.5 {
        return Err(AuditError::BetaOutOfRange(beta));
    }
    let num = if zero_optimal_risk {
        3.0 * beta
    } else {
        2.0 * beta
    };
    Ok(num / (2.0 * beta + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_margin_stream, SparseVector};
    use crate::kernels::Kernel;
    use crate::learners::{train, AlgoConfig, PistolParams};

    #[test]
    fn phi_small_argument_is_linear() {
        // 40-digit reference: 4.500013500032250e-6
        let v = phi(1e-6).unwrap();
        assert!((v - 4.500_013_500_032_25e-6).abs() < 1e-18);
        assert!((v - 4.5e-6).abs() < 1e-10, "leading order 4.5·x");
    }

    #[test]
    fn phi_reference_values() {
        // frozen from a 40-digit evaluation of the formula
        let v = phi(0.1).unwrap();
        assert!((v - 0.626_694_516_552_438_2).abs() < 1e-12);

        let at_edge = phi(1.0 / 2.25).unwrap();
        assert!((at_edge - 6_284.949_557_022_644).abs() / 6_284.949_557_022_644 < 1e-10);
        // the denominator there is ~5.116e-4, which is why the constant
        // term dominates the bound at a = 2.25·L
        let x: f64 = 1.0 / 2.25;
        let denom = 1.0 - x * (x / 2.0).exp() - x;
        assert!((denom - 5.116_137_770_301_46e-4).abs() < 1e-12);
    }

    #[test]
    fn phi_domain_errors() {
        assert!(phi(0.5).is_err(), "denominator crosses zero before 0.5");
        assert!(phi(-0.1).is_err());
        assert!(phi(f64::NAN).is_err());
        assert!(phi(0.44).is_ok());
    }

    #[test]
    fn phi_is_strictly_increasing_on_a_grid() {
        let mut prev = phi(0.0).unwrap();
        for i in 1..=444 {
            let x = i as f64 * 0.001;
            let v = phi(x).unwrap();
            assert!(v > prev, "phi not increasing at {x}");
            prev = v;
        }
    }

    #[test]
    fn bound_rhs_zero_competitor_leaves_constant_term() {
        let rhs = pistol_bound_rhs(0.0, 4.5, 1.0, 2.0, 100, 50.0).unwrap();
        let expect = phi(2.0 / 4.5).unwrap() * 101.0f64.ln();
        assert!((rhs - expect).abs() < 1e-12);
    }

    #[test]
    fn bound_rhs_reference_value() {
        // frozen from a 40-digit evaluation: 29045.8883746684
        let rhs = pistol_bound_rhs(1.0, 4.5, 1.0, 2.0, 100, 50.0).unwrap();
        assert!((rhs - 29_045.888_374_668_4).abs() / 29_045.888_374_668_4 < 1e-10);
        // and its first (competitor) term alone is ~40.09
        let first = 1.0 * (2.0 * 4.5 * 52.0 * 31.0f64.ln()).sqrt();
        assert!((first - 40.088_726_740_806_43).abs() < 1e-10);
    }

    #[test]
    fn bound_rhs_is_monotone() {
        let base = pistol_bound_rhs(1.0, 4.5, 1.0, 2.0, 100, 50.0).unwrap();
        for (norm, t, s) in [(1.5, 100, 50.0), (1.0, 200, 50.0), (1.0, 100, 80.0)] {
            let v = pistol_bound_rhs(norm, 4.5, 1.0, 2.0, t, s).unwrap();
            assert!(v > base, "expected increase for ({norm}, {t}, {s})");
        }
        // grid over each argument separately
        let mut prev = 0.0;
        for i in 0..20 {
            let v = pistol_bound_rhs(i as f64 * 0.5, 4.5, 1.0, 2.0, 100, 50.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = 0.0;
        for t in [1usize, 2, 5, 10, 100, 1000] {
            let v = pistol_bound_rhs(1.0, 4.5, 1.0, 2.0, t, 50.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let mut prev = 0.0;
        for s in [0.0, 1.0, 10.0, 100.0] {
            let v = pistol_bound_rhs(1.0, 4.5, 1.0, 2.0, 100, s).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    fn pistol_trace(seed: u64, a: f64) -> (Trace, Vec<LabeledExample>) {
        let data = synth_margin_stream(seed, 100, 4, 0.0, 0.2).unwrap();
        let params = PistolParams::new(a, 1.0, 2.0).unwrap();
        let (_, trace) = train(
            &AlgoConfig::Pistol(params),
            &Kernel::gaussian(1.0).unwrap(),
            &data.examples,
            Loss::SmoothedHinge,
        )
        .unwrap();
        (trace, data.examples)
    }

    #[test]
    fn certify_zero_competitor_holds() {
        let (trace, stream) = pistol_trace(7, 4.5);
        let zero = Expansion::new(Kernel::gaussian(1.0).unwrap());
        let cert = certify_regret(&trace, &stream, &zero, Loss::SmoothedHinge).unwrap();
        assert!(
            cert.holds,
            "regret {} vs bound {}",
            cert.actual_regret, cert.bound_rhs
        );
        assert_eq!(cert.competitor_norm, 0.0);
    }

    #[test]
    fn certify_refuses_experiment_regime() {
        let (trace, stream) = pistol_trace(7, 0.25);
        let zero = Expansion::new(Kernel::gaussian(1.0).unwrap());
        let err = certify_regret(&trace, &stream, &zero, Loss::SmoothedHinge).unwrap_err();
        assert!(matches!(err, AuditError::ParameterRegime { .. }));
    }

    #[test]
    fn certify_refuses_square_loss_and_missing_params() {
        let (trace, stream) = pistol_trace(7, 4.5);
        let zero = Expansion::new(Kernel::gaussian(1.0).unwrap());
        assert!(matches!(
            certify_regret(&trace, &stream, &zero, Loss::Square).unwrap_err(),
            AuditError::UnsupportedLoss(Loss::Square)
        ));
        let mut anon = trace.clone();
        anon.pistol = None;
        assert!(matches!(
            certify_regret(&anon, &stream, &zero, Loss::SmoothedHinge).unwrap_err(),
            AuditError::MissingParams
        ));
    }

    #[test]
    fn perceptron_bound_trivial_cases() {
        let data = synth_margin_stream(3, 50, 4, 0.0, 0.0).unwrap();
        let zero = Expansion::new(Kernel::Linear);
        // h = 0 has hinge loss 1 per round: RHS = T
        let report = perceptron_bound_check(50, &data.examples, std::slice::from_ref(&zero));
        assert_eq!(report.violations, 0);
        assert!(
            (report.worst_slack - 0.0).abs() < 1e-12,
            "mistakes = T meets RHS = T"
        );
        let report = perceptron_bound_check(51, &data.examples, &[zero]);
        assert_eq!(report.violations, 1, "one more mistake breaks it");
    }

    #[test]
    fn asgd_bound_rhs_values() {
        let t = 100;
        let v = asgd_bound_rhs(0.3, 0.0, 0.25, t).unwrap();
        assert!(
            (v - 1.3).abs() < 1e-15,
            "risk + 4η with zero-norm competitor"
        );

        // optimal eta for norm 1 is 1/(2√T) with value risk + 4/√T
        let eta_star = 1.0 / (2.0 * (t as f64).sqrt());
        let v = asgd_bound_rhs(0.3, 1.0, eta_star, t).unwrap();
        assert!((v - (0.3 + 4.0 / (t as f64).sqrt())).abs() < 1e-12);
        // and it is no worse than neighbours on the eta grid
        for eta in [0.01, 0.04, 0.06, 0.1, 0.25] {
            assert!(asgd_bound_rhs(0.3, 1.0, eta, t).unwrap() >= v - 1e-12);
        }

        assert!(asgd_bound_rhs(0.3, 1.0, 0.3, t).is_err());
        assert!(asgd_bound_rhs(0.3, 1.0, 0.0, t).is_err());
    }

    #[test]
    fn risk_estimates() {
        let test: Vec<LabeledExample> = vec![
            LabeledExample {
                x: SparseVector::new(vec![(1, 1.0)]).unwrap(),
                y: 1.0,
            },
            LabeledExample {
                x: SparseVector::new(vec![(1, -1.0)]).unwrap(),
                y: -1.0,
            },
            LabeledExample {
                x: SparseVector::new(vec![(1, 0.5)]).unwrap(),
                y: -1.0,
            },
            LabeledExample {
                x: SparseVector::new(vec![(1, -0.5)]).unwrap(),
                y: 1.0,
            },
        ];
        let zero = Expansion::new(Kernel::Linear);
        let r = estimate_risks(&zero, &test, Loss::SmoothedHinge).unwrap();
        assert_eq!(r.ell_risk, 1.0, "zero predictor pays ℓ(0) = 1");
        assert_eq!(r.misclass, 0.5, "sign(0) = +1 gets the two positive labels");

        // a perfect predictor with unit margins
        let mut f = Expansion::new(Kernel::Linear);
        f.add(2.0, SparseVector::new(vec![(1, 1.0)]).unwrap(), 0.0);
        let perfect: Vec<LabeledExample> = test
            .iter()
            .map(|ex| LabeledExample {
                x: ex.x.clone(),
                y: if f.eval(&ex.x) >= 0.0 { 1.0 } else { -1.0 },
            })
            .collect();
        let r = estimate_risks(&f, &perfect, Loss::SmoothedHinge).unwrap();
        assert_eq!(r.misclass, 0.0);
        assert_eq!(r.ell_risk, 0.0);

        let empty: Vec<LabeledExample> = Vec::new();
        assert!(matches!(
            estimate_risks(&zero, &empty, Loss::SmoothedHinge),
            Err(AuditError::EmptyTestSet)
        ));
    }

    #[test]
    fn misclass_bound_values() {
        // smoothed hinge: C = min{2, 4/2} = 2
        let c = 2.0;
        let v = misclass_bound(c / 32.0, 0.0, 1.0, Loss::SmoothedHinge).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "inner expression 1, exponent 1/2");

        // alpha = 1 gives a linear regime (exponent 1)
        let v = misclass_bound(0.01, 1.0, 1.0, Loss::SmoothedHinge).unwrap();
        assert!((v - 32.0 / c * 0.01).abs() < 1e-12);

        assert!(misclass_bound(0.1, 0.5, 1.0, Loss::Hinge).is_err());
        assert!(misclass_bound(0.1, 1.5, 1.0, Loss::SmoothedHinge).is_err());
        assert!(misclass_bound(0.1, 0.5, 0.0, Loss::SmoothedHinge).is_err());
        // negative excess clamps to zero
        assert_eq!(
            misclass_bound(-0.1, 0.5, 1.0, Loss::SmoothedHinge).unwrap(),
            0.0
        );
    }

    #[test]
    fn rate_exponents() {
        assert_eq!(rate_exponent(0.5, true).unwrap(), 0.75);
        assert_eq!(rate_exponent(0.5, false).unwrap(), 0.5);
        assert!(
            rate_exponent(1e-9, true).unwrap() < 1e-8,
            "vanishing rate as β → 0"
        );
        assert!(rate_exponent(0.0, true).is_err());
        assert!(rate_exponent(0.6, true).is_err());
    }
}
