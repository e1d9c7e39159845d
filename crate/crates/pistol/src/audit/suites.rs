//! Randomized end-to-end bound suites: run a learner over many synthetic
//! streams and certify the bound against a panel of sampled competitors.
//!
//! Streams are reproducible from the suite seed. Labels cycle through
//! three seeded schedules — clean, independent random flips, and periodic
//! bursts of flipped labels — so the bounds are exercised well away from
//! the clean realizable case.

use rand::Rng;
use rand_distr::StandardNormal;

use super::lemmas::trial_rng;
use super::{certify_regret, perceptron_bound_check, AuditError, LemmaReport, CERT_TOLERANCE};
use crate::data::{synth_margin_stream, LabeledExample, SparseVector};
use crate::kernels::{Expansion, Kernel};
use crate::learners::{train, AlgoConfig, PistolParams};
use crate::losses::Loss;

/// Configuration for the regret-certificate suite.
#[derive(Debug, Clone, Copy)]
pub struct CertSuiteConfig {
    pub streams: usize,
    pub rounds: usize,
    pub dim: u32,
    /// Sampled competitors per stream, in addition to h = 0.
    pub competitors: usize,
    pub seed: u64,
}

impl Default for CertSuiteConfig {
    fn default() -> Self {
        CertSuiteConfig {
            streams: 50,
            rounds: 200,
            dim: 5,
            competitors: 10,
            seed: 1,
        }
    }
}

/// Configuration for the Perceptron mistake-bound suite.
#[derive(Debug, Clone, Copy)]
pub struct PerceptronSuiteConfig {
    pub streams: usize,
    pub rounds: usize,
    pub dim: u32,
    pub competitors: usize,
    pub seed: u64,
}

impl Default for PerceptronSuiteConfig {
    fn default() -> Self {
        PerceptronSuiteConfig {
            streams: 50,
            rounds: 200,
            dim: 5,
            competitors: 10,
            seed: 2,
        }
    }
}

/// Apply a label schedule to a clean stream: `0` leaves it clean, `1`
/// flips each label independently with probability 1/4, `2` flips whole
/// blocks of 25 rounds.
fn apply_label_schedule(
    examples: &mut [LabeledExample],
    schedule: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) {
    match schedule % 3 {
        0 => {}
        1 => {
            for ex in examples.iter_mut() {
                if rng.random::<f64>() < 0.25 {
                    ex.y = -ex.y;
                }
            }
        }
        _ => {
            for (t, ex) in examples.iter_mut().enumerate() {
                if (t / 25) % 2 == 1 {
                    ex.y = -ex.y;
                }
            }
        }
    }
}

/// Draw a competitor: a small expansion on points taken from the stream,
/// with Gaussian coefficients rescaled to a target norm uniform in
/// [0, 5].
fn sample_competitor(
    kernel: Kernel,
    stream: &[LabeledExample],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Expansion {
    let m = rng.random_range(3..=8usize);
    let terms: Vec<(f64, SparseVector)> = (0..m)
        .map(|_| {
            let idx = rng.random_range(0..stream.len());
            let c: f64 = rng.sample(StandardNormal);
            (c, stream[idx].x.clone())
        })
        .collect();
    let mut h = Expansion::from_terms(kernel, terms);
    let target: f64 = rng.random_range(0.0..5.0);
    let norm = h.norm();
    if norm > 1e-9 {
        h.scale_coeffs(target / norm);
    } else {
        h.scale_coeffs(0.0);
    }
    h
}

/// Reports from one pass of the certificate suite: the regret
/// certificates themselves and the per-round proof invariant
/// `‖g_t‖ ≤ α_t/a` of the same runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CertSuiteOutcome {
    pub certificates: LemmaReport,
    pub invariant: LemmaReport,
}

/// Run PiSTOL (smoothed hinge, `a = 2.25·L`, `b = 1`) over randomized
/// streams, alternating linear and Gaussian kernels, and certify the
/// regret bound against every sampled competitor plus h = 0. The proof
/// invariant is checked at every round of every run as a separate report.
pub fn run_certificate_suite(cfg: CertSuiteConfig) -> Result<CertSuiteOutcome, AuditError> {
    let loss = Loss::SmoothedHinge;
    let params =
        PistolParams::new(2.25 * loss.lipschitz(), 1.0, loss.lipschitz()).expect("valid constants");
    let mut certificates = LemmaReport::new("certificates");
    let mut invariant = LemmaReport::new("proof_invariant");

    for stream_idx in 0..cfg.streams {
        let mut rng = trial_rng(cfg.seed, stream_idx as u64);
        let data_seed: u64 = rng.random();
        let mut data = synth_margin_stream(data_seed, cfg.rounds, cfg.dim, 0.0, 0.0)?;
        apply_label_schedule(&mut data.examples, stream_idx, &mut rng);
        let kernel = if stream_idx % 2 == 0 {
            Kernel::Linear
        } else {
            Kernel::gaussian(1.0).expect("positive gamma")
        };

        let (_, trace) = train(&AlgoConfig::Pistol(params), &kernel, &data.examples, loss)?;
        for rec in &trace.records {
            invariant.record(rec.norm_sq.sqrt(), rec.alpha / params.a, 1e-9);
        }

        let mut competitors: Vec<Expansion> = (0..cfg.competitors)
            .map(|_| sample_competitor(kernel, &data.examples, &mut rng))
            .collect();
        competitors.push(Expansion::new(kernel));
        for h in &competitors {
            let cert = certify_regret(&trace, &data.examples, h, loss)?;
            certificates.record(
                cert.actual_regret,
                cert.bound_rhs,
                CERT_TOLERANCE * cert.bound_rhs.abs().max(1.0),
            );
        }
    }
    Ok(CertSuiteOutcome {
        certificates,
        invariant,
    })
}

/// Run the kernel Perceptron over randomized ±1 streams and verify the
/// mistake bound against sampled competitors plus h = 0.
pub fn run_perceptron_suite(cfg: PerceptronSuiteConfig) -> Result<LemmaReport, AuditError> {
    let mut report = LemmaReport::new("perceptron_bound");
    for stream_idx in 0..cfg.streams {
        let mut rng = trial_rng(cfg.seed.wrapping_add(0x9e37), stream_idx as u64);
        let data_seed: u64 = rng.random();
        let mut data = synth_margin_stream(data_seed, cfg.rounds, cfg.dim, 0.0, 0.0)?;
        apply_label_schedule(&mut data.examples, stream_idx, &mut rng);
        let kernel = if stream_idx % 2 == 0 {
            Kernel::Linear
        } else {
            Kernel::gaussian(1.0).expect("positive gamma")
        };

        let (predictor, _) = train(
            &AlgoConfig::Perceptron,
            &kernel,
            &data.examples,
            Loss::Hinge,
        )?;
        let mistakes = predictor
            .as_final()
            .expect("perceptron returns its final expansion")
            .len();

        let mut competitors: Vec<Expansion> = (0..cfg.competitors)
            .map(|_| sample_competitor(kernel, &data.examples, &mut rng))
            .collect();
        competitors.push(Expansion::new(kernel));
        let sub = perceptron_bound_check(mistakes, &data.examples, &competitors);
        report.trials += sub.trials;
        report.violations += sub.violations;
        if sub.worst_slack > report.worst_slack {
            report.worst_slack = sub.worst_slack;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificate_suite_small_run_has_no_violations() {
        let cfg = CertSuiteConfig {
            streams: 6,
            rounds: 120,
            dim: 4,
            competitors: 4,
            seed: 3,
        };
        let outcome = run_certificate_suite(cfg).unwrap();
        assert!(
            outcome.certificates.passed(),
            "worst slack {}",
            outcome.certificates.worst_slack
        );
        assert!(
            outcome.invariant.passed(),
            "invariant slack {}",
            outcome.invariant.worst_slack
        );
        assert_eq!(outcome.certificates.trials, 6 * 5);
        assert_eq!(outcome.invariant.trials, 6 * 120);
    }

    #[test]
    fn perceptron_suite_small_run_has_no_violations() {
        let cfg = PerceptronSuiteConfig {
            streams: 6,
            rounds: 120,
            dim: 4,
            competitors: 4,
            seed: 4,
        };
        let report = run_perceptron_suite(cfg).unwrap();
        assert!(report.passed(), "worst slack {}", report.worst_slack);
        assert_eq!(report.trials, 6 * 5);
    }

    #[test]
    fn suites_are_reproducible() {
        let cfg = CertSuiteConfig {
            streams: 3,
            rounds: 60,
            dim: 3,
            competitors: 2,
            seed: 9,
        };
        assert_eq!(
            run_certificate_suite(cfg).unwrap(),
            run_certificate_suite(cfg).unwrap()
        );
    }
}
