//! The `audit` subcommand: run certificate and lemma suites, print a
//! line-oriented report, optionally write it as CSV, and exit 0 iff
//! every selected suite reports zero violations.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use pistol::audit::{
    check_lemma, run_certificate_suite, run_perceptron_suite, CertSuiteConfig, LemmaId,
    LemmaReport, PerceptronSuiteConfig,
};

use crate::{config_error, CliError};

pub const AUDIT_CSV_HEADER: &str = "suite,trials,violations,worst_slack";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Suite {
    All,
    Lemmas,
    Certificates,
    Perceptron,
    Lemma(LemmaId),
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Suite::All),
            "lemmas" => Ok(Suite::Lemmas),
            "certificates" => Ok(Suite::Certificates),
            "perceptron" => Ok(Suite::Perceptron),
            other => other
                .parse::<LemmaId>()
                .map(Suite::Lemma)
                .map_err(|_| format!("unknown suite `{other}`")),
        }
    }
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// all | lemmas | certificates | perceptron | log_bound | bound_fenchel |
    /// smooth_loss | strong_smooth | solve_alpha | solve_quartic | opt_sum
    #[arg(long, default_value = "all")]
    suite: String,
    /// Randomized trials per lemma suite
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Streams for the certificate/perceptron suites
    #[arg(long, default_value_t = 50)]
    streams: usize,
    /// Rounds per stream for the certificate/perceptron suites
    #[arg(long, default_value_t = 200)]
    rounds: usize,
    /// Input dimension for the synthetic streams
    #[arg(long, default_value_t = 5)]
    dim: u32,
    /// Sampled competitors per stream (plus h = 0)
    #[arg(long, default_value_t = 10)]
    competitors: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Parallel lemma suites (reports stay in deterministic order)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the machine-readable report here
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: AuditArgs) -> Result<i32, CliError> {
    let suite: Suite = match args.suite.parse() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    if args.trials == 0 || args.streams == 0 {
        return config_error("--trials and --streams must be positive");
    }

    let mut reports: Vec<LemmaReport> = Vec::new();
    let run_lemmas = matches!(suite, Suite::All | Suite::Lemmas);
    let run_certs = matches!(suite, Suite::All | Suite::Certificates);
    let run_perc = matches!(suite, Suite::All | Suite::Perceptron);

    if run_certs {
        let outcome = run_certificate_suite(CertSuiteConfig {
            streams: args.streams,
            rounds: args.rounds,
            dim: args.dim,
            competitors: args.competitors,
            seed: args.seed,
        })
        .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        reports.push(outcome.certificates);
        reports.push(outcome.invariant);
    }
    if run_perc {
        let report = run_perceptron_suite(PerceptronSuiteConfig {
            streams: args.streams,
            rounds: args.rounds,
            dim: args.dim,
            competitors: args.competitors,
            seed: args.seed,
        })
        .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        reports.push(report);
    }
    if run_lemmas {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs.max(1))
            .build()
            .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        let lemma_reports: Vec<LemmaReport> = pool.install(|| {
            use rayon::prelude::*;
            LemmaId::ALL
                .par_iter()
                .map(|&lemma| check_lemma(lemma, args.trials, args.seed))
                .collect()
        });
        reports.extend(lemma_reports);
    }
    if let Suite::Lemma(lemma) = suite {
        reports.push(check_lemma(lemma, args.trials, args.seed));
    }

    let mut all_pass = true;
    for report in &reports {
        all_pass &= report.passed();
        println!(
            "suite={} trials={} violations={} worst_slack={:e}",
            report.suite, report.trials, report.violations, report.worst_slack
        );
    }
    println!("AUDIT {}", if all_pass { "PASS" } else { "FAIL" });

    if let Some(path) = &args.out {
        let mut csv = String::from(AUDIT_CSV_HEADER);
        csv.push('\n');
        for report in &reports {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                report.suite, report.trials, report.violations, report.worst_slack
            ));
        }
        let mut file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))
            .map_err(CliError::Runtime)?;
        file.write_all(csv.as_bytes())
            .context("writing report")
            .map_err(CliError::Runtime)?;
    }

    Ok(if all_pass { 0 } else { 1 })
}
