//! Randomized property suites for the technical inequalities behind the
//! regret and convergence analysis.
//!
//! Each suite draws its inputs from documented ranges (chosen so every
//! intermediate stays comfortably inside the f64 range), evaluates both
//! sides of the inequality, and records the slack. Tolerances are
//! absolute 1e-9 plus a 1e-12 relative term for the suites whose sides
//! can legitimately reach ~1e100, where absolute comparisons would only
//! measure rounding; `bound_fenchel`'s numeric sup uses 1e-7.
//!
//! Trial `i` of a suite with seed `s` draws from a ChaCha8 stream keyed
//! by `(s, i)`, so suites can be split, resumed, or parallelized without
//! changing their verdicts.

use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LemmaReport;
use crate::losses::Loss;

const ABS_TOL: f64 = 1e-9;
const REL_TOL: f64 = 1e-12;
const FENCHEL_TOL: f64 = 1e-7;

/// Which technical inequality to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaId {
    /// Σ x_t/(δ + Σ_{i≤t} x_i) ≤ ln(Σ x_t/δ + 1).
    LogBound,
    /// The Fenchel conjugate of b·exp(‖·‖²/(2α)) is bounded by
    /// x·√(2α·ln(√α·x/b + 1)) − b; checked by a 1-D numeric sup.
    BoundFenchel,
    /// (ℓ'(x))² ≤ 4Hℓ(x) for H-smooth losses.
    SmoothLoss,
    /// Both second-order-expansion bounds on exp((2ab + b²)/(2c)).
    StrongSmooth,
    /// x − a(x+b)^α − c ≤ 0 implies x ≤ a·max{(2a)^{α/(1−α)}, (2(b+c))^α} + c.
    SolveAlpha,
    /// The unique positive root of x^s − Σ cᵢ x^{qᵢ} − c_l is at most
    /// max{(l·cᵢ)^{1/(s−qᵢ)}, (l·c_l)^{1/s}}.
    SolveQuartic,
    /// min_{x≥0} a·x^p + b·x^{−q} ≤ 2a^{q/(q+p)}·b^{p/(q+p)}, attained at
    /// (pa/(qb))^{−1/(q+p)}.
    OptSum,
}

impl LemmaId {
    pub const ALL: [LemmaId; 7] = [
        LemmaId::LogBound,
        LemmaId::BoundFenchel,
        LemmaId::SmoothLoss,
        LemmaId::StrongSmooth,
        LemmaId::SolveAlpha,
        LemmaId::SolveQuartic,
        LemmaId::OptSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::LogBound => "log_bound",
            LemmaId::BoundFenchel => "bound_fenchel",
            LemmaId::SmoothLoss => "smooth_loss",
            LemmaId::StrongSmooth => "strong_smooth",
            LemmaId::SolveAlpha => "solve_alpha",
            LemmaId::SolveQuartic => "solve_quartic",
            LemmaId::OptSum => "opt_sum",
        }
    }
}

impl FromStr for LemmaId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LemmaId::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown lemma suite `{s}`"))
    }
}

impl std::fmt::Display for LemmaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Independent generator for trial `trial` of a suite seeded with `seed`.
pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Mixed absolute/relative slack allowance.
fn tol_for(rhs: f64) -> f64 {
    ABS_TOL + REL_TOL * rhs.abs()
}

/// Run `trials` randomized checks of one lemma. Violations are counted
/// against the suite's tolerance; `worst_slack` is max(LHS − RHS).
pub fn check_lemma(lemma: LemmaId, trials: usize, seed: u64) -> LemmaReport {
    let mut report = LemmaReport::new(lemma.name());
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        match lemma {
            LemmaId::LogBound => check_log_bound(&mut rng, &mut report),
            LemmaId::BoundFenchel => check_bound_fenchel(&mut rng, &mut report),
            LemmaId::SmoothLoss => check_smooth_loss(&mut rng, &mut report),
            LemmaId::StrongSmooth => check_strong_smooth(&mut rng, &mut report),
            LemmaId::SolveAlpha => check_solve_alpha(&mut rng, &mut report),
            LemmaId::SolveQuartic => check_solve_quartic(&mut rng, &mut report),
            LemmaId::OptSum => check_opt_sum(&mut rng, &mut report),
        }
    }
    report
}

/// δ log-uniform in [1e-6, 1e6], up to 50 terms log-uniform in
/// [1e-9, 1e3] with a 10% chance of an exact zero each.
fn check_log_bound(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let n = rng.random_range(1..=50);
    let delta = log_uniform(rng, 1e-6, 1e6);
    let xs: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.1 {
                0.0
            } else {
                log_uniform(rng, 1e-9, 1e3)
            }
        })
        .collect();
    let mut prefix = delta;
    let mut lhs = 0.0;
    for &x in &xs {
        prefix += x;
        lhs += x / prefix;
    }
    let total: f64 = xs.iter().sum();
    let rhs = (total / delta + 1.0).ln();
    report.record(lhs, rhs, tol_for(rhs));
}

/// α, b log-uniform in [1e-3, 1e3]; x log-uniform in [1e-3, 1e3] with a
/// 5% chance of zero. The sup over y is located by golden-section search
/// on the (strictly concave) objective after bracketing where its
/// derivative turns negative; the suite tolerance is 1e-7.
fn check_bound_fenchel(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let alpha = log_uniform(rng, 1e-3, 1e3);
    let b = log_uniform(rng, 1e-3, 1e3);
    let x = if rng.random::<f64>() < 0.05 {
        0.0
    } else {
        log_uniform(rng, 1e-3, 1e3)
    };

    let objective = |y: f64| x * y - b * (y * y / (2.0 * alpha)).min(700.0).exp();
    // derivative x - (b/α)·y·e^{y²/(2α)} is positive at 0 (or the sup is
    // at 0); double until it turns negative
    let derivative = |y: f64| x - b / alpha * y * (y * y / (2.0 * alpha)).min(700.0).exp();
    let mut hi = alpha.sqrt().max(1e-6);
    let mut guard = 0;
    while derivative(hi) > 0.0 && guard < 400 {
        hi *= 2.0;
        guard += 1;
    }
    // golden-section on [0, hi]
    let inv_phi = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (0.0f64, hi);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d);
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    let sup = objective(0.5 * (lo + hi)).max(objective(0.0));
    let rhs = x * (2.0 * alpha * (alpha.sqrt() * x / b + 1.0).ln()).sqrt() - b;
    report.record(sup, rhs, FENCHEL_TOL * rhs.abs().max(1.0));
}

/// Random smooth loss, margin uniform in [-30, 30].
fn check_smooth_loss(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let loss = [Loss::SmoothedHinge, Loss::Square, Loss::Logistic][rng.random_range(0..3)];
    let x = rng.random_range(-30.0..30.0);
    let h = loss.smoothness().expect("only smooth losses drawn");
    let d = loss.derivative(x);
    let lhs = d * d;
    let rhs = 4.0 * h * loss.value(x);
    report.record(lhs, rhs, tol_for(rhs));
}

/// a uniform in [0, 10] (zero included), c log-uniform in [0.5, 100],
/// |b| log-uniform in [1e-3, 10] with random sign and a 5% chance of
/// exactly zero; the resulting exponents stay below 300.
fn check_strong_smooth(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let a = if rng.random::<f64>() < 0.1 {
        0.0
    } else {
        rng.random_range(0.0..10.0)
    };
    let c = log_uniform(rng, 0.5, 100.0);
    let b = if rng.random::<f64>() < 0.05 {
        0.0
    } else {
        let mag = log_uniform(rng, 1e-3, 10.0);
        if rng.random::<bool>() {
            mag
        } else {
            -mag
        }
    };

    let lhs = ((2.0 * a * b + b * b) / (2.0 * c)).exp();
    let rhs = if b > 0.0 {
        1.0 + a * b / c
            + b * b / (2.0 * c)
                * ((a + b) * (a + b) / c + 1.0)
                * ((2.0 * a * b + b * b) / (2.0 * c)).exp()
    } else {
        1.0 + a * b / c
            + b * b / (2.0 * c) * ((a * a + b * b) / c + 1.0) * (b * b / (2.0 * c)).exp()
    };
    report.record(lhs, rhs, tol_for(rhs));
}

fn bisect_root(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// a, b, c log-uniform in [1e-2, 1e2], α uniform in [0.05, 0.95]. The
/// largest x satisfying the hypothesis is the root of
/// x − a(x+b)^α − c = 0, found by bisection.
fn check_solve_alpha(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let a = log_uniform(rng, 1e-2, 1e2);
    let b = log_uniform(rng, 1e-2, 1e2);
    let c = log_uniform(rng, 1e-2, 1e2);
    let alpha = rng.random_range(0.05..0.95);

    let psi = |x: f64| x - a * (x + b).powf(alpha) - c;
    let mut hi = c.max(1.0);
    while psi(hi) <= 0.0 {
        hi *= 2.0;
    }
    let root = bisect_root(0.0, hi, psi);
    let bound = a * ((2.0 * a).powf(alpha / (1.0 - alpha))).max((2.0 * (b + c)).powf(alpha)) + c;
    report.record(root, bound, tol_for(bound));
}

/// 2 to 5 terms; s uniform in [1, 5]; the lower exponents are s times
/// distinct multiples of 0.1 drawn from {0.1, ..., 0.9}, keeping every
/// gap at least 0.1 so the root bound stays well inside f64 range;
/// coefficients log-uniform in [1e-3, 1e3]. Also verifies the root is
/// unique by counting sign changes on a log grid around it.
fn check_solve_quartic(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let l = rng.random_range(2..=5usize);
    let s = rng.random_range(1.0..5.0);
    let mut fractions: Vec<usize> = (1..=9).collect();
    // draw l-1 distinct lattice fractions, descending
    for i in 0..l - 1 {
        let j = rng.random_range(i..fractions.len());
        fractions.swap(i, j);
    }
    let mut qs: Vec<f64> = fractions[..l - 1]
        .iter()
        .map(|&f| s * f as f64 / 10.0)
        .collect();
    qs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let cs: Vec<f64> = (0..l).map(|_| log_uniform(rng, 1e-3, 1e3)).collect();

    let psi = |x: f64| {
        let mut v = x.powf(s);
        for (q, c) in qs.iter().zip(&cs) {
            v -= c * x.powf(*q);
        }
        v - cs[l - 1]
    };
    let mut hi = 1.0;
    while psi(hi) <= 0.0 {
        hi *= 2.0;
    }
    let root = bisect_root(0.0, hi, psi);

    let mut bound = (l as f64 * cs[l - 1]).powf(1.0 / s);
    for (q, c) in qs.iter().zip(&cs) {
        bound = bound.max((l as f64 * c).powf(1.0 / (s - q)));
    }
    report.record(root, bound, tol_for(bound));

    // uniqueness: exactly one sign change of ψ on a log grid spanning the root
    let mut changes = 0;
    let mut prev_sign = psi(root * 1e-6 + 1e-300) > 0.0;
    for i in 0..=120 {
        let x = root * 1e-6 * 10f64.powf(i as f64 * 0.075);
        let sign = psi(x) > 0.0;
        if sign != prev_sign {
            changes += 1;
            prev_sign = sign;
        }
    }
    report.record(changes as f64, 1.0, 0.0);
}

/// a, b log-uniform in [1e-3, 1e3]; p, q uniform in [0.1, 4]. Checks the
/// closed-form argmin against a surrounding log grid and the min value
/// against the stated bound.
fn check_opt_sum(rng: &mut ChaCha8Rng, report: &mut LemmaReport) {
    let a = log_uniform(rng, 1e-3, 1e3);
    let b = log_uniform(rng, 1e-3, 1e3);
    let p = rng.random_range(0.1..4.0);
    let q = rng.random_range(0.1..4.0);

    let f = |x: f64| a * x.powf(p) + b * x.powf(-q);
    let argmin = (p * a / (q * b)).powf(-1.0 / (q + p));
    let min_val = f(argmin);
    let bound = 2.0 * a.powf(q / (q + p)) * b.powf(p / (q + p));
    report.record(min_val, bound, tol_for(bound));

    // the closed form must not beat any sampled point (argmin property)
    let mut grid_min = f64::INFINITY;
    for i in 0..60 {
        let x = argmin * 10f64.powf(-2.0 + i as f64 * (4.0 / 59.0));
        grid_min = grid_min.min(f(x));
    }
    report.record(min_val, grid_min, tol_for(grid_min));
}
