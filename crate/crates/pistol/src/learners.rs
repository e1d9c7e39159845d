//! The online learners: PiSTOL, averaged SGD, kernel Perceptron, and the
//! per-coordinate PiSTOL variant, plus single-pass training with
//! online-to-batch averaging.
//!
//! All four share the same round structure: predict on `x_t`, receive
//! `y_t`, update. [`train`] drives a single pass over a stream and
//! returns the predictor the algorithm's statistical guarantee is about —
//! the average of the iterates for PiSTOL and ASGD, the final function
//! for the Perceptron — together with a per-round [`Trace`] the audit
//! machinery consumes.
//!
//! Averaging is O(1) per round: since every iterate is a scaled version
//! of the running gradient sum, the contribution of the support point
//! added at round `i` to `Σ_t f_t` factors as `r_i · (S_T − S_i)` where
//! `S_t` accumulates the per-round scale factors. For ASGD the scale is
//! identically 1 and `S_t = t`.

use thiserror::Error;

use crate::data::{LabeledExample, SparseVector};
use crate::kernels::{Expansion, Kernel};
use crate::losses::Loss;

/// Largest exponent fed to `exp`; above this the scale or prediction
/// would leave the f64 range and the step fails instead of saturating.
const MAX_EXP: f64 = 709.0;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("round {round}: iterate scale overflows the float range")]
    ScaleOverflow { round: usize },
    #[error("round {round}: prediction is not finite")]
    NonFinitePrediction { round: usize },
    #[error("round {round}: perceptron labels must be exactly +1 or -1, got {y}")]
    LabelNotBinary { round: usize, y: f64 },
    #[error("round {round}: input infinity norm {norm} exceeds 1")]
    InfNormExceeded { round: usize, norm: f64 },
    #[error("round {round}: feature index {index} exceeds dimension {dim}")]
    DimensionExceeded { round: usize, index: u32, dim: u32 },
    #[error("{0}")]
    InvalidConfig(String),
}

/// PiSTOL hyperparameters; all must be finite and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PistolParams {
    pub a: f64,
    pub b: f64,
    pub lipschitz: f64,
}

impl PistolParams {
    pub fn new(a: f64, b: f64, lipschitz: f64) -> Result<Self, LearnerError> {
        for (name, v) in [("a", a), ("b", b), ("L", lipschitz)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(LearnerError::InvalidConfig(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        Ok(PistolParams { a, b, lipschitz })
    }
}

/// One round of any learner. `alpha`, `norm_sq` and `scale` carry the
/// PiSTOL quantities (`α_t` and `‖g_t‖²` after the update, the iterate
/// scale `c_t` used for this round's prediction); ASGD and the Perceptron
/// fill `norm_sq` with the squared norm of their own iterate, use scale 1
/// and leave `alpha` at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub prediction: f64,
    pub margin: f64,
    pub loss: f64,
    pub subgradient: f64,
    pub scale: f64,
    pub alpha: f64,
    pub norm_sq: f64,
    pub self_norm: f64,
}

/// Per-round records plus the cumulative loss of the run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub cumulative_loss: f64,
    /// Set for PiSTOL runs so certificates can read the hyperparameters
    /// the trace was produced under.
    pub pistol: Option<PistolParams>,
}

impl Trace {
    pub fn rounds(&self) -> usize {
        self.records.len()
    }
}

/// State of the PiSTOL learner: the negated gradient sum `g`, the scale
/// denominator `α`, and bookkeeping sums.
///
/// Invariants maintained by construction:
/// `α_t = a·L + a·Σ_i |s_i|·√K(x_i,x_i)` and `‖g_t‖ ≤ α_t / a`.
#[derive(Debug, Clone)]
pub struct PistolState {
    g: Expansion,
    alpha: f64,
    params: PistolParams,
    sum_abs_s: f64,
    t: usize,
}

impl PistolState {
    pub fn new(kernel: Kernel, params: PistolParams) -> Self {
        PistolState {
            g: Expansion::new(kernel),
            alpha: params.a * params.lipschitz,
            params,
            sum_abs_s: 0.0,
            t: 0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g(&self) -> &Expansion {
        &self.g
    }

    pub fn sum_abs_s(&self) -> f64 {
        self.sum_abs_s
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    /// Run one round: predict `f_t(x) = c_t·g_{t-1}(x)` with
    /// `c_t = (b/α_{t-1})·exp(‖g_{t-1}‖²/(2α_{t-1}))`, receive the label,
    /// and fold the subgradient into `g` and `α`.
    ///
    /// The scale is computed in the log domain,
    /// `log c_t = log b − log α + ‖g‖²/(2α)`, and the step fails rather
    /// than returning a saturated or non-finite prediction.
    pub fn step(
        &mut self,
        x: &SparseVector,
        y: f64,
        loss: Loss,
    ) -> Result<(f64, TraceRecord), LearnerError> {
        let round = self.t + 1;
        let gx = self.g.eval(x);
        let log_scale =
            self.params.b.ln() - self.alpha.ln() + self.g.norm_sq() / (2.0 * self.alpha);
        if log_scale > MAX_EXP {
            return Err(LearnerError::ScaleOverflow { round });
        }
        let scale = log_scale.exp();
        let prediction = if gx == 0.0 { 0.0 } else { scale * gx };
        if !prediction.is_finite() {
            return Err(LearnerError::NonFinitePrediction { round });
        }

        let margin = y * prediction;
        let loss_value = loss.value(margin);
        let s = y * loss.derivative(margin);
        let self_norm = self.g.kernel().self_norm(x);
        if s != 0.0 {
            self.g.add(-s, x.clone(), gx);
            self.alpha += self.params.a * s.abs() * self_norm;
            self.sum_abs_s += s.abs();
        }
        self.t = round;

        let record = TraceRecord {
            prediction,
            margin,
            loss: loss_value,
            subgradient: s,
            scale,
            alpha: self.alpha,
            norm_sq: self.g.norm_sq(),
            self_norm,
        };
        Ok((prediction, record))
    }
}

/// Averaged SGD with constant step size `eta` in (0, 1/4].
#[derive(Debug, Clone)]
pub struct AsgdState {
    f: Expansion,
    eta: f64,
    t: usize,
}

impl AsgdState {
    pub fn new(kernel: Kernel, eta: f64) -> Result<Self, LearnerError> {
        if !eta.is_finite() || eta <= 0.0 || eta > 0.25 {
            return Err(LearnerError::InvalidConfig(format!(
                "eta must lie in (0, 1/4], got {eta}"
            )));
        }
        Ok(AsgdState {
            f: Expansion::new(kernel),
            eta,
            t: 0,
        })
    }

    pub fn f(&self) -> &Expansion {
        &self.f
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Predict with `f_t(x)` and take a gradient descent step,
    /// `f ← f − η·y·ℓ'(y·f_t(x))·K(x,·)`.
    pub fn step(&mut self, x: &SparseVector, y: f64, loss: Loss) -> (f64, TraceRecord) {
        self.t += 1;
        let fx = self.f.eval(x);
        let margin = y * fx;
        let loss_value = loss.value(margin);
        let s = y * loss.derivative(margin);
        let self_norm = self.f.kernel().self_norm(x);
        if s != 0.0 {
            self.f.add(-self.eta * s, x.clone(), fx);
        }
        let record = TraceRecord {
            prediction: fx,
            margin,
            loss: loss_value,
            subgradient: s,
            scale: 1.0,
            alpha: 0.0,
            norm_sq: self.f.norm_sq(),
            self_norm,
        };
        (fx, record)
    }
}

/// The kernel Perceptron. Labels must be exactly ±1; `sign(0) = +1`.
#[derive(Debug, Clone)]
pub struct PerceptronState {
    f: Expansion,
    mistakes: usize,
    t: usize,
}

impl PerceptronState {
    pub fn new(kernel: Kernel) -> Self {
        PerceptronState {
            f: Expansion::new(kernel),
            mistakes: 0,
            t: 0,
        }
    }

    pub fn f(&self) -> &Expansion {
        &self.f
    }

    pub fn mistakes(&self) -> usize {
        self.mistakes
    }

    /// Predict `sign(f_t(x))`, update only on mistakes. Returns the
    /// predicted label.
    pub fn step(&mut self, x: &SparseVector, y: f64) -> Result<(f64, TraceRecord), LearnerError> {
        let round = self.t + 1;
        if y != 1.0 && y != -1.0 {
            return Err(LearnerError::LabelNotBinary { round, y });
        }
        self.t = round;
        let fx = self.f.eval(x);
        let label = if fx >= 0.0 { 1.0 } else { -1.0 };
        let mistake = label != y;
        let self_norm = self.f.kernel().self_norm(x);
        if mistake {
            self.f.add(y, x.clone(), fx);
            self.mistakes += 1;
        }
        let record = TraceRecord {
            prediction: label,
            margin: y * fx,
            loss: if mistake { 1.0 } else { 0.0 },
            subgradient: if mistake { -y } else { 0.0 },
            scale: 1.0,
            alpha: 0.0,
            norm_sq: self.f.norm_sq(),
            self_norm,
        };
        Ok((label, record))
    }
}

#[derive(Debug, Clone)]
struct CoordCell {
    g: f64,
    alpha: f64,
    weight: f64,
    /// Sum of this coordinate's weight over rounds `1..=last`.
    acc: f64,
    last: usize,
}

/// Per-coordinate PiSTOL for linear kernels: an independent scalar copy
/// of the learner per feature, sharing `a` and `L`, with `b = 1/d` by
/// default. Inputs must satisfy `‖x‖∞ ≤ 1`.
#[derive(Debug, Clone)]
pub struct CoordPistolState {
    a: f64,
    b: f64,
    lipschitz: f64,
    coords: Vec<CoordCell>,
    sum_gsq: f64,
    t: usize,
}

impl CoordPistolState {
    /// `b` defaults to `1/dim` when not given.
    pub fn new(dim: u32, a: f64, lipschitz: f64, b: Option<f64>) -> Result<Self, LearnerError> {
        if dim == 0 {
            return Err(LearnerError::InvalidConfig("dimension must be >= 1".into()));
        }
        let b = b.unwrap_or(1.0 / dim as f64);
        let params = PistolParams::new(a, b, lipschitz)?;
        let cell = CoordCell {
            g: 0.0,
            alpha: params.a * params.lipschitz,
            weight: 0.0,
            acc: 0.0,
            last: 0,
        };
        Ok(CoordPistolState {
            a: params.a,
            b: params.b,
            lipschitz: params.lipschitz,
            coords: vec![cell; dim as usize],
            sum_gsq: 0.0,
            t: 0,
        })
    }

    pub fn dim(&self) -> u32 {
        self.coords.len() as u32
    }

    /// Shared hyperparameters (a, per-copy b, L).
    pub fn params(&self) -> (f64, f64, f64) {
        (self.a, self.b, self.lipschitz)
    }

    /// Current prediction weights, one per coordinate.
    pub fn weights(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.weight).collect()
    }

    fn coord_weight(b: f64, alpha: f64, g: f64, round: usize) -> Result<f64, LearnerError> {
        if g == 0.0 {
            return Ok(0.0);
        }
        let log_scale = b.ln() - alpha.ln() + g * g / (2.0 * alpha);
        if log_scale > MAX_EXP {
            return Err(LearnerError::ScaleOverflow { round });
        }
        let w = log_scale.exp() * g;
        if !w.is_finite() {
            return Err(LearnerError::NonFinitePrediction { round });
        }
        Ok(w)
    }

    /// Predict `Σ_i w_i x_i`, then update every touched coordinate with
    /// its share `s·x_i` of the subgradient.
    pub fn step(
        &mut self,
        x: &SparseVector,
        y: f64,
        loss: Loss,
    ) -> Result<(f64, TraceRecord), LearnerError> {
        let round = self.t + 1;
        let dim = self.coords.len() as u32;
        for &(idx, v) in x.entries() {
            if idx > dim {
                return Err(LearnerError::DimensionExceeded {
                    round,
                    index: idx,
                    dim,
                });
            }
            if v.abs() > 1.0 {
                return Err(LearnerError::InfNormExceeded {
                    round,
                    norm: x.inf_norm(),
                });
            }
        }

        let prediction: f64 = x
            .entries()
            .iter()
            .map(|&(idx, v)| self.coords[idx as usize - 1].weight * v)
            .sum();
        if !prediction.is_finite() {
            return Err(LearnerError::NonFinitePrediction { round });
        }
        let margin = y * prediction;
        let loss_value = loss.value(margin);
        let s = y * loss.derivative(margin);

        for &(idx, v) in x.entries() {
            let cell = &mut self.coords[idx as usize - 1];
            // settle the constant-weight stretch since this coordinate
            // was last touched, including the current round
            cell.acc += cell.weight * (round - cell.last) as f64;
            cell.last = round;
            let k = s * v;
            if k != 0.0 {
                self.sum_gsq -= cell.g * cell.g;
                cell.g -= k;
                cell.alpha += self.a * k.abs();
                self.sum_gsq += cell.g * cell.g;
                cell.weight = Self::coord_weight(self.b, cell.alpha, cell.g, round)?;
            }
        }
        self.t = round;

        let record = TraceRecord {
            prediction,
            margin,
            loss: loss_value,
            subgradient: s,
            scale: 1.0,
            alpha: 0.0,
            norm_sq: self.sum_gsq.max(0.0),
            self_norm: x.norm(),
        };
        Ok((prediction, record))
    }

    /// Average of the weight vectors over rounds `1..=T`.
    pub fn averaged_weights(&self) -> Vec<f64> {
        if self.t == 0 {
            return vec![0.0; self.coords.len()];
        }
        let t = self.t as f64;
        self.coords
            .iter()
            .map(|c| (c.acc + c.weight * (self.t - c.last) as f64) / t)
            .collect()
    }
}

/// Suffix-sum representation of the averaged iterate
/// `f̄_T = (1/T) Σ_t f_t`: support point `i` carries its raw coefficient
/// `r_i` and the scale prefix `S_i` at insertion, so its averaged
/// coefficient is `r_i · (S_T − S_i) / T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPredictor {
    kernel: Kernel,
    points: Vec<SparseVector>,
    raw_coeffs: Vec<f64>,
    prefix_at_insert: Vec<f64>,
    total_scale: f64,
    rounds: usize,
}

impl AveragedPredictor {
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn support_size(&self) -> usize {
        self.points.len()
    }

    pub fn eval(&self, x: &SparseVector) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        let t = self.rounds as f64;
        self.raw_coeffs
            .iter()
            .zip(&self.prefix_at_insert)
            .zip(&self.points)
            .map(|((r, s_i), p)| r * (self.total_scale - s_i) / t * self.kernel.eval(p, x))
            .sum()
    }

    /// Collapse into a plain expansion with coefficients
    /// `r_i (S_T − S_i) / T` (recomputes the norm, O(n²)).
    pub fn collapse(&self) -> Expansion {
        let t = self.rounds.max(1) as f64;
        let terms = self
            .raw_coeffs
            .iter()
            .zip(&self.prefix_at_insert)
            .zip(&self.points)
            .map(|((r, s_i), p)| (r * (self.total_scale - s_i) / t, p.clone()))
            .collect();
        Expansion::from_terms(self.kernel, terms)
    }
}

/// Dense averaged weights from a per-coordinate run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordAveraged {
    pub weights: Vec<f64>,
}

impl CoordAveraged {
    pub fn eval(&self, x: &SparseVector) -> f64 {
        x.entries()
            .iter()
            .filter(|&&(idx, _)| (idx as usize) <= self.weights.len())
            .map(|&(idx, v)| self.weights[idx as usize - 1] * v)
            .sum()
    }
}

/// Anything that scores a point.
pub trait Predict {
    fn predict(&self, x: &SparseVector) -> f64;
}

impl Predict for Expansion {
    fn predict(&self, x: &SparseVector) -> f64 {
        self.eval(x)
    }
}

impl Predict for AveragedPredictor {
    fn predict(&self, x: &SparseVector) -> f64 {
        self.eval(x)
    }
}

impl Predict for CoordAveraged {
    fn predict(&self, x: &SparseVector) -> f64 {
        self.eval(x)
    }
}

/// Algorithm selection for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub enum AlgoConfig {
    Pistol(PistolParams),
    Asgd {
        eta: f64,
    },
    Perceptron,
    /// Per-coordinate PiSTOL; linear kernel only. `b = None` means `1/dim`.
    PistolCoord {
        a: f64,
        lipschitz: f64,
        b: Option<f64>,
        dim: u32,
    },
}

/// What a single training pass hands back.
#[derive(Debug, Clone)]
pub enum TrainedPredictor {
    /// Online-to-batch average (PiSTOL, ASGD).
    Averaged(AveragedPredictor),
    /// Final iterate (Perceptron).
    Final(Expansion),
    /// Averaged per-coordinate weights.
    CoordAveraged(CoordAveraged),
}

impl Predict for TrainedPredictor {
    fn predict(&self, x: &SparseVector) -> f64 {
        match self {
            TrainedPredictor::Averaged(p) => p.eval(x),
            TrainedPredictor::Final(f) => f.eval(x),
            TrainedPredictor::CoordAveraged(w) => w.eval(x),
        }
    }
}

impl TrainedPredictor {
    /// The final iterate, for algorithms that return one. A Perceptron's
    /// expansion has one term per mistake.
    pub fn as_final(&self) -> Option<&Expansion> {
        match self {
            TrainedPredictor::Final(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_averaged(&self) -> Option<&AveragedPredictor> {
        match self {
            TrainedPredictor::Averaged(p) => Some(p),
            _ => None,
        }
    }
}

/// Single pass over the stream. PiSTOL and ASGD return the averaged
/// predictor (the average includes the zero first iterate), the
/// Perceptron its final function, the per-coordinate variant its averaged
/// weight vector.
pub fn train(
    algo: &AlgoConfig,
    kernel: &Kernel,
    stream: &[LabeledExample],
    loss: Loss,
) -> Result<(TrainedPredictor, Trace), LearnerError> {
    let mut trace = Trace::default();
    match algo {
        AlgoConfig::Pistol(params) => {
            let mut state = PistolState::new(*kernel, *params);
            trace.pistol = Some(*params);
            let mut builder = AveragingBuilder::new(*kernel);
            for ex in stream {
                let (_, rec) = state.step(&ex.x, ex.y, loss)?;
                builder.push(&ex.x, rec.scale, -rec.subgradient);
                trace.cumulative_loss += rec.loss;
                trace.records.push(rec);
            }
            Ok((TrainedPredictor::Averaged(builder.finish()), trace))
        }
        AlgoConfig::Asgd { eta } => {
            let mut state = AsgdState::new(*kernel, *eta)?;
            let mut builder = AveragingBuilder::new(*kernel);
            for ex in stream {
                let (_, rec) = state.step(&ex.x, ex.y, loss);
                builder.push(&ex.x, rec.scale, -eta * rec.subgradient);
                trace.cumulative_loss += rec.loss;
                trace.records.push(rec);
            }
            Ok((TrainedPredictor::Averaged(builder.finish()), trace))
        }
        AlgoConfig::Perceptron => {
            let mut state = PerceptronState::new(*kernel);
            for ex in stream {
                let (_, rec) = state.step(&ex.x, ex.y)?;
                trace.cumulative_loss += rec.loss;
                trace.records.push(rec);
            }
            Ok((TrainedPredictor::Final(state.f), trace))
        }
        AlgoConfig::PistolCoord {
            a,
            lipschitz,
            b,
            dim,
        } => {
            if !matches!(kernel, Kernel::Linear) {
                return Err(LearnerError::InvalidConfig(
                    "per-coordinate PiSTOL requires the linear kernel".into(),
                ));
            }
            let mut state = CoordPistolState::new(*dim, *a, *lipschitz, *b)?;
            for ex in stream {
                let (_, rec) = state.step(&ex.x, ex.y, loss)?;
                trace.cumulative_loss += rec.loss;
                trace.records.push(rec);
            }
            let averaged = CoordAveraged {
                weights: state.averaged_weights(),
            };
            Ok((TrainedPredictor::CoordAveraged(averaged), trace))
        }
    }
}

/// Accumulates the suffix-sum averaging data during a pass.
struct AveragingBuilder {
    kernel: Kernel,
    points: Vec<SparseVector>,
    raw_coeffs: Vec<f64>,
    prefix_at_insert: Vec<f64>,
    prefix: f64,
    rounds: usize,
}

impl AveragingBuilder {
    fn new(kernel: Kernel) -> Self {
        AveragingBuilder {
            kernel,
            points: Vec::new(),
            raw_coeffs: Vec::new(),
            prefix_at_insert: Vec::new(),
            prefix: 0.0,
            rounds: 0,
        }
    }

    /// Record one round. `scale` is the factor relating this round's
    /// iterate to the gradient sum; `raw_coeff` the coefficient the round
    /// appended to it (0 for no-op rounds).
    fn push(&mut self, x: &SparseVector, scale: f64, raw_coeff: f64) {
        self.rounds += 1;
        self.prefix += scale;
        if raw_coeff != 0.0 {
            self.points.push(x.clone());
            self.raw_coeffs.push(raw_coeff);
            self.prefix_at_insert.push(self.prefix);
        }
    }

    fn finish(self) -> AveragedPredictor {
        AveragedPredictor {
            kernel: self.kernel,
            points: self.points,
            raw_coeffs: self.raw_coeffs,
            prefix_at_insert: self.prefix_at_insert,
            total_scale: self.prefix,
            rounds: self.rounds,
        }
    }
}
