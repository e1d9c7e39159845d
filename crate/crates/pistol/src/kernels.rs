//! Kernel functions and finite kernel expansions.
//!
//! An [`Expansion`] represents a function in the kernel's function space
//! as a weighted sum of kernel sections, `f = Σᵢ cᵢ K(xᵢ, ·)`, and keeps
//! its squared norm up to date in O(1) per added term:
//!
//! ```text
//! ‖f + c K(x,·)‖² = ‖f‖² + 2 c f(x) + c² K(x, x)
//! ```
//!
//! The online learners already evaluate `f(x)` before each update, so the
//! norm update reuses that value and training never needs the quadratic
//! Gram recomputation (tests cross-check the cache against it).

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::data::SparseVector;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("gaussian gamma must be finite and positive, got {0}")]
    InvalidGamma(f64),
    #[error("model line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Kernel function choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Gaussian { gamma: f64 },
}

impl Kernel {
    pub fn gaussian(gamma: f64) -> Result<Kernel, KernelError> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(KernelError::InvalidGamma(gamma));
        }
        Ok(Kernel::Gaussian { gamma })
    }

    /// K(x, x').
    pub fn eval(&self, x: &SparseVector, other: &SparseVector) -> f64 {
        match *self {
            Kernel::Linear => x.dot(other),
            Kernel::Gaussian { gamma } => (-gamma * x.dist_sq(other)).exp(),
        }
    }

    /// ‖K(x,·)‖ = √K(x, x). Exactly 1 for the Gaussian kernel.
    pub fn self_norm(&self, x: &SparseVector) -> f64 {
        match *self {
            Kernel::Linear => x.norm(),
            Kernel::Gaussian { .. } => 1.0,
        }
    }
}

/// A function `Σᵢ cᵢ K(xᵢ, ·)` with cached squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    kernel: Kernel,
    points: Vec<SparseVector>,
    coeffs: Vec<f64>,
    norm_sq: f64,
}

impl Expansion {
    /// The zero function.
    pub fn new(kernel: Kernel) -> Self {
        Expansion {
            kernel,
            points: Vec::new(),
            coeffs: Vec::new(),
            norm_sq: 0.0,
        }
    }

    /// Build from explicit terms; the squared norm is computed from the
    /// full Gram sum, O(n²).
    pub fn from_terms(kernel: Kernel, terms: Vec<(f64, SparseVector)>) -> Self {
        let (coeffs, points): (Vec<f64>, Vec<SparseVector>) = terms.into_iter().unzip();
        let mut norm_sq = 0.0;
        for i in 0..points.len() {
            norm_sq += coeffs[i] * coeffs[i] * kernel.eval(&points[i], &points[i]);
            for j in 0..i {
                norm_sq += 2.0 * coeffs[i] * coeffs[j] * kernel.eval(&points[i], &points[j]);
            }
        }
        Expansion {
            kernel,
            points,
            coeffs,
            norm_sq,
        }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (f64, &SparseVector)> {
        self.coeffs.iter().copied().zip(self.points.iter())
    }

    /// Evaluate `f(x) = Σᵢ cᵢ K(xᵢ, x)`.
    pub fn eval(&self, x: &SparseVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.points)
            .map(|(c, p)| c * self.kernel.eval(p, x))
            .sum()
    }

    /// Append the term `c K(x,·)`. `fx_hint` must equal `self.eval(x)`;
    /// callers always have it from the preceding prediction.
    pub fn add(&mut self, c: f64, x: SparseVector, fx_hint: f64) {
        let self_kernel = self.kernel.eval(&x, &x);
        self.norm_sq += 2.0 * c * fx_hint + c * c * self_kernel;
        self.coeffs.push(c);
        self.points.push(x);
    }

    /// Cached ‖f‖². Rounding after cancellation can leave tiny negative
    /// dust, which is clamped to zero before anyone exponentiates it.
    pub fn norm_sq(&self) -> f64 {
        debug_assert!(
            self.norm_sq >= -1e-9,
            "norm cache corrupt: {}",
            self.norm_sq
        );
        self.norm_sq.max(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Scale all coefficients; the squared norm scales by `factor²`.
    pub fn scale_coeffs(&mut self, factor: f64) {
        for c in &mut self.coeffs {
            *c *= factor;
        }
        self.norm_sq *= factor * factor;
    }

    /// Serialize to the line-oriented model format: a header naming the
    /// kernel, then one `coeff idx:val ...` line per term.
    ///
    /// ```text
    /// kernel gaussian 0.04
    /// -0.5 1:0.25 7:1
    /// 2 3:0.5
    /// ```
    pub fn write_to<W: Write>(&self, writer: &mut W) -> io::Result<()> {
        match self.kernel {
            Kernel::Linear => writeln!(writer, "kernel linear")?,
            Kernel::Gaussian { gamma } => writeln!(writer, "kernel gaussian {gamma}")?,
        }
        for (c, p) in self.terms() {
            write!(writer, "{c}")?;
            for &(idx, val) in p.entries() {
                write!(writer, " {idx}:{val}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Parse the model format written by [`Expansion::write_to`]. The
    /// squared norm is recomputed from the Gram sum.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, KernelError> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| KernelError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header = header?;
        let mut head = header.trim_end_matches('\r').split_ascii_whitespace();
        let kernel = match (head.next(), head.next(), head.next()) {
            (Some("kernel"), Some("linear"), None) => Kernel::Linear,
            (Some("kernel"), Some("gaussian"), Some(g)) => {
                let gamma: f64 = g.parse().map_err(|_| KernelError::Parse {
                    line: 1,
                    message: format!("bad gamma `{g}`"),
                })?;
                Kernel::gaussian(gamma)?
            }
            _ => {
                return Err(KernelError::Parse {
                    line: 1,
                    message: format!("bad header `{header}`"),
                })
            }
        };
        let mut terms = Vec::new();
        for (lineno, line) in lines {
            let lineno = lineno + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut tokens = line.split_ascii_whitespace();
            let coeff: f64 = tokens
                .next()
                .unwrap()
                .parse()
                .map_err(|_| KernelError::Parse {
                    line: lineno,
                    message: "bad coefficient".into(),
                })?;
            let mut entries = Vec::new();
            for tok in tokens {
                let (i, v) = tok.split_once(':').ok_or_else(|| KernelError::Parse {
                    line: lineno,
                    message: format!("bad entry `{tok}`"),
                })?;
                let idx: u32 = i.parse().map_err(|_| KernelError::Parse {
                    line: lineno,
                    message: format!("bad index `{i}`"),
                })?;
                let val: f64 = v.parse().map_err(|_| KernelError::Parse {
                    line: lineno,
                    message: format!("bad value `{v}`"),
                })?;
                entries.push((idx, val));
            }
            let x = SparseVector::new(entries).map_err(|e| KernelError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            terms.push((coeff, x));
        }
        Ok(Expansion::from_terms(kernel, terms))
    }
}
