//! Dataset ingestion, normalization, seeded shuffling, and synthetic
//! margin streams.
//!
//! Inputs are sparse vectors with 1-based feature indices, stored exactly
//! as they appear in LIBSVM files. Labels live in `[-1, 1]` (binary
//! datasets use exactly ±1). Every randomized operation takes an explicit
//! `u64` seed and runs a `ChaCha8Rng`, so results are reproducible across
//! runs and platforms.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Errors from parsing, validation, or synthetic generation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: expected `label idx:val ...`, got malformed token `{token}`")]
    MalformedToken { line: usize, token: String },
    #[error("line {line}: feature index must be a positive integer")]
    InvalidIndex { line: usize },
    #[error("line {line}: duplicate or non-increasing feature index {index}")]
    IndexOrder { line: usize, index: u32 },
    #[error("line {line}: non-finite feature value")]
    NonFiniteValue { line: usize },
    #[error("line {line}: label {label} outside [-1, 1]")]
    LabelOutOfRange { line: usize, label: f64 },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("sparse vector entries must have strictly increasing positive indices and finite nonzero values")]
    InvalidEntries,
    #[error("synthetic stream needs d >= 1")]
    ZeroDimension,
    #[error("flip probability {0} outside [0, 0.5)")]
    FlipProbability(f64),
    #[error("margin rejection sampling exceeded {0} redraws; margin too large for the dimension")]
    RejectionCap(usize),
}

/// A sparse input point: `(index, value)` pairs sorted by strictly
/// increasing 1-based index. Zero entries are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Empty vector (the zero point).
    pub fn empty() -> Self {
        SparseVector {
            entries: Vec::new(),
        }
    }

    /// Build from `(index, value)` pairs, validating the invariants:
    /// strictly increasing positive indices, finite nonzero values.
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self, DataError> {
        let mut prev = 0u32;
        for &(idx, val) in &entries {
            if idx == 0 || idx <= prev || !val.is_finite() || val == 0.0 {
                return Err(DataError::InvalidEntries);
            }
            prev = idx;
        }
        Ok(SparseVector { entries })
    }

    /// Build from a dense slice; index `i` of the slice becomes feature
    /// `i + 1`. Zeros are dropped.
    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32 + 1, *v))
            .collect();
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest feature index, or 0 for the zero vector.
    pub fn max_index(&self) -> u32 {
        self.entries.last().map_or(0, |&(i, _)| i)
    }

    /// Sparse dot product by merging the two sorted entry lists.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.entries.len() && j < other.entries.len() {
            let (ia, va) = self.entries[i];
            let (ib, vb) = other.entries[j];
            match ia.cmp(&ib) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += va * vb;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Squared Euclidean distance, accumulated term by term so the result
    /// is exactly nonnegative.
    pub fn dist_sq(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.entries.len() || j < other.entries.len() {
            let a = self.entries.get(i).copied();
            let b = other.entries.get(j).copied();
            match (a, b) {
                (Some((ia, va)), Some((ib, vb))) if ia == ib => {
                    let d = va - vb;
                    acc += d * d;
                    i += 1;
                    j += 1;
                }
                (Some((ia, va)), Some((ib, _))) if ia < ib => {
                    acc += va * va;
                    i += 1;
                }
                (Some(_), Some((_, vb))) => {
                    acc += vb * vb;
                    j += 1;
                }
                (Some((_, va)), None) => {
                    acc += va * va;
                    i += 1;
                }
                (None, Some((_, vb))) => {
                    acc += vb * vb;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        acc
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// Infinity norm.
    pub fn inf_norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, &(_, v)| m.max(v.abs()))
    }
}

/// One training/test example; `|y| <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: SparseVector,
    pub y: f64,
}

/// An immutable sequence of examples plus the ambient dimension (max
/// feature index unless overridden).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub dim: u32,
    pub name: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Parse the LIBSVM text format: one `label idx:val idx:val ...` per
/// line, indices 1-based and strictly increasing. Blank lines and lines
/// starting with `#` are skipped. Both `\n` and `\r\n` line endings work.
///
/// Zero-valued features are dropped (the sparse representation omits
/// them); labels must lie in `[-1, 1]`.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset, DataError> {
    let mut examples = Vec::new();
    let mut dim = 0u32;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_ascii_whitespace();
        let label_tok = tokens.next().expect("nonempty line has a first token");
        let y: f64 = label_tok.parse().map_err(|_| DataError::MalformedToken {
            line: lineno,
            token: label_tok.to_string(),
        })?;
        if !y.is_finite() || y.abs() > 1.0 {
            return Err(DataError::LabelOutOfRange {
                line: lineno,
                label: y,
            });
        }
        let mut entries: Vec<(u32, f64)> = Vec::new();
        let mut prev = 0u32;
        for tok in tokens {
            let (idx_str, val_str) =
                tok.split_once(':')
                    .ok_or_else(|| DataError::MalformedToken {
                        line: lineno,
                        token: tok.to_string(),
                    })?;
            let idx: u32 = idx_str.parse().map_err(|_| DataError::MalformedToken {
                line: lineno,
                token: tok.to_string(),
            })?;
            if idx == 0 {
                return Err(DataError::InvalidIndex { line: lineno });
            }
            let val: f64 = val_str.parse().map_err(|_| DataError::MalformedToken {
                line: lineno,
                token: tok.to_string(),
            })?;
            if !val.is_finite() {
                return Err(DataError::NonFiniteValue { line: lineno });
            }
            if idx <= prev {
                return Err(DataError::IndexOrder {
                    line: lineno,
                    index: idx,
                });
            }
            prev = idx;
            if val != 0.0 {
                entries.push((idx, val));
            }
        }
        dim = dim.max(prev);
        examples.push(LabeledExample {
            x: SparseVector { entries },
            y,
        });
    }
    Ok(Dataset {
        examples,
        dim,
        name: String::new(),
    })
}

/// Write a dataset back out in LIBSVM format. Values are printed with
/// Rust's shortest-roundtrip float formatting, so parse → write → parse
/// is the identity on the dataset value.
pub fn write_libsvm<W: Write>(dataset: &Dataset, writer: &mut W) -> io::Result<()> {
    let mut line = String::new();
    for ex in &dataset.examples {
        line.clear();
        write!(line, "{}", ex.y).expect("writing to String cannot fail");
        for &(idx, val) in ex.x.entries() {
            write!(line, " {}:{}", idx, val).expect("writing to String cannot fail");
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Scale every example to unit Euclidean norm; zero vectors are left
/// unchanged.
pub fn l2_normalize(mut dataset: Dataset) -> Dataset {
    for ex in &mut dataset.examples {
        let norm = ex.x.norm();
        if norm > 0.0 {
            for entry in &mut ex.x.entries {
                entry.1 /= norm;
            }
        }
    }
    dataset
}

/// Deterministic Fisher-Yates permutation of the examples.
pub fn shuffle(mut dataset: Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dataset.examples.shuffle(&mut rng);
    dataset
}

const REJECTION_CAP: usize = 1000;

fn draw_unit_sphere(rng: &mut ChaCha8Rng, d: u32) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// The unit separator a synthetic stream with this seed labels against.
/// `synth_margin_stream(seed, ..)` draws exactly this vector first.
pub fn synth_separator(seed: u64, d: u32) -> SparseVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SparseVector::from_dense(&draw_unit_sphere(&mut rng, d))
}

/// Generate `n` points uniform on the unit sphere in `d` dimensions,
/// labeled by a seed-determined unit separator `w*`: `y = sign(w*·x)`.
/// Points with `|w*·x| < margin` are rejected and redrawn (capped at 1000
/// redraws per point); labels flip independently with probability
/// `flip_prob`.
pub fn synth_margin_stream(
    seed: u64,
    n: usize,
    d: u32,
    margin: f64,
    flip_prob: f64,
) -> Result<Dataset, DataError> {
    if d == 0 {
        return Err(DataError::ZeroDimension);
    }
    if !(0.0..0.5).contains(&flip_prob) {
        return Err(DataError::FlipProbability(flip_prob));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = draw_unit_sphere(&mut rng, d);
    let mut examples = Vec::with_capacity(n);
    for _ in 0..n {
        let mut redraws = 0;
        let (x, projection) = loop {
            let x = draw_unit_sphere(&mut rng, d);
            let projection: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            if projection.abs() >= margin {
                break (x, projection);
            }
            redraws += 1;
            if redraws >= REJECTION_CAP {
                return Err(DataError::RejectionCap(REJECTION_CAP));
            }
        };
        let mut y = if projection >= 0.0 { 1.0 } else { -1.0 };
        // Always consume one uniform so the point stream is independent
        // of flip_prob.
        if rng.random::<f64>() < flip_prob {
            y = -y;
        }
        examples.push(LabeledExample {
            x: SparseVector::from_dense(&x),
            y,
        });
    }
    Ok(Dataset {
        examples,
        dim: d,
        name: String::from("synth"),
    })
}
