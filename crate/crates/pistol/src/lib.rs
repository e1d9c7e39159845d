//! Parameter-free stochastic kernel learning.
//!
//! This crate implements four online learners over a reproducing-kernel
//! function space — PiSTOL (parameter-free stochastic learning), averaged
//! SGD, the kernel Perceptron, and a per-coordinate PiSTOL variant for
//! linear kernels — together with an audit engine that numerically
//! certifies the regret/mistake bounds the algorithms are supposed to
//! satisfy, and the data plumbing (LIBSVM parsing, synthetic streams)
//! needed to run them.
//!
//! All randomized operations take explicit seeds and use ChaCha8
//! (`rand_chacha::ChaCha8Rng`), a portable counter-based generator, so
//! every run is reproducible bit-for-bit across platforms.
//!
//! The usual flow:
//!
//! ```
//! use pistol::data::synth_margin_stream;
//! use pistol::kernels::Kernel;
//! use pistol::losses::Loss;
//! use pistol::learners::{train, AlgoConfig, PistolParams};
//! use pistol::audit::estimate_risks;
//!
//! let data = synth_margin_stream(7, 600, 5, 0.1, 0.0).unwrap();
//! let (train_set, test_set) = (&data.examples[..500], &data.examples[500..]);
//! let algo = AlgoConfig::Pistol(PistolParams::new(0.25, 20.0, 2.0).unwrap());
//! let (predictor, _trace) =
//!     train(&algo, &Kernel::Linear, train_set, Loss::SmoothedHinge).unwrap();
//! let risks = estimate_risks(&predictor, test_set, Loss::SmoothedHinge).unwrap();
//! assert!(risks.misclass < 0.5);
//! ```

pub mod audit;
pub mod data;
pub mod kernels;
pub mod learners;
pub mod losses;

pub use data::{Dataset, LabeledExample, SparseVector};
pub use kernels::{Expansion, Kernel};
pub use learners::{train, AlgoConfig, Predict, Trace, TrainedPredictor};
pub use losses::Loss;
