//! Bayes-risk compressed-sensing multi-user detection (BR-CS-MUD).
//!
//! Joint activity and data detection for linear systems `y = T x + w` whose
//! unknowns are drawn from an augmented alphabet `A ∪ {0}`. The detector
//! minimises `‖y − Tx‖² + λ(Ω)‖x‖₀`, where the Bayes factor `Ω` trades
//! false-active against false-inactive decisions, and works for
//! under-determined systems by stacking an identity block under `T` and
//! running a depth-first sphere search on the triangularised result.
//!
//! Module map:
//!
//! * [`model`]: alphabet, prior and penalty calculus.
//! * [`linsys`]: the linear model, objective evaluation and augmentation.
//! * [`detector`]: Householder QR, sphere search and the exhaustive oracle.
//! * [`baseline`]: basis pursuit de-noising with quantisation onto `A ∪ {0}`.
//! * [`cdma`]: overloaded CDMA scenario generator.
//! * [`metrics`]: confusion counts, gross symbol errors and rate pooling.
//! * [`harness`]: sweep configuration, Monte Carlo runs and CSV output.

pub mod baseline;
pub mod cdma;
pub mod detector;
mod error;
pub mod harness;
pub mod linsys;
pub mod matrix;
pub mod metrics;
pub mod model;

pub use error::{Error, Result};
pub use matrix::Matrix;
