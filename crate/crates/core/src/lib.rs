//! Post-hoc out-of-distribution detection over penultimate-layer features.
//!
//! The crate scores samples with LINe (activation clipping plus
//! contribution-guided activation and weight pruning of the final linear
//! layer) and with the usual baselines (Energy, MSP, ReAct, DICE,
//! Mahalanobis), and evaluates them with AUROC and FPR at 95% TPR.
//!
//! Modules, in pipeline order:
//!
//! - [`store`]: `LINF`/`LINH`/`LINC`/`LINM` binary containers.
//! - [`toy`]: a small ReLU network trained on Gaussian blobs, so the whole
//!   pipeline runs without an external checkpoint.
//! - [`contribution`]: per-neuron, per-class contributions and the class
//!   averaged matrix `C`.
//! - [`detector`]: clipping, masks, the LINe forward pass and all scores.
//! - [`metrics`]: AUROC, FPR95, histograms, class overlap, grid sweeps.
//! - [`cli`]: the `line` command-line tool.
//!
//! See `examples/` for one runnable program per capability.

pub mod cli;
pub mod contribution;
pub mod detector;
pub mod error;
pub mod metrics;
pub mod store;
pub mod toy;

pub use contribution::{contribution_matrix, ContribOptions};
pub use detector::{Detector, DetectorConfig, MaskSet, Method, ScoreRecord};
pub use error::{Error, Result};
pub use metrics::{auroc, evaluate, fpr_at_tpr, EvalReport, ScoreSet, SweepGrid};
pub use store::{Approx, ContributionMatrix, FeatureDump, HiddenLayer, LinearHead};
pub use toy::{BlobSpec, ToyMlp, TrainConfig};
