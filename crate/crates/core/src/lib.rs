//! Uncertainty evaluation for nominal (categorical) properties.
//!
//! A nominal uncertainty is a probability mass function over a finite set of
//! classes. This crate provides dispersion statistics for such PMFs, proper
//! scoring rules for probabilistic classifiers, propagation of a nominal
//! input through a model with quantitative output, and a Bayesian generative
//! classifier that produces predictive PMFs.
//!
//! ```
//! use nominal_uq::{dispersion, NormPolicy, Pmf};
//!
//! let p = Pmf::new(&[0.6, 0.2, 0.2], NormPolicy::default()).unwrap();
//! assert!((dispersion::wvr(&p) - 0.6).abs() < 1e-12);
//! ```

pub mod bayes;
pub mod dispersion;
pub mod error;
pub mod pipeline;
pub mod pmf;
pub mod propagate;
pub mod rng;
pub mod scoring;

pub use dispersion::{report_all, Statistic, UncertaintyReport};
pub use error::{Error, ErrorKind, Result};
pub use pmf::{ModeSummary, NormPolicy, Pmf, DEFAULT_EPS_MODE, DEFAULT_EPS_NORM};
