//! Collaborative filtering on a factor graph.
//!
//! Users and movies carry hidden groups; each observed rating depends only on
//! the pair of groups through a kernel `w(r|u,v)`. The crate provides:
//!
//! - [`model`]: the generative model, observation sets, synthetic sampling and file formats
//! - [`imp`]: the iterative message-passing learner
//! - [`em`]: a variational EM learner
//! - [`init`]: VDVQ codebook initialization (GLA splitting with soft k-means)
//! - [`de`]: density evolution via population dynamics, and the tree-likeness check
//! - [`bound`]: the generalization bound and sign-agreement distortions
//! - [`eval`]: estimators, RMSE and the cold-start sweep

pub mod bound;
pub mod de;
pub mod em;
pub mod error;
pub mod eval;
pub mod imp;
pub mod init;
pub mod model;
pub mod numeric;
mod posterior;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
pub use model::{GroupModel, Observation, ObservationSet, Side, SyntheticTruth};
pub use posterior::PosteriorEstimates;
