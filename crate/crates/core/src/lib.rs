//! Multi-view behaviour sequence labelling.
//!
//! Per-view recurrent encoders feed Gaussian experts that are fused by a
//! product of experts; label-conditioned attention over the fused latents
//! yields unary scores, and a learned transition matrix couples neighbouring
//! frames. Training maximises the chain likelihood plus a weighted ELBO.
//!
//! - [`autodiff`]: tape-based reverse-mode differentiation and optimisers
//! - [`gaussian`]: product-of-experts fusion, KL, reparameterised sampling
//! - [`features`]: interest points, dense trajectories, GMM and Fisher vectors
//! - [`model`]: the sequence model, its objective and training loop
//! - [`decode`]: Viterbi decoding, metrics and ethogram export
//! - [`synth`]: synthetic multi-view data and the dataset format
//! - [`cli`]: the `mvladdm` command line

pub mod autodiff;
pub mod cli;
pub mod decode;
pub mod features;
pub mod gaussian;
pub mod model;
pub mod synth;
