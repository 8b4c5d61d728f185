//! Maximum-posterior-mode sequence labeling with hidden Markov chains.
//!
//! Three decoders share one set of domain types:
//!
//! * classic forward-backward over generative emissions ([`hmc`]),
//! * entropic forward-backward, which replaces the emission `b_i(y)` by a
//!   discriminative `P(X_t = i | y_t)` divided by the prior ([`efb`]),
//! * a maximum-entropy Markov model forward recursion ([`memm`]).
//!
//! The numeric engines are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common instantiations. Corpus readers, feature
//! templates, logistic-regression training and the model file format live
//! alongside.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod discrim;
pub mod efb;
pub mod error;
pub mod eval;
pub mod features;
pub mod hmc;
pub mod index;
pub mod lattice;
pub mod memm;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod sentence;
pub mod tagger;

pub use error::{Error, Result};
pub use index::{TagSet, Vocabulary};
pub use lattice::{mpm_from_lattice, PosteriorLattice};
pub use scalar::Scalar;
pub use sentence::{LabeledSentence, Sentence};

pub type HmcParams64 = hmc::HmcParams<f64>;
pub type HmcParams32 = hmc::HmcParams<f32>;
pub type EfbParams64 = efb::EfbParams<f64>;
pub type EfbParams32 = efb::EfbParams<f32>;
pub type LogisticModel64 = discrim::LogisticModel<f64>;
pub type LogisticModel32 = discrim::LogisticModel<f32>;
pub type MemmModel64 = memm::MemmModel<f64>;
pub type MemmModel32 = memm::MemmModel<f32>;
pub type Lattice64 = PosteriorLattice<f64>;
pub type Lattice32 = PosteriorLattice<f32>;
