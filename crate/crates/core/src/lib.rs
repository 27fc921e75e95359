//! Simulation and audit toolkit for rabbit-hole dynamics in feedback-loop
//! recommenders.
//!
//! * [`model`] simulates a two-type recommender whose users follow its
//!   recommendations, and [`markov`] solves the same dynamics exactly as an
//!   absorbing Markov chain.
//! * [`detector`] spots trapped users from recommendation similarity alone.
//! * [`clustering`] groups recommendation vectors (k-means, Ward) and scores
//!   partitions (Rand, ARI, BetweenSS/TotalSS).
//! * [`attraction`] measures how fast walks drift away from mainstream
//!   recommendations.
//! * [`ingest`] reads walk logs; [`vectorspace`] holds the sparse vectors
//!   everything else works on.

pub mod attraction;
pub mod clustering;
pub mod detector;
pub mod error;
pub mod ingest;
pub mod markov;
pub mod model;
pub mod synth;
pub mod validate;
pub mod vectorspace;

pub use error::{Error, Result};
pub use vectorspace::{binarize, cosine, mean, MeanVector, RecVector, SparseVector, VideoId};
