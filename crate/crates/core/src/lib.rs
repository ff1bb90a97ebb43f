//! Deletion-channel trace reconstruction laboratory.
//!
//! * [`channel`]: sampling and exact trace probabilities.
//! * [`kmer`]: k-mer density maps and their Monte-Carlo semantics.
//! * [`poly`] and [`analytic`]: generating polynomials, suprema on arcs, and
//!   the Chebyshev / Bernstein-ellipse toolkit.
//! * [`hard_pairs`]: separated families and the search for pairs of strings
//!   whose generating polynomials nearly agree on an arc.
//! * [`mle`]: maximum likelihood estimation over finite families.
//! * [`distinguish`]: mean-based and k-gram distinguishers.

pub mod analytic;
pub mod bits;
pub mod channel;
pub mod distinguish;
pub mod error;
pub mod hard_pairs;
pub mod kmer;
pub mod mle;
pub mod par;
pub mod poly;
pub mod rng;
pub mod stats;
pub mod verify;

pub use bits::BitString;
pub use channel::{ChannelParams, DistributionTable, Trace};
pub use error::{Error, Result};
pub use kmer::{KmerDensityMap, KmerId};
pub use poly::PolyCoeffs;
