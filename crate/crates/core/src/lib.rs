//! Learning Ising models, higher-order binary Markov random fields and
//! general-alphabet Ising models from i.i.d. samples with a
//! multiplicative-weights GLM learner, plus exact and Gibbs samplers and
//! brute-force checkers for the recovery bounds.

pub mod error;
pub mod graph;
pub mod io;
pub mod ising;
pub mod mrf;
pub mod nonbinary;
pub mod oracle;
pub mod poly;
pub mod rng;
pub mod samplers;
pub mod sparsitron;

pub use error::{Error, Result};
pub use graph::EdgeSet;
pub use ising::{IsingEstimate, IsingModel};
pub use mrf::MrfModel;
pub use nonbinary::NonBinaryIsing;
pub use poly::{Monomial, MultilinearPoly};
pub use samplers::{Alphabet, ExactDistribution, SampleBatch};
pub use sparsitron::{SparsitronConfig, SparsitronState};
