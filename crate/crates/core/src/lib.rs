//! Spin reversal ("gauge") encryption for Ising-model annealing.
//!
//! A client encodes an Ising problem with a secret bit-string key, an
//! untrusted solver samples the encoded problem, and the client decodes the
//! returned spins. Because the gauge transform preserves every energy, the
//! solver does the same work it would do on the plaintext problem.
//!
//! Modules:
//! - [`ising`]: problem and sample types, energy evaluation, QUBO conversion
//! - [`gauge`]: keys, encoding and decoding, homomorphic combination
//! - [`topology`]: Chimera and arbitrary coupler graphs
//! - [`embedding`]: chains of physical qubits for logical variables
//! - [`samplers`]: brute force, exact Boltzmann, simulated annealing
//! - [`problems`]: RAN1 and NBMF column generators
//! - [`analysis`]: energy CDFs and multi-gauge comparisons
//! - [`protocol`]: wire format, solver service, and client workflow

pub mod analysis;
pub mod embedding;
mod error;
pub mod exec;
pub mod gauge;
pub mod ising;
pub mod problems;
pub mod protocol;
pub mod samplers;
pub mod seed;
pub mod topology;

pub use error::{Error, Result};
pub use exec::Execution;
pub use gauge::SecretKey;
pub use ising::{IsingProblem, QuboProblem, Sample, SampleSet, Spins};
pub use topology::Topology;
