//! Coherent encodings of classical thermal states (CETS) for small frustrated
//! Ising magnets.
//!
//! The crate compiles a classical Ising model at inverse temperature `beta`
//! into a circuit of real controlled rotations whose output amplitudes are the
//! square roots of the Boltzmann weights, simulates that circuit exactly,
//! reads diagonal observables through a probe qubit (phase kick-back), and
//! rebuilds thermodynamic quantities from the readouts. A depolarizing noise
//! model with affine recovery, and a parallel `(beta, h)` sweep driver with
//! CSV/JSON/SVG output, sit on top.
//!
//! Conventions used everywhere:
//!
//! - bit `b = 0` is spin `z = +1`, bit `b = 1` is `z = -1`;
//! - spin `i` of an `n`-spin register is bit `n - 1 - i` of a basis index, so
//!   the string `"011"` is index 3 with spin 1 up and spins 2, 3 down;
//! - in probe circuits qubit 0 is the probe and qubits `1..=n` the register.

pub mod engine;
pub mod error;
pub mod logmath;
pub mod model;
pub mod noise;
pub mod output;
pub mod pauli;
pub mod reconstruct;
pub mod sweep;
pub mod synth;

pub use engine::{ProbeReadout, StateVector};
pub use error::{Error, Result};
pub use model::{GibbsTable, ModelParams, SpinConfig, Topology};
pub use pauli::PauliString;
pub use synth::{Circuit, Gate, GateKind};
