//! Non-Abelian adiabatic holonomies for pure and mixed quantum states.
//!
//! The crate computes the unitary acquired by a degenerate eigenspace after
//! adiabatic transport around a closed loop in control-parameter space. Mixed
//! states are handled through an iso-entangled ancilla lift: the system frame
//! is paired with a fixed ancilla basis so that every lifted frame vector
//! reduces to the same mixing spectrum, and the ordinary Wilczek-Zee machinery
//! applied upstairs yields the mixed-state holonomy downstairs.
//!
//! Modules:
//! - [`numerics`]: dense complex linear algebra for small matrices
//!   (Hermitian eigensolver, matrix exponential, unitary polar factor).
//! - [`statekit`]: density operators, tensor products, partial trace,
//!   purification, Bloch coordinates.
//! - [`frames`]: parametrized orthonormal frames over charts, the built-in
//!   dark-state frame of the three-ground-state ion model, and the
//!   iso-entangled lift.
//! - [`connection`]: gauge-potential samples from finite differences, gauge
//!   transformations, ion-trap closed forms.
//! - [`holonomy`]: loop integration by exponential product and by unitarized
//!   Wilson links, solid angles, and the transport of reduced states.
//! - [`dynamics`]: composite Hamiltonians and time-dependent Schrödinger
//!   integration for checking the holonomy prediction against real dynamics.
//! - [`verify`]: the named end-to-end checks exposed by the CLI.

pub mod connection;
pub mod dynamics;
pub mod frames;
pub mod holonomy;
pub mod numerics;
pub mod statekit;
pub mod verify;

pub use numerics::{ComplexMatrix, StateVector, C64};
