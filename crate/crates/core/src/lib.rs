//! Qutrit statevector simulation and virtual-experiment toolkit.
//!
//! The crate simulates registers of three-level systems (qutrits) with the
//! restricted gate set available on a transmon device: default qubit gates in
//! the (01) subspace, calibrated rotations in the (12) subspace, and the
//! device CNOT extended to a 9x9 unitary. On top of the simulator it provides
//! the full virtual-experiment stack for the three-qutrit GHZ state:
//!
//! * [`state`] — pure states, density matrices, entanglement diagnostics and
//!   the lower-dimensional reference mixtures,
//! * [`gates`] — the single- and two-qutrit gate library,
//! * [`circuit`] — circuit data model, execution, and the GHZ preparation
//!   circuit,
//! * [`measurement`] — the 0-1 discriminator readout chain, shot sampling,
//!   confusion matrices and readout-error mitigation,
//! * [`tomography`] — partial density-matrix reconstruction, fidelity with
//!   error propagation, and the 2/3 entanglement witness,
//! * [`phase`] — the rotating-frame dephasing model and the compensation
//!   phase scan,
//! * [`search`] — discrete circuit search over the restricted toolbox,
//! * [`clock`] — the clock diagram renderer for circuit narratives.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats, and the CLI
//! live in the companion `qutrit-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod circuit;
pub mod clock;
mod error;
pub mod gates;
pub mod linalg;
pub mod measurement;
pub mod phase;
pub mod rng;
pub mod search;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};

pub(crate) use num_complex::Complex64;

/// 1/sqrt(3), the modulus of each GHZ amplitude.
pub const FRAC_1_SQRT_3: f64 = 0.577_350_269_189_625_8;
