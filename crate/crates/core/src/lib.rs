//! Collective photonic band structures of two-dimensional atomic dipole lattices.
//!
//! Energies are in units of the single-atom decay rate Γ0 measured from the atomic
//! transition, lengths in units of the transition wavelength λ (so k = 2π).

pub mod bloch;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod greens;
pub mod interaction;
pub mod lattice;
pub mod layered;
pub mod quadrature;
pub mod realspace;
pub mod run;
pub mod special;
pub mod strip;
pub mod topology;

pub use error::{Error, Result};
