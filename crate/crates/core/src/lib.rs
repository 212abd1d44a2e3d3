//! Desk-scale simulator of polarization-to-OAM entanglement transfer.
//!
//! The crate models the full measurement chain of a two-photon
//! orbital-angular-momentum transfer experiment: exact 2 (x) 2 state algebra
//! and analyzer projections ([`state`]), pixelated spatial-light-modulator
//! phase patterns with mode-conversion efficiency ([`slm`]), the 2l-slit mask
//! analyzer ([`mask`]), Monte-Carlo coincidence counting with Poissonian
//! statistics, fringe fitting and the entanglement witness ([`counts`]), and
//! OAM-enhanced angular metrology ([`metrology`]). The [`cli`] module wires
//! everything into reproducible batch commands.
//!
//! Heavy inner loops (grid rendering, overlap integrals, sweep simulation,
//! the separable-bound search) run on rayon when the default `parallel`
//! feature is enabled and fall back to plain loops otherwise; reductions are
//! ordered so both paths give bit-identical results (see [`exec`]).

pub mod cli;
pub mod config;
pub mod counts;
pub mod error;
pub mod exec;
pub mod mask;
pub mod metrology;
pub mod slm;
pub mod state;

pub use error::{Error, Result};
