//! Planning, control synthesis, and numerical certification for dissipative
//! mixed qudit-boson analog simulations.
//!
//! The crate maps an open molecular system, a linear vibronic-coupling
//! Hamiltonian with Lindblad dissipation, onto a trapped-ion simulator whose
//! qudit encodes the electronic states and whose motional modes encode the
//! vibrations. It
//!
//! - picks the time-scaling factor between the molecular and simulator
//!   frames from the feasible window ([`scaling`]),
//! - splits every dissipation channel into native and injected parts and
//!   synthesizes hardware controls for the injected parts ([`control`]),
//! - propagates the Lindblad master equation in either frame and certifies
//!   that the compiled simulator reproduces the molecular dynamics
//!   ([`lindblad`], [`experiment`]),
//! - validates noise-driven dephasing plans with stochastic trajectory
//!   ensembles ([`stochastic`]).

pub mod config;
pub mod control;
pub mod error;
pub mod experiment;
pub mod hilbert;
pub mod lindblad;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod rates;
pub mod report;
pub mod scaling;
pub mod stochastic;
pub mod superop;
pub mod units;

pub use error::{Error, Result};
