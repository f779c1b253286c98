//! Wavelet frames on open orbits of matrix group actions.
//!
//! The crate builds discrete frames for `L^2_O`, the functions whose Fourier
//! transform lives in an open orbit `O` of a linear group `H` acting on
//! frequency space. The pipeline is: pick a family and a lattice window
//! ([`group_families`]), classify the orbit ([`orbit_atlas`]), certify that
//! the lattice is separated and that translates of a compact set cover the
//! orbit ([`separation`]), then synthesize and test the frame
//! ([`frame_engine`]).

pub mod error;
pub mod frame_engine;
pub mod group_core;
pub mod group_families;
pub mod orbit_atlas;
pub mod root_structure;
pub mod separation;

pub use error::{Error, Result};
