//! Frames built from a separated lattice, a generator and the exponentials of
//! a parallelepiped, all discretised on a cell-centred frequency grid.
//!
//! Fourier transforms use `f_hat(w) = int f(x) exp(-2 pi i (x|w)) dx`.

pub mod admissibility;
pub mod bounds;
pub mod generator;
pub mod grid;
pub mod intertwine;
pub mod parallelepiped;
pub mod reconstruct;
pub mod system;

pub use admissibility::{admissibility, generator_admissibility, AdmissibilityReport};
pub use bounds::{empirical_bounds, predicted_bounds, random_probes, EmpiricalBounds, PredictedBounds};
pub use generator::{generator_from_indicator, Generator, GeneratorKind};
pub use grid::{FrequencyGrid, GridFunction};
pub use intertwine::{intertwine_check, IntertwineReport, SpatialGrid};
pub use parallelepiped::{dual_lattice, DualLattice, Parallelepiped, ParallelepipedSpec};
pub use reconstruct::{reconstruct, relaxed_step_bound, Reconstruction, Solver};
pub use system::{Coefficients, CoefficientBlock, FrameSpec, FrameSystem, Modes};
