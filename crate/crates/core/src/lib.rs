//! A desk-scale molecular dynamics engine that couples classical force
//! fields with pluggable neural-network potentials.
//!
//! The crate covers the whole loop: periodic geometry and system I/O,
//! Verlet neighbour lists, classical short-range forces, integrators with
//! Berendsen coupling and steepest-descent minimisation, two toy deep
//! potential families with hand-written backward passes, a simulated
//! multi-rank domain decomposition with explicit ghost-halo messages, and
//! the staged EM → NVT → NPT → MD pipeline with its benchmarking harness.

pub mod domain;
pub mod dynamics;
pub mod error;
pub mod forcefield;
pub mod gro;
pub mod neighbors;
pub mod nnpot;
pub mod pbc;
pub mod pipeline;
pub mod state;
pub mod synthetic;
pub mod topology;
pub mod units;

pub use error::{Error, Result};
pub use pbc::{minimum_image, SimBox, Vec3};
pub use state::{kinetic_energy_and_temperature, EnergyReport, Precision, State};
pub use topology::{Angle, Bond, Dihedral, Topology};
