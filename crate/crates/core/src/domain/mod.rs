//! Simulated multi-rank domain decomposition: spatial partition, ghost-halo
//! exchange over an in-memory transport, and decomposed classical and NN
//! force evaluation with forces routed back to owners.

mod classical;
mod exchange;
mod layout;
mod nn;
mod transport;

pub use classical::{classical_forces_decomposed, DecomposedForces};
pub use exchange::{exchange_ghost_positions, home_rank, route_forces_back, LocalView, RankForces};
pub use layout::{decompose, decompose_on, DomainLayout, Ghost, GridShape, HaloMode, RankGrid, Region};
pub use nn::{nn_inference_decomposed, NnDdOptions, NnDecomposed, NnStrategy};
pub use transport::{LedgerEntry, MessageKind, RankMessage, Transport, RECORD_BYTES};
