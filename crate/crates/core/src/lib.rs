//! Mean-field and Bogoliubov dynamics of δ-kicked condensates on a ring.

pub mod bogoliubov;
pub mod error;
pub mod gpe;
pub mod grid;
mod par;
pub mod params;
pub mod perturbative;
pub mod resonance;
pub mod scan;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use grid::RingGrid;
pub use par::with_workers;
pub use params::{KickKind, PhysicalParams};
