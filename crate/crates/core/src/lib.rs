//! Variational block-encoding: ansatz circuits, Pauli algebra, Lie-algebraic
//! expressibility analysis, optimizers and resource bounds.

pub mod circuit;
pub mod encode;
pub mod error;
pub mod numkit;
pub mod optimize;
pub mod pauli;
pub mod resources;
pub mod symmetry;
pub mod targets;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numkit::ComplexMatrix;
