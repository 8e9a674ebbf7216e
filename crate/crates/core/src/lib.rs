//! Network games: equilibrium certificates, best-response dynamics and
//! comparative statics of Nash equilibria.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod games;
pub mod linalg;
pub mod network;
pub mod sensitivity;
pub mod solvers;

pub use error::{Error, Result};
pub use games::{ConstraintSet, Family, GameSpec, JacobianEval, KappaBounds};
pub use network::{Network, NetworkKind, SpectralMeasures};
pub use nalgebra;
