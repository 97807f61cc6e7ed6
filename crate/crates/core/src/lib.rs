//! Numerical model of a Wermer-type analytic set in C^2 built from the
//! Gaussian-integer lattice, together with the plurisubharmonic potentials,
//! continuation machinery and diagnostics used to study it.

pub mod analysis;
pub mod continuation;
pub mod error;
pub mod greenfn;
pub mod hyperbolicity;
pub mod lattice;
pub mod point;
pub mod potentials;
pub mod wermer;

pub use error::{Error, Result};
pub use lattice::{gauss_point, pole, spiral_index, EpsilonSchedule, GaussPoint, SpiralIndex};
pub use point::C2;
pub use potentials::{PointClass, Potential, PotentialParams};
pub use wermer::{PhiMode, SheetLabel, SliceSet, WermerSet};
