use num_complex::Complex64;
use thiserror::Error;

use crate::point::C2;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("tail sum did not converge after {terms} terms starting at m = {start}")]
    DivergentTail { start: usize, terms: usize },

    #[error("z = {z} coincides with pole a_{index}")]
    PoleHit { z: Complex64, index: usize },

    #[error("level {level} exceeds configured maximum {max}")]
    LevelTooLarge { level: usize, max: usize },

    #[error("point set is empty")]
    EmptySet,

    #[error("phi = {phi} is not negative; phi-tilde is undefined")]
    OutsideDomainOfDefinition { phi: f64 },

    #[error("difference stencil hit a singular or undefined value at {at:?}")]
    StencilHitsSingularity { at: C2 },

    #[error("point lies {distance:e} from the variety, below the exclusion radius {required:e}")]
    TooCloseToVariety { distance: f64, required: f64 },

    #[error("curve passes within {clearance:e} of the lattice Z + iZ")]
    ClearanceViolation { clearance: f64 },

    #[error("continuation step collapsed to {step:e} near z = {z}")]
    StepCollapse { step: f64, z: Complex64 },

    #[error("loop of radius {radius} around a_{index} encloses further lattice points")]
    MultiplePolesEnclosed { index: usize, radius: f64 },

    #[error("no level m < {level} gives a tail bound below {target:e}")]
    TailTooLarge { level: usize, target: f64 },

    #[error("point is not on the variety within tolerance (residual {residual:e})")]
    NotOnVariety { residual: f64 },

    #[error("center is not inside the sublevel set (phi = {phi})")]
    CenterOutside { phi: f64 },
}
