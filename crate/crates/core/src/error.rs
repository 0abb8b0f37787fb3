use alloc::string::String;
use core::fmt;

/// Sweep direction of a propagation step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Backward => f.write_str("backward"),
            Direction::Forward => f.write_str("forward"),
        }
    }
}

/// Which pass of the pipeline produced an infeasibility verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Point-mass pass: total thrust ball, field of view and attitude cones.
    PointMass,
    /// Rotor pass: per-motor bounds and the nonholonomy slack on the smoothed attitude.
    Rotor,
}

impl Stage {
    pub fn number(self) -> u8 {
        match self {
            Stage::PointMass => 1,
            Stage::Rotor => 2,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}", self.number())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("attitude is undefined: thrust vanishes or is parallel to the lateral heading axis")]
    DegenerateAttitude,

    #[error("path parameter {s} outside [0, {s_end}]")]
    OutOfRange { s: f64, s_end: f64 },

    #[error("path is not regular at s = {s} (|gamma'| = {speed})")]
    IrregularPath { s: f64, speed: f64 },

    #[error("invalid problem: {0}")]
    Validation(String),

    #[error("landmark {landmark} too close to the camera at grid index {index}")]
    LandmarkTooClose { landmark: u32, index: usize },

    #[error("speed bounds contradict at grid index {index}: lower {lower} > upper {upper}")]
    InfeasibleBounds { index: usize, lower: f64, upper: f64 },

    #[error("{direction} propagation infeasible at grid index {index}")]
    StepInfeasible { direction: Direction, index: usize },

    #[error("{stage}: {direction} sweep infeasible at grid index {index}")]
    Infeasible {
        stage: Stage,
        direction: Direction,
        index: usize,
    },

    #[error("smoothed body z axis degenerates at grid index {index}")]
    SmoothingDegenerate { index: usize },

    #[error("thrust vanishes at grid index {index}")]
    DegenerateThrust { index: usize },

    #[error("square speed profile is zero on both ends of segment {index}")]
    SingularProfile { index: usize },

    #[error("no feasible point found by rejection sampling")]
    SamplingExhausted,

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
