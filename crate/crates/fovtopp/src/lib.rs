//! Problem documents, trajectory files and the `fovtopp` command line on top
//! of [`fovtopp_core`].

pub mod cli;
pub mod document;
pub mod fixtures;
pub mod serialize;

pub use document::{load_problem, load_problem_file, DocumentError, ProblemDocument};
