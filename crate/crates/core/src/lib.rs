//! Upper and lower bounds on the Hausdorff dimension of sets of real and
//! complex continued fractions with digits restricted to an alphabet.

pub mod alphabet;
pub mod convergents;
pub mod distortion;
pub mod enumeration;
pub mod error;
pub mod gaussian;
pub mod pressure;
pub mod render;
pub mod report;
pub mod solver;

pub use alphabet::{parse_alphabet, Alphabet, AlphabetSpec, CeilingMode};
pub use convergents::{check_duality, convergent_value, ConvergentState, Word};
pub use error::{Error, Result};
pub use gaussian::{ComplexRational, GaussianInt};
pub use report::RunRecord;
pub use solver::{dimension_bounds, sweep, DimensionBounds, SolverOptions};
