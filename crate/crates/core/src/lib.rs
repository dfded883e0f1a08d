//! Numerical toolkit for non-local total-variation functionals: interaction
//! laws, step functions and their simplifying operators, exact and quadrature
//! energies, the log-sum minimum problems, and shape-factor bounds.

pub mod bounds;
pub mod energy;
pub mod error;
pub mod interaction;
pub mod minprob;
pub mod quad;
pub mod stepfn;
pub mod verify;

pub use error::{Error, Result};
pub use bounds::BoundReport;
pub use interaction::{parse_law_spec, DyadicSequence, InteractionLaw, LeftFill, RightFill};
pub use minprob::{MinProblem, MinResult, MinimizeConfig};
pub use stepfn::{Interval, LengthTuple, StepFunction};
pub use verify::{Suite, SuiteConfig, SuiteReport};
