#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
mod fft;
pub mod grid;
pub mod legendre;
pub mod linalg;
pub mod point;

pub use error::{Error, Result};
pub use grid::{build_grid, Derivative, Grid, Jet};
pub use point::Point;
pub mod body;
pub mod optimize;
pub use body::{support_from_spec, BodySpec, HarmonicTerm, Radii, SupportField};
pub mod functionals;
pub use functionals::{entropy, entropy_p, functional_report, FunctionalReport, Optimum};
pub mod flow;
pub use flow::{run, FlowConfig, FlowState, FlowTrace, Snapshot};
