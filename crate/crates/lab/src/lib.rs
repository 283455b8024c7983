//! File formats, body corpora, multi-body studies and drawing for the Gauss curvature
//! flow laboratory. Numerics live in `gaussflow-core`.

pub mod corpus;
pub mod error;
pub mod io;
pub mod studies;
pub mod svg;

pub use error::{exit, LabError, LabResult};
