//! Calibration forms on model geometries.
//!
//! Exterior algebra over constant frames, the canonical U(n), SU(n), G2 and
//! Spin(7) forms, comass search on Grassmannians, invariant calculus on Lie
//! groups and homogeneous spaces, hermitian chart calculus, deformation
//! systems of calibrated submanifolds and the energy functional.

pub mod canonical;
pub mod chart;
pub mod coframe;
pub mod deformation;
pub mod energy;
pub mod error;
pub mod exterior;
pub mod grassmann;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};
pub use exterior::{ComplexForm, FrameMetric, MultiForm, VectorForm};
