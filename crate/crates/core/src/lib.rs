//! Photon blockade in an optomechanical cavity with a degenerate parametric
//! amplifier: analytic amplitudes, truncated amplitude equations and the full
//! master equation.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the sweep driver uses.

pub mod amplitude;
pub mod analytic;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod liouvillian;
pub mod observables;
pub mod params;
pub mod scalar;
pub mod sweep;

pub use error::{Error, Result};
pub use observables::{ObservableReport, Source};
pub use params::{RegimeWarning, SystemParams, Truncation, Validated};
pub use scalar::Real;

pub type Params = SystemParams<f64>;
pub type Operator = fock::SparseOperator<f64>;
pub type Generator = liouvillian::Liouvillian<f64>;
pub type Density = liouvillian::DensityMatrix<f64>;
pub type Amplitudes = amplitude::AmplitudeVector<f64>;
pub type Report = ObservableReport<f64>;
pub type Pump = analytic::OptimalPump<f64>;

pub type ParamsF32 = SystemParams<f32>;
pub type ReportF32 = ObservableReport<f32>;
