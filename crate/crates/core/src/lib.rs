//! Lifting curves of discrete probability measures to measures on paths.
//!
//! The crate computes exact discrete optimal transport, multi-marginal
//! compatibility certificates, regularity seminorms of paths and measure
//! curves, and two dyadic lift constructions whose energies can be compared
//! with the regularity of the curve they lift.

pub mod compat;
pub mod error;
pub mod exec;
pub mod lift;
pub mod measure;
pub mod norms;
pub mod ot;
pub mod path;
mod simplex;
pub mod space;
pub mod zoo;

pub use compat::{compatibility_multicoupling, is_compatible, CompatibilityReport};
pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;
pub use lift::{EnergySpec, Functional, Lift, WassersteinCurve};
pub use measure::DiscreteMeasure;
pub use ot::{optimal_coupling, wasserstein_distance, Coupling, MultiCoupling};
pub use path::{DyadicGrid, PiecewiseGeodesicPath};
pub use space::{Point, Space};
pub use zoo::FamilySpec;
