//! Numerical laboratory for the optimal quantitative stability of
//! Alexandrov's soap bubble theorem.
//!
//! The crate evaluates mean curvature of explicit hypersurfaces, integral
//! norms, the perturbed-sphere family `Ω_t` with its scaling exponents,
//! Gagliardo–Nirenberg interpolation checks, stereographic norm transfer,
//! and the torsion-problem integral identity in the plane.

// `!(x > 0.0)` rejects NaN on purpose; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic_fields;
pub mod error;
pub mod experiment;
pub mod family;
pub mod gn_interpolation;
pub mod jet;
pub mod norms;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod stereographic;
pub mod surface_geometry;
pub mod torsion;

pub use analytic_fields::FamilyParams;
pub use error::{Error, Result};
pub use experiment::ScalingFit;
pub use family::{FamilyMode, FamilyReport, FamilyRules, FamilySurface};
pub use gn_interpolation::GnSpec;
pub use jet::{Jet2, ScalarField, MAX_DIM};
pub use norms::{NormKind, NormSpec};
pub use quadrature::{Domain, QuadratureRule};
pub use runner::{run_experiment, Check, ExperimentConfig, ExperimentMode, ExperimentOutcome};
pub use stereographic::SphereChart;
pub use surface_geometry::{GraphPatch, RadialSurface, RadiiGap};
pub use torsion::{TorsionMesh, TorsionSolution};
