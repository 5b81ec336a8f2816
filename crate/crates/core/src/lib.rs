//! Numerical laboratory for moment functionals on star bodies: gauges,
//! direction measures, sphere/body/section quadrature, moment and slicing
//! functionals, and distance-type upper bounds between bodies.

pub mod bodies;
pub mod densities;
pub mod distances;
pub mod error;
pub mod geom;
pub mod moments;
pub mod opt;
pub mod quad;
pub mod report;
pub mod slicing;
pub mod suite;

pub use bodies::{body_from_json, BodySpec, StarBody};
pub use densities::{
    density_from_json, Atom, Density, DensitySpec, DirectionMeasure, DirectionMeasureSpec,
};
pub use distances::{
    contains_body, dbm_scaling, dbm_scaling_refined, dovr_upper, jensen_check, moment_domination,
    ContainsResult, DistanceReport, DominationReport, DominationStatus, JensenCheck, Witness,
};
pub use error::{Error, Result};
pub use moments::{
    gamma_ratio, min_moment, moment, moment_bound_ratio, BodyCloud, MomentBoundReport,
    MomentResult,
};
pub use quad::{
    body_integrate, section_integrate, sphere_integrate, spherical_constant, surface_area,
    IntegrationConfig, Method, SectionProfile, Status, ValueWithError,
};
pub use report::RunReport;
pub use slicing::{
    affine_slicing_ratio, max_section, moment_functional, section_moment_bound, slicing_constant,
    AffineSlicingRatio, MaxSection, Profile1d, ProfileSpec, SectionMomentBound, SliceMode,
    SlicingReport,
};
pub use suite::{verify_suite, BudgetProfile, CriterionResult, SuiteSummary};
