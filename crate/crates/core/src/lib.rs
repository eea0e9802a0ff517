//! CQ and shrinking projection methods for finite families of nonexpansive
//! mappings on the unit sphere of a finite-dimensional real Hilbert space.

pub mod cli;
pub mod config;
pub mod error;
pub mod iteration;
pub mod mappings;
pub mod oracle;
pub mod projection;
pub mod region;
pub mod sphere;

pub use error::{Error, Result};
pub use iteration::{
    cq_step, fejer_audit, run, shrink_step, step, IterationState, KnownFixedSet, Method, Problem,
    RunOutcome, StopReason, StopRule, Trace, TraceRecord,
};
pub use mappings::{AlphaSchedule, Mapping, MappingFamily, PlaneRotation, WMapping};
pub use oracle::{brute_project, cap_project, circle_project, sin_lemma_check, GeodesicGrid};
pub use projection::{SolveStats, Solver};
pub use region::{make_cn, make_qn, Cap, Halfspace, Region};
pub use sphere::{
    distance, geodesic_combine, inner, pal_inequality_gap, random_point_in_cap, AmbientVector,
    SpherePoint,
};
