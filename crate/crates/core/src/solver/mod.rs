//! Discrete conic Laplacians on fiber surfaces and the Liouville solvers.

mod band;
mod decay;
mod mesh;
mod picard;
mod spherical;

pub use band::{BandLu, BandMatrix};
pub use decay::{
    b_derivative_sups, decay_check, glued_log_density, gluing_cutoff, hyperbolic_profile_exact,
    loglog_slope, radial_hyperbolic, rfrak_of, smoothstep5, DecayReport, PairApproximation, GLUE_RADIUS,
};
pub use mesh::{assemble, assemble_cylinder, ConicLaplacianOp, FiberMesh, Outer};
pub use picard::{picard_solve, q_nonlinearity, SolveReport};
pub use spherical::{
    bump, eigen_gap, football, klein_quotient, newton_solve_spherical, perturbed, EigenReport,
    SphereBackground, GAP_MARGIN,
};
