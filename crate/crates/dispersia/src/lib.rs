//! Non-retarded van der Waals dispersion interactions of two ground-state
//! atoms near perfectly conducting surfaces.
//!
//! The central object is the homogeneous (image) part G_H of the Dirichlet
//! Green function of the conductor geometry. Its mixed second derivatives at
//! the two atom positions,
//!
//! ```text
//!   GH_ij(rA, rB) = d/drA_i d/drB_j G_H(rA, rB),
//! ```
//!
//! carry the entire influence of the surface on the pair interaction. The
//! pair energy splits into the vacuum London term plus two non-additive
//! corrections,
//!
//! ```text
//!   E_Lon  = -Lambda/(24 pi^2 eps0^2 R^6),
//!   E_NA1  = -[Lambda/(18 pi eps0^2 R^3)] (Tr GH - 3 Rhat_i Rhat_j GH_ij),
//!   E_NA2  = -(Lambda/9 eps0^2) sum_ij GH_ij^2,
//! ```
//!
//! and their sum equals -(Lambda/9 eps0^2) sum_ij [T_ij + GH_ij]^2 with T the
//! free-space dipole kernel, an identity the test suite leans on heavily.
//!
//! Supported geometries: a single grounded plane, two grounded plates
//! (capacitor), and a grounded or isolated neutral sphere. The plane and
//! spheres have closed-form kernels; the capacitor uses a Bessel K
//! eigenfunction series with an image-ladder fallback near coincidence.
//!
//! Modules mirror the pipeline: [`specfun`] (Bessel K0/K1), [`greens`]
//! (scalar Green functions), [`tensor`] (mixed Hessians), [`energies`],
//! [`forces`] (finite-difference gradients), [`oracle`] (independent
//! brute-force references used by tests and the verify command), and [`cli`]
//! (config parsing, scans, CSV emission).

pub mod cli;
pub mod energies;
pub mod forces;
pub mod greens;
pub mod model;
pub mod oracle;
pub mod specfun;
pub mod tensor;

pub use model::{Geometry, PairCoupling, Tensor3, UnitMode, Vec3};

/// Library-level failure: either a precondition on the physical configuration
/// was violated, or an adaptive numerical procedure could not reach its
/// tolerance. The CLI maps the former to exit code 2 and the latter to 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
