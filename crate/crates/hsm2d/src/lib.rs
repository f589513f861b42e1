//! Half-space matching solver for two-dimensional time-harmonic scattering.
//!
//! The exterior Helmholtz field is represented by four overlapping half-plane
//! solutions, each driven by the trace of the field on the boundary line of
//! its half-plane. Matching the representations where the half-planes overlap
//! yields a system of integral equations for the four traces. A complex
//! scaling of the trace coordinate turns the slowly decaying oscillatory
//! traces into exponentially decaying ones, so a bounded computational
//! interval suffices.
//!
//! The crate provides the scaled special functions, the scaling geometry, the
//! half-plane kernels, a 1D trace discretization, the Galerkin assembly and
//! solver for the pure exterior problem with Dirichlet data on a square, a
//! 2D finite element coupling for scatterers inside the square, and field
//! reconstruction plus far-field extraction.

pub mod assembly;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod postprocess;
pub mod quadrature;
pub mod special;
pub mod trace;
pub mod validation;

pub use error::HsmError;
