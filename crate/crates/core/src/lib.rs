//! Conjugate-operator constructions and dispersive decay measurements for
//! finite-difference Schrödinger operators.
//!
//! Layers, bottom up: [`forge`] builds grids and operators, [`commutator`]
//! extracts the remainder `K` from `[H, iA]`, [`propagator`] applies
//! `e^{itH}`, [`conjugate`] builds the drift `B_h` and checks the commutator
//! identities, [`smoothness`] measures time-integrated weights and
//! [`decay`] fits power laws to `ψ_u(t) = <u, e^{itH} u>`.

extern crate blas_src;

pub mod commutator;
pub mod conjugate;
pub mod decay;
pub mod error;
pub mod forge;
pub mod linalg;
pub mod propagator;
pub mod smoothness;

pub use error::{LabError, Result};
pub use forge::{
    assemble_dilation, assemble_hamiltonian, audit_potential, build_grid, matrix_function, Band, Geometry, Grid,
    HermitianOperator, PotentialSpec, Role, SpectralData,
};
pub use linalg::{CMatrix, CVector, C64};
