//! Grids, Hamiltonians, the dilation generator and functions of `H`.

mod dump;
mod grid;
mod operator;
mod potential;
mod spectral;

pub use dump::{read_binary, write_binary, write_csv, DUMP_MAGIC, DUMP_VERSION};
pub use grid::{build_grid, Geometry, Grid, MIN_POINTS};
pub use operator::{assemble_dilation, assemble_hamiltonian, multiplication, HermitianOperator, Role, Storage};
pub(crate) use operator::tridiag_apply;
pub use potential::{audit_potential, AuditFlag, PotentialAudit, PotentialFamily, PotentialSpec};
pub use spectral::{
    cutoff_weight, matrix_function, spectral_projection, Band, EigenBasis, SpectralData, SPECTRAL_DIM_CAP,
};
