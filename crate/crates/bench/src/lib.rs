//! Fixtures shared by the benches in `benches/`.

use std::sync::Arc;

use decaylab_core::forge::{assemble_dilation, assemble_hamiltonian, build_grid, Geometry, PotentialSpec};
use decaylab_core::propagator::StateVector;
use decaylab_core::{HermitianOperator, SpectralData};

pub struct Fixture {
    pub h: HermitianOperator,
    pub a: HermitianOperator,
    pub spectral: Arc<SpectralData>,
    pub u: StateVector,
}

/// Critical potential on the line with a unit Gaussian centred at the origin.
pub fn critical_line(n: usize, radius: f64) -> Fixture {
    let g = build_grid(Geometry::Line1d, n, radius).expect("grid");
    let h = assemble_hamiltonian(&g, &PotentialSpec::critical(1.0, 1)).expect("hamiltonian");
    let a = assemble_dilation(&g);
    let spectral = Arc::new(SpectralData::new(&h).expect("eigensolver"));
    let amps: Vec<f64> = g.points.iter().map(|x| (-x * x / 2.0).exp()).collect();
    let u = StateVector::from_real(&amps).expect("state");
    Fixture { h, a, spectral, u }
}
