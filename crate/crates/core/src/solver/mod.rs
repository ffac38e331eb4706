//! Secular system, Green function, scattering, spectrum and resolvent on a
//! metric graph with gluing conditions.

mod green;
mod resolvent;
mod scattering;
mod secular;
mod spectrum;

pub use green::{green_function, GraphPoint, GreenFunction};
pub use resolvent::{resolvent_apply, GraphFunction, ResolventField};
pub use scattering::{
    basis_psi, scattering_matrix, scattering_solution, BasisPsi, EdgeAmplitudes,
    GraphScatteringSolution,
};
pub use secular::{
    assemble_secular, secular_determinant, Layout, SecularSystem, MU_MIN_CUTOFF,
    RESONANCE_FLOOR,
};
pub use spectrum::{eigenvalues_in_disk, EigenMethod, EigenOptions, Eigenvalue, SpectralWindow};
