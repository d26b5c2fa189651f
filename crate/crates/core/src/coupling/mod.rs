//! Couplings of finite laws: maximal couplings, the site-by-site coupling,
//! coupling matrices and optimal transport.

mod maximal;
mod matrix;
mod mc;
mod sardine;
mod sequential;
mod transport;

pub use maximal::{maximal_coupling, sample_maximal, total_variation, DiscreteCoupling};
pub use matrix::{
    coupling_row_exact, CouplingMatrix, CouplingRow, Estimation, ExactCouplingTable, MatrixKind, TABLE_CAP,
};
pub use mc::{coupling_row_mc_heat_bath, coupling_row_mc_sequential, McCouplingRow, McEstimator};
pub use sardine::{
    random_lipschitz_family, sequential_weights, verify_sardine, PremiseViolation, SardineReport, TabulatedFunction,
};
pub use sequential::{sequential_coupling_sample, sequential_coupling_tree, CoupledSample, SequentialTree};
pub use transport::{kr_optimal_coupling, solve_transport, TransportProblem, TransportSolution, TRANSPORT_CAP};
