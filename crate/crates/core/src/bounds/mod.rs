//! The martingale decomposition, operator norms and the concentration
//! bounds built from them.

mod decomposition;
mod inequalities;
mod norm;
mod orlicz;
mod sequence;
mod zeta;

pub use decomposition::{backbone_check, backbone_check_with, martingale_decomposition, BackboneCheck, MartingaleDecomposition, DECOMPOSITION_TOL};
pub use inequalities::{
    chebyshev_orlicz_bound, curanto_moment_bound, exponential_bound, extract_polynomial_constant,
    extract_stretched_constant, moment_bound, moment_prefactor, polynomial_bound, prop2_norm_bound, stretched_bound,
    variance_bound, BoundFlag, Evaluated, TailPoint,
};
pub use norm::{operator_norm_l2, NORM_TOL};
pub use orlicz::{OrliczSpec, LUX_TOL};
pub use sequence::{Envelope, Sequence, SeriesSum};
pub use zeta::zeta;
