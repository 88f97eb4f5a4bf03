//! Dense linear algebra: matrices, norms, rank tools and class sampling.

mod class;
mod decomp;
mod mat;
mod norms;

pub use class::{
    random_orthonormal, rng_from_seed, sample_class_member, sample_in_ball, MatrixClassSpec, NormKind, BASIS_TOL,
    FEASIBILITY_TOL,
};
pub(crate) use class::{gaussian_mat, unit_radius};
pub use decomp::{
    colspace_basis, numerical_rank, orthonormality_defect, project_onto_span, singular_values, truncate_rank,
    RANK_TOL,
};
pub use mat::{dot, Mat};
pub use norms::{
    conjugate_exponent, entrywise_norm, frobenius_norm, spectral_norm, vec_norm, SPECTRAL_MAX_ITERS, SPECTRAL_TOL,
};
