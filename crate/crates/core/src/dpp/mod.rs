//! DPP and fixed-size m-DPP sampling from spectral data.

pub mod esp;
pub mod kernel;
pub mod oracle;
pub mod sampler;

pub use esp::{elementary_polynomials, mdpp_eigen_inclusion, ElementaryPolynomials};
pub use kernel::{EigenvectorSource, MarginalKernelView};
pub use oracle::{brute_force_dpp, brute_force_mdpp, mask_indices, subset_mask, SubsetDistribution};
pub use sampler::{
    dpp_eigen_select, dpp_marginals, joint_pair_probability, mdpp_eigen_select, mdpp_marginals,
    sample_dpp, sample_mdpp, sample_projective, WeightedSample,
};
