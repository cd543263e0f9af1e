//! Unitary representations of isometry groups of finite metric spaces.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`metric`]: validated finite metric spaces and Euclidean point clouds.
//! - [`isometry`]: the full isometry group as a permutation group.
//! - [`kernel`]: scalar kernels `p`, Gram matrices and PSD certificates.
//! - [`gns`]: the GNS representation `ρ` of a positive-definite function with
//!   cyclic vector `v`, so that `p(g) = ⟨ρ(g)v, v⟩`.
//! - [`faithful`]: orbit kernels, the averaged kernel over base points, the
//!   separation bound `1 - δ/n` and injectivity of the resulting representation.
//! - [`cli`]: the `isorep` command-line front end.

// Index loops read closer to the matrix formulas; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod faithful;
pub mod gns;
pub mod isometry;
pub mod kernel;
pub mod metric;

pub use faithful::{
    averaged_kernel, faithful_representation, neighborhood_members, orbit_kernel, separation_certificate,
    NeighborhoodSpec, SeparationCertificate,
};
pub use gns::{direct_sum, gns_build, GnsOptions, UnitaryRep};
pub use isometry::{isometry_group, Isometry, IsometryGroup};
pub use kernel::{check_psd, gram_on_group, gram_on_points, GramMatrix, GroupKernel, KernelFunction};
pub use metric::{cloud_to_metric, load_space, validate_metric, FiniteMetricSpace, PointCloud};
