pub mod eigen;
pub mod error;
pub mod geometry;
pub mod io;
pub mod nodal;
pub mod operator;
pub mod path;
pub mod perturbation;
pub mod sparse;
pub mod union_find;
pub mod weyl;

pub use error::{Error, Result};
pub use geometry::{sample_around_constant, sample_random_metric, BundleConfig, InvariantMetric, Weight};
pub use path::{evaluate_path, path_velocity, PathKind, PerturbationPath};
pub use operator::{assemble_weight_operator, gauge_transform, quadratic_form, QuadraticFormValue, WeightOperator};
pub use eigen::{cluster_multiplicities, cross_weight_collisions, lowest_eigenpairs, EigenPair, SolverOptions};
pub use weyl::{weyl_counts, WeylCounts};
pub use nodal::{
    count_nodal_domains, nodal_report, nodal_set_components, reconstruct_total_space, regular_value_margin, vanish_on_orbit,
    NodalReport, TotalSpaceField,
};
pub use perturbation::{
    invariant_rescale_pairing, lambda_dot_cluster, lambda_dot_general, laplacian_variation_pairing, mixed_xy_pairing,
    split_rescale_pairing, uhlenbeck_pairing_check, VariationReport,
};
