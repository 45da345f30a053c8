//! Lipschitz-free p-norms on finite pointed p-metric spaces.
//!
//! The norm of a molecule is computed exactly by minimising over every
//! rooted labeled tree on the point set. On top of that sit embedding
//! ratios, p-amenability estimates, closed-form bounds for weighted trees
//! and a randomized search harness.

pub mod amenability;
pub mod cli;
pub mod error;
pub mod io;
pub mod norm;
pub mod search;
pub mod space;
pub mod tree_metric;
pub mod trees;

pub use amenability::{
    amen_estimate, bound_one_extra_point, bound_two_points, embedding_ratio, embedding_ratio_detail,
    isometric_3pt_test, metric_amen_bound, optimal_extension_3pt, retract_upper_bound, AmenEstimate,
    AmenOptions, OneExtraPointBound, RatioDetail, RatioOptions, RetractBound, ThreePointExtension,
    TreeWitness, TwoPointBound,
};
pub use error::{Error, Result};
pub use norm::{
    free_norm, free_norm_pruned, free_norm_pruned_with, free_norm_with, nearest_is_base,
    positive_condition_and_norm, positive_violation_witness, star_upper_bound, three_point_norm,
    NormOptions, NormResult, PositiveCoefficientReport,
};
pub use search::{
    generate_instance, instance_digest, random_p_metric, random_weighted_tree, read_records,
    replay_record, search_campaign, with_thread_budget, CampaignSummary, Instance, SearchConfig,
    SearchMode, SearchRecord, THREADS_ENV,
};
pub use space::{
    p_metric_closure, restrict_subspace, validate_p_metric, Molecule, PMetricSpace,
    ValidationReport, Violation, METRIC_TOLERANCE,
};
pub use tree_metric::{path_p_metric, WeightedRootedTree};
pub use trees::{
    enumerate_rooted_trees, enumerate_rooted_trees_limited, pruefer_decode, split_at_vertex,
    subtree_sums, tree_count, tree_value, Partition, RootedTreeIter, RootedTreeTopology, TreePart,
    TreeValue, DEFAULT_MAX_POINTS, HARD_MAX_POINTS,
};
