//! Numeric evaluators for empirical-process maximal inequalities, entropy
//! models, and covering-number estimation on finite dictionaries.

mod covering;
mod dictionary;
mod entropy;
mod theorem1;
mod theorem2;

pub use covering::{
    distance_matrix, empirical_covering_number, empirical_distance, greedy_cover, verify_cover, Cover, Traversal,
};
pub use dictionary::{
    expected_entropy_estimate, expected_entropy_profile, mc_sup_ep, support, DictFunction, FiniteDictionary,
    MAX_DICTIONARY,
};
pub use entropy::{EntropyModel, TailConcentration};
pub use theorem1::{default_m_range, theorem1_bound, BoundBreakdown, BoundInputs, TailModel};
pub use theorem2::{
    covering_integral, prop_s3_closed_form, theorem2_bound, ClosedFormBranch, ClosedFormInputs, WeightedBoundInputs,
    WeightedBreakdown,
};
