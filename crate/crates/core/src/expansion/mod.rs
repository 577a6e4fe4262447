//! Kernel-independent local expansions: proxy/check geometry, truncated-SVD
//! fits, on-surface operators, the error model and the parameter recipe.

mod config;
mod local;
mod pipeline;

pub use config::{effective_rank, predict_error, recommend_parameters, QbkixConfig, Recommendation, Side};
pub use local::{
    build_check_to_proxy, cached_factors, evaluate_expansion, place_expansion, solve_equivalent_density, Anchor,
    ExpansionGeometry, PseudoInverseFactors,
};
pub use pipeline::{check_clearance, onsurface_apply, qbkix_evaluate, NearEvaluator, QbkixOperator};
