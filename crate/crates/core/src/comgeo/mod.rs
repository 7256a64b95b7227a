//! Convex operational models as finite polytopes, the LP-backed hull engine,
//! and minimal/maximal tensor products.

pub mod lp;
mod model;
mod polytope;

pub(crate) use model::marginals_unchecked;
pub use model::{
    classical_model, enumerate_max_vertices, gbit_model, gpt_marginals, max_tensor_constraints, max_tensor_membership,
    min_tensor, pr_box, BilinearState, ComModel, MEMBERSHIP_TOL, MODEL_TOL,
};
pub use polytope::{
    enumerate_vertices, hull_fit, hull_membership, hull_residual, polytope_distance, polytope_equal, reduce_indices,
    reduce_vertices, HPolytope, Halfspace, HullFit, Hyperplane, Separation, VPolytope, DEDUP_TOL, DEFAULT_DIM_CAP,
    MAX_ENUM_SUBSETS, REDUCE_TOL,
};
