//! Exact projections, proximal maps, inexact operators and their model error.

mod epsilon;
mod exact;
mod inexact;

pub use epsilon::{
    epsilon_coordinate_subset_k_sparse, measure_epsilon, measure_epsilon_nonconvex,
    ProjectionReport,
};
pub use exact::{project_k_sparse, project_l1_ball, project_tree_sparse, proximal_l1};
pub(crate) use exact::{l1_threshold, top_k_indices};
pub(crate) use inexact::ceil_log2;
pub use inexact::{InexactOperator, ScheduleStage};
