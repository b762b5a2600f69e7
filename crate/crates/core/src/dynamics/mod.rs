//! Map/splitting abstraction and the elementary linear-algebra quantities
//! consumed by every other module.

mod chart;
mod cocycle;
mod linalg;
mod system;

pub use chart::{Chart, Point};
pub use cocycle::{cocycle_logs, splitting_along, CocycleLog};
pub use linalg::{
    min_principal_angle_sine, mininorm, oblique_decompose, operator_norm, restricted_det, restricted_mininorm,
    restricted_norm, subspace_distance, LinearMap, Subspace, ANGLE_FLOOR, DET_FLOOR, FRAME_TOL,
};
pub use system::{
    invariance_residual, iterate, orbit, MapSystem, Splitting, SplittingCache, SplittingKind, SystemConstants,
};
