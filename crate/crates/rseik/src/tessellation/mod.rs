//! Discrete domain: Cartesian grids, sphere tessellations and the
//! per-orientation stencils used by the solvers.

pub mod grid;
pub mod selling;
pub mod sphere;
pub mod stencil;

pub use grid::{ProductGrid, SpatialGrid};
pub use selling::{offset_scheme, orient_offsets, selling_decompose, selling_decompose_2d, OffsetScheme, SellingPair};
pub use sphere::{angle, build_s1, build_s2_icosphere, sphere_exp, sphere_log, SphereGrid, SphereKind, SphereWeights};
pub use stencil::{
    acuteness_check, angular_edge_weights, build_spatial_stencil_2d, product_stencil, MWNorm, SLStencil, TangentNorm,
};
