//! Cost fields from orientation densities, synthetic phantoms and the grid
//! container format.

mod field;
pub mod io;
pub mod mask;
mod phantom;

pub use field::{cost_from_density, CostField, DensityField};
pub use phantom::{synth_tube_phantom, Preset, Tube, DEFAULT_KAPPA};
