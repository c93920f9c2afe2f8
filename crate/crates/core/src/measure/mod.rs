//! Box-counting estimates, patch areas and the local finiteness verifier.

pub mod area;
pub mod boxcount;
pub mod thm31;

pub use area::{disk_nodes, graph_area_with, patch_area, unit_ball_volume};
pub use boxcount::{box_count, koch_curve, sample_polyline, BoxCount};
pub use thm31::{theorem31_sweep, theorem31_verify, ScaleRow, Thm31Config, Thm31Report, Thm31Sweep};
