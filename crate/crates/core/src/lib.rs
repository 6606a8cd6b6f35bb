//! Vehicle pose estimation from LiDAR clusters by convex-hull rectangle
//! fitting with a minimum-occlusion-area criterion, plus the supporting
//! pieces: planar geometry, reference scoring baselines, KITTI-format I/O,
//! a synthetic scan generator, and evaluation/reporting utilities.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod harness;
pub mod kitti;
pub mod pose;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{convex_hull, line_intersection, polygon_area, Hull, LineNF, Vec2};
pub use pose::{
    assemble_box3d, boundary_points, estimate_pose, occlusion_area, project_to_plane,
    rect_from_theta, select_projection_edge, theta_grid_len, Box3D, Cluster2D, Cluster3D,
    FitResult, OrientedRectFrame, VisibleWedge, WedgeSide,
};
