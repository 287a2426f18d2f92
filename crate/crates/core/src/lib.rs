//! Poisson trees, succession lines and coalescing random walks on sampled
//! Poisson point processes.
//!
//! Each point `(x, r)` of a Poisson configuration in `R^{d-1} x R` is linked
//! to its *mother*, the first later point within unit space distance. The
//! resulting forest is traversed in preorder (successor/predecessor), and
//! the ancestor chains read as coalescing random walks.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod forest;
pub mod point_process;
pub mod pointfile;
pub mod succession;
pub mod walks;

pub use error::{Error, Result};
pub use forest::{build_forest, build_index, Forest, GridIndex};
pub use point_process::{palm_version, sample_poisson, Boundary, Point, PointId, PointSample, Window};
pub use pointfile::{load_points, save_points};
