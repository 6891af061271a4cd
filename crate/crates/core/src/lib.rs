//! Computational convex geometry for probability measures on `R^n`.
//!
//! The crate builds the convex bodies attached to a measure (half-space
//! depth level sets, one-sided centroid bodies, Cramér level sets, Ball
//! bodies) and runs Monte Carlo experiments on random polytopes generated
//! by the measure.

pub mod bodies;
pub mod cloud;
pub mod convex;
pub mod depth;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod lp;
pub mod measures;
pub mod numeric;
pub mod polytopes;
pub mod rng;

pub use cloud::PointCloud;
pub use convex::{ConvexBodyApprox, RadialSearch};
pub use depth::{DepthEstimate, DepthMethod, DepthSource, DirectionBudget};
pub use error::{Error, Result};
pub use grid::DirectionGrid;
pub use measures::{BodyShape, Capabilities, Family, MeasureSpec};
