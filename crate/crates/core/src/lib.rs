//! Cut-cell geometry for unfitted finite element methods.
//!
//! Given a closed triangulated surface (STL) and a Cartesian background
//! mesh, the crate intersects every background cell with the surface,
//! produces convex integration polytopes for the cut cells, and labels
//! every remaining cell as inside or outside by integer-only propagation.
//! The same pipeline can run on a block-partitioned mesh with a two-level
//! (fine ranks + one coarse rank) exchange protocol over a pluggable
//! [`distributed::Transport`].
//!
//! ```
//! use cutcell::{pipeline, shapes, RunConfig};
//!
//! let config = RunConfig { cells: [8, 8, 8], ..RunConfig::default() };
//! let disc = pipeline::run(&shapes::unit_cube(), &config).unwrap();
//! assert!(disc.measures.e_bbox < 1e-10);
//! assert!((disc.measures.v_interior - 1.0).abs() < 1e-10);
//! ```

pub mod background;
pub mod classify;
pub mod cutter;
pub mod distributed;
pub mod error;
pub mod exec;
pub mod geom;
pub mod pipeline;
pub mod report;
pub mod shapes;
pub mod surface;
pub mod vtk;

pub type Point = nalgebra::Point3<f64>;
pub type Vector = nalgebra::Vector3<f64>;

pub use error::{Error, Result};
pub use exec::ExecPolicy;
pub use pipeline::{Mode, RunConfig};
pub use report::{EmbeddedDiscretisation, Measures};
