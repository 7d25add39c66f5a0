//! 3D object localization from a 2D detection box under tight-fit
//! constraints, with viewpoint-based selection of the vertex assignment.
//!
//! Given camera intrinsics, a 2D box, object dimensions, and yaw, the
//! translation of the object's bottom-face center follows from four linear
//! equations once each box edge is assigned a cuboid vertex. The baseline
//! tries all 64 physically possible assignments ([`geometry::exhaustive_search`]);
//! [`viewpoint::reduced_search`] tries only the handful that occur for the
//! object's viewpoint class.
//!
//! The crate is `no_std` with `alloc`. File formats and the CLI live in the
//! `viewfit` crate.
//!
//! ```
//! use viewfit_core::geometry::{all_configs, argmax_vertices, exhaustive_search, tight_box, Dimensions, Pose};
//! use viewfit_core::synth::default_intrinsics;
//!
//! let k = default_intrinsics();
//! let dims = Dimensions::new(3.9, 1.5, 1.6).unwrap();
//! let pose = Pose::new(0.6, [-3.0, 1.65, 18.0]);
//! let bbox = tight_box(&k, &pose, &dims).unwrap();
//!
//! let found = exhaustive_search(&k, &bbox, &dims, pose.theta, all_configs()).unwrap();
//! assert!((found.t[2] - 18.0).abs() < 1e-6);
//! assert_eq!(found.config, argmax_vertices(&k, &pose, &dims).unwrap());
//! ```

#![cfg_attr(not(test), no_std)]
#![deny(rust_2018_idioms, unsafe_code)]

extern crate alloc;

pub mod angle;
pub mod geometry;
pub mod metrics;
pub mod orientation;
pub mod record;
pub mod synth;
pub mod viewpoint;

pub use geometry::{
    all_configs, exhaustive_search, Box2D, ConstraintConfig, Dimensions, GeometryError, Intrinsics,
    Pose, SolveResult, VertexId,
};
pub use metrics::{evaluate, EvalConfig, EvalReport};
pub use record::{difficulty_of, Difficulty, KittiRecord};
pub use viewpoint::{classify_viewpoint, reduced_search, ConfigTable, ViewpointClass};
