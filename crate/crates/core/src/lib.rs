//! Workspace surfaces of two-joint malleable robots from inter-marker
//! distances.

pub mod calibration;
pub mod datasets;
pub mod distance;
pub mod error;
pub mod formats;
pub mod kinematics;
pub mod linalg;
pub mod surface;

pub use distance::{
    embed, is_embeddable, project, Branch, DistanceSet, Embedding, Point3, Projection,
};
pub use error::{Error, Result};
pub use kinematics::{sweep, AzimuthRange, JointLimits, SweepCloud, Sweeper};
pub use surface::{
    canonical_reduce, classify, extract_coefficients, gamma_eval, Category, QuarticCoefficients,
    TopologyClass, Workspace,
};
