//! Extension-free mollifiers on star-shaped polytopes and stable commuting
//! quasi-interpolation for the lowest-order 3D finite element complex.

pub mod clip;
pub mod error;
pub mod fespace;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod mollify;
pub mod quadrature;
pub mod quasiinterp;
pub mod smoothing;

pub use error::{Error, Result};
pub use geometry::{ExpandMap, Mat3, ShrinkMap, StarDomain, Vec3};
pub use kernel::{build_ball_quadrature, BallQuadrature, Kernel};
pub use mesh::SimplicialMesh;
pub use mollify::{DeltaField, Family, Mollifier, MollifierVariant};
