//! Bijective mapping of triangulated disks onto convex or star-shaped
//! polygons by advancing-front local surgery, with exact rational geometry.

pub mod domain;
pub mod engine;
pub mod geom;
pub mod mesh;
pub mod scalar;
#[cfg(test)]
mod testutil;
pub mod tutte;
pub mod verify;

pub use geom::{Point2, Point3, Sign};
pub use mesh::{Topology, TriMesh};
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;
pub type ExactPoint2 = Point2<Rational>;
pub type ExactPoint3 = Point3<Rational>;
pub type Point2f = Point2<f64>;
