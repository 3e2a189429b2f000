//! Exact loop-group arithmetic for slices in the affine Grassmannian of `GL_n`.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod loopmat;
pub mod nilring;
pub mod slices;
pub mod smoothing;
pub mod zseries;

pub use error::{Error, Result};
