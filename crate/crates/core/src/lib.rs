pub mod curvature;
pub mod error;
pub mod exterior;
pub mod fiber;
pub mod finsler;
pub mod ke;
pub mod ks_wp;
pub mod linalg;
pub mod quadrature;
pub mod report;
pub mod resolvent_bounds;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
