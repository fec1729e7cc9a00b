pub mod error;
pub mod audit;
pub mod exec;
pub mod geometry;
pub mod linalg;
pub mod mc;
pub mod model;
pub mod quadrature;
pub mod sampler;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
