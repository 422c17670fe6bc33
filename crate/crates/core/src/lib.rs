pub mod basis;
pub mod bench;
pub mod error;
pub mod factory;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod poisedness;
pub mod problem;
pub mod testbed;

pub use error::{Error, Result};
