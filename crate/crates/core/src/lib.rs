pub mod driver;
pub mod error;
pub mod experiments;
pub mod par;
pub mod problems;
pub mod sdp;
pub mod sos;
pub mod subproblem;
pub mod tensor_poly;

pub use error::{Error, Result};
