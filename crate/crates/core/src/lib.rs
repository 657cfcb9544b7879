pub mod ecld;
pub mod env;
pub mod error;
pub mod nn;
pub mod ppo;
pub mod tensor;
pub mod trainer;
pub mod world_model;

pub use error::{Error, Result};
pub use tensor::Tensor;
