pub mod bc;
pub mod checks;
pub mod dof;
pub mod envs;
pub mod error;
pub mod experiment;
pub mod moments;
pub mod nn;
pub mod numerics;
pub mod optim;

pub use error::{Error, Result};
