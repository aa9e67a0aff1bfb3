pub mod error;
pub mod model;
pub mod mpc;
pub mod numkit;
pub mod polytope;
pub mod scenario;
pub mod sim;
pub mod terminal;

pub use error::{Error, Result};
