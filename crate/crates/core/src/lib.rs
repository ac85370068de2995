pub mod analysis;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod quantizer;
pub mod scheduler;
pub mod thp;

pub use error::{Error, Result};
