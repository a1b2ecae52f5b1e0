pub mod error;
pub mod graph;
pub mod measure;
pub mod par;
pub mod sampler;
pub mod transfer;
pub mod vrjp;
pub mod tree_codec;

pub use error::{Error, Result};
