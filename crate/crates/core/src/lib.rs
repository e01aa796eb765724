pub mod bargmann;
pub mod cli;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod herald;
pub mod mesh;
pub mod optimize;
pub mod scheme;
pub mod targets;

pub use error::{Error, Result};
