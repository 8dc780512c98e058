pub mod canon;
pub mod error;
pub mod gaussian;
pub mod leaders;
pub mod poly;
pub mod poset;
pub mod security;
pub mod tree;
pub mod tutte;
pub mod verify;

pub use canon::{canonical_code, enumerate_trees, CanonicalCode};
pub use error::{Error, Result};
pub use poly::BiPoly;
pub use tree::{EdgeRef, Tree};
