//! Exact cohomology of the genus-zero moduli spaces `M_{0,n}` presented by
//! boundary divisors, together with intersection pairings, tautological
//! classes and tree-level cohomological field theories.

pub mod cohft;
pub mod error;
pub mod intersect;
pub mod keelring;
pub mod linalg;
pub mod rational;
pub mod taut;
pub mod trees;

pub use error::{Error, Result};

/// Process-wide memo table.
pub(crate) type Memo<K, V> = std::sync::OnceLock<std::sync::Mutex<std::collections::HashMap<K, V>>>;
pub use keelring::{RingElement, TensorElement};
pub use rational::Q;
