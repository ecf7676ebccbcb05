//! Finite models of thin Kurepa families, ladder partitions, the forcing
//! poset of finite restriction maps, and the recursive pair coloring of a
//! complete coherent binary tree.

pub mod arena;
pub mod certificate;
pub mod closure;
pub mod coloring;
pub mod error;
pub mod forcing;
pub mod ladder;
pub mod ordinal;
pub mod pr1;
pub mod scenario;
pub mod two_thin;

pub use error::{Error, Result};
