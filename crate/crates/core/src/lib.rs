//! Drinfeld–Sokolov hierarchies of affine Kac–Moody algebras, their tau-structures
//! and Miura-type transformations, computed exactly over ℚ.

pub mod diffalg;
pub mod discrete;
pub mod error;
pub mod gauge;
pub mod hierarchy;
pub mod kacmoody;
pub mod linalg;
pub mod miura;
pub mod poly;
pub mod ratfunc;
pub mod resolvent;

pub use error::{Error, Result};
