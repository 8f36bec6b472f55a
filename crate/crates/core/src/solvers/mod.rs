//! Reference solutions for the four problems.

pub mod burgers;
pub mod heat;
pub mod hj;
pub mod transport;
