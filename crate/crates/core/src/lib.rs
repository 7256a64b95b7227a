//! Geometric separability tools for finite-dimensional statistical theories.

pub mod comgeo;
pub mod error;
pub mod invsep;
pub mod matcore;
pub mod qstate;

pub use error::{Error, Result};
