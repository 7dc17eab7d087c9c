//! Numerical laboratory for polynomial skew-products F(t,z) = (mu t, g(t,z))
//! with an attracting invariant fiber: skew-Koenigs limit maps, the
//! degenerate-resonance coefficient condition, vertical Fatou disks, and
//! escape-time rendering of fiber Julia-set slices.

pub mod config;
pub mod disks;
pub mod dynamics;
pub mod error;
pub mod koenigs;
pub mod numerics;
pub mod render;
pub mod report;
pub mod resonance;

pub use error::{Error, Result};
