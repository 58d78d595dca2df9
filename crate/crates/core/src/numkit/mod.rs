//! Numerical kernel shared by the feature sets.

pub mod cluster;
pub mod discriminant;
pub mod finite_diff;
pub mod kde;
pub mod linalg;
pub mod local_search;
pub mod stats;
