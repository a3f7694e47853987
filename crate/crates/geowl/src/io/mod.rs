//! File formats and report serialization.

pub mod report;
pub mod xyz;

pub use report::{round_sig, Report};
pub use xyz::{parse_xyz, write_xyz, XyzError};
