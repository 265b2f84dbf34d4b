//! File formats, reports and the parallel study runner around
//! [`sepstat_core`].

pub mod io;
pub mod report;
pub mod study;

pub use sepstat_core as core;
