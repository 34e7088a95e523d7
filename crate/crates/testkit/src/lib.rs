//! Test support for the hydb workspace: an in-memory reference engine,
//! seeded generators, and random-workload machinery. Never shipped.

pub mod fixture;
pub mod gen;
pub mod oracle;
pub mod workload;
