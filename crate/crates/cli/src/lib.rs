//! Files, corpus generation and benchmarking around the mapping engine.

pub mod bench;
pub mod commands;
pub mod corpus;
pub mod obj;
pub mod sidecar;
pub mod svg;
