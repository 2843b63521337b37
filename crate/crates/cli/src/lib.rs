//! Library surface of the `tandem` CLI: configuration parsing, CSV schemas,
//! manifests, and the command implementations.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod manifest;
