//! Scenario harness, file formats and network embedder around
//! [`lost3dsg_core`].

pub mod cli;
pub mod config;
pub mod export;
pub mod harness;
pub mod remote;
pub mod scenario;
pub mod vectors;

pub use lost3dsg_core as core;
