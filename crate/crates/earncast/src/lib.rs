//! File formats, experiment configuration and commands around
//! [`earncast_core`].

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod io;
pub mod render;

pub use earncast_core as core;
