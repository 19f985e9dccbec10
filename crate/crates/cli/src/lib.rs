//! Command-line front end for the least-action path solver: TOML problem
//! configs in, schema-versioned JSON result documents (and optional CSV
//! node tables) out. The physics lives in the `fsaction` crate; this one
//! only parses, dispatches, and serializes.

pub mod config;
pub mod output;
pub mod run;
pub mod sweep;
