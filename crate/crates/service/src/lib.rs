//! `seamesh` command-line tool and `/v1` HTTP service.

pub mod api;
pub mod cli;
pub mod store;

/// Version stamped into every JSON document the tool emits.
pub const SCHEMA_VERSION: u32 = 1;

pub const LISTEN_ENV: &str = "SEAMESH_LISTEN";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
