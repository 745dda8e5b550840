//! HTTP API and command-line front end for `concert-core`, backed by a
//! directory of course files.

pub mod api;
pub mod cli;
pub mod error;
pub mod service;

pub use error::ServiceError;
