//! Filesystem, HTTP, parsing and command-line layer over
//! [`align_retrieve_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod http;
pub mod parser;
pub mod repo;
pub mod runner;

pub use align_retrieve_core as core;
pub use config::AppConfig;
pub use error::{AppError, AppResult};
pub use http::{HttpBackend, HttpSettings, Transport, UreqTransport};
pub use parser::TreeSitterParser;
