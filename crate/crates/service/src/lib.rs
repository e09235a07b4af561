//! Session management, CLI and REST API around the gapscope engine.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod session;

pub use config::Config;
pub use error::{ServiceError, ServiceResult};
pub use session::Session;
