//! Live simulation endpoint: streams frames to connected clients and applies
//! their edits between steps.

mod protocol;
mod server;

pub use protocol::{ClientMessage, ConfigMessage, FrameMessage, ServerMessage, PROTOCOL_VERSION};
pub use server::{serve, ServeConfig, ServiceHandle};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot listen: {0}")]
    Bind(std::io::Error),
}
