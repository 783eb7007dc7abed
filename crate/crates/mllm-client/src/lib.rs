//! Networked navigator: prompts a chat-completions endpoint at each planner
//! phase and parses structured answers back into planner decisions.

pub mod cassette;
pub mod config;
pub mod navigator;
pub mod parse;
pub mod retry;
pub mod stub;
pub mod templates;
pub mod transport;

pub use cassette::{record_replay, CassetteMode};
pub use config::ModelEndpointConfig;
pub use navigator::{NetworkedFactory, NetworkedNavigator};
pub use templates::{Phase, PromptTemplate, Templates};
pub use transport::{ChatRequest, HttpTransport, Message, Transport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: usize, last: String },
    #[error("no recorded response for request digest {0}")]
    CassetteMiss(String),
    #[error("cassette {path}: {message}")]
    Cassette { path: String, message: String },
    #[error("template error: {0}")]
    Template(String),
    #[error("could not parse response: {0}")]
    Parse(String),
}
