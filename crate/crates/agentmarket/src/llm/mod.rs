//! Language-model agents: prompt assembly, decision parsing and chat clients.

pub mod client;
pub mod parse;
pub mod prompt;

pub use client::{
    ChatClient, ClientError, HttpChatClient, LlmClientConfig, LlmMode, RawCompletion, ReqwestTransport,
    ScriptEntry, ScriptedClient, Transport,
};
pub use parse::{decision_schema, parse_decision, serialize_decision, ParseError};
pub use prompt::{assemble_prompt, assemble_prompt_with_recall, Persona, PromptBundle};
