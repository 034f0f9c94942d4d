//! Chat-completion access for report standardization and translation.
//!
//! Wire format is the common chat-completions shape: `POST
//! {api_base}/chat/completions` with `{"model", "messages": [{"role",
//! "content"}], "temperature"}`; the answer is read from
//! `choices[0].message.content`.

pub mod batch;
pub mod client;
pub mod config;
pub mod prompt;
pub mod standardize;
pub mod stub;
pub mod translate;

pub use batch::batch_map;
pub use client::{ChatBackend, HttpChatClient, LlmError};
pub use config::{ClientConfig, ConfigLayer};
pub use prompt::{build_fewshot_prompt, Exemplar, Prompt, PromptTemplate, ShotMode};
pub use standardize::standardize_llm;
pub use translate::{translate_with_consistency, ConsistencyFlag, TranslationOutcome};
