//! Bootstrapping natural-language-understanding domains from developer grammars.
//!
//! The crate covers the whole pipeline for a new domain:
//!
//! - [`grammar`]: domain definitions (intents, slots, gazetteers, carrier
//!   phrases), carrier-phrase extraction, grammar sampling and a generator of
//!   synthetic benchmark domains.
//! - [`corpus`]: tokenization, IOB tags, label spaces, vocabularies,
//!   embeddings and gazetteer features.
//! - [`neural`]: LSTM cells, bi-directional layers, softmax, dropout, Adam and
//!   the checkpoint container, all with hand-written gradients.
//! - [`model`]: the multitask network (shared bottom bi-LSTM, separate slot and
//!   intent towers) with its joint objective, training loop and prediction.
//! - [`transfer`]: pre-training on source domains, head replacement and
//!   fine-tuning on a low-resource target.
//! - [`baselines`]: MaxEnt intent classifier and linear-chain CRF slot tagger.
//! - [`eval`]: intent F1, span F1, sentence error rate, aggregation, paired
//!   t-tests and semantic similarity between domains.
//! - [`engine`]: loads any saved model and runs it over a corpus.
//! - [`bench`]: the synthetic source/target benchmark used to compare the
//!   approaches end to end.

pub mod baselines;
pub mod bench;
pub mod config;
pub mod corpus;
pub mod error;
pub mod engine;
pub mod eval;
pub mod grammar;
pub mod model;
pub mod neural;
pub mod transfer;

pub use error::{Error, Result};
