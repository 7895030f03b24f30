//! Translation-technique toolkit for English-Chinese aligned pairs.
//!
//! The crate covers the whole workflow: word alignment ([`align`]), rule
//! based technique annotation ([`annotate`]), synthesis of bad literal
//! translations ([`synthesize`]), input encoding ([`encode`]), the four
//! classifier architectures ([`model`]) and evaluation ([`eval`]).

pub mod align;
pub mod annotate;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod demo;
pub mod encode;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod synthesize;

pub use error::{Error, Result};
