//! Retrieval-augmented repository-level code completion core.
//!
//! Everything in this crate is pure computation over in-memory data and
//! builds without `std` (an allocator is required). File IO, HTTP, syntax
//! parsing and the command-line surface live in the `align-retrieve` crate,
//! which plugs into the traits declared here ([`corpus::CodeParser`] and
//! [`backend::CompletionBackend`]).
//!
//! Pipeline overview:
//!
//! 1. [`corpus`] turns a repository into base snippets (blank-line
//!    mini-blocks packed up to a line limit) and dependency snippets
//!    (signatures of entities imported by the file being completed).
//! 2. [`retrieval`] runs coarse BM25 retrieval and fine dense retrieval with
//!    a trainable hashed-feature embedder.
//! 3. [`query`] samples candidate completions and renders the enhanced query.
//! 4. [`reward`] and [`train`] align the retriever with the snippet that
//!    minimises target perplexity.
//! 5. [`eval`] scores completions with EM / ES and runs ablations.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod backend;
pub mod corpus;
pub mod dataset;
mod error;
pub mod eval;
pub mod lang;
pub mod query;
pub mod retrieval;
pub mod reward;
pub mod seed;
pub mod train;

pub use error::{BackendError, Diagnostics, Error, Result};
pub use lang::Language;
