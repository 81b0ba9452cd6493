//! User-intent Centrality Optimization (UCO).
//!
//! A library for fine-tuning a lightweight text-embedding model so that
//! product titles central to a query's intent rank above semantically-close
//! hard negatives, together with the dataset curation and retrieval
//! evaluation pipeline needed to measure it.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`datamodel`] - record types and line-delimited file I/O
//! - [`synthgen`] - deterministic generator of labeled query/title datasets
//! - [`curation`] - evaluation-split construction and correlation statistics
//! - [`encoder`] - hashed character n-gram embedding model with analytic
//!   gradients
//! - [`losses`] - ranking loss, online contrastive loss, and their sum
//! - [`trainer`] - Adam-based fine-tuning loop with dual evaluators
//! - [`retrieval`] - exact brute-force cosine top-k search
//! - [`metrics`] - P@k / R@k / NDCG@k / MRR and report formatting

pub mod curation;
pub mod datamodel;
pub mod encoder;
mod error;
pub mod losses;
pub mod metrics;
pub mod retrieval;
pub mod seed;
pub mod synthgen;
pub mod trainer;

pub use error::{Error, Result};
