//! Core library for watching the temporal integrity of cross-origin
//! JavaScript resources.
//!
//! The pipeline runs in stages, each backed by one module here:
//!
//! 1. [`url`] — URL parsing into the origin tuple and same-origin checks.
//! 2. [`extract`] — `<script src>` extraction from HTML and cross-origin
//!    classification of the references.
//! 3. [`poll`] — polling-pool construction and repeated fetch rounds that
//!    hash each script over time.
//! 4. [`integrity`] — reduction of per-URL hash series to change counts.
//! 5. [`sri`] — subresource-integrity metadata parsing, verification, and
//!    generation.
//! 6. [`features`] — the per-URL metric vector (URL lexics, inclusion
//!    counts, filter-list match, top-domain dummies).
//! 7. [`tree`] — CART decision tree plus the under-sampled repeated
//!    cross-validation protocol.
//! 8. [`report`] — descriptive outputs (change histogram, domain rankings,
//!    attribute prevalence, contingency tables).
//!
//! File formats shared between CLI commands live in [`store`].

pub mod extract;
pub mod features;
pub mod fetch;
pub mod integrity;
pub mod poll;
pub mod report;
pub mod sri;
pub mod store;
pub mod tree;
pub mod url;

pub use extract::{ScriptRef, ScriptTag};
pub use fetch::{ErrorClass, FetchConfig};
pub use integrity::IntegritySummary;
pub use poll::{HashSeries, PollRecord, PoolEntry};
pub use sri::{Digest, HashAlgorithm, IntegrityMetadata};
pub use tree::{CvReport, DecisionTree};
pub use url::{Origin, OriginPolicy, ParsedUrl};
