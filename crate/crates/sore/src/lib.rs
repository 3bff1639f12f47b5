//! SORE — semantic outlier removal for web documents.
//!
//! The pipeline parses HTML into text segments, embeds them together with the
//! document metadata, picks the segments closest to the metadata as "core
//! content", and removes everything that either matches a known boilerplate
//! category or drifts too far from the core. Every removal carries a recorded
//! reason so the decisions stay auditable.
//!
//! Modules:
//! - [`segmenter`]: HTML → ordered text segments + metadata.
//! - [`embed`]: embedding providers (deterministic hashing, remote HTTP) and
//!   inner-product distance.
//! - [`ann`]: HNSW index with byte-exact serialization and an exact-search
//!   test oracle.
//! - [`groups`]: outlier phrase lexicons (builtin categories + file format).
//! - [`pipeline`]: core selection, per-segment classification, fallback.
//! - [`eval`]: precision/recall metrics, keyword accuracy, parameter sweeps,
//!   and a synthetic labeled corpus for hermetic end-to-end runs.

pub mod ann;
pub mod embed;
pub mod eval;
pub mod groups;
pub mod pipeline;
pub mod segmenter;

pub use ann::{AnnError, AnnIndex, AnnParams, PointKind, PointLabel};
pub use embed::{hash_embed, ip_distance, EmbedError, Embedder, EmbedderConfig, EmbeddingVector};
pub use groups::{builtin_groups, load_groups, parse_groups, GroupsError, OutlierGroup};
pub use pipeline::{
    select_core, CleanConfig, CleanError, CleanResult, CleanStats, Pipeline, RemovalDecision,
    Verdict,
};
pub use segmenter::{
    extract_metadata, parse_document, DocumentMetadata, Segment, SegmentError, SegmenterConfig,
};
