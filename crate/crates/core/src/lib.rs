//! Streaming distillation of scholarly knowledge-graph dumps.
//!
//! A dump of gzip JSON-lines part files goes in; out come a dense integer
//! citation edge list (`citations.csv`), publication tables keyed by 32-bit
//! node ids, the id translation table and a run report that accounts for
//! every input line.

pub mod emit;
pub mod error;
pub mod idmap;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod spill;
pub mod synthgen;
pub mod translate;
pub mod validate;

pub use error::{Error, Result};
pub use idmap::{IdMap, IdMapBuilder};
pub use model::{
    CitationEdge, NodeId, OpenAireId, PublicationFragment, PublicationRecord, PublicationsFormat, RelationRecord,
    RunReport, RunSettings,
};
pub use pipeline::{distill, DistillOptions, DistillOutcome};
