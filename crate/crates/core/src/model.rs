//! Shared domain types. No I/O happens here.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of `publications_large.csv`.
pub const LARGE_COLUMNS: [&str; 10] = [
    "nodeId",
    "openaireId",
    "doi",
    "title",
    "authors",
    "description",
    "date",
    "container",
    "citations",
    "language",
];

/// Opaque product identifier as found in the dump, e.g.
/// `doi_________::7e8d84fc096936557defb78d22cca97c`.
///
/// Compared byte for byte; never normalized.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OpenAireId(String);

impl OpenAireId {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() || value.contains(['\n', '\r']) {
            return Err(Error::InvalidOpenAireId(value));
        }
        Ok(OpenAireId(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for OpenAireId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        OpenAireId::new(value)
    }
}

impl From<OpenAireId> for String {
    fn from(id: OpenAireId) -> String {
        id.0
    }
}

impl Borrow<str> for OpenAireId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OpenAireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Dense node identifier in `[0, 2^31)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i32")]
pub struct NodeId(i32);

impl NodeId {
    pub const MAX: NodeId = NodeId(i32::MAX);

    pub fn new(value: i64) -> Result<Self> {
        if (0..=i32::MAX as i64).contains(&value) {
            Ok(NodeId(value as i32))
        } else {
            Err(Error::NodeIdOutOfRange(value as u64))
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        i32::try_from(index)
            .map(NodeId)
            .map_err(|_| Error::NodeIdOutOfRange(index as u64))
    }

    pub fn get(self) -> i32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<i64> for NodeId {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        NodeId::new(value)
    }
}

impl From<NodeId> for i32 {
    fn from(id: NodeId) -> i32 {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Flattened publication fields extracted from one dump record, before a
/// node id and citation count are known.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PublicationFragment {
    pub openaire_id: String,
    pub doi: Option<String>,
    pub title: Option<String>,
    pub authors: Option<String>,
    pub description: Option<String>,
    pub date: Option<String>,
    pub container: Option<String>,
    pub language: Option<String>,
}

impl PublicationFragment {
    /// Optional columns in `LARGE_COLUMNS` naming, paired with their values.
    pub fn optional_columns(&self) -> [(&'static str, Option<&str>); 7] {
        [
            ("doi", self.doi.as_deref()),
            ("title", self.title.as_deref()),
            ("authors", self.authors.as_deref()),
            ("description", self.description.as_deref()),
            ("date", self.date.as_deref()),
            ("container", self.container.as_deref()),
            ("language", self.language.as_deref()),
        ]
    }
}

/// One row of the publication tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicationRecord {
    pub node_id: NodeId,
    pub openaire_id: OpenAireId,
    pub doi: Option<String>,
    pub title: Option<String>,
    pub authors: Option<String>,
    pub description: Option<String>,
    pub date: Option<String>,
    pub container: Option<String>,
    pub citations: u64,
    pub language: Option<String>,
}

impl PublicationRecord {
    pub fn from_fragment(node_id: NodeId, fragment: PublicationFragment, citations: u64) -> Result<Self> {
        Ok(PublicationRecord {
            node_id,
            openaire_id: OpenAireId::new(fragment.openaire_id)?,
            doi: fragment.doi,
            title: fragment.title,
            authors: fragment.authors,
            description: fragment.description,
            date: fragment.date,
            container: fragment.container,
            citations,
            language: fragment.language,
        })
    }
}

/// A `Cites` relation with its raw endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationRecord {
    pub source: OpenAireId,
    pub target: OpenAireId,
    pub rel_type_name: String,
    pub rel_type_type: String,
}

/// "source cites target", in node ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CitationEdge {
    pub source: NodeId,
    pub target: NodeId,
}

impl CitationEdge {
    pub fn new(source: NodeId, target: NodeId) -> Self {
        CitationEdge { source, target }
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }

    /// Packs the edge so that integer order equals `(source, target)` order.
    pub fn pack(&self) -> u64 {
        ((self.source.get() as u64) << 32) | self.target.get() as u64
    }

    pub fn unpack(packed: u64) -> Self {
        CitationEdge {
            source: NodeId((packed >> 32) as i32),
            target: NodeId(packed as u32 as i32),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PublicationsFormat {
    /// `nodeId,doi`
    #[default]
    Minimal,
    /// `nodeId,doi,citations`
    WithCitations,
}

/// Flags of a distill run that change the output bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunSettings {
    pub dedup_edges: bool,
    pub headers: bool,
    pub publications_format: PublicationsFormat,
    pub skip_large: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorruptPart {
    pub path: String,
    pub lines_read: u64,
    pub message: String,
}

/// Counters accounting for every input line and every output byte.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct RunReport {
    pub settings: RunSettings,

    pub publication_parts: u64,
    pub relation_parts: u64,
    pub corrupt_parts: Vec<CorruptPart>,

    pub publications_seen: u64,
    pub publications_kept: u64,
    pub publications_skipped_malformed: u64,
    pub publications_skipped_duplicate_id: u64,
    pub publication_skip_reasons: BTreeMap<String, u64>,

    pub relations_seen: u64,
    pub relations_cites: u64,
    pub relations_other_type: u64,
    pub relations_malformed: u64,
    pub relation_skip_reasons: BTreeMap<String, u64>,
    /// Relations where `relType.name == "Cites"` disagrees with `relType.type == "citation"`.
    pub relations_name_type_mismatch: u64,

    pub edges_emitted: u64,
    pub edges_dangling_dropped: u64,
    pub edges_dangling_source: u64,
    pub edges_dangling_target: u64,
    pub edges_dangling_both: u64,
    pub edges_self_loop: u64,
    pub edges_duplicate: u64,

    pub bytes_in_compressed: u64,
    pub bytes_in_uncompressed: u64,
    pub publication_bytes_compressed: u64,
    pub publication_bytes_uncompressed: u64,
    pub relation_bytes_compressed: u64,
    pub relation_bytes_uncompressed: u64,
    pub bytes_out: u64,
    pub output_bytes: BTreeMap<String, u64>,

    pub per_column_null_counts: BTreeMap<String, u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_rss_bytes: Option<u64>,
}

/// Ratios derived from a [`RunReport`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportMetrics {
    /// Uncompressed over compressed input bytes.
    pub compression_ratio: Option<f64>,
    pub publication_compression_ratio: Option<f64>,
    pub relation_compression_ratio: Option<f64>,
    /// Bytes of `citations.csv` per emitted edge.
    pub bytes_per_edge: Option<f64>,
    /// Uncompressed relation JSON bytes over `citations.csv` bytes.
    pub relation_reduction_ratio: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl RunReport {
    pub fn citations_bytes(&self) -> u64 {
        self.output_bytes.get("citations.csv").copied().unwrap_or(0)
    }

    pub fn metrics(&self) -> ReportMetrics {
        ReportMetrics {
            compression_ratio: ratio(self.bytes_in_uncompressed, self.bytes_in_compressed),
            publication_compression_ratio: ratio(
                self.publication_bytes_uncompressed,
                self.publication_bytes_compressed,
            ),
            relation_compression_ratio: ratio(self.relation_bytes_uncompressed, self.relation_bytes_compressed),
            bytes_per_edge: ratio(self.citations_bytes(), self.edges_emitted),
            relation_reduction_ratio: ratio(self.relation_bytes_uncompressed, self.citations_bytes()),
        }
    }
}
