//! Dense OpenAIRE id → node id translation table.
//!
//! Ids are handed out in first-seen order starting at zero. The table is
//! built by a single writer ([`IdMapBuilder`]) and then frozen into an
//! [`IdMap`] that is shared read-only.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Read, Write};

use indexmap::IndexSet;

use crate::error::{Error, Result};
use crate::model::{NodeId, OpenAireId};

pub const IDMAP_HEADER: [&str; 2] = ["openaireId", "nodeId"];

/// Largest number of nodes an int32 id space can hold.
pub const ID_SPACE: usize = 1 << 31;

#[derive(Debug)]
pub struct IdMapBuilder {
    ids: IndexSet<OpenAireId>,
    limit: usize,
}

impl Default for IdMapBuilder {
    fn default() -> Self {
        IdMapBuilder::new()
    }
}

impl IdMapBuilder {
    pub fn new() -> Self {
        IdMapBuilder::with_limit(ID_SPACE)
    }

    /// A builder that refuses to grow past `limit` entries.
    pub fn with_limit(limit: usize) -> Self {
        IdMapBuilder {
            ids: IndexSet::new(),
            limit: limit.min(ID_SPACE),
        }
    }

    /// Returns the id already assigned to `id`, or assigns the next one.
    pub fn assign(&mut self, id: OpenAireId) -> Result<NodeId> {
        if let Some(index) = self.ids.get_index_of(id.as_str()) {
            return NodeId::from_index(index);
        }
        if self.ids.len() >= self.limit {
            return Err(Error::IdSpaceExhausted(self.ids.len()));
        }
        let (index, _) = self.ids.insert_full(id);
        NodeId::from_index(index)
    }

    pub fn get(&self, id: &str) -> Option<NodeId> {
        self.ids
            .get_index_of(id)
            .map(|i| NodeId::from_index(i).expect("bounded by limit"))
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn finalize(mut self) -> IdMap {
        self.ids.shrink_to_fit();
        IdMap { ids: self.ids }
    }
}

/// Frozen translation table. Lookups never mutate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    ids: IndexSet<OpenAireId>,
}

impl IdMap {
    pub fn lookup(&self, id: &str) -> Option<NodeId> {
        self.ids
            .get_index_of(id)
            .map(|i| NodeId::from_index(i).expect("bounded at build time"))
    }

    pub fn openaire_id(&self, node: NodeId) -> Option<&OpenAireId> {
        self.ids.get_index(node.index())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Entries in node id order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &OpenAireId)> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (NodeId::from_index(i).expect("bounded"), id))
    }

    /// Writes the table as `openaireId,nodeId` CSV. Returns bytes written.
    pub fn persist<W: Write>(&self, sink: W) -> Result<u64> {
        let mut counted = crate::emit::CountingWriter::new(sink);
        {
            let mut writer = csv::WriterBuilder::new().from_writer(&mut counted);
            writer.write_record(IDMAP_HEADER).map_err(csv_io)?;
            for (node, id) in self.iter() {
                writer.write_record([id.as_str(), &node.to_string()]).map_err(csv_io)?;
            }
            writer.flush().map_err(|e| Error::io("idmap", e))?;
        }
        Ok(counted.count())
    }

    /// Reads a table written by [`IdMap::persist`].
    pub fn load<R: Read>(source: R) -> Result<IdMap> {
        let mut tracked = LastByte {
            inner: source,
            last: None,
        };
        let mut builder = IdMapBuilder::new();
        let mut line = 1u64;
        {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(&mut tracked);
            let mut record = csv::StringRecord::new();
            let mut saw_header = false;
            loop {
                let more = reader
                    .read_record(&mut record)
                    .map_err(|e| format_error(line, e.to_string()))?;
                if !more {
                    break;
                }
                line = record.position().map_or(line, |p| p.line());
                if !saw_header {
                    if record.iter().ne(IDMAP_HEADER) {
                        return Err(format_error(line, "missing openaireId,nodeId header"));
                    }
                    saw_header = true;
                    continue;
                }
                if record.len() != 2 {
                    return Err(format_error(line, format!("expected 2 fields, found {}", record.len())));
                }
                let id = OpenAireId::new(&record[0]).map_err(|e| format_error(line, e.to_string()))?;
                let node: i64 = record[1]
                    .parse()
                    .map_err(|_| format_error(line, format!("bad node id {:?}", &record[1])))?;
                let expected = builder.len() as i64;
                if node != expected {
                    return Err(format_error(line, format!("node id {node}, expected {expected}")));
                }
                let assigned = builder.assign(id)?;
                if assigned.get() as i64 != node {
                    return Err(format_error(line, format!("duplicate id {:?}", &record[0])));
                }
            }
            if !saw_header {
                return Err(format_error(1, "empty translation table"));
            }
        }
        if tracked.last != Some(b'\n') {
            return Err(format_error(line, "missing final line terminator (truncated?)"));
        }
        Ok(builder.finalize())
    }
}

/// Anything that can resolve an OpenAIRE id to a node id.
pub trait IdLookup {
    fn lookup(&self, id: &str) -> Option<NodeId>;
}

impl IdLookup for IdMap {
    fn lookup(&self, id: &str) -> Option<NodeId> {
        IdMap::lookup(self, id)
    }
}

impl IdLookup for HashMap<String, NodeId> {
    fn lookup(&self, id: &str) -> Option<NodeId> {
        self.get(id).copied()
    }
}

impl IdLookup for BTreeMap<String, NodeId> {
    fn lookup(&self, id: &str) -> Option<NodeId> {
        self.get(id).copied()
    }
}

fn format_error(line: u64, message: impl Into<String>) -> Error {
    Error::IdMapFormat {
        line,
        message: message.into(),
    }
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("idmap", e),
        other => Error::io("idmap", io::Error::other(format!("{other:?}"))),
    }
}

struct LastByte<R> {
    inner: R,
    last: Option<u8>,
}

impl<R: Read> Read for LastByte<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        if n > 0 {
            self.last = Some(buf[n - 1]);
        }
        Ok(n)
    }
}
