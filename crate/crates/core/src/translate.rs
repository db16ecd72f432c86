//! Rewriting `Cites` relations into integer edges, duplicate detection and
//! in-degree counting.

use std::path::Path;

use crate::error::{Error, Result};
use crate::idmap::IdLookup;
use crate::model::{CitationEdge, NodeId, RelationRecord};
use crate::spill::{Sorted, SpillSorter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dangling {
    Source,
    Target,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Translation {
    Edge(CitationEdge),
    Dangling(Dangling),
}

/// Resolves both endpoints; an endpoint that is not a known publication
/// makes the relation dangling.
pub fn translate_edge<M: IdLookup + ?Sized>(rel: &RelationRecord, map: &M) -> Translation {
    match (map.lookup(rel.source.as_str()), map.lookup(rel.target.as_str())) {
        (Some(source), Some(target)) => Translation::Edge(CitationEdge::new(source, target)),
        (None, Some(_)) => Translation::Dangling(Dangling::Source),
        (Some(_), None) => Translation::Dangling(Dangling::Target),
        (None, None) => Translation::Dangling(Dangling::Both),
    }
}

/// Per-node count of incoming edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeTable {
    counts: Vec<u32>,
    total: u64,
}

impl DegreeTable {
    pub fn new(node_count: usize) -> Self {
        DegreeTable {
            counts: vec![0; node_count],
            total: 0,
        }
    }

    pub fn add(&mut self, edge: CitationEdge) -> Result<()> {
        let n = self.counts.len();
        for endpoint in [edge.source, edge.target] {
            if endpoint.index() >= n {
                return Err(Error::EndpointOutOfRange {
                    endpoint: endpoint.get() as i64,
                    node_count: n,
                });
            }
        }
        let slot = &mut self.counts[edge.target.index()];
        *slot = slot.checked_add(1).expect("in-degree beyond u32");
        self.total += 1;
        Ok(())
    }

    pub fn get(&self, node: NodeId) -> u64 {
        self.counts.get(node.index()).copied().unwrap_or(0) as u64
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.counts
    }
}

pub fn count_in_degree<I>(edges: I, node_count: usize) -> Result<DegreeTable>
where
    I: IntoIterator<Item = CitationEdge>,
{
    let mut table = DegreeTable::new(node_count);
    for edge in edges {
        table.add(edge)?;
    }
    Ok(table)
}

/// Result of [`scan_duplicates`].
pub struct DuplicateScan {
    /// Edges equal to an earlier edge in stream order.
    pub duplicates: u64,
    /// Stream positions of those edges, ascending. Present only when asked for.
    pub positions: Option<DuplicatePositions>,
}

/// Finds repeated edges in an ordered stream with an external sort on
/// `(edge, position)`, so memory stays bounded by the sort chunk.
///
/// The first occurrence of each edge is the original; later ones are
/// duplicates.
pub fn scan_duplicates<I>(edges: I, scratch: &Path, chunk: usize, keep_positions: bool) -> Result<DuplicateScan>
where
    I: IntoIterator<Item = Result<CitationEdge>>,
{
    let mut by_edge = SpillSorter::new(scratch, chunk);
    for (position, edge) in edges.into_iter().enumerate() {
        by_edge.push(((edge?.pack() as u128) << 64) | position as u128)?;
    }

    let mut by_position = keep_positions.then(|| SpillSorter::new(scratch, chunk));
    let mut duplicates = 0;
    let mut previous: Option<u64> = None;
    for key in by_edge.finish()? {
        let key = key?;
        let edge = (key >> 64) as u64;
        if previous == Some(edge) {
            duplicates += 1;
            if let Some(sorter) = by_position.as_mut() {
                sorter.push(key & u64::MAX as u128)?;
            }
        }
        previous = Some(edge);
    }
    let positions = match by_position {
        Some(sorter) => Some(DuplicatePositions::new(sorter.finish()?)?),
        None => None,
    };
    Ok(DuplicateScan { duplicates, positions })
}

/// Membership test for ascending positions, queried with ascending positions.
pub struct DuplicatePositions {
    sorted: Sorted,
    next: Option<u64>,
}

impl DuplicatePositions {
    fn new(mut sorted: Sorted) -> Result<Self> {
        let next = sorted.next().transpose()?.map(|k| k as u64);
        Ok(DuplicatePositions { sorted, next })
    }

    /// Queries must not decrease.
    pub fn contains(&mut self, position: u64) -> Result<bool> {
        while let Some(next) = self.next {
            if next > position {
                return Ok(false);
            }
            self.next = self.sorted.next().transpose()?.map(|k| k as u64);
            if next == position {
                return Ok(true);
            }
        }
        Ok(false)
    }
}
