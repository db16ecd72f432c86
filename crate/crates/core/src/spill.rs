//! Bounded-memory external sort of fixed-width `u128` keys.
//!
//! Keys are buffered up to a chunk size, sorted, and spilled to anonymous
//! temp files; `finish` k-way merges the runs. When everything fits in one
//! chunk nothing touches the disk.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{IoContext, Result};

const KEY_BYTES: usize = 16;

/// Default chunk: 2^21 keys, 32 MiB.
pub const DEFAULT_CHUNK: usize = 1 << 21;

pub struct SpillSorter {
    dir: PathBuf,
    chunk: usize,
    buf: Vec<u128>,
    runs: Vec<File>,
    len: u64,
}

impl SpillSorter {
    pub fn new(dir: &Path, chunk: usize) -> Self {
        SpillSorter {
            dir: dir.to_path_buf(),
            chunk: chunk.max(1),
            buf: Vec::new(),
            runs: Vec::new(),
            len: 0,
        }
    }

    pub fn push(&mut self, key: u128) -> Result<()> {
        if self.buf.len() >= self.chunk {
            self.spill()?;
        }
        self.buf.push(key);
        self.len += 1;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn spill(&mut self) -> Result<()> {
        self.buf.sort_unstable();
        let mut file = tempfile::tempfile_in(&self.dir).at(&self.dir)?;
        {
            let mut w = BufWriter::new(&mut file);
            for key in &self.buf {
                w.write_all(&key.to_le_bytes()).at(&self.dir)?;
            }
            w.flush().at(&self.dir)?;
        }
        file.seek(SeekFrom::Start(0)).at(&self.dir)?;
        self.runs.push(file);
        self.buf.clear();
        Ok(())
    }

    pub fn finish(mut self) -> Result<Sorted> {
        if self.runs.is_empty() {
            self.buf.sort_unstable();
            return Ok(Sorted::Memory(std::mem::take(&mut self.buf).into_iter()));
        }
        if !self.buf.is_empty() {
            self.spill()?;
        }
        self.buf = Vec::new();
        let mut readers: Vec<BufReader<File>> = self
            .runs
            .into_iter()
            .map(|f| BufReader::with_capacity(64 * 1024, f))
            .collect();
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (i, r) in readers.iter_mut().enumerate() {
            if let Some(key) = read_key(r).at(&self.dir)? {
                heap.push(Reverse((key, i)));
            }
        }
        Ok(Sorted::Merge(Merge {
            dir: self.dir,
            readers,
            heap,
        }))
    }
}

fn read_key(r: &mut impl Read) -> io::Result<Option<u128>> {
    let mut bytes = [0u8; KEY_BYTES];
    match r.read_exact(&mut bytes) {
        Ok(()) => Ok(Some(u128::from_le_bytes(bytes))),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(None),
        Err(e) => Err(e),
    }
}

pub struct Merge {
    dir: PathBuf,
    readers: Vec<BufReader<File>>,
    heap: BinaryHeap<Reverse<(u128, usize)>>,
}

/// Ascending keys from a [`SpillSorter`].
pub enum Sorted {
    Memory(std::vec::IntoIter<u128>),
    Merge(Merge),
}

impl Iterator for Sorted {
    type Item = Result<u128>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            Sorted::Memory(it) => it.next().map(Ok),
            Sorted::Merge(m) => {
                let Reverse((key, i)) = m.heap.pop()?;
                match read_key(&mut m.readers[i]).at(&m.dir) {
                    Ok(Some(next)) => m.heap.push(Reverse((next, i))),
                    Ok(None) => {}
                    Err(e) => return Some(Err(e)),
                }
                Some(Ok(key))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sort_all(keys: &[u128], chunk: usize) -> Vec<u128> {
        let dir = tempfile::tempdir().unwrap();
        let mut s = SpillSorter::new(dir.path(), chunk);
        for k in keys {
            s.push(*k).unwrap();
        }
        assert_eq!(s.len(), keys.len() as u64);
        s.finish().unwrap().map(|k| k.unwrap()).collect()
    }

    #[test]
    fn empty() {
        assert!(sort_all(&[], 4).is_empty());
    }

    proptest! {
        #[test]
        fn matches_in_memory_sort(keys in proptest::collection::vec(any::<u128>(), 0..500), chunk in 1usize..64) {
            let mut expected = keys.clone();
            expected.sort_unstable();
            prop_assert_eq!(sort_all(&keys, chunk), expected);
        }
    }
}
