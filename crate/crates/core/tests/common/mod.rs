//! Independent oracles over the generator manifest. Nothing here calls the
//! pipeline's id assignment, translation or degree code.

#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use citedistill::synthgen::{generate, Manifest, SynthConfig};
use citedistill::{distill, DistillOptions, DistillOutcome};

/// Node ids by brute force: a counter over valid publications in stream
/// order, first occurrence wins.
pub fn oracle_node_ids(manifest: &Manifest) -> HashMap<String, i64> {
    let mut ids = HashMap::new();
    for p in manifest.publications.iter().filter(|p| p.valid) {
        let next = ids.len() as i64;
        ids.entry(p.openaire_id.clone()).or_insert(next);
    }
    ids
}

/// Expected edge sequence: nested-loop join of `Cites` relations against the
/// publication list.
pub fn oracle_edges(manifest: &Manifest) -> Vec<(i64, i64)> {
    let ids = oracle_node_ids(manifest);
    manifest
        .relations
        .iter()
        .filter(|r| r.valid && r.rel_type_name == "Cites")
        .filter_map(|r| Some((*ids.get(&r.source)?, *ids.get(&r.target)?)))
        .collect()
}

pub fn dedup_first(edges: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let mut seen = std::collections::HashSet::new();
    edges.iter().copied().filter(|e| seen.insert(*e)).collect()
}

pub fn brute_in_degree(edges: &[(i64, i64)], n: usize) -> Vec<u64> {
    let mut table = vec![0u64; n];
    for &(_, t) in edges {
        table[t as usize] += 1;
    }
    table
}

fn reader(path: &Path, headers: bool) -> csv::Reader<fs::File> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .from_path(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn read_records(path: &Path, headers: bool) -> Vec<csv::StringRecord> {
    reader(path, headers).records().map(|r| r.unwrap()).collect()
}

pub fn read_edges(path: &Path, headers: bool) -> Vec<(i64, i64)> {
    read_records(path, headers)
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect()
}

pub struct Run {
    pub dir: tempfile::TempDir,
    pub manifest: Manifest,
    pub outcome: DistillOutcome,
}

impl Run {
    pub fn dump(&self) -> std::path::PathBuf {
        self.dir.path().join("dump")
    }

    pub fn out(&self) -> std::path::PathBuf {
        self.dir.path().join("out")
    }
}

pub fn generate_and_distill(config: &SynthConfig, tweak: impl FnOnce(&mut DistillOptions)) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump");
    fs::create_dir_all(&dump).unwrap();
    let manifest = generate(config, &dump).unwrap();
    let mut options = DistillOptions::new(&dump, dir.path().join("out"));
    options.threads = 2;
    tweak(&mut options);
    let outcome = distill(&options).unwrap();
    Run { dir, manifest, outcome }
}

pub fn optional(field: &str) -> Option<String> {
    (!field.is_empty()).then(|| field.to_string())
}
