//! The distill run: enumerate, parse, assign ids, translate, emit, validate.
//!
//! Pass 1 parses publication parts in parallel into per-part staging files,
//! which are then merged in part order to assign node ids. Pass 2 translates
//! relation parts in parallel into per-part binary edge files. Because every
//! intermediate is keyed by part index and read back in order, the output
//! bytes do not depend on the thread count. Memory holds the id table and a
//! degree counter per node; edges only ever stream.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;

use crate::emit::{
    self, CitationWriter, LargeWriter, PublicationsWriter, CITATIONS_FILE, IDMAP_FILE, PUBLICATIONS_FILE,
    PUBLICATIONS_LARGE_FILE, REPORT_FILE,
};
use crate::error::{Error, IoContext, Result};
use crate::idmap::{IdMap, IdMapBuilder};
use crate::ingest::{
    enumerate_dump, parse_publication, parse_relation, LayoutConfig, LineStream, PublicationOutcome, RelationOutcome,
    SkipReason,
};
use crate::model::{
    CitationEdge, CorruptPart, NodeId, OpenAireId, PublicationFragment, PublicationRecord, RunReport, RunSettings,
    LARGE_COLUMNS,
};
use crate::spill::DEFAULT_CHUNK;
use crate::translate::{scan_duplicates, translate_edge, Dangling, DegreeTable, Translation};
use crate::validate::{validate_outputs, ValidateOptions, ValidationReport};

/// Overrides where scratch files go.
pub const TMPDIR_ENV: &str = "CITEDISTILL_TMPDIR";

#[derive(Clone, Debug)]
pub struct DistillOptions {
    pub input: PathBuf,
    pub output: PathBuf,
    pub layout: LayoutConfig,
    pub settings: RunSettings,
    /// Worker threads; 0 picks the number of CPUs.
    pub threads: usize,
    pub memory_report: bool,
    /// Scratch directory; defaults to `$CITEDISTILL_TMPDIR`, else the output directory.
    pub scratch_dir: Option<PathBuf>,
    /// Keys held in memory by the duplicate-detection sort.
    pub sort_chunk: usize,
    pub completeness_threshold: f64,
}

impl DistillOptions {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        DistillOptions {
            input: input.into(),
            output: output.into(),
            layout: LayoutConfig::default(),
            settings: RunSettings::default(),
            threads: 0,
            memory_report: false,
            scratch_dir: None,
            sort_chunk: DEFAULT_CHUNK,
            completeness_threshold: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DistillOutcome {
    pub report: RunReport,
    pub validation: ValidationReport,
}

#[derive(Debug, Default)]
struct PartStats {
    lines: u64,
    compressed: u64,
    uncompressed: u64,
    corrupt: Option<CorruptPart>,
}

/// Streams a part, feeding each line to `each`. A corrupt compressed stream
/// ends the part early and is recorded instead of failing the run.
fn scan_part(path: &Path, mut each: impl FnMut(&[u8]) -> Result<()>) -> Result<PartStats> {
    let mut stream = LineStream::open(path)?;
    let mut corrupt = None;
    loop {
        match stream.next_line() {
            Ok(Some((_, line))) => each(line)?,
            Ok(None) => break,
            Err(Error::CorruptCompression {
                path,
                lines_read,
                message,
            }) => {
                log::warn!("{}: corrupt after {lines_read} lines: {message}", path.display());
                corrupt = Some(CorruptPart {
                    path: path.display().to_string(),
                    lines_read,
                    message,
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PartStats {
        lines: stream.lines_read(),
        compressed: stream.compressed_bytes(),
        uncompressed: stream.uncompressed_bytes(),
        corrupt,
    })
}

struct PublicationPart {
    stats: PartStats,
    staging: PathBuf,
    skipped: BTreeMap<SkipReason, u64>,
}

fn parse_publication_part(index: usize, path: &Path, scratch: &Path) -> Result<PublicationPart> {
    let staging = scratch.join(format!("publication-{index:05}.jsonl"));
    let mut out = BufWriter::new(File::create(&staging).at(&staging)?);
    let mut skipped = BTreeMap::new();
    let stats = scan_part(path, |line| {
        match parse_publication(line) {
            PublicationOutcome::Fragment(fragment) => {
                serde_json::to_writer(&mut out, &fragment)?;
                out.write_all(b"\n").at(&staging)?;
            }
            PublicationOutcome::Skip(reason) => *skipped.entry(reason).or_insert(0) += 1,
        }
        Ok(())
    })?;
    out.flush().at(&staging)?;
    info!("publications {}: {} lines", path.display(), stats.lines);
    Ok(PublicationPart {
        stats,
        staging,
        skipped,
    })
}

/// Reads back one staging file of fragments.
fn for_each_fragment(path: &Path, mut each: impl FnMut(PublicationFragment) -> Result<()>) -> Result<()> {
    let reader = BufReader::new(File::open(path).at(path)?);
    for line in reader.lines() {
        each(serde_json::from_str(&line.at(path)?)?)?;
    }
    Ok(())
}

#[derive(Default)]
struct RelationPart {
    stats: PartStats,
    edges: PathBuf,
    cites: u64,
    other: u64,
    skipped: BTreeMap<SkipReason, u64>,
    mismatch: u64,
    dangling: [u64; 3],
}

fn translate_relation_part(index: usize, path: &Path, map: &IdMap, scratch: &Path) -> Result<RelationPart> {
    let edges = scratch.join(format!("relation-{index:05}.edges"));
    let mut out = BufWriter::new(File::create(&edges).at(&edges)?);
    let mut part = RelationPart::default();
    part.stats = scan_part(path, |line| {
        match parse_relation(line) {
            RelationOutcome::Cites(rel) => {
                part.cites += 1;
                if rel.rel_type_type != crate::ingest::CITATION_TYPE {
                    part.mismatch += 1;
                }
                match translate_edge(&rel, map) {
                    Translation::Edge(edge) => {
                        out.write_all(&(edge.source.get() as u32).to_le_bytes()).at(&edges)?;
                        out.write_all(&(edge.target.get() as u32).to_le_bytes()).at(&edges)?;
                    }
                    Translation::Dangling(side) => {
                        part.dangling[match side {
                            Dangling::Source => 0,
                            Dangling::Target => 1,
                            Dangling::Both => 2,
                        }] += 1
                    }
                }
            }
            RelationOutcome::NotCites { citation_typed } => {
                part.other += 1;
                part.mismatch += citation_typed as u64;
            }
            RelationOutcome::Skip(reason) => *part.skipped.entry(reason).or_insert(0) += 1,
        }
        Ok(())
    })?;
    out.flush().at(&edges)?;
    part.edges = edges;
    info!(
        "relations {}: {} lines, {} cites",
        path.display(),
        part.stats.lines,
        part.cites
    );
    Ok(part)
}

/// Edges of all relation parts, concatenated in part order.
struct EdgeStream {
    files: std::vec::IntoIter<PathBuf>,
    current: Option<(PathBuf, BufReader<File>)>,
}

impl EdgeStream {
    fn new(files: Vec<PathBuf>) -> Self {
        EdgeStream {
            files: files.into_iter(),
            current: None,
        }
    }
}

impl Iterator for EdgeStream {
    type Item = Result<CitationEdge>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.current.is_none() {
                let path = self.files.next()?;
                match File::open(&path) {
                    Ok(f) => self.current = Some((path, BufReader::with_capacity(64 * 1024, f))),
                    Err(e) => return Some(Err(Error::io(path, e))),
                }
            }
            let (path, reader) = self.current.as_mut().expect("opened above");
            let mut buf = [0u8; 8];
            match reader.read_exact(&mut buf) {
                Ok(()) => {
                    let source = u32::from_le_bytes(buf[..4].try_into().unwrap()) as i64;
                    let target = u32::from_le_bytes(buf[4..].try_into().unwrap()) as i64;
                    return Some(NodeId::new(source).and_then(|s| Ok(CitationEdge::new(s, NodeId::new(target)?))));
                }
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => self.current = None,
                Err(e) => return Some(Err(Error::io(path.clone(), e))),
            }
        }
    }
}

fn is_null(value: Option<&str>) -> bool {
    value.is_none_or(str::is_empty)
}

/// Peak resident set size of this process, from `/proc/self/status`.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn scratch_root(options: &DistillOptions, staging: &Path) -> PathBuf {
    options
        .scratch_dir
        .clone()
        .or_else(|| std::env::var_os(TMPDIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| staging.to_path_buf())
}

fn create_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::with_capacity(256 * 1024, File::create(&path).at(&path)?))
}

/// Runs the whole pipeline and validates what it wrote.
///
/// Files are written to a staging directory inside `output` and moved into
/// place only once every file is complete; on error nothing is promoted.
pub fn distill(options: &DistillOptions) -> Result<DistillOutcome> {
    let layout = enumerate_dump(&options.input, &options.layout)?;
    fs::create_dir_all(&options.output).at(&options.output)?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(&options.output)
        .at(&options.output)?;
    let scratch_parent = scratch_root(options, staging.path());
    fs::create_dir_all(&scratch_parent).at(&scratch_parent)?;
    let scratch = tempfile::Builder::new()
        .prefix("citedistill-")
        .tempdir_in(&scratch_parent)
        .at(&scratch_parent)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let settings = &options.settings;
    let mut report = RunReport {
        settings: settings.clone(),
        publication_parts: layout.publication_parts.len() as u64,
        relation_parts: layout.relation_parts.len() as u64,
        ..RunReport::default()
    };
    for column in LARGE_COLUMNS {
        report.per_column_null_counts.insert(column.to_string(), 0);
    }

    // pass 1: publications
    let publication_parts: Vec<PublicationPart> = pool.install(|| {
        layout
            .publication_parts
            .par_iter()
            .enumerate()
            .map(|(i, path)| parse_publication_part(i, path, scratch.path()))
            .collect::<Result<_>>()
    })?;

    let mut builder = IdMapBuilder::new();
    for part in &publication_parts {
        report.publications_seen += part.stats.lines;
        report.publication_bytes_compressed += part.stats.compressed;
        report.publication_bytes_uncompressed += part.stats.uncompressed;
        report.corrupt_parts.extend(part.stats.corrupt.clone());
        for (reason, count) in &part.skipped {
            report.publications_skipped_malformed += count;
            *report
                .publication_skip_reasons
                .entry(reason.as_str().to_string())
                .or_insert(0) += count;
        }
        for_each_fragment(&part.staging, |fragment| {
            let next = builder.len();
            let node = builder.assign(OpenAireId::new(fragment.openaire_id.as_str())?)?;
            if node.index() != next {
                report.publications_skipped_duplicate_id += 1;
                return Ok(());
            }
            report.publications_kept += 1;
            for (column, value) in fragment.optional_columns() {
                if is_null(value) {
                    *report.per_column_null_counts.get_mut(column).expect("seeded") += 1;
                }
            }
            Ok(())
        })?;
    }
    let map = builder.finalize();
    info!("{} publications assigned node ids", map.len());

    let idmap_bytes = {
        let mut w = create_file(staging.path(), IDMAP_FILE)?;
        let n = map.persist(&mut w)?;
        w.flush().at(staging.path().join(IDMAP_FILE))?;
        n
    };

    // pass 2: relations
    let relation_parts: Vec<RelationPart> = pool.install(|| {
        layout
            .relation_parts
            .par_iter()
            .enumerate()
            .map(|(i, path)| translate_relation_part(i, path, &map, scratch.path()))
            .collect::<Result<_>>()
    })?;
    for part in &relation_parts {
        report.relations_seen += part.stats.lines;
        report.relation_bytes_compressed += part.stats.compressed;
        report.relation_bytes_uncompressed += part.stats.uncompressed;
        report.corrupt_parts.extend(part.stats.corrupt.clone());
        report.relations_cites += part.cites;
        report.relations_other_type += part.other;
        report.relations_name_type_mismatch += part.mismatch;
        for (reason, count) in &part.skipped {
            report.relations_malformed += count;
            *report
                .relation_skip_reasons
                .entry(reason.as_str().to_string())
                .or_insert(0) += count;
        }
        report.edges_dangling_source += part.dangling[0];
        report.edges_dangling_target += part.dangling[1];
        report.edges_dangling_both += part.dangling[2];
    }
    report.edges_dangling_dropped =
        report.edges_dangling_source + report.edges_dangling_target + report.edges_dangling_both;
    report.bytes_in_compressed = report.publication_bytes_compressed + report.relation_bytes_compressed;
    report.bytes_in_uncompressed = report.publication_bytes_uncompressed + report.relation_bytes_uncompressed;
    let edge_files: Vec<PathBuf> = relation_parts.iter().map(|p| p.edges.clone()).collect();

    let scan = scan_duplicates(
        EdgeStream::new(edge_files.clone()),
        scratch.path(),
        options.sort_chunk,
        settings.dedup_edges,
    )?;
    report.edges_duplicate = scan.duplicates;
    let mut duplicate_positions = scan.positions;

    // citations.csv, tallying in-degree over exactly the emitted edges
    let mut degrees = DegreeTable::new(map.len());
    let citations_bytes = {
        let mut writer = CitationWriter::new(create_file(staging.path(), CITATIONS_FILE)?, settings.headers)?;
        for (position, edge) in EdgeStream::new(edge_files).enumerate() {
            let edge = edge?;
            if let Some(positions) = duplicate_positions.as_mut() {
                if positions.contains(position as u64)? {
                    continue;
                }
            }
            degrees.add(edge)?;
            report.edges_self_loop += edge.is_self_loop() as u64;
            writer.write(edge)?;
        }
        writer.finish()?
    };
    report.edges_emitted = degrees.total();
    drop(relation_parts);

    // publication tables, now that citation counts are known
    let (publications_bytes, large_bytes) = {
        let mut minimal = PublicationsWriter::new(
            create_file(staging.path(), PUBLICATIONS_FILE)?,
            settings.publications_format,
            settings.headers,
        )?;
        let mut large = if settings.skip_large {
            None
        } else {
            Some(LargeWriter::new(create_file(staging.path(), PUBLICATIONS_LARGE_FILE)?)?)
        };
        let mut next = 0usize;
        for part in &publication_parts {
            for_each_fragment(&part.staging, |fragment| {
                let Some(node) = map.lookup(&fragment.openaire_id).filter(|n| n.index() == next) else {
                    return Ok(());
                };
                next += 1;
                let record = PublicationRecord::from_fragment(node, fragment, degrees.get(node))?;
                minimal.write(&record)?;
                if let Some(large) = large.as_mut() {
                    large.write(&record)?;
                }
                Ok(())
            })?;
        }
        debug_assert_eq!(next, map.len());
        (minimal.finish()?, large.map(LargeWriter::finish).transpose()?)
    };

    report.output_bytes.insert(CITATIONS_FILE.to_string(), citations_bytes);
    report
        .output_bytes
        .insert(PUBLICATIONS_FILE.to_string(), publications_bytes);
    report.output_bytes.insert(IDMAP_FILE.to_string(), idmap_bytes);
    if let Some(bytes) = large_bytes {
        report.output_bytes.insert(PUBLICATIONS_LARGE_FILE.to_string(), bytes);
    }
    report.bytes_out = report.output_bytes.values().sum();
    if options.memory_report {
        report.peak_rss_bytes = peak_rss_bytes();
    }
    {
        let mut w = create_file(staging.path(), REPORT_FILE)?;
        emit::write_report(&report, &mut w)?;
        w.flush().at(staging.path().join(REPORT_FILE))?;
    }
    drop(scratch);

    for name in [
        CITATIONS_FILE,
        PUBLICATIONS_FILE,
        PUBLICATIONS_LARGE_FILE,
        IDMAP_FILE,
        REPORT_FILE,
    ] {
        let from = staging.path().join(name);
        let to = options.output.join(name);
        if from.exists() {
            fs::rename(&from, &to).at(&to)?;
        } else if to.exists() {
            // stale file from an earlier run with different flags
            fs::remove_file(&to).at(&to)?;
        }
    }
    drop(staging);

    let validation = validate_outputs(
        &options.output,
        &ValidateOptions {
            input: None,
            layout: options.layout.clone(),
            completeness_threshold: options.completeness_threshold,
        },
    )?;
    Ok(DistillOutcome { report, validation })
}
