//! Post-run quality control.
//!
//! Checks read the emitted files rather than in-memory state, so they test
//! the writers as well as the counters. Violations are data: every failed
//! identity is returned, nothing aborts early.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::emit::{
    read_report, CITATIONS_FILE, CITATIONS_HEADER, IDMAP_FILE, PUBLICATIONS_FILE, PUBLICATIONS_LARGE_FILE, REPORT_FILE,
};
use crate::error::{Error, IoContext, Result};
use crate::idmap::IDMAP_HEADER;
use crate::ingest::{enumerate_dump, LayoutConfig, LineStream};
use crate::model::{RunReport, LARGE_COLUMNS};

/// Detailed findings per check are capped at this many lines.
const MAX_DETAILS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Violation {
    /// Name of the failed identity, e.g. `edgeConservation`.
    pub check: String,
    pub message: String,
}

impl Violation {
    fn new(check: &str, message: impl Into<String>) -> Self {
        Violation {
            check: check.to_string(),
            message: message.into(),
        }
    }
}

fn expect_eq(out: &mut Vec<Violation>, check: &str, what: &str, left: u64, right: u64) {
    if left != right {
        out.push(Violation::new(check, format!("{what}: {left} != {right}")));
    }
}

/// Conservation identities over the run counters.
pub fn verify_counts(r: &RunReport) -> Vec<Violation> {
    let mut v = Vec::new();
    expect_eq(
        &mut v,
        "publicationConservation",
        "publicationsSeen vs publicationsKept + publicationsSkippedMalformed + publicationsSkippedDuplicateId",
        r.publications_seen,
        r.publications_kept + r.publications_skipped_malformed + r.publications_skipped_duplicate_id,
    );
    expect_eq(
        &mut v,
        "publicationSkipReasons",
        "publicationsSkippedMalformed vs sum of publicationSkipReasons",
        r.publications_skipped_malformed,
        r.publication_skip_reasons.values().sum(),
    );
    expect_eq(
        &mut v,
        "relationConservation",
        "relationsSeen vs relationsCites + relationsOtherType + relationsMalformed",
        r.relations_seen,
        r.relations_cites + r.relations_other_type + r.relations_malformed,
    );
    expect_eq(
        &mut v,
        "relationSkipReasons",
        "relationsMalformed vs sum of relationSkipReasons",
        r.relations_malformed,
        r.relation_skip_reasons.values().sum(),
    );
    let removed = if r.settings.dedup_edges { r.edges_duplicate } else { 0 };
    expect_eq(
        &mut v,
        "edgeConservation",
        "relationsCites vs edgesEmitted + edgesDanglingDropped + removed duplicates",
        r.relations_cites,
        r.edges_emitted + r.edges_dangling_dropped + removed,
    );
    expect_eq(
        &mut v,
        "danglingBreakdown",
        "edgesDanglingDropped vs source + target + both",
        r.edges_dangling_dropped,
        r.edges_dangling_source + r.edges_dangling_target + r.edges_dangling_both,
    );
    if r.edges_self_loop > r.edges_emitted {
        v.push(Violation::new(
            "selfLoopsWithinEdges",
            format!(
                "edgesSelfLoop {} exceeds edgesEmitted {}",
                r.edges_self_loop, r.edges_emitted
            ),
        ));
    }
    let translated = r.relations_cites - r.relations_cites.min(r.edges_dangling_dropped);
    if r.edges_duplicate > translated {
        v.push(Violation::new(
            "duplicatesWithinEdges",
            format!(
                "edgesDuplicate {} exceeds translated edges {translated}",
                r.edges_duplicate
            ),
        ));
    }
    for part in &r.corrupt_parts {
        v.push(Violation::new(
            "noCorruptParts",
            format!(
                "{} unreadable after {} lines: {}",
                part.path, part.lines_read, part.message
            ),
        ));
    }
    for (column, nulls) in &r.per_column_null_counts {
        if *nulls > r.publications_kept {
            v.push(Violation::new(
                "columnNullCounts",
                format!("{column}: {nulls} nulls among {} publications", r.publications_kept),
            ));
        }
    }
    expect_eq(
        &mut v,
        "inputByteTotals",
        "bytesInCompressed vs publication + relation",
        r.bytes_in_compressed,
        r.publication_bytes_compressed + r.relation_bytes_compressed,
    );
    expect_eq(
        &mut v,
        "inputByteTotals",
        "bytesInUncompressed vs publication + relation",
        r.bytes_in_uncompressed,
        r.publication_bytes_uncompressed + r.relation_bytes_uncompressed,
    );
    expect_eq(
        &mut v,
        "outputByteTotals",
        "bytesOut vs sum of outputBytes",
        r.bytes_out,
        r.output_bytes.values().sum(),
    );
    v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ColumnCompleteness {
    pub column: String,
    pub non_null: u64,
    pub total: u64,
    /// `None` for an empty table.
    pub ratio: Option<f64>,
    pub below_threshold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompletenessReport {
    pub threshold: f64,
    pub rows: u64,
    pub columns: Vec<ColumnCompleteness>,
}

impl CompletenessReport {
    pub fn column(&self, name: &str) -> Option<&ColumnCompleteness> {
        self.columns.iter().find(|c| c.column == name)
    }

    pub fn violations(&self) -> Vec<Violation> {
        self.columns
            .iter()
            .filter(|c| c.below_threshold)
            .map(|c| {
                Violation::new(
                    "columnCompleteness",
                    format!(
                        "{}: {}/{} below threshold {}",
                        c.column, c.non_null, c.total, self.threshold
                    ),
                )
            })
            .collect()
    }
}

fn open_existing(path: &Path) -> Result<BufReader<File>> {
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    Ok(BufReader::new(File::open(path).at(path)?))
}

fn malformed(path: &Path, message: impl Into<String>) -> Error {
    Error::MalformedCsv {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source)
}

/// Share of non-empty values per column of `publications_large.csv`.
/// Columns under `threshold` are flagged; the default of 0 flags nothing.
pub fn verify_completeness(large: &Path, threshold: f64) -> Result<CompletenessReport> {
    let mut reader = csv_reader(open_existing(large)?);
    let mut record = csv::ByteRecord::new();
    if !reader
        .read_byte_record(&mut record)
        .map_err(|e| malformed(large, e.to_string()))?
        || record.iter().ne(LARGE_COLUMNS.iter().map(|c| c.as_bytes()))
    {
        return Err(malformed(large, "missing or unexpected header"));
    }
    let mut non_null = [0u64; LARGE_COLUMNS.len()];
    let mut rows = 0u64;
    while reader
        .read_byte_record(&mut record)
        .map_err(|e| malformed(large, e.to_string()))?
    {
        if record.len() != LARGE_COLUMNS.len() {
            let line = record.position().map_or(0, |p| p.line());
            return Err(malformed(large, format!("line {line}: {} fields", record.len())));
        }
        rows += 1;
        for (count, field) in non_null.iter_mut().zip(record.iter()) {
            if !field.is_empty() {
                *count += 1;
            }
        }
    }
    let columns = LARGE_COLUMNS
        .iter()
        .zip(non_null)
        .map(|(name, non_null)| {
            let ratio = (rows > 0).then(|| non_null as f64 / rows as f64);
            ColumnCompleteness {
                column: name.to_string(),
                non_null,
                total: rows,
                ratio,
                below_threshold: ratio.is_some_and(|r| r < threshold),
            }
        })
        .collect();
    Ok(CompletenessReport {
        threshold,
        rows,
        columns,
    })
}

/// What [`verify_outputs_crosscheck`] observed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Crosscheck {
    pub violations: Vec<Violation>,
    pub node_count: u64,
    pub edge_count: u64,
    pub idmap_rows: u64,
    /// `publications.csv` carries a citations column.
    pub has_citations_column: bool,
    pub in_degree: Vec<u32>,
}

struct Findings<'a> {
    check: &'a str,
    count: u64,
    out: Vec<Violation>,
}

impl<'a> Findings<'a> {
    fn new(check: &'a str) -> Self {
        Findings {
            check,
            count: 0,
            out: Vec::new(),
        }
    }

    fn push(&mut self, message: String) {
        self.count += 1;
        if self.out.len() < MAX_DETAILS {
            self.out.push(Violation::new(self.check, message));
        }
    }

    fn drain_into(self, sink: &mut Vec<Violation>) {
        let extra = self.count - self.out.len() as u64;
        sink.extend(self.out);
        if extra > 0 {
            sink.push(Violation::new(self.check, format!("... and {extra} more")));
        }
    }
}

fn parse_int(field: &[u8]) -> Option<i64> {
    std::str::from_utf8(field).ok()?.parse().ok()
}

/// Cross-file consistency: node ids are dense, the translation table agrees
/// with the node set, every edge endpoint is a node, and (when present) the
/// citations column equals the in-degree over `citations.csv`.
///
/// Streams every file; memory is one counter per node.
pub fn verify_outputs_crosscheck(citations: &Path, publications: &Path, idmap: &Path) -> Result<Crosscheck> {
    let mut result = Crosscheck::default();
    let mut violations = Vec::new();

    // publications.csv
    let mut dense = Findings::new("denseNodeIds");
    let mut citation_column: Vec<u64> = Vec::new();
    {
        let mut reader = csv_reader(open_existing(publications)?);
        let mut record = csv::ByteRecord::new();
        let mut first = true;
        while reader
            .read_byte_record(&mut record)
            .map_err(|e| malformed(publications, e.to_string()))?
        {
            let line = record.position().map_or(0, |p| p.line());
            if first {
                first = false;
                result.has_citations_column = record.len() == 3;
                if record.get(0) == Some(b"nodeId") {
                    continue;
                }
            }
            if record.len() != 2 + result.has_citations_column as usize {
                dense.push(format!("publications.csv line {line}: {} fields", record.len()));
                continue;
            }
            let expected = result.node_count as i64;
            match parse_int(&record[0]) {
                Some(node) if node == expected => {}
                other => dense.push(format!(
                    "publications.csv line {line}: nodeId {other:?}, expected {expected}"
                )),
            }
            if result.has_citations_column {
                citation_column.push(parse_int(&record[2]).unwrap_or(-1).max(-1) as u64);
            }
            result.node_count += 1;
        }
    }
    dense.drain_into(&mut violations);
    let n = result.node_count;

    // idmap.csv, checked line by line so truncation shows up as a violation
    let mut table = Findings::new("idmapMatchesPublications");
    {
        let mut bytes = Vec::new();
        open_existing(idmap)?.read_to_end(&mut bytes).at(idmap)?;
        if !bytes.is_empty() && !bytes.ends_with(b"\n") {
            table.push("idmap.csv does not end with a line terminator (truncated?)".into());
        }
        let mut reader = csv_reader(&bytes[..]);
        let mut record = csv::ByteRecord::new();
        let mut first = true;
        loop {
            match reader.read_byte_record(&mut record) {
                Ok(true) => {}
                Ok(false) => break,
                Err(e) => {
                    table.push(format!("idmap.csv unreadable: {e}"));
                    break;
                }
            }
            let line = record.position().map_or(0, |p| p.line());
            if first {
                first = false;
                if record.iter().ne(IDMAP_HEADER.iter().map(|h| h.as_bytes())) {
                    table.push("idmap.csv header is not openaireId,nodeId".into());
                }
                continue;
            }
            let expected = result.idmap_rows as i64;
            if record.len() != 2 || record[0].is_empty() {
                table.push(format!("idmap.csv line {line}: malformed row"));
            } else {
                match parse_int(&record[1]) {
                    Some(node) if node == expected => {}
                    other => table.push(format!("idmap.csv line {line}: nodeId {other:?}, expected {expected}")),
                }
            }
            result.idmap_rows += 1;
        }
        if first {
            table.push("idmap.csv is empty".into());
        }
    }
    if result.idmap_rows != n {
        table.push(format!(
            "idmap.csv has {} entries, publications.csv has {n} nodes",
            result.idmap_rows
        ));
    }
    table.drain_into(&mut violations);

    // citations.csv
    let mut endpoints = Findings::new("edgeEndpointInNodeSet");
    result.in_degree = vec![0; n as usize];
    {
        let mut reader = csv_reader(open_existing(citations)?);
        let mut record = csv::ByteRecord::new();
        let mut first = true;
        while reader
            .read_byte_record(&mut record)
            .map_err(|e| malformed(citations, e.to_string()))?
        {
            let line = record.position().map_or(0, |p| p.line());
            if first {
                first = false;
                if record.iter().eq(CITATIONS_HEADER.split(',').map(str::as_bytes)) {
                    continue;
                }
            }
            result.edge_count += 1;
            let pair = (record.len() == 2)
                .then(|| (parse_int(&record[0]), parse_int(&record[1])))
                .and_then(|(s, t)| Some((s?, t?)));
            match pair {
                Some((s, t)) if (0..n as i64).contains(&s) && (0..n as i64).contains(&t) => {
                    result.in_degree[t as usize] += 1;
                }
                Some((s, t)) => endpoints.push(format!(
                    "citations.csv line {line}: edge {s},{t} endpoint not in node set [0,{n})"
                )),
                None => endpoints.push(format!("citations.csv line {line}: not a pair of integers")),
            }
        }
    }
    endpoints.drain_into(&mut violations);

    if result.has_citations_column {
        let mut degrees = Findings::new("citationsColumnMatchesInDegree");
        for (node, (&column, &tally)) in citation_column.iter().zip(&result.in_degree).enumerate() {
            if column != tally as u64 {
                degrees.push(format!("node {node}: citations column {column}, in-degree {tally}"));
            }
        }
        degrees.drain_into(&mut violations);
    }

    result.violations = violations;
    Ok(result)
}

/// Checks `publications_large.csv` row by row against the translation
/// table and the in-degree tally.
pub fn verify_large_crosscheck(large: &Path, idmap: &Path, in_degree: &[u32]) -> Result<Vec<Violation>> {
    let mut rows = Findings::new("largeMatchesIdmap");
    let mut large_reader = csv_reader(open_existing(large)?);
    let mut table_reader = csv_reader(open_existing(idmap)?);
    let mut row = csv::ByteRecord::new();
    let mut entry = csv::ByteRecord::new();
    let header_ok = large_reader
        .read_byte_record(&mut row)
        .map_err(|e| malformed(large, e.to_string()))?
        && row.iter().eq(LARGE_COLUMNS.iter().map(|c| c.as_bytes()));
    if !header_ok {
        return Err(malformed(large, "missing or unexpected header"));
    }
    // header; idmap problems are reported by the main crosscheck
    let _ = table_reader.read_byte_record(&mut entry);
    let mut degrees = Findings::new("citationsColumnMatchesInDegree");
    let mut count = 0usize;
    while large_reader
        .read_byte_record(&mut row)
        .map_err(|e| malformed(large, e.to_string()))?
    {
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != LARGE_COLUMNS.len() {
            rows.push(format!("publications_large.csv line {line}: {} fields", row.len()));
            count += 1;
            continue;
        }
        if parse_int(&row[0]) != Some(count as i64) {
            rows.push(format!("publications_large.csv line {line}: nodeId is not {count}"));
        }
        match table_reader.read_byte_record(&mut entry) {
            Ok(true) if entry.len() == 2 && entry[0] == row[1] => {}
            _ => rows.push(format!(
                "publications_large.csv line {line}: openaireId differs from idmap.csv"
            )),
        }
        let tally = in_degree.get(count).copied().map(u64::from);
        if parse_int(&row[8]).map(|c| c as u64) != tally {
            degrees.push(format!(
                "node {count}: citations column does not equal in-degree {tally:?}"
            ));
        }
        count += 1;
    }
    if count != in_degree.len() {
        rows.push(format!(
            "publications_large.csv has {count} rows, publications.csv has {}",
            in_degree.len()
        ));
    }
    let mut out = Vec::new();
    rows.drain_into(&mut out);
    degrees.drain_into(&mut out);
    Ok(out)
}

/// Recounts the lines of every input part and compares them with the
/// report's `publicationsSeen` and `relationsSeen`.
pub fn verify_input_lines(input: &Path, layout_config: &LayoutConfig, report: &RunReport) -> Result<Vec<Violation>> {
    let layout = enumerate_dump(input, layout_config)?;
    let mut out = Vec::new();
    let mut count = |parts: &[PathBuf]| -> Result<u64> {
        let mut total = 0;
        for part in parts {
            let mut stream = LineStream::open(part)?;
            loop {
                match stream.next_line() {
                    Ok(Some(_)) => {}
                    Ok(None) => break,
                    Err(e @ Error::CorruptCompression { .. }) => {
                        out.push(Violation::new("inputReadable", e.to_string()));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            total += stream.lines_read();
        }
        Ok(total)
    };
    let publications = count(&layout.publication_parts)?;
    let relations = count(&layout.relation_parts)?;
    expect_eq(
        &mut out,
        "publicationLinesAccounted",
        "lines in publication parts vs publicationsSeen",
        publications,
        report.publications_seen,
    );
    expect_eq(
        &mut out,
        "relationLinesAccounted",
        "lines in relation parts vs relationsSeen",
        relations,
        report.relations_seen,
    );
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub completeness: Option<CompletenessReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct ValidateOptions {
    /// Dump to recount input lines from.
    pub input: Option<PathBuf>,
    pub layout: LayoutConfig,
    pub completeness_threshold: f64,
}

/// Runs every check over a distill output directory.
pub fn validate_outputs(output: &Path, options: &ValidateOptions) -> Result<ValidationReport> {
    let report_path = output.join(REPORT_FILE);
    let mut bytes = Vec::new();
    open_existing(&report_path)?.read_to_end(&mut bytes).at(&report_path)?;
    let report = read_report(&bytes)?;

    let mut violations = verify_counts(&report);
    let cross = verify_outputs_crosscheck(
        &output.join(CITATIONS_FILE),
        &output.join(PUBLICATIONS_FILE),
        &output.join(IDMAP_FILE),
    )?;
    violations.extend(cross.violations.iter().cloned());
    expect_eq(
        &mut violations,
        "citationRowsMatchReport",
        "citations.csv rows vs edgesEmitted",
        cross.edge_count,
        report.edges_emitted,
    );
    expect_eq(
        &mut violations,
        "publicationRowsMatchReport",
        "publications.csv rows vs publicationsKept",
        cross.node_count,
        report.publications_kept,
    );
    expect_eq(
        &mut violations,
        "idmapRowsMatchReport",
        "idmap.csv rows vs publicationsKept",
        cross.idmap_rows,
        report.publications_kept,
    );

    for (name, expected) in &report.output_bytes {
        let path = output.join(name);
        match std::fs::metadata(&path) {
            Ok(meta) => expect_eq(
                &mut violations,
                "outputBytesMatchReport",
                &format!("{name} size vs report"),
                meta.len(),
                *expected,
            ),
            Err(_) => violations.push(Violation::new(
                "outputFilesPresent",
                format!("{name} listed in report but missing"),
            )),
        }
    }

    let large = output.join(PUBLICATIONS_LARGE_FILE);
    let completeness = if report.settings.skip_large {
        None
    } else {
        violations.extend(verify_large_crosscheck(
            &large,
            &output.join(IDMAP_FILE),
            &cross.in_degree,
        )?);
        let completeness = verify_completeness(&large, options.completeness_threshold)?;
        violations.extend(completeness.violations());
        for column in &completeness.columns {
            let nulls = report.per_column_null_counts.get(&column.column).copied().unwrap_or(0);
            if column.total == report.publications_kept && column.total - column.non_null != nulls {
                violations.push(Violation::new(
                    "columnNullCountsMatchReport",
                    format!(
                        "{}: {} empty fields, report says {nulls}",
                        column.column,
                        column.total - column.non_null
                    ),
                ));
            }
        }
        Some(completeness)
    };

    if let Some(input) = &options.input {
        violations.extend(verify_input_lines(input, &options.layout, &report)?);
    }
    Ok(ValidationReport {
        violations,
        completeness,
    })
}
