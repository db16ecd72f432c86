//! Output writers: `citations.csv`, `publications.csv`,
//! `publications_large.csv` and `report.json`.
//!
//! UTF-8, LF line endings, no BOM. Fields are quoted only when they contain
//! a comma, a double quote, CR or LF; embedded quotes are doubled. Absent
//! values render as empty fields.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CitationEdge, PublicationRecord, PublicationsFormat, ReportMetrics, RunReport, LARGE_COLUMNS};

pub const CITATIONS_FILE: &str = "citations.csv";
pub const PUBLICATIONS_FILE: &str = "publications.csv";
pub const PUBLICATIONS_LARGE_FILE: &str = "publications_large.csv";
pub const IDMAP_FILE: &str = "idmap.csv";
pub const REPORT_FILE: &str = "report.json";

pub const CITATIONS_HEADER: &str = "source,target";

/// Counts bytes passing through to the inner writer.
pub struct CountingWriter<W> {
    inner: W,
    count: u64,
}

impl<W> CountingWriter<W> {
    pub fn new(inner: W) -> Self {
        CountingWriter { inner, count: 0 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

impl<W: Write> Write for CountingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.count += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn io_err(e: io::Error) -> Error {
    Error::io("<output>", e)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => io_err(e),
        other => io_err(io::Error::other(format!("{other:?}"))),
    }
}

fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink)
}

/// Streams `source,target` rows.
pub struct CitationWriter<W: Write> {
    out: CountingWriter<W>,
}

impl<W: Write> CitationWriter<W> {
    pub fn new(sink: W, headers: bool) -> Result<Self> {
        let mut out = CountingWriter::new(sink);
        if headers {
            writeln!(out, "{CITATIONS_HEADER}").map_err(io_err)?;
        }
        Ok(CitationWriter { out })
    }

    pub fn write(&mut self, edge: CitationEdge) -> Result<()> {
        writeln!(self.out, "{},{}", edge.source, edge.target).map_err(io_err)
    }

    /// Flushes and returns the bytes written.
    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().map_err(io_err)?;
        Ok(self.out.count())
    }
}

pub fn write_citations<W, I>(edges: I, sink: W, headers: bool) -> Result<u64>
where
    W: Write,
    I: IntoIterator<Item = CitationEdge>,
{
    let mut writer = CitationWriter::new(sink, headers)?;
    for edge in edges {
        writer.write(edge)?;
    }
    writer.finish()
}

/// Streams `nodeId,doi` or `nodeId,doi,citations` rows.
pub struct PublicationsWriter<W: Write> {
    csv: csv::Writer<CountingWriter<W>>,
    format: PublicationsFormat,
}

impl<W: Write> PublicationsWriter<W> {
    pub fn new(sink: W, format: PublicationsFormat, headers: bool) -> Result<Self> {
        let mut csv = csv_writer(CountingWriter::new(sink));
        if headers {
            match format {
                PublicationsFormat::Minimal => csv.write_record(["nodeId", "doi"]),
                PublicationsFormat::WithCitations => csv.write_record(["nodeId", "doi", "citations"]),
            }
            .map_err(csv_err)?;
        }
        Ok(PublicationsWriter { csv, format })
    }

    pub fn write(&mut self, record: &PublicationRecord) -> Result<()> {
        let node = record.node_id.to_string();
        let doi = record.doi.as_deref().unwrap_or("");
        match self.format {
            PublicationsFormat::Minimal => self.csv.write_record([node.as_str(), doi]),
            PublicationsFormat::WithCitations => {
                self.csv
                    .write_record([node.as_str(), doi, &record.citations.to_string()])
            }
        }
        .map_err(csv_err)
    }

    pub fn finish(self) -> Result<u64> {
        let out = self.csv.into_inner().map_err(|e| io_err(e.into_error()))?;
        Ok(out.count())
    }
}

pub fn write_publications<'a, W, I>(records: I, sink: W, format: PublicationsFormat, headers: bool) -> Result<u64>
where
    W: Write,
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut writer = PublicationsWriter::new(sink, format, headers)?;
    for record in records {
        writer.write(record)?;
    }
    writer.finish()
}

/// Streams the ten-column table, header included.
pub struct LargeWriter<W: Write> {
    csv: csv::Writer<CountingWriter<W>>,
}

impl<W: Write> LargeWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut csv = csv_writer(CountingWriter::new(sink));
        csv.write_record(LARGE_COLUMNS).map_err(csv_err)?;
        Ok(LargeWriter { csv })
    }

    pub fn write(&mut self, r: &PublicationRecord) -> Result<()> {
        let opt = |v: &Option<String>| v.as_deref().unwrap_or("").to_owned();
        self.csv
            .write_record([
                r.node_id.to_string(),
                r.openaire_id.as_str().to_owned(),
                opt(&r.doi),
                opt(&r.title),
                opt(&r.authors),
                opt(&r.description),
                opt(&r.date),
                opt(&r.container),
                r.citations.to_string(),
                opt(&r.language),
            ])
            .map_err(csv_err)
    }

    pub fn finish(self) -> Result<u64> {
        let out = self.csv.into_inner().map_err(|e| io_err(e.into_error()))?;
        Ok(out.count())
    }
}

pub fn write_publications_large<'a, W, I>(records: I, sink: W) -> Result<u64>
where
    W: Write,
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut writer = LargeWriter::new(sink)?;
    for record in records {
        writer.write(record)?;
    }
    writer.finish()
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    #[serde(flatten)]
    report: &'a RunReport,
    metrics: ReportMetrics,
}

/// Pretty-printed JSON with the counters plus derived ratios under `metrics`.
pub fn write_report<W: Write>(report: &RunReport, sink: W) -> Result<u64> {
    let mut out = CountingWriter::new(sink);
    let doc = ReportDocument {
        report,
        metrics: report.metrics(),
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    out.write_all(b"\n").map_err(io_err)?;
    out.flush().map_err(io_err)?;
    Ok(out.count())
}

pub fn read_report(bytes: &[u8]) -> Result<RunReport> {
    Ok(serde_json::from_slice(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeId, OpenAireId};

    fn record(node: i64, doi: Option<&str>) -> PublicationRecord {
        PublicationRecord {
            node_id: NodeId::new(node).unwrap(),
            openaire_id: OpenAireId::new(format!("id{node}")).unwrap(),
            doi: doi.map(str::to_owned),
            title: None,
            authors: None,
            description: None,
            date: None,
            container: None,
            citations: 3,
            language: None,
        }
    }

    #[test]
    fn citation_rows() {
        let edge = CitationEdge::new(NodeId::new(159486578).unwrap(), NodeId::new(118392581).unwrap());
        let mut out = Vec::new();
        let n = write_citations([edge], &mut out, false).unwrap();
        assert_eq!(out, b"159486578,118392581\n");
        assert_eq!(n, 20);

        let mut out = Vec::new();
        assert_eq!(write_citations([], &mut out, false).unwrap(), 0);
        assert!(out.is_empty());

        let mut out = Vec::new();
        write_citations([edge], &mut out, true).unwrap();
        assert_eq!(out, b"source,target\n159486578,118392581\n");
    }

    #[test]
    fn publication_rows() {
        let mut out = Vec::new();
        write_publications(
            &[record(14209, Some("10.3931/e-rara-45685")), record(42, None)],
            &mut out,
            PublicationsFormat::Minimal,
            false,
        )
        .unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "14209,10.3931/e-rara-45685\n42,\n");

        let mut out = Vec::new();
        write_publications(
            &[record(7, Some("10.1/x,y"))],
            &mut out,
            PublicationsFormat::WithCitations,
            true,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "nodeId,doi,citations\n7,\"10.1/x,y\",3\n"
        );
    }

    #[test]
    fn large_quoting() {
        let mut r = record(0, None);
        r.title = Some(r#"Graphs, "large" ones"#.into());
        r.description = Some("line\nbreak".into());
        r.language = Some("English".into());
        let mut out = Vec::new();
        write_publications_large([&r], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.splitn(2, '\n');
        assert_eq!(
            lines.next().unwrap(),
            "nodeId,openaireId,doi,title,authors,description,date,container,citations,language"
        );
        assert_eq!(
            lines.next().unwrap(),
            "0,id0,,\"Graphs, \"\"large\"\" ones\",,\"line\nbreak\",,,3,English\n"
        );
    }

    #[test]
    fn empty_report_is_all_zero() {
        let mut out = Vec::new();
        write_report(&RunReport::default(), &mut out).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(value["edgesEmitted"], 0);
        assert_eq!(value["publicationsSeen"], 0);
        assert!(value["metrics"]["compressionRatio"].is_null());
        assert_eq!(read_report(&out).unwrap(), RunReport::default());
    }
}
