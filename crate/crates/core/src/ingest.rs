//! Dump enumeration, line streaming and record parsing.
//!
//! A dump is a directory whose subdirectories hold part files of
//! newline-delimited JSON, usually gzip-compressed. Publication records are
//! flattened into [`PublicationFragment`]s; relation records are filtered down
//! to `Cites` relations.

use std::borrow::Cow;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::Deserialize;

use crate::error::{Error, IoContext, Result};
use crate::model::{OpenAireId, PublicationFragment, RelationRecord};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
const READ_BUFFER: usize = 64 * 1024;

pub const CITES: &str = "Cites";
pub const CITATION_TYPE: &str = "citation";
pub const AUTHOR_SEPARATOR: &str = "; ";

/// Which subdirectories of the dump root hold which entity.
#[derive(Clone, Debug)]
pub struct LayoutConfig {
    pub publication_pattern: String,
    pub relation_pattern: String,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            publication_pattern: "publication".to_string(),
            relation_pattern: "relation".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DumpLayout {
    pub root: PathBuf,
    pub publication_parts: Vec<PathBuf>,
    pub relation_parts: Vec<PathBuf>,
}

/// Lists the part files of a dump in `(folder, file name)` byte order.
///
/// Every immediate subdirectory of `root` whose name contains the publication
/// (relation) pattern contributes its regular files. Files starting with `.`
/// or `_` (checksums, `_SUCCESS` markers) are ignored.
pub fn enumerate_dump(root: &Path, config: &LayoutConfig) -> Result<DumpLayout> {
    if !root.is_dir() {
        return Err(Error::RootNotFound(root.to_path_buf()));
    }
    let mut folders: Vec<(PathBuf, String)> = Vec::new();
    for entry in fs::read_dir(root).at(root)? {
        let entry = entry.at(root)?;
        if entry.file_type().at(entry.path())?.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            folders.push((entry.path(), name));
        }
    }
    folders.sort_by(|a, b| {
        a.0.as_os_str()
            .as_encoded_bytes()
            .cmp(b.0.as_os_str().as_encoded_bytes())
    });

    let mut layout = DumpLayout {
        root: root.to_path_buf(),
        publication_parts: Vec::new(),
        relation_parts: Vec::new(),
    };
    for (folder, name) in &folders {
        if name.contains(&config.publication_pattern) {
            layout.publication_parts.extend(list_parts(folder)?);
        } else if name.contains(&config.relation_pattern) {
            layout.relation_parts.extend(list_parts(folder)?);
        }
    }
    if layout.publication_parts.is_empty() {
        return Err(Error::EmptyLayout(root.to_path_buf()));
    }
    Ok(layout)
}

fn list_parts(folder: &Path) -> Result<Vec<PathBuf>> {
    let mut parts = Vec::new();
    for entry in fs::read_dir(folder).at(folder)? {
        let entry = entry.at(folder)?;
        let name = entry.file_name();
        let hidden = name
            .as_encoded_bytes()
            .first()
            .is_some_and(|b| *b == b'.' || *b == b'_');
        if hidden {
            continue;
        }
        // follows symlinks, so linked part files are accepted
        let meta = fs::metadata(entry.path()).at(entry.path())?;
        if meta.is_file() {
            File::open(entry.path()).at(entry.path())?;
            parts.push(entry.path());
        }
    }
    parts.sort_by(|a, b| a.as_os_str().as_encoded_bytes().cmp(b.as_os_str().as_encoded_bytes()));
    Ok(parts)
}

/// Streams the newline-delimited records of one part file.
///
/// Gzip input is recognized by its magic bytes, whatever the file is called.
/// A single line buffer is reused, so memory stays proportional to the
/// longest line.
pub struct LineStream {
    path: PathBuf,
    reader: Box<dyn BufRead + Send>,
    buf: Vec<u8>,
    next_index: u64,
    compressed: bool,
    compressed_bytes: u64,
    uncompressed_bytes: u64,
}

pub fn stream_lines(path: &Path) -> Result<LineStream> {
    LineStream::open(path)
}

impl LineStream {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).at(path)?;
        let compressed_bytes = file.metadata().at(path)?.len();
        let mut raw = BufReader::with_capacity(READ_BUFFER, file);
        let compressed = raw.fill_buf().at(path)?.starts_with(&GZIP_MAGIC);
        let reader: Box<dyn BufRead + Send> = if compressed {
            Box::new(BufReader::with_capacity(READ_BUFFER, MultiGzDecoder::new(raw)))
        } else {
            Box::new(raw)
        };
        Ok(LineStream {
            path: path.to_path_buf(),
            reader,
            buf: Vec::new(),
            next_index: 0,
            compressed,
            compressed_bytes,
            uncompressed_bytes: 0,
        })
    }

    /// Next `(line index, line bytes)`, without the line terminator.
    pub fn next_line(&mut self) -> Result<Option<(u64, &[u8])>> {
        self.buf.clear();
        let n = match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(n) => n,
            Err(e) => return Err(self.classify(e)),
        };
        if n == 0 {
            return Ok(None);
        }
        self.uncompressed_bytes += n as u64;
        let mut line = &self.buf[..];
        if let Some(rest) = line.strip_suffix(b"\n") {
            line = rest;
        }
        if let Some(rest) = line.strip_suffix(b"\r") {
            line = rest;
        }
        let index = self.next_index;
        self.next_index += 1;
        Ok(Some((index, line)))
    }

    fn classify(&self, e: io::Error) -> Error {
        let decoder_failure = matches!(
            e.kind(),
            io::ErrorKind::InvalidInput | io::ErrorKind::InvalidData | io::ErrorKind::UnexpectedEof
        );
        if self.compressed && decoder_failure {
            Error::CorruptCompression {
                path: self.path.clone(),
                lines_read: self.next_index,
                message: e.to_string(),
            }
        } else {
            Error::io(&self.path, e)
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn is_compressed(&self) -> bool {
        self.compressed
    }

    /// Lines yielded so far.
    pub fn lines_read(&self) -> u64 {
        self.next_index
    }

    /// Size of the file on disk.
    pub fn compressed_bytes(&self) -> u64 {
        self.compressed_bytes
    }

    /// Decoded bytes consumed so far, terminators included.
    pub fn uncompressed_bytes(&self) -> u64 {
        self.uncompressed_bytes
    }
}

/// Counts the records of a part file without parsing them.
pub fn count_lines(path: &Path) -> Result<u64> {
    let mut stream = LineStream::open(path)?;
    while stream.next_line()?.is_some() {}
    Ok(stream.lines_read())
}

/// Why a record was not usable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    MalformedJson,
    MissingId,
    InvalidId,
    MissingRelType,
    MissingEndpoint,
    InvalidEndpoint,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::MalformedJson => "malformedJson",
            SkipReason::MissingId => "missingId",
            SkipReason::InvalidId => "invalidId",
            SkipReason::MissingRelType => "missingRelType",
            SkipReason::MissingEndpoint => "missingEndpoint",
            SkipReason::InvalidEndpoint => "invalidEndpoint",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicationOutcome {
    Fragment(PublicationFragment),
    Skip(SkipReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationOutcome {
    Cites(RelationRecord),
    /// A relation of another type. `citation_typed` is set when its
    /// `relType.type` is nevertheless `"citation"`.
    NotCites {
        citation_typed: bool,
    },
    Skip(SkipReason),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawPublication<'a> {
    #[serde(borrow)]
    id: Option<Cow<'a, str>>,
    #[serde(default)]
    pids: Option<Vec<RawPid<'a>>>,
    #[serde(borrow)]
    main_title: Option<Cow<'a, str>>,
    #[serde(borrow)]
    title: Option<Cow<'a, str>>,
    #[serde(default)]
    authors: Option<Vec<RawAuthor<'a>>>,
    #[serde(default)]
    descriptions: Option<Vec<Option<Cow<'a, str>>>>,
    #[serde(borrow)]
    description: Option<Cow<'a, str>>,
    #[serde(borrow)]
    publication_date: Option<Cow<'a, str>>,
    #[serde(default)]
    container: Option<RawContainer<'a>>,
    #[serde(default)]
    language: Option<RawLanguage<'a>>,
}

#[derive(Deserialize)]
struct RawPid<'a> {
    #[serde(borrow)]
    scheme: Option<Cow<'a, str>>,
    #[serde(borrow)]
    value: Option<Cow<'a, str>>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawAuthor<'a> {
    #[serde(borrow)]
    full_name: Option<Cow<'a, str>>,
}

#[derive(Deserialize)]
struct RawContainer<'a> {
    #[serde(borrow)]
    name: Option<Cow<'a, str>>,
}

#[derive(Deserialize)]
struct RawLanguage<'a> {
    #[serde(borrow)]
    code: Option<Cow<'a, str>>,
    #[serde(borrow)]
    label: Option<Cow<'a, str>>,
}

fn owned(value: Option<Cow<'_, str>>) -> Option<String> {
    value.map(Cow::into_owned)
}

fn valid_id(value: &str) -> bool {
    !value.is_empty() && !value.contains(['\n', '\r'])
}

/// Flattens one publication record.
///
/// * doi: first `pids` entry whose scheme is `doi` (any case)
/// * title: `mainTitle`, else `title`
/// * authors: each author's `fullName`, joined with `"; "`
/// * description: first entry of `descriptions`, else `description`
/// * date: `publicationDate`, verbatim
/// * container: `container.name`
/// * language: `language.label`, else `language.code`
pub fn parse_publication(raw: &[u8]) -> PublicationOutcome {
    let record: RawPublication<'_> = match serde_json::from_slice(raw) {
        Ok(record) => record,
        Err(_) => return PublicationOutcome::Skip(SkipReason::MalformedJson),
    };
    let id = match record.id {
        None => return PublicationOutcome::Skip(SkipReason::MissingId),
        Some(id) if !valid_id(&id) => return PublicationOutcome::Skip(SkipReason::InvalidId),
        Some(id) => id.into_owned(),
    };

    let doi = record
        .pids
        .into_iter()
        .flatten()
        .find_map(|pid| match (pid.scheme, pid.value) {
            (Some(scheme), Some(value)) if scheme.eq_ignore_ascii_case("doi") => Some(value.into_owned()),
            _ => None,
        });
    let authors = record.authors.and_then(|authors| {
        let names: Vec<Cow<'_, str>> = authors.into_iter().filter_map(|a| a.full_name).collect();
        (!names.is_empty()).then(|| names.join(AUTHOR_SEPARATOR))
    });
    let description = match record.descriptions {
        Some(list) => list.into_iter().next().flatten().map(Cow::into_owned),
        None => None,
    }
    .or_else(|| owned(record.description));
    let language = record.language.and_then(|l| l.label.or(l.code)).map(Cow::into_owned);

    PublicationOutcome::Fragment(PublicationFragment {
        openaire_id: id,
        doi,
        title: owned(record.main_title.or(record.title)),
        authors,
        description,
        date: owned(record.publication_date),
        container: record.container.and_then(|c| owned(c.name)),
        language,
    })
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawRelation<'a> {
    #[serde(borrow)]
    source: Option<Cow<'a, str>>,
    #[serde(borrow)]
    target: Option<Cow<'a, str>>,
    #[serde(borrow)]
    rel_type: Option<RawRelType<'a>>,
}

#[derive(Deserialize)]
struct RawRelType<'a> {
    #[serde(borrow)]
    name: Option<Cow<'a, str>>,
    #[serde(borrow, rename = "type")]
    kind: Option<Cow<'a, str>>,
}

/// Keeps a relation only when `relType.name` is exactly `"Cites"`.
pub fn parse_relation(raw: &[u8]) -> RelationOutcome {
    let record: RawRelation<'_> = match serde_json::from_slice(raw) {
        Ok(record) => record,
        Err(_) => return RelationOutcome::Skip(SkipReason::MalformedJson),
    };
    let Some(RawRelType { name: Some(name), kind }) = record.rel_type else {
        return RelationOutcome::Skip(SkipReason::MissingRelType);
    };
    let citation_typed = kind.as_deref() == Some(CITATION_TYPE);
    if name != CITES {
        return RelationOutcome::NotCites { citation_typed };
    }
    let (Some(source), Some(target)) = (record.source, record.target) else {
        return RelationOutcome::Skip(SkipReason::MissingEndpoint);
    };
    match (
        OpenAireId::new(source.into_owned()),
        OpenAireId::new(target.into_owned()),
    ) {
        (Ok(source), Ok(target)) => RelationOutcome::Cites(RelationRecord {
            source,
            target,
            rel_type_name: name.into_owned(),
            rel_type_type: kind.map(Cow::into_owned).unwrap_or_default(),
        }),
        _ => RelationOutcome::Skip(SkipReason::InvalidEndpoint),
    }
}

/// Reads a whole part into memory. Test helper for small files only.
pub fn read_all_lines(path: &Path) -> Result<Vec<Vec<u8>>> {
    let mut stream = LineStream::open(path)?;
    let mut lines = Vec::new();
    while let Some((_, line)) = stream.next_line()? {
        lines.push(line.to_vec());
    }
    Ok(lines)
}

/// True when the file starts with the gzip magic bytes.
pub fn is_gzip(path: &Path) -> Result<bool> {
    let mut head = [0u8; 2];
    let mut file = File::open(path).at(path)?;
    let n = file.read(&mut head).at(path)?;
    Ok(n == 2 && head == GZIP_MAGIC)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::io::Write;

    pub(crate) const SAMPLE_RELATION: &str = r#"{
  "provenance": {
    "provenance": "Inferred by OpenAIRE",
    "trust": "0.9"
  },
  "relType": {
    "name": "Cites",
    "type": "citation"
  },
  "source": "doi_________::7e8d84fc096936557defb78d22cca97c",
  "sourceType": "product",
  "target": "dedup_wf_002::27d83ddfd6e54378d88445aa793d5cb8",
  "targetType": "product",
  "validated": false
}"#;

    fn gz(path: &Path, content: &[u8]) {
        let mut enc = GzEncoder::new(File::create(path).unwrap(), Compression::default());
        enc.write_all(content).unwrap();
        enc.finish().unwrap();
    }

    #[test]
    fn enumerates_sorted_layout() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        fs::create_dir_all(root.join("publication")).unwrap();
        fs::create_dir_all(root.join("relation")).unwrap();
        for name in ["part-1.json.gz", "part-0.json.gz"] {
            gz(&root.join("publication").join(name), b"");
        }
        gz(&root.join("relation/part-0.json.gz"), b"");
        fs::write(root.join("publication/_SUCCESS"), b"").unwrap();

        let layout = enumerate_dump(root, &LayoutConfig::default()).unwrap();
        assert_eq!(
            layout.publication_parts,
            vec![
                root.join("publication/part-0.json.gz"),
                root.join("publication/part-1.json.gz")
            ]
        );
        assert_eq!(layout.relation_parts, vec![root.join("relation/part-0.json.gz")]);
    }

    #[test]
    fn empty_and_missing_roots() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            enumerate_dump(dir.path(), &LayoutConfig::default()),
            Err(Error::EmptyLayout(_))
        ));
        assert!(matches!(
            enumerate_dump(&dir.path().join("nope"), &LayoutConfig::default()),
            Err(Error::RootNotFound(_))
        ));
    }

    #[test]
    fn streams_gzip_and_plain_alike() {
        let dir = tempfile::tempdir().unwrap();
        let body = b"{\"a\":1}\n{\"a\":2}\r\n{\"a\":3}";
        // extension deliberately misleading
        gz(&dir.path().join("part.txt"), body);
        fs::write(dir.path().join("part.json.gz"), body).unwrap();
        for name in ["part.txt", "part.json.gz"] {
            let path = dir.path().join(name);
            let mut stream = stream_lines(&path).unwrap();
            let mut seen = Vec::new();
            while let Some((i, line)) = stream.next_line().unwrap() {
                seen.push((i, line.to_vec()));
            }
            assert_eq!(
                seen,
                vec![
                    (0, b"{\"a\":1}".to_vec()),
                    (1, b"{\"a\":2}".to_vec()),
                    (2, b"{\"a\":3}".to_vec())
                ]
            );
            assert_eq!(stream.uncompressed_bytes(), body.len() as u64);
            assert_eq!(stream.is_compressed(), name == "part.txt");
        }
    }

    #[test]
    fn empty_gzip_is_empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.json.gz");
        gz(&path, b"");
        assert_eq!(count_lines(&path).unwrap(), 0);
    }

    #[test]
    fn corrupt_gzip_tail_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json.gz");
        let body: String = (0..2000).map(|i| format!("{{\"id\":\"x{i}\"}}\n")).collect();
        gz(&path, body.as_bytes());
        let mut bytes = fs::read(&path).unwrap();
        let len = bytes.len();
        bytes.truncate(len - 20);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(count_lines(&path), Err(Error::CorruptCompression { .. })));

        gz(&path, body.as_bytes());
        let mut bytes = fs::read(&path).unwrap();
        let len = bytes.len();
        for b in &mut bytes[len - 8..len - 4] {
            *b ^= 0xff;
        }
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(count_lines(&path), Err(Error::CorruptCompression { .. })));

        let mut bytes = fs::read(&path).unwrap();
        for b in bytes.iter_mut().skip(30).take(40) {
            *b ^= 0x5a;
        }
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(count_lines(&path), Err(Error::CorruptCompression { .. })));
    }

    #[test]
    fn publication_doi_from_pids() {
        let raw = br#"{"id":"X","pids":[{"scheme":"pmid","value":"1"},{"scheme":"DOI","value":"10.3931/e-rara-45685"},{"scheme":"doi","value":"second"}]}"#;
        let PublicationOutcome::Fragment(f) = parse_publication(raw) else {
            panic!()
        };
        assert_eq!(f.openaire_id, "X");
        assert_eq!(f.doi.as_deref(), Some("10.3931/e-rara-45685"));
    }

    #[test]
    fn publication_minimal_record() {
        let PublicationOutcome::Fragment(f) = parse_publication(br#"{"id":"X"}"#) else {
            panic!()
        };
        assert_eq!(
            f,
            PublicationFragment {
                openaire_id: "X".into(),
                ..Default::default()
            }
        );
    }

    #[test]
    fn publication_flattening() {
        let raw = br#"{"id":"X","mainTitle":"T","authors":[{"fullName":"A. Ada","rank":1},{"name":"no full"},{"fullName":"B. Boole"}],
            "descriptions":["first","second"],"publicationDate":"2019-02-30","container":{"name":"J. Graphs","issnPrinted":"1"},
            "language":{"code":"eng","label":"English"},"extra":{"nested":[1,2,3]}}"#;
        let PublicationOutcome::Fragment(f) = parse_publication(raw) else {
            panic!()
        };
        assert_eq!(f.authors.as_deref(), Some("A. Ada; B. Boole"));
        assert_eq!(f.title.as_deref(), Some("T"));
        assert_eq!(f.description.as_deref(), Some("first"));
        assert_eq!(f.date.as_deref(), Some("2019-02-30"));
        assert_eq!(f.container.as_deref(), Some("J. Graphs"));
        assert_eq!(f.language.as_deref(), Some("English"));
    }

    #[test]
    fn publication_skips() {
        assert_eq!(
            parse_publication(b"not json"),
            PublicationOutcome::Skip(SkipReason::MalformedJson)
        );
        assert_eq!(
            parse_publication(b""),
            PublicationOutcome::Skip(SkipReason::MalformedJson)
        );
        assert_eq!(
            parse_publication(b"[1]"),
            PublicationOutcome::Skip(SkipReason::MalformedJson)
        );
        assert_eq!(
            parse_publication(br#"{"title":"t"}"#),
            PublicationOutcome::Skip(SkipReason::MissingId)
        );
        assert_eq!(
            parse_publication(br#"{"id":""}"#),
            PublicationOutcome::Skip(SkipReason::InvalidId)
        );
    }

    #[test]
    fn relation_cites_from_dump_example() {
        match parse_relation(SAMPLE_RELATION.as_bytes()) {
            RelationOutcome::Cites(rel) => {
                assert_eq!(rel.source.as_str(), "doi_________::7e8d84fc096936557defb78d22cca97c");
                assert_eq!(rel.target.as_str(), "dedup_wf_002::27d83ddfd6e54378d88445aa793d5cb8");
                assert_eq!(rel.rel_type_type, "citation");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relation_filter_and_skips() {
        let other = SAMPLE_RELATION.replace("\"Cites\"", "\"IsSupplementedBy\"");
        assert_eq!(
            parse_relation(other.as_bytes()),
            RelationOutcome::NotCites { citation_typed: true }
        );
        let lower = SAMPLE_RELATION.replace("\"Cites\"", "\"cites\"");
        assert!(matches!(
            parse_relation(lower.as_bytes()),
            RelationOutcome::NotCites { .. }
        ));
        let no_target = SAMPLE_RELATION.replace("\"target\":", "\"torget\":");
        assert_eq!(
            parse_relation(no_target.as_bytes()),
            RelationOutcome::Skip(SkipReason::MissingEndpoint)
        );
        assert_eq!(parse_relation(b"{]"), RelationOutcome::Skip(SkipReason::MalformedJson));
        assert_eq!(
            parse_relation(br#"{"source":"a","target":"b"}"#),
            RelationOutcome::Skip(SkipReason::MissingRelType)
        );
    }
}
