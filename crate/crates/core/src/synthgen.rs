//! Deterministic generator of dump-shaped test data.
//!
//! Writes gzip JSON-lines part files under `publication/` and `relation/`
//! plus a `manifest.json` holding the ground truth: every publication's
//! field values, every relation, and the edges a correct pipeline must emit.
//! The same config always produces byte-identical files.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::ingest::{AUTHOR_SEPARATOR, CITATION_TYPE, CITES};

pub const PUBLICATION_DIR: &str = "publication";
pub const RELATION_DIR: &str = "relation";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Columns that can be configured to go missing.
pub const OPTIONAL_COLUMNS: [&str; 7] = [
    "doi",
    "title",
    "authors",
    "description",
    "date",
    "container",
    "language",
];

const ID_PREFIXES: [&str; 5] = [
    "doi_________",
    "dedup_wf_002",
    "od______2367",
    "pmid________",
    "arXiv_______",
];
const FOREIGN_PREFIXES: [&str; 2] = ["datacite____", "r3f5b9831893"];
const OTHER_RELATIONS: [(&str, &str); 4] = [
    ("IsSupplementedBy", "supplement"),
    ("IsPartOf", "partOf"),
    ("IsCitedBy", CITATION_TYPE),
    ("References", "citation_ref"),
];
const WORDS: [&str; 24] = [
    "graph",
    "citation",
    "network",
    "analysis",
    "dynamic",
    "temporal",
    "learning",
    "open",
    "science",
    "data",
    "model",
    "scale",
    "structure",
    "evolution",
    "knowledge",
    "metadata",
    "survey",
    "method",
    "large",
    "study",
    "über",
    "naïve",
    "réseau",
    "统计",
];
const SURNAMES: [&str; 12] = [
    "Ada",
    "Boole",
    "Curie",
    "Darwin",
    "Euler",
    "Faraday",
    "Gauss",
    "Hopper",
    "Ibn Sina",
    "Jansky",
    "Kovalevskaya",
    "Lovelace",
];
const CONTAINERS: [&str; 5] = [
    "Journal of Graph Studies",
    "Proceedings of the Open Data Conference",
    "Zenodo",
    "Scientometrics, Series B",
    "arXiv",
];
const LANGUAGES: [(&str, &str); 4] = [
    ("eng", "English"),
    ("deu", "German"),
    ("fra", "French"),
    ("und", "Undetermined"),
];
const AWKWARD: [&str; 5] = [
    ", with commas,",
    " \"quoted\" ",
    "\nsecond line",
    "\r\nwindows line",
    " 'single' , \"\" ",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_publications: usize,
    /// Relation lines, not counting extra malformed ones.
    pub n_relations: usize,
    pub cites_fraction: f64,
    /// Share of `Cites` relations with an endpoint outside the publication set.
    pub dangling_fraction: f64,
    /// Share of `Cites` relations repeating an earlier edge.
    pub duplicate_fraction: f64,
    /// Exact share of publications lacking each optional column.
    pub missing_field_rates: BTreeMap<String, f64>,
    /// Share of titles and descriptions containing commas, quotes or line breaks.
    pub awkward_text_fraction: f64,
    /// Extra malformed publication lines, as a share of `n_publications`.
    pub malformed_publication_fraction: f64,
    /// Extra malformed relation lines, as a share of `n_relations`.
    pub malformed_relation_fraction: f64,
    pub parts_per_folder: usize,
    /// Overrides `parts_per_folder` for relations.
    pub relation_parts: Option<usize>,
    pub compression_level: u32,
    pub description_words: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_publications: 100,
            n_relations: 400,
            cites_fraction: 0.6,
            dangling_fraction: 0.1,
            duplicate_fraction: 0.02,
            missing_field_rates: BTreeMap::new(),
            awkward_text_fraction: 0.1,
            malformed_publication_fraction: 0.0,
            malformed_relation_fraction: 0.0,
            parts_per_folder: 2,
            relation_parts: None,
            compression_level: 6,
            description_words: 30,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let probabilities = [
            ("citesFraction", self.cites_fraction),
            ("danglingFraction", self.dangling_fraction),
            ("duplicateFraction", self.duplicate_fraction),
            ("awkwardTextFraction", self.awkward_text_fraction),
            ("malformedPublicationFraction", self.malformed_publication_fraction),
            ("malformedRelationFraction", self.malformed_relation_fraction),
        ];
        for (name, p) in probabilities
            .into_iter()
            .chain(self.missing_field_rates.iter().map(|(k, v)| (k.as_str(), *v)))
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is not a probability")));
            }
        }
        if let Some(column) = self
            .missing_field_rates
            .keys()
            .find(|k| !OPTIONAL_COLUMNS.contains(&k.as_str()))
        {
            return Err(Error::InvalidConfig(format!(
                "unknown column {column:?} in missingFieldRates"
            )));
        }
        if self.parts_per_folder == 0 || self.relation_parts == Some(0) {
            return Err(Error::InvalidConfig("part counts must be at least 1".into()));
        }
        if self.compression_level > 9 {
            return Err(Error::InvalidConfig("compressionLevel must be 0..=9".into()));
        }
        Ok(())
    }

    fn relation_part_count(&self) -> usize {
        self.relation_parts.unwrap_or(self.parts_per_folder)
    }
}

/// Ground truth for one generated publication line.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestPublication {
    /// False for deliberately malformed lines; their other fields are empty.
    pub valid: bool,
    pub openaire_id: String,
    pub doi: Option<String>,
    pub title: Option<String>,
    pub authors: Vec<String>,
    pub description: Option<String>,
    pub date: Option<String>,
    pub container: Option<String>,
    pub language: Option<String>,
}

impl ManifestPublication {
    /// Authors as the flattened column should read.
    pub fn authors_flat(&self) -> Option<String> {
        (!self.authors.is_empty()).then(|| self.authors.join(AUTHOR_SEPARATOR))
    }
}

/// Ground truth for one generated relation line.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestRelation {
    pub valid: bool,
    pub source: String,
    pub target: String,
    pub rel_type_name: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub config: SynthConfig,
    /// Paths relative to the dump root, in enumeration order.
    pub publication_parts: Vec<String>,
    pub relation_parts: Vec<String>,
    /// Records per part file, same order as the part lists.
    pub publication_part_lines: Vec<u64>,
    pub relation_part_lines: Vec<u64>,
    /// Every publication line in stream order.
    pub publications: Vec<ManifestPublication>,
    /// Every relation line in stream order.
    pub relations: Vec<ManifestRelation>,
    /// `(source, target)` of each valid `Cites` relation whose endpoints are
    /// both publications, in stream order, duplicates included.
    pub expected_edges: Vec<(String, String)>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let bytes = fs::read(path).at(path)?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn cites_count(&self) -> usize {
        self.relations
            .iter()
            .filter(|r| r.valid && r.rel_type_name == CITES)
            .count()
    }
}

/// Receives ground truth as it is generated.
pub trait ManifestSink {
    fn publication(&mut self, publication: ManifestPublication);
    fn relation(&mut self, relation: ManifestRelation);
}

/// Discards ground truth; for dumps too large to describe in memory.
pub struct NullSink;

impl ManifestSink for NullSink {
    fn publication(&mut self, _: ManifestPublication) {}
    fn relation(&mut self, _: ManifestRelation) {}
}

impl ManifestSink for Manifest {
    fn publication(&mut self, publication: ManifestPublication) {
        self.publications.push(publication);
    }

    fn relation(&mut self, relation: ManifestRelation) {
        self.relations.push(relation);
    }
}

/// Shape of a generated dump.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratedLayout {
    pub publication_parts: Vec<PathBuf>,
    pub relation_parts: Vec<PathBuf>,
    pub publication_part_lines: Vec<u64>,
    pub relation_part_lines: Vec<u64>,
}

/// Generates a dump into `out_dir` and writes `manifest.json` beside it.
pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    let mut manifest = Manifest {
        config: config.clone(),
        ..Manifest::default()
    };
    let layout = generate_with(config, out_dir, &mut manifest)?;
    let relative = |parts: &[PathBuf]| -> Vec<String> {
        parts
            .iter()
            .map(|p| {
                p.strip_prefix(out_dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .replace('\\', "/")
            })
            .collect()
    };
    manifest.publication_parts = relative(&layout.publication_parts);
    manifest.relation_parts = relative(&layout.relation_parts);
    manifest.publication_part_lines = layout.publication_part_lines;
    manifest.relation_part_lines = layout.relation_part_lines;
    manifest.expected_edges = expected_edges(&manifest.publications, &manifest.relations);

    let path = out_dir.join(MANIFEST_FILE);
    let mut w = BufWriter::new(File::create(&path).at(&path)?);
    serde_json::to_writer(&mut w, &manifest)?;
    w.write_all(b"\n").at(&path)?;
    w.flush().at(&path)?;
    Ok(manifest)
}

/// Valid `Cites` relations whose endpoints are both valid publications.
pub fn expected_edges(publications: &[ManifestPublication], relations: &[ManifestRelation]) -> Vec<(String, String)> {
    let ids: HashSet<&str> = publications
        .iter()
        .filter(|p| p.valid)
        .map(|p| p.openaire_id.as_str())
        .collect();
    relations
        .iter()
        .filter(|r| r.valid && r.rel_type_name == CITES)
        .filter(|r| ids.contains(r.source.as_str()) && ids.contains(r.target.as_str()))
        .map(|r| (r.source.clone(), r.target.clone()))
        .collect()
}

/// Generates a dump, streaming ground truth into `sink`.
pub fn generate_with(config: &SynthConfig, out_dir: &Path, sink: &mut dyn ManifestSink) -> Result<GeneratedLayout> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let level = Compression::new(config.compression_level);

    let n = config.n_publications;
    let mut taken = HashSet::with_capacity(n);
    let ids: Vec<String> = (0..n).map(|_| fresh_id(&mut rng, &ID_PREFIXES, &mut taken)).collect();

    let mut missing: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    for column in OPTIONAL_COLUMNS {
        let rate = config.missing_field_rates.get(column).copied().unwrap_or(0.0);
        let k = ((rate * n as f64).round() as usize).min(n);
        let mut mask = vec![false; n];
        for i in sample(&mut rng, n, k) {
            mask[i] = true;
        }
        missing.insert(column, mask);
    }
    let malformed_pubs = ((config.malformed_publication_fraction * n as f64).round() as usize).min(n);
    let mut malformed_after = vec![false; n];
    for i in sample(&mut rng, n, malformed_pubs) {
        malformed_after[i] = true;
    }

    let mut layout = GeneratedLayout::default();

    let pub_dir = out_dir.join(PUBLICATION_DIR);
    fs::create_dir_all(&pub_dir).at(&pub_dir)?;
    let mut parts = PartSet::new(pub_dir, config.parts_per_folder, n, level);
    for (i, id) in ids.iter().enumerate() {
        parts.select(i)?;
        let is_missing = |column: &str| missing[column][i];
        let truth = publication_truth(&mut rng, id, &is_missing, config);
        let line = publication_json(&mut rng, &truth)?;
        parts.write_line(&line)?;
        sink.publication(truth);
        if malformed_after[i] {
            let line = format!("{{\"id\":\"{id}-broken\",\"mainTitle\":\"unterminated");
            parts.write_line(line.as_bytes())?;
            sink.publication(ManifestPublication::default());
        }
    }
    (layout.publication_parts, layout.publication_part_lines) = parts.finish()?;

    let rel_dir = out_dir.join(RELATION_DIR);
    fs::create_dir_all(&rel_dir).at(&rel_dir)?;
    let m = config.n_relations;
    let mut parts = PartSet::new(rel_dir, config.relation_part_count(), m, level);
    let mut recent: Vec<(usize, usize)> = Vec::new();
    let mut recent_next = 0;
    let mut line = Vec::with_capacity(512);
    for i in 0..m {
        parts.select(i)?;
        let relation = if rng.random::<f64>() < config.cites_fraction {
            let duplicate = !recent.is_empty() && rng.random::<f64>() < config.duplicate_fraction;
            if duplicate {
                let (s, t) = recent[rng.random_range(0..recent.len())];
                (ids[s].clone(), ids[t].clone(), CITES, CITATION_TYPE)
            } else if n == 0 || rng.random::<f64>() < config.dangling_fraction {
                let side = if n == 0 { 2 } else { rng.random_range(0..3) };
                let (s, t) = match side {
                    0 => (
                        fresh_id(&mut rng, &FOREIGN_PREFIXES, &mut taken),
                        ids[rng.random_range(0..n)].clone(),
                    ),
                    1 => (
                        ids[rng.random_range(0..n)].clone(),
                        fresh_id(&mut rng, &FOREIGN_PREFIXES, &mut taken),
                    ),
                    _ => (
                        fresh_id(&mut rng, &FOREIGN_PREFIXES, &mut taken),
                        fresh_id(&mut rng, &FOREIGN_PREFIXES, &mut taken),
                    ),
                };
                (s, t, CITES, CITATION_TYPE)
            } else {
                let (s, t) = (rng.random_range(0..n), rng.random_range(0..n));
                if recent.len() < 1024 {
                    recent.push((s, t));
                } else {
                    recent[recent_next] = (s, t);
                    recent_next = (recent_next + 1) % 1024;
                }
                (ids[s].clone(), ids[t].clone(), CITES, CITATION_TYPE)
            }
        } else {
            let (name, kind) = OTHER_RELATIONS[rng.random_range(0..OTHER_RELATIONS.len())];
            let s = if n > 0 {
                ids[rng.random_range(0..n)].clone()
            } else {
                fresh_id(&mut rng, &FOREIGN_PREFIXES, &mut taken)
            };
            let t = fresh_id(&mut rng, &FOREIGN_PREFIXES, &mut taken);
            (s, t, name, kind)
        };
        let (source, target, name, kind) = relation;
        line.clear();
        serde_json::to_writer(
            &mut line,
            &RelationJson {
                provenance: ProvenanceJson {
                    provenance: if rng.random::<bool>() {
                        "Inferred by OpenAIRE"
                    } else {
                        "Harvested"
                    },
                    trust: "0.9",
                },
                rel_type: RelTypeJson { name, kind },
                source: &source,
                source_type: "product",
                target: &target,
                target_type: "product",
                validated: false,
            },
        )?;
        parts.write_line(&line)?;
        sink.relation(ManifestRelation {
            valid: true,
            source,
            target,
            rel_type_name: name.to_string(),
        });
        if rng.random::<f64>() < config.malformed_relation_fraction {
            parts.write_line(br#"{"relType":{"name":"Cites","type":"citation"},"source":"#)?;
            sink.relation(ManifestRelation::default());
        }
    }
    (layout.relation_parts, layout.relation_part_lines) = parts.finish()?;
    Ok(layout)
}

fn fresh_id(rng: &mut ChaCha8Rng, prefixes: &[&str], taken: &mut HashSet<String>) -> String {
    loop {
        let prefix = prefixes[rng.random_range(0..prefixes.len())];
        let id = format!("{prefix}::{:032x}", rng.random::<u128>());
        // foreign ids are not remembered; 128 random bits do not collide in practice
        if prefixes == FOREIGN_PREFIXES || taken.insert(id.clone()) {
            return id;
        }
    }
}

fn words(rng: &mut ChaCha8Rng, count: usize, awkward: bool) -> String {
    let mut text = String::new();
    for i in 0..count.max(1) {
        if i > 0 {
            text.push(' ');
        }
        text.push_str(WORDS[rng.random_range(0..WORDS.len())]);
    }
    if awkward {
        let at = rng.random_range(0..AWKWARD.len());
        text.push_str(AWKWARD[at]);
        text.push_str(WORDS[rng.random_range(0..WORDS.len())]);
    }
    if let Some(first) = text.get(..1) {
        let upper = first.to_uppercase();
        text.replace_range(..1, &upper);
    }
    text
}

fn publication_truth(
    rng: &mut ChaCha8Rng,
    id: &str,
    missing: &dyn Fn(&str) -> bool,
    config: &SynthConfig,
) -> ManifestPublication {
    let awkward = rng.random::<f64>() < config.awkward_text_fraction;
    let title_words = rng.random_range(3..9);
    let title = words(rng, title_words, awkward);
    let description = words(rng, config.description_words, awkward);
    let n_authors = rng.random_range(1..5);
    let authors: Vec<String> = (0..n_authors)
        .map(|_| {
            let surname = SURNAMES[rng.random_range(0..SURNAMES.len())];
            let initial = (b'A' + rng.random_range(0..26u8)) as char;
            if rng.random_range(0..4) == 0 {
                format!("{surname}, {initial}.")
            } else {
                format!("{initial}. {surname}")
            }
        })
        .collect();
    let doi = format!(
        "10.{}/{}-{}",
        rng.random_range(1000..99999),
        WORDS[rng.random_range(0..8)],
        rng.random_range(0..100000)
    );
    let date = format!(
        "{}-{:02}-{:02}",
        rng.random_range(1950..2026),
        rng.random_range(1..13),
        rng.random_range(1..29)
    );
    let container = CONTAINERS[rng.random_range(0..CONTAINERS.len())].to_string();
    let language = LANGUAGES[rng.random_range(0..LANGUAGES.len())].1.to_string();

    let keep = |column: &str, value: String| (!missing(column)).then_some(value);
    ManifestPublication {
        valid: true,
        openaire_id: id.to_string(),
        doi: keep("doi", doi),
        title: keep("title", title),
        authors: if missing("authors") { Vec::new() } else { authors },
        description: keep("description", description),
        date: keep("date", date),
        container: keep("container", container),
        language: keep("language", language),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct PublicationJson<'a> {
    id: &'a str,
    #[serde(rename = "type")]
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    main_title: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    authors: Option<Vec<AuthorJson<'a>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<LanguageJson<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    descriptions: Option<Vec<&'a str>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    publication_date: Option<&'a str>,
    publisher: &'a str,
    pids: Vec<PidJson<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    container: Option<ContainerJson<'a>>,
    original_ids: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AuthorJson<'a> {
    full_name: &'a str,
    rank: usize,
}

#[derive(Serialize)]
struct LanguageJson<'a> {
    code: &'a str,
    label: &'a str,
}

#[derive(Serialize)]
struct PidJson<'a> {
    scheme: &'a str,
    value: &'a str,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ContainerJson<'a> {
    name: &'a str,
    issn_printed: &'a str,
}

fn publication_json(rng: &mut ChaCha8Rng, p: &ManifestPublication) -> Result<Vec<u8>> {
    let pmid = format!("{}", rng.random_range(1_000_000..40_000_000));
    let mut pids = Vec::new();
    if rng.random::<bool>() {
        pids.push(PidJson {
            scheme: "pmid",
            value: &pmid,
        });
    }
    if let Some(doi) = &p.doi {
        pids.push(PidJson {
            scheme: "doi",
            value: doi,
        });
    }
    let second_description = "A later, secondary abstract.";
    let language = p.language.as_deref().map(|label| LanguageJson {
        code: LANGUAGES.iter().find(|(_, l)| *l == label).map_or("und", |(c, _)| c),
        label,
    });
    let authors = (!p.authors.is_empty()).then(|| {
        p.authors
            .iter()
            .enumerate()
            .map(|(i, a)| AuthorJson {
                full_name: a,
                rank: i + 1,
            })
            .collect()
    });
    let doc = PublicationJson {
        id: &p.openaire_id,
        kind: "publication",
        main_title: p.title.as_deref(),
        authors,
        language,
        descriptions: p.description.as_deref().map(|d| vec![d, second_description]),
        publication_date: p.date.as_deref(),
        publisher: "Synthetic Press",
        pids,
        container: p.container.as_deref().map(|name| ContainerJson {
            name,
            issn_printed: "1234-5678",
        }),
        original_ids: vec![format!("oai:synthetic:{pmid}")],
    };
    Ok(serde_json::to_vec(&doc)?)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RelationJson<'a> {
    provenance: ProvenanceJson<'a>,
    rel_type: RelTypeJson<'a>,
    source: &'a str,
    source_type: &'a str,
    target: &'a str,
    target_type: &'a str,
    validated: bool,
}

#[derive(Serialize)]
struct ProvenanceJson<'a> {
    provenance: &'a str,
    trust: &'a str,
}

#[derive(Serialize)]
struct RelTypeJson<'a> {
    name: &'a str,
    #[serde(rename = "type")]
    kind: &'a str,
}

/// Sequentially filled gzip part files; record `i` of `total` lands in part
/// `i * parts / total`.
struct PartSet {
    dir: PathBuf,
    parts: usize,
    total: usize,
    level: Compression,
    current: Option<(usize, GzEncoder<BufWriter<File>>)>,
    paths: Vec<PathBuf>,
    lines: Vec<u64>,
}

impl PartSet {
    fn new(dir: PathBuf, parts: usize, total: usize, level: Compression) -> Self {
        PartSet {
            dir,
            parts,
            total,
            level,
            current: None,
            paths: Vec::new(),
            lines: Vec::new(),
        }
    }

    fn open_next(&mut self) -> Result<()> {
        self.close_current()?;
        let index = self.paths.len();
        let path = self.dir.join(format!("part-{index:05}.json.gz"));
        let file = File::create(&path).at(&path)?;
        self.current = Some((index, GzEncoder::new(BufWriter::new(file), self.level)));
        self.paths.push(path);
        self.lines.push(0);
        Ok(())
    }

    fn close_current(&mut self) -> Result<()> {
        if let Some((index, enc)) = self.current.take() {
            let path = &self.paths[index];
            enc.finish().at(path)?.flush().at(path)?;
        }
        Ok(())
    }

    fn select(&mut self, record: usize) -> Result<()> {
        let target = record * self.parts / self.total.max(1);
        while self.current.as_ref().is_none_or(|(i, _)| *i < target) {
            self.open_next()?;
        }
        Ok(())
    }

    fn write_line(&mut self, line: &[u8]) -> Result<()> {
        let (index, enc) = self.current.as_mut().expect("select before write");
        let path = &self.paths[*index];
        enc.write_all(line).at(path)?;
        enc.write_all(b"\n").at(path)?;
        self.lines[*index] += 1;
        Ok(())
    }

    fn finish(mut self) -> Result<(Vec<PathBuf>, Vec<u64>)> {
        while self.paths.len() < self.parts {
            self.open_next()?;
        }
        self.close_current()?;
        Ok((self.paths, self.lines))
    }
}
