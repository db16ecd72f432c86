mod common;

use std::fs;

use citedistill::emit::{CITATIONS_FILE, IDMAP_FILE, PUBLICATIONS_FILE, PUBLICATIONS_LARGE_FILE, REPORT_FILE};
use citedistill::synthgen::SynthConfig;
use citedistill::validate::verify_counts;
use citedistill::{distill, DistillOptions, Error, PublicationsFormat};
use common::*;

fn seed7() -> SynthConfig {
    SynthConfig {
        seed: 7,
        n_publications: 10_000,
        n_relations: 50_000,
        cites_fraction: 0.6,
        dangling_fraction: 0.1,
        duplicate_fraction: 0.02,
        parts_per_folder: 4,
        relation_parts: Some(3),
        description_words: 8,
        ..SynthConfig::default()
    }
}

#[test]
fn reproduces_manifest_edges() {
    let run = generate_and_distill(&seed7(), |_| {});
    let report = &run.outcome.report;
    assert!(
        run.outcome.validation.passed(),
        "{:?}",
        run.outcome.validation.violations
    );

    let expected = oracle_edges(&run.manifest);
    assert_eq!(expected.len(), run.manifest.expected_edges.len());
    assert_eq!(read_edges(&run.out().join(CITATIONS_FILE), false), expected);
    assert_eq!(report.edges_emitted, expected.len() as u64);
    assert_eq!(report.publications_kept, 10_000);
    assert_eq!(report.relations_cites as usize, run.manifest.cites_count());
    assert_eq!(verify_counts(report), vec![]);

    let degrees = brute_in_degree(&expected, 10_000);
    let large = read_records(&run.out().join(PUBLICATIONS_LARGE_FILE), true);
    assert_eq!(large.len(), 10_000);
    for (i, row) in large.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i);
        assert_eq!(row[8].parse::<u64>().unwrap(), degrees[i]);
    }
}

#[test]
fn dedup_keeps_first_occurrences() {
    let config = SynthConfig {
        seed: 11,
        duplicate_fraction: 0.05,
        n_publications: 300,
        n_relations: 3000,
        ..seed7()
    };
    let run = generate_and_distill(&config, |o| o.settings.dedup_edges = true);
    assert!(
        run.outcome.validation.passed(),
        "{:?}",
        run.outcome.validation.violations
    );
    let all = oracle_edges(&run.manifest);
    let distinct = dedup_first(&all);
    assert!(distinct.len() < all.len());
    assert_eq!(read_edges(&run.out().join(CITATIONS_FILE), false), distinct);
    let report = &run.outcome.report;
    assert_eq!(report.edges_duplicate as usize, all.len() - distinct.len());
    assert_eq!(
        report.edges_emitted + report.edges_dangling_dropped + report.edges_duplicate,
        report.relations_cites
    );
}

#[test]
fn tiny_sort_chunk_spills_without_changing_output() {
    let config = SynthConfig {
        seed: 5,
        n_publications: 200,
        n_relations: 4000,
        duplicate_fraction: 0.05,
        ..seed7()
    };
    let a = generate_and_distill(&config, |o| o.settings.dedup_edges = true);
    let b = generate_and_distill(&config, |o| {
        o.settings.dedup_edges = true;
        o.sort_chunk = 17;
    });
    for name in [CITATIONS_FILE, PUBLICATIONS_FILE, REPORT_FILE] {
        assert_eq!(
            fs::read(a.out().join(name)).unwrap(),
            fs::read(b.out().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn malformed_lines_are_counted_not_fatal() {
    let config = SynthConfig {
        seed: 3,
        n_publications: 500,
        n_relations: 2000,
        malformed_publication_fraction: 0.04,
        malformed_relation_fraction: 0.03,
        ..seed7()
    };
    let run = generate_and_distill(&config, |_| {});
    let report = &run.outcome.report;
    assert!(
        run.outcome.validation.passed(),
        "{:?}",
        run.outcome.validation.violations
    );
    let malformed_pubs = run.manifest.publications.iter().filter(|p| !p.valid).count() as u64;
    let malformed_rels = run.manifest.relations.iter().filter(|r| !r.valid).count() as u64;
    assert_eq!(malformed_pubs, 20);
    assert_eq!(report.publications_skipped_malformed, malformed_pubs);
    assert_eq!(report.relations_malformed, malformed_rels);
    assert_eq!(report.publications_kept, 500);
    assert_eq!(
        read_edges(&run.out().join(CITATIONS_FILE), false),
        oracle_edges(&run.manifest)
    );
}

#[test]
fn plain_text_parts_and_duplicate_publication_ids() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump");
    fs::create_dir_all(dump.join("publication")).unwrap();
    fs::create_dir_all(dump.join("relation")).unwrap();
    fs::write(
        dump.join("publication/part-0"),
        concat!(
            "{\"id\":\"a\",\"pids\":[{\"scheme\":\"doi\",\"value\":\"10.1/a\"}]}\n",
            "{\"id\":\"b\"}\n",
            "{\"id\":\"a\",\"mainTitle\":\"again\"}\n",
            "garbage\n",
        ),
    )
    .unwrap();
    fs::write(
        dump.join("relation/part-0"),
        concat!(
            "{\"relType\":{\"name\":\"Cites\",\"type\":\"citation\"},\"source\":\"b\",\"target\":\"a\"}\n",
            "{\"relType\":{\"name\":\"Cites\",\"type\":\"citation\"},\"source\":\"a\",\"target\":\"a\"}\n",
            "{\"relType\":{\"name\":\"Cites\",\"type\":\"citation\"},\"source\":\"x\",\"target\":\"a\"}\n",
            "{\"relType\":{\"name\":\"IsPartOf\",\"type\":\"partOf\"},\"source\":\"a\",\"target\":\"b\"}\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("out");
    let mut options = DistillOptions::new(&dump, &out);
    options.settings.headers = true;
    options.settings.publications_format = PublicationsFormat::WithCitations;
    let outcome = distill(&options).unwrap();
    assert!(outcome.validation.passed(), "{:?}", outcome.validation.violations);
    let r = &outcome.report;
    assert_eq!((r.publications_seen, r.publications_kept), (4, 2));
    assert_eq!(
        (r.publications_skipped_duplicate_id, r.publications_skipped_malformed),
        (1, 1)
    );
    assert_eq!((r.edges_emitted, r.edges_self_loop, r.edges_dangling_source), (2, 1, 1));
    assert_eq!(
        fs::read_to_string(out.join(CITATIONS_FILE)).unwrap(),
        "source,target\n1,0\n0,0\n"
    );
    assert_eq!(
        fs::read_to_string(out.join(PUBLICATIONS_FILE)).unwrap(),
        "nodeId,doi,citations\n0,10.1/a,2\n1,,0\n"
    );
    assert_eq!(
        fs::read_to_string(out.join(IDMAP_FILE)).unwrap(),
        "openaireId,nodeId\na,0\nb,1\n"
    );
}

#[test]
fn skip_large_removes_stale_table() {
    let config = SynthConfig {
        n_publications: 50,
        n_relations: 100,
        ..seed7()
    };
    let run = generate_and_distill(&config, |_| {});
    assert!(run.out().join(PUBLICATIONS_LARGE_FILE).exists());
    let mut options = DistillOptions::new(run.dump(), run.out());
    options.settings.skip_large = true;
    let outcome = distill(&options).unwrap();
    assert!(outcome.validation.passed(), "{:?}", outcome.validation.violations);
    assert!(!run.out().join(PUBLICATIONS_LARGE_FILE).exists());
    let leftovers: Vec<_> = fs::read_dir(run.out())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn empty_layout_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let err = distill(&DistillOptions::new(dir.path(), &out)).unwrap_err();
    assert!(matches!(err, Error::EmptyLayout(_)));
    assert!(!out.exists());
}

#[test]
fn scratch_dir_override_is_cleaned_up() {
    let scratch = tempfile::tempdir().unwrap();
    let config = SynthConfig {
        n_publications: 40,
        n_relations: 80,
        ..seed7()
    };
    let run = generate_and_distill(&config, |o| o.scratch_dir = Some(scratch.path().to_path_buf()));
    assert!(run.outcome.validation.passed());
    assert_eq!(fs::read_dir(scratch.path()).unwrap().count(), 0);
}

#[test]
fn missing_descriptions_are_exactly_measured() {
    let mut config = SynthConfig {
        seed: 21,
        n_publications: 1000,
        n_relations: 10,
        ..seed7()
    };
    config.missing_field_rates.insert("description".into(), 0.2);
    let run = generate_and_distill(&config, |_| {});
    let completeness = run.outcome.validation.completeness.as_ref().unwrap();
    assert_eq!(completeness.column("description").unwrap().ratio, Some(0.8));
    assert_eq!(completeness.column("title").unwrap().ratio, Some(1.0));
    assert_eq!(run.outcome.report.per_column_null_counts["description"], 200);
}
