use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use citedistill::ingest::LayoutConfig;
use citedistill::model::{PublicationsFormat, RunSettings};
use citedistill::pipeline::{distill, DistillOptions};
use citedistill::spill::DEFAULT_CHUNK;
use citedistill::synthgen::{self, SynthConfig};
use citedistill::validate::{validate_outputs, ValidateOptions, Violation};

const EXIT_VALIDATION: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "citedistill",
    version,
    about = "Distill knowledge-graph dumps into compact citation CSVs"
)]
struct Cli {
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Minimal,
    WithCitations,
}

#[derive(clap::Args)]
struct LayoutArgs {
    /// Subdirectories whose name contains this hold publication parts.
    #[arg(long, default_value = "publication")]
    publication_pattern: String,
    /// Subdirectories whose name contains this hold relation parts.
    #[arg(long, default_value = "relation")]
    relation_pattern: String,
}

impl LayoutArgs {
    fn config(&self) -> LayoutConfig {
        LayoutConfig {
            publication_pattern: self.publication_pattern.clone(),
            relation_pattern: self.relation_pattern.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Turn a dump into citations.csv, publications.csv, publications_large.csv, idmap.csv and report.json.
    Distill {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Drop exact duplicate edges, keeping the first occurrence.
        #[arg(long)]
        dedup_edges: bool,
        /// Write header rows to citations.csv and publications.csv.
        #[arg(long)]
        headers: bool,
        #[arg(long, value_enum, default_value = "minimal")]
        publications_format: FormatArg,
        /// Worker threads (0 = one per CPU).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Record peak resident memory in report.json.
        #[arg(long)]
        memory_report: bool,
        /// Do not write publications_large.csv.
        #[arg(long)]
        skip_large: bool,
        /// Edge keys held in memory while sorting for duplicates.
        #[arg(long, default_value_t = DEFAULT_CHUNK)]
        sort_chunk: usize,
        /// Flag columns of publications_large.csv whose completeness is below this.
        #[arg(long, default_value_t = 0.0)]
        completeness_threshold: f64,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Write a synthetic dump and its ground-truth manifest.
    Generate {
        #[arg(long)]
        output: PathBuf,
        /// JSON config file; flags below override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        publications: Option<usize>,
        #[arg(long)]
        relations: Option<usize>,
        #[arg(long)]
        cites_fraction: Option<f64>,
        #[arg(long)]
        dangling_fraction: Option<f64>,
        #[arg(long)]
        duplicate_fraction: Option<f64>,
        #[arg(long)]
        parts_per_folder: Option<usize>,
        #[arg(long)]
        relation_parts: Option<usize>,
        /// Missing rate for a column, as COLUMN=RATE. Repeatable.
        #[arg(long = "missing", value_parser = parse_missing)]
        missing: Vec<(String, f64)>,
        /// Skip manifest.json (for dumps too large to describe in memory).
        #[arg(long)]
        no_manifest: bool,
    },
    /// Check an existing distill output directory.
    Validate {
        #[arg(long)]
        output: PathBuf,
        /// Dump the outputs came from; its lines are recounted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        completeness_threshold: f64,
        #[command(flatten)]
        layout: LayoutArgs,
    },
}

fn parse_missing(s: &str) -> Result<(String, f64), String> {
    let (column, rate) = s.split_once('=').ok_or("expected COLUMN=RATE")?;
    let rate = rate.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((column.to_string(), rate))
}

fn print_violations(violations: &[Violation]) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for v in violations {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Distill {
            input,
            output,
            dedup_edges,
            headers,
            publications_format,
            threads,
            memory_report,
            skip_large,
            sort_chunk,
            completeness_threshold,
            layout,
        } => {
            let mut options = DistillOptions::new(input, output);
            options.layout = layout.config();
            options.settings = RunSettings {
                dedup_edges,
                headers,
                publications_format: match publications_format {
                    FormatArg::Minimal => PublicationsFormat::Minimal,
                    FormatArg::WithCitations => PublicationsFormat::WithCitations,
                },
                skip_large,
            };
            options.threads = threads;
            options.memory_report = memory_report;
            options.sort_chunk = sort_chunk;
            options.completeness_threshold = completeness_threshold;
            let outcome = distill(&options)?;
            let r = &outcome.report;
            log::info!(
                "{} publications kept, {} edges emitted, {} dangling dropped, {} duplicates",
                r.publications_kept,
                r.edges_emitted,
                r.edges_dangling_dropped,
                r.edges_duplicate
            );
            if let Some(peak) = r.peak_rss_bytes {
                log::info!("peak resident memory {:.1} MiB", peak as f64 / (1 << 20) as f64);
            }
            print_violations(&outcome.validation.violations)?;
            Ok(verdict(outcome.validation.passed()))
        }
        Command::Generate {
            output,
            config,
            seed,
            publications,
            relations,
            cites_fraction,
            dangling_fraction,
            duplicate_fraction,
            parts_per_folder,
            relation_parts,
            missing,
            no_manifest,
        } => {
            let mut c = match config {
                Some(path) => serde_json::from_slice(&std::fs::read(&path)?)?,
                None => SynthConfig::default(),
            };
            c.seed = seed.unwrap_or(c.seed);
            c.n_publications = publications.unwrap_or(c.n_publications);
            c.n_relations = relations.unwrap_or(c.n_relations);
            c.cites_fraction = cites_fraction.unwrap_or(c.cites_fraction);
            c.dangling_fraction = dangling_fraction.unwrap_or(c.dangling_fraction);
            c.duplicate_fraction = duplicate_fraction.unwrap_or(c.duplicate_fraction);
            c.parts_per_folder = parts_per_folder.unwrap_or(c.parts_per_folder);
            c.relation_parts = relation_parts.or(c.relation_parts);
            c.missing_field_rates.extend(missing);
            std::fs::create_dir_all(&output)?;
            if no_manifest {
                synthgen::generate_with(&c, &output, &mut synthgen::NullSink)?;
            } else {
                let manifest = synthgen::generate(&c, &output)?;
                log::info!(
                    "{} publications, {} relations, {} expected edges",
                    manifest.publications.len(),
                    manifest.relations.len(),
                    manifest.expected_edges.len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            output,
            input,
            completeness_threshold,
            layout,
        } => {
            let report = validate_outputs(
                &output,
                &ValidateOptions {
                    input,
                    layout: layout.config(),
                    completeness_threshold,
                },
            )?;
            if let Some(completeness) = &report.completeness {
                for c in &completeness.columns {
                    log::info!("{:<12} {}/{}", c.column, c.non_null, c.total);
                }
            }
            print_violations(&report.violations)?;
            Ok(verdict(report.passed()))
        }
    }
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
