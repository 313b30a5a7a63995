//! The `hyperkb` command line. [`run_with`] is the whole program minus the
//! process boundary, so it can be driven from tests.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::bench::run_benchmark;
use crate::eval::{evaluate, resolve, FunctionRegistry, OutputFormat};
use crate::hyql::{self, Query};
use crate::ingest::{generate, GeneratorSpec};
use crate::mlschema::{bootstrap_dataset_vocabulary, extend_domain, OntologyManifest, TABLE1_CONCEPTS};
use crate::model::instance_of_id;
use crate::store::{KbState, KnowledgeBase};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_EVAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "hyperkb", version, about = "Hypergraph knowledge base for ML workflows")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Create a journal holding the ML Schema and dataset vocabularies.
    Bootstrap {
        #[arg(long)]
        out: PathBuf,
        /// Domain extension manifest (JSON); the context is named after the file stem.
        #[arg(long)]
        extend: Vec<PathBuf>,
    },
    /// Write a synthetic dataset and `<out>.manifest.json`.
    Generate {
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bulk-load an HKJSONL file into a journal.
    Load {
        #[arg(long, env = "HYPERKB_KB")]
        kb: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Evaluate one query.
    Query {
        #[arg(long, env = "HYPERKB_KB")]
        kb: PathBuf,
        #[arg(long, conflicts_with = "text")]
        file: Option<PathBuf>,
        #[arg(long, default_value = "text")]
        format: OutputFormat,
        text: Option<String>,
    },
    /// Read queries from standard input, one per line; `\` continues a line.
    Repl {
        #[arg(long, env = "HYPERKB_KB")]
        kb: PathBuf,
        #[arg(long, default_value = "text")]
        format: OutputFormat,
    },
    /// Time dataset loading and every `*.hyql` query in a directory.
    /// `--kb` is the base store (vocabulary only) the dataset is loaded into.
    Bench {
        #[arg(long, env = "HYPERKB_KB")]
        kb: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long)]
        queries: PathBuf,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also write per-sample CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Instance counts per concept.
    Stats {
        #[arg(long, env = "HYPERKB_KB")]
        kb: PathBuf,
        #[arg(long, default_value = "text")]
        format: OutputFormat,
    },
}

/// A failure carrying its exit code.
struct Fail(i32, String);

type CmdResult = Result<(), Fail>;

fn io<E: std::fmt::Display>(what: impl std::fmt::Display) -> impl FnOnce(E) -> Fail {
    move |e| Fail(EXIT_IO, format!("{what}: {e}"))
}

fn open(kb: &Path) -> Result<KnowledgeBase, Fail> {
    KnowledgeBase::open_journal(kb).map_err(io(kb.display()))
}

/// Runs the CLI on `args` (including the program name).
pub fn run_with(
    args: impl IntoIterator<Item = impl Into<std::ffi::OsString> + Clone>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::{DisplayHelp, DisplayVersion};
            let code = match e.kind() {
                DisplayHelp | DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Cmd::Bootstrap { out: path, extend } => bootstrap(&path, &extend, out),
        Cmd::Generate { scale, seed, out: path } => generate_cmd(scale, seed, &path, out),
        Cmd::Load { kb, input } => load(&kb, &input, out),
        Cmd::Query { kb, file, format, text } => query(&kb, file, text, format, out, err),
        Cmd::Repl { kb, format } => repl(&kb, format, input, out, err),
        Cmd::Bench {
            kb,
            data,
            reps,
            queries,
            json,
            csv,
        } => bench(&kb, &data, reps, &queries, json, csv, out),
        Cmd::Stats { kb, format } => stats(&kb, format, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Fail(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn bootstrap(path: &Path, extend: &[PathBuf], out: &mut dyn Write) -> CmdResult {
    let mut manifests = Vec::new();
    for p in extend {
        let text = std::fs::read_to_string(p).map_err(io(p.display()))?;
        let m = OntologyManifest::from_json(&text).map_err(|e| Fail(EXIT_PARSE, format!("{}: {e}", p.display())))?;
        let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("ext").to_owned();
        manifests.push((name, m));
    }
    let mut kb = KnowledgeBase::create_journal(path).map_err(io(path.display()))?;
    bootstrap_dataset_vocabulary(&mut kb).map_err(io("bootstrap"))?;
    for (name, m) in &manifests {
        extend_domain(&mut kb, m, name).map_err(io(format!("extension `{name}`")))?;
    }
    let st = kb.state();
    writeln!(
        out,
        "bootstrapped {}: {} contexts, {} connectors, {} nodes, {} links",
        path.display(),
        st.context_count(),
        st.connector_count(),
        st.node_count(),
        st.link_count()
    )
    .map_err(io("stdout"))
}

fn generate_cmd(scale: f64, seed: u64, path: &Path, out: &mut dyn Write) -> CmdResult {
    let spec = GeneratorSpec::table1(seed, scale);
    spec.scaled_counts().map_err(|e| Fail(EXIT_USAGE, e.to_string()))?;
    let file = std::fs::File::create(path).map_err(io(path.display()))?;
    let manifest = generate(&spec, file).map_err(io(path.display()))?;
    let mpath = manifest_path(path);
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).unwrap()).map_err(io(mpath.display()))?;
    writeln!(
        out,
        "generated {}: {} nodes, {} links (manifest {})",
        path.display(),
        manifest.nodes,
        manifest.links,
        mpath.display()
    )
    .map_err(io("stdout"))
}

/// `data.hkjsonl` → `data.hkjsonl.manifest.json`.
pub fn manifest_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn load(kb: &Path, input: &Path, out: &mut dyn Write) -> CmdResult {
    let mut store = open(kb)?;
    let file = std::fs::File::open(input).map_err(io(input.display()))?;
    let report = store
        .bulk_load(std::io::BufReader::new(file))
        .map_err(io(input.display()))?;
    writeln!(out, "{}", serde_json::to_string(&report).unwrap()).map_err(io("stdout"))
}

/// Resolves, evaluates and prints one parsed query.
fn answer(state: &KbState, ast: &Query, format: OutputFormat, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let registry = FunctionRegistry::default();
    let t = Instant::now();
    let resolved = resolve(ast, state, &registry).map_err(|e| Fail(EXIT_EVAL, e.to_string()))?;
    let result = evaluate(&resolved, state, &registry).map_err(|e| Fail(EXIT_EVAL, e.to_string()))?;
    let elapsed = t.elapsed();
    for w in &resolved.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    write!(out, "{}", result.render(format, elapsed)).map_err(io("stdout"))
}

fn query(
    kb: &Path,
    file: Option<PathBuf>,
    text: Option<String>,
    format: OutputFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let text = match (file, text) {
        (Some(f), _) => std::fs::read_to_string(&f).map_err(io(f.display()))?,
        (None, Some(t)) => t,
        (None, None) => return Err(Fail(EXIT_USAGE, "give a query or --file".into())),
    };
    let ast = hyql::parse(&text).map_err(|e| Fail(EXIT_PARSE, e.to_string()))?;
    let store = open(kb)?;
    answer(store.state(), &ast, format, out, err)
}

fn repl(
    kb: &Path,
    format: OutputFormat,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let store = open(kb)?;
    let mut pending = String::new();
    for line in input.lines() {
        let line = line.map_err(io("stdin"))?;
        if let Some(head) = line.strip_suffix('\\') {
            pending.push_str(head);
            pending.push('\n');
            continue;
        }
        pending.push_str(&line);
        let text = std::mem::take(&mut pending);
        match text.trim() {
            "" => continue,
            ":quit" | ":q" => break,
            q => match hyql::parse(q) {
                Ok(ast) => {
                    if let Err(Fail(_, msg)) = answer(store.state(), &ast, format, out, err) {
                        let _ = writeln!(err, "error: {msg}");
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "parse error: {e}");
                }
            },
        }
    }
    Ok(())
}

/// `*.hyql` files of `dir`, by file name, keyed by file stem.
pub fn read_query_dir(dir: &Path) -> std::io::Result<Vec<(String, String)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hyql"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
            Ok((stem, std::fs::read_to_string(&p)?))
        })
        .collect()
}

fn bench(
    kb: &Path,
    data: &Path,
    reps: usize,
    dir: &Path,
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
    out: &mut dyn Write,
) -> CmdResult {
    let mut queries = Vec::new();
    for (name, text) in read_query_dir(dir).map_err(io(dir.display()))? {
        let ast = hyql::parse(&text).map_err(|e| Fail(EXIT_PARSE, format!("{name}: {e}")))?;
        queries.push((name, ast));
    }
    let base = open(kb)?;
    let dataset = std::fs::read(data).map_err(io(data.display()))?;
    let report = run_benchmark(&base, &dataset, &queries, reps, &FunctionRegistry::default()).map_err(|e| match e {
        crate::bench::BenchError::Load(e) => Fail(EXIT_IO, format!("{}: {e}", data.display())),
        crate::bench::BenchError::NoRepetitions => Fail(EXIT_USAGE, e.to_string()),
        e => Fail(EXIT_EVAL, e.to_string()),
    })?;
    if let Some(p) = csv {
        std::fs::write(&p, report.to_csv()).map_err(io(p.display()))?;
    }
    match json {
        Some(p) => std::fs::write(&p, report.to_json()).map_err(io(p.display())),
        None => writeln!(out, "{}", report.to_json()).map_err(io("stdout")),
    }
}

/// Direct `instanceOf` count of every concept in reference-table order.
pub fn concept_counts(state: &KbState) -> Vec<(&'static str, usize)> {
    TABLE1_CONCEPTS
        .iter()
        .map(|c| {
            let id = crate::mlschema::mls_concept(c);
            (*c, state.links_to(&id, &instance_of_id()).len())
        })
        .collect()
}

fn stats(kb: &Path, format: OutputFormat, out: &mut dyn Write) -> CmdResult {
    let store = open(kb)?;
    let counts = concept_counts(store.state());
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    let text = match format {
        OutputFormat::Json => {
            let map: serde_json::Map<_, _> = counts.iter().map(|(c, n)| (c.to_string(), (*n).into())).collect();
            serde_json::json!({ "concepts": map, "total": total }).to_string() + "\n"
        }
        OutputFormat::Csv => {
            let mut s = String::from("concept,count\n");
            for (c, n) in &counts {
                s += &format!("{c},{n}\n");
            }
            s + &format!("Total,{total}\n")
        }
        OutputFormat::Text => {
            let mut s = String::new();
            for (c, n) in &counts {
                s += &format!("{c:<30}{n:>8}\n");
            }
            s + &format!("{:<30}{total:>8}\n", "Total")
        }
    };
    write!(out, "{text}").map_err(io("stdout"))
}
