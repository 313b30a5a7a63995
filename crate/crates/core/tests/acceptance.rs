//! Acceptance suite. Prints one PASS/FAIL line per check and exits non-zero
//! if any check fails that is not listed in `KNOWN_FAILURES`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::*;
use hyperkb::eval::{evaluate, oracle_evaluate, resolve};
use hyperkb::exec::{bind_executor, execute_component, ExecutorBinding};
use hyperkb::hyql::parse;
use hyperkb::ingest::{generate_records, GeneratorSpec};
use hyperkb::mlschema::{bootstrap_dataset_vocabulary, mls_concept};
use hyperkb::model::{EntityId, Literal, Properties};
use hyperkb::store::KnowledgeBase;
use serde_json::Value;

/// Per-concept counts, typed in from the published reference table.
const TABLE1: [(&str, usize); 15] = [
    ("Area", 17),
    ("Subarea", 553),
    ("Task", 1097),
    ("Dataset", 615),
    ("DatasetCharacteristic", 615),
    ("Data", 615),
    ("DataCharacteristic", 615),
    ("Model", 3185),
    ("Run", 3187),
    ("ModelCharacteristic", 3185),
    ("Algorithm", 3185),
    ("Implementation", 3186),
    ("ImplementationCharacteristic", 3182),
    ("ModelEvaluation", 3186),
    ("EvaluationMeasure", 5448),
];
const TABLE1_TOTAL: usize = 31_256;

/// Checks that cannot pass, with the reason. Still printed as FAIL.
const KNOWN_FAILURES: [(&str, &str); 1] = [(
    "3b",
    "the reference table rows sum to 31,871, not the printed total of 31,256; every row is reproduced exactly instead",
)];

// pinned limits
const LIMIT_1: Duration = Duration::from_secs(1);
const LIMIT_2: Duration = Duration::from_secs(300);
const LIMIT_3: Duration = Duration::from_secs(120);
const LIMIT_4: Duration = Duration::from_secs(600);
const LIMIT_5: Duration = Duration::from_secs(1800);
const LIMIT_6: Duration = Duration::from_secs(60);
const LIMIT_7: Duration = Duration::from_secs(10);
const RANDOM_STORES: usize = 1000;
const RANDOM_PRODUCT_LIMIT: u128 = 200_000;
const BENCH_REPS: usize = 100;
const SEED: u64 = 42;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

struct Report {
    unexpected: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, name: &str, ok: bool, detail: String) {
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let status = if ok { "PASS" } else { "FAIL" };
        let note = match (ok, known) {
            (false, Some((_, why))) => format!(" [known: {why}]"),
            _ => String::new(),
        };
        println!("{status} {id:<3} {name}: {detail}{note}");
        if !ok && known.is_none() {
            self.unexpected.push(id.to_owned());
        }
    }

    fn timed(&mut self, id: &str, limit: Duration, started: Instant) {
        let t = started.elapsed();
        self.check(
            id,
            "runtime",
            t <= limit,
            format!("{:.2}s (limit {}s)", t.as_secs_f64(), limit.as_secs()),
        );
    }
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let mut argv = vec!["hyperkb"];
    argv.extend(args);
    let code = hyperkb::cli::run_with(argv, &mut std::io::empty(), &mut o, &mut e);
    (
        code,
        String::from_utf8_lossy(&o).into_owned(),
        String::from_utf8_lossy(&e).into_owned(),
    )
}

fn query_files() -> Vec<(String, String)> {
    let mut all = Vec::new();
    for dir in ["queries/corpus", "queries/bench"] {
        all.extend(hyperkb::cli::read_query_dir(&Path::new(FIXTURES).join(dir)).unwrap());
    }
    all
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let files = query_files();
    let mut parsed = 0;
    let mut golden = 0;
    let mut round_trip = 0;
    for (name, text) in &files {
        let Ok(q) = parse(text) else {
            println!("     {name}: parse error");
            continue;
        };
        parsed += 1;
        let want: Value = serde_json::from_str(
            &std::fs::read_to_string(Path::new(FIXTURES).join(format!("golden/{name}.json"))).unwrap(),
        )
        .unwrap();
        golden += usize::from(serde_json::to_value(&q).unwrap() == want);
        round_trip += usize::from(parse(&q.to_string()).ok() == Some(q.clone()));
    }
    r.check(
        "1a",
        "query corpus parses",
        files.len() == 10 && parsed == 10,
        format!("{parsed}/{} parsed", files.len()),
    );
    r.check("1b", "golden ASTs", golden == 10, format!("{golden}/10 match"));
    r.check(
        "1c",
        "pretty-print round trip",
        round_trip == 10,
        format!("{round_trip}/10"),
    );
    r.timed("1", LIMIT_1, t);
}

fn criterion_2(r: &mut Report) {
    let t = Instant::now();
    let (mut stores, mut agree, mut cases, mut non_empty, mut seed) = (0, 0, 0, 0, 0u64);
    let mut first_mismatch = None;
    while stores < RANDOM_STORES && seed < 4 * RANDOM_STORES as u64 {
        let mut rng = rng(1_000_000 + seed);
        seed += 1;
        let (kb, nodes) = random_kb(&mut rng, 200, 600);
        let st = kb.state();
        assert!(st.link_count() <= 600 + 6 * 200 + 2, "store size out of range");
        let mut used = false;
        for _ in 0..8 {
            let text = random_query(&mut rng, nodes);
            let Some(q) = resolved(&text, st) else { continue };
            if max_product(&q, st) > RANDOM_PRODUCT_LIMIT {
                continue;
            }
            let fast = evaluate(&q, st, &registry());
            let slow = oracle_evaluate(&q, st, &registry());
            cases += 1;
            if fast == slow {
                agree += 1;
            } else if first_mismatch.is_none() {
                first_mismatch = Some(text.clone());
            }
            non_empty += usize::from(matches!(&fast, Ok(x) if !x.is_empty()));
            used = true;
            if cases % 2 == 0 {
                break;
            }
        }
        stores += usize::from(used);
    }
    r.check(
        "2a",
        "evaluate = oracle_evaluate on random stores",
        stores >= RANDOM_STORES && agree == cases,
        format!(
            "{agree}/{cases} queries agree over {stores} stores ({non_empty} non-empty){}",
            first_mismatch
                .map(|q| format!("; first mismatch: {q}"))
                .unwrap_or_default()
        ),
    );
    r.timed("2", LIMIT_2, t);
}

struct Pipeline {
    dir: tempfile::TempDir,
    kb: PathBuf,
    data: PathBuf,
}

fn criterion_3(r: &mut Report) -> Pipeline {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let kb = dir.path().join("kb.journal");
    let data = dir.path().join("data.hkjsonl");
    let (ks, ds) = (kb.to_str().unwrap(), data.to_str().unwrap());
    assert_eq!(cli(&["bootstrap", "--out", ks]).0, 0);
    let seed = SEED.to_string();
    assert_eq!(cli(&["generate", "--scale", "1.0", "--seed", &seed, "--out", ds]).0, 0);
    let (code, load_out, err) = cli(&["load", "--kb", ks, "--in", ds]);
    assert_eq!(code, 0, "{err}");
    let (code, stats_out, _) = cli(&["stats", "--kb", ks, "--format", "json"]);
    assert_eq!(code, 0);
    let stats: Value = serde_json::from_str(&stats_out).unwrap();
    let wrong: Vec<String> = TABLE1
        .iter()
        .filter(|(c, n)| stats["concepts"][c].as_u64() != Some(*n as u64))
        .map(|(c, n)| format!("{c} {} != {n}", stats["concepts"][c]))
        .collect();
    r.check(
        "3a",
        "per-concept counts equal the reference table",
        wrong.is_empty(),
        if wrong.is_empty() {
            "15/15 exact".into()
        } else {
            wrong.join(", ")
        },
    );
    let total = stats["total"].as_u64().unwrap() as usize;
    r.check(
        "3b",
        "total equals 31,256",
        total == TABLE1_TOTAL,
        format!("total {total}"),
    );
    let load: Value = serde_json::from_str(&load_out).unwrap();
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(hyperkb::cli::manifest_path(&data)).unwrap()).unwrap();
    let same = ["nodes", "links", "contexts"].iter().all(|k| load[k] == manifest[k]);
    let links = manifest["links"].as_f64().unwrap();
    r.check(
        "3c",
        "load report equals generator manifest",
        same,
        format!("{} nodes, {} links", load["nodes"], load["links"]),
    );
    r.check(
        "3d",
        "links within 10% of 71,736",
        (links - 71_736.0).abs() <= 0.1 * 71_736.0,
        format!("{links} links ({:+.1}%)", (links / 71_736.0 - 1.0) * 100.0),
    );
    r.timed("3", LIMIT_3, t);
    Pipeline { dir, kb, data }
}

fn bench_queries() -> Vec<(String, String)> {
    hyperkb::cli::read_query_dir(&Path::new(FIXTURES).join("queries/bench")).unwrap()
}

fn criterion_4(r: &mut Report, p: &Pipeline) {
    let t = Instant::now();
    let full = KnowledgeBase::open_journal(&p.kb).unwrap();
    let mut small = KnowledgeBase::new();
    bootstrap_dataset_vocabulary(&mut small).unwrap();
    let (records, _) = generate_records(&GeneratorSpec::table1(SEED, 0.05)).unwrap();
    small
        .bulk_load_records(records.into_iter().enumerate().collect(), Instant::now())
        .unwrap();
    let mut sizes = Vec::new();
    let (mut full_ok, mut small_ok) = (true, true);
    for (name, text) in bench_queries() {
        let ast = parse(&text).unwrap();
        let q = resolve(&ast, full.state(), &registry()).unwrap();
        let big = evaluate(&q, full.state(), &registry()).unwrap();
        full_ok &= !big.is_empty();
        let q = resolve(&ast, small.state(), &registry()).unwrap();
        let fast = evaluate(&q, small.state(), &registry()).unwrap();
        let slow = oracle_evaluate(&q, small.state(), &registry()).unwrap();
        small_ok &= fast.cardinality() == slow.cardinality() && fast == slow && !fast.is_empty();
        sizes.push(format!("{name} {}/{}", big.cardinality(), fast.cardinality()));
    }
    r.check(
        "4a",
        "Q1-Q5 non-empty at full scale",
        full_ok,
        format!("full/0.05 cardinality: {}", sizes.join(", ")),
    );
    r.check(
        "4b",
        "Q1-Q5 equal the oracle at scale 0.05",
        small_ok,
        "cardinality and rows".into(),
    );
    r.timed("4", LIMIT_4, t);
}

fn criterion_5(r: &mut Report, p: &Pipeline) {
    let t = Instant::now();
    let json = p.dir.path().join("bench.json");
    let csv = p.dir.path().join("bench.csv");
    let queries = Path::new(FIXTURES).join("queries/bench");
    let reps = BENCH_REPS.to_string();
    let base = p.dir.path().join("base.journal");
    assert_eq!(cli(&["bootstrap", "--out", base.to_str().unwrap()]).0, 0);
    let (code, _, err) = cli(&[
        "bench",
        "--kb",
        base.to_str().unwrap(),
        "--data",
        p.data.to_str().unwrap(),
        "--reps",
        &reps,
        "--queries",
        queries.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    r.check(
        "5a",
        "bench --reps 100 completes",
        code == 0,
        format!("exit {code} {}", err.trim()),
    );
    if code != 0 {
        return;
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let tasks = ["load", "Q1", "Q2", "Q3", "Q4", "Q5"];
    let samples_ok = tasks
        .iter()
        .all(|k| report[k]["runs_ms"].as_array().map(Vec::len) == Some(BENCH_REPS));
    r.check(
        "5b",
        "100 samples per task",
        samples_ok,
        format!("{} tasks", tasks.len()),
    );
    let mut per_task: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for line in std::fs::read_to_string(&csv).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        per_task.entry(f[0].to_owned()).or_default().insert(f[3].to_owned());
    }
    let constant = per_task.len() == tasks.len() && per_task.values().all(|s| s.len() == 1);
    r.check(
        "5c",
        "constant per-query cardinality",
        constant,
        format!("{per_task:?}"),
    );
    let median = |k: &str| report[k]["median_ms"].as_f64().unwrap();
    let detail = tasks
        .iter()
        .map(|k| format!("{k} {:.2}ms", median(k)))
        .collect::<Vec<_>>()
        .join(", ");
    r.check(
        "5d",
        "median Q1 < Q3 and Q1 < Q4",
        median("Q1") < median("Q3") && median("Q1") < median("Q4"),
        detail,
    );
    let patterns = (
        report["Q1"]["link_patterns"].as_u64(),
        report["Q5"]["link_patterns"].as_u64(),
    );
    r.check(
        "5e",
        "link patterns Q1 = 1, Q5 = 4",
        patterns == (Some(1), Some(4)),
        format!("{patterns:?}"),
    );
    r.timed("5", LIMIT_5, t);
}

fn criterion_6(r: &mut Report, p: &Pipeline) {
    let t = Instant::now();
    let mut kb = KnowledgeBase::open_journal(&p.kb).unwrap();
    // the full dataset must be in the journal, otherwise the check is vacuous
    assert!(kb.state().node_count() > 30_000);
    let ctx = EntityId::parse("ctx:mlwfd").unwrap();
    let imp = EntityId::parse("mlwfd:implementation_00001").unwrap();
    let input = EntityId::parse("mlwfd:input_file").unwrap();
    let work = p.dir.path().join("work");
    std::fs::create_dir_all(&work).unwrap();
    let file = work.join("input.txt");
    std::fs::write(&file, "weights\n").unwrap();
    kb.add_node(
        Some(input.clone()),
        Properties::from([("path".to_owned(), Literal::Text(file.to_string_lossy().into()))]),
        vec![],
        Some(&ctx),
    )
    .unwrap();
    kb.assert_instance(&input, &mls_concept("Data")).unwrap();
    bind_executor(
        &mut kb,
        &ExecutorBinding {
            implementation: imp.clone(),
            command_template: "cp {input} {output}".into(),
            working_dir: work,
            timeout: Duration::from_secs(30),
        },
    )
    .unwrap();
    let rec = execute_component(&mut kb, &imp, &input, &ctx).unwrap();
    let audit = kb.audit();
    r.check(
        "6a",
        "audit after pipeline and execution",
        audit.is_ok(),
        match &audit {
            Ok(()) => "0 divergences".into(),
            Err(d) => format!("{} divergences", d.len()),
        },
    );
    let found = |kb: &KnowledgeBase| {
        hyperkb::eval::run_query("SELECT Run WHERE Run hasInput input_file", kb.state(), &registry())
            .map(|res| res.column("Run").is_some_and(|c| c.contains(&rec.run)))
            .unwrap_or(false)
    };
    let live = found(&kb);
    drop(kb);
    let reopened = KnowledgeBase::open_journal(&p.kb).unwrap();
    let persisted = found(&reopened) && reopened.audit().is_ok();
    r.check(
        "6b",
        "new Run retrievable by hasInput",
        live && persisted && rec.outputs.len() == 1,
        format!("{} ({:?}), live {live}, after reopen {persisted}", rec.run, rec.status),
    );
    r.timed("6", LIMIT_6, t);
}

fn criterion_7(r: &mut Report) {
    let t = Instant::now();
    let kb = seismic_kb();
    let st = kb.state();
    let run = |text: &str| {
        let q = resolve(&parse(text).unwrap(), st, &registry()).unwrap();
        let fast = evaluate(&q, st, &registry()).unwrap();
        let slow = oracle_evaluate(&q, st, &registry()).unwrap();
        let ids: BTreeSet<String> = fast.columns[0].1.iter().map(|i| i.local().to_owned()).collect();
        (fast == slow, ids)
    };
    let corpus =
        |n: &str| std::fs::read_to_string(Path::new(FIXTURES).join(format!("queries/corpus/{n}.hyql"))).unwrap();
    let expected: [(&str, &[&str]); 3] = [
        ("investigation1", &["model2", "model6"]),
        ("investigation2", &["model3", "model5"]),
        ("investigation3", &["model7"]),
    ];
    for (i, (name, want)) in expected.iter().enumerate() {
        let (oracle_ok, got) = run(&corpus(name));
        let want: BTreeSet<String> = want.iter().map(|s| s.to_string()).collect();
        r.check(
            &format!("7{}", (b'a' + i as u8) as char),
            &format!("{name} oracle-verified"),
            oracle_ok && got == want,
            format!("{got:?}"),
        );
    }
    let boundary = |op: &str| {
        run(&format!(
            "SELECT Seismic WHERE Run hasInput Seismic AND similarSiesmic(SeismicA, Seismic) {op} 0.9"
        ))
    };
    let (ok_strict, strict) = boundary(">");
    let (ok_closed, closed) = boundary(">=");
    r.check(
        "7d",
        "similarity exactly 0.9 excluded by >",
        ok_strict && ok_closed && !strict.contains("s1") && closed.contains("s1"),
        format!("> {strict:?}, >= {closed:?}"),
    );
    r.timed("7", LIMIT_7, t);
}

fn main() {
    let mut r = Report { unexpected: vec![] };
    criterion_1(&mut r);
    criterion_7(&mut r);
    criterion_2(&mut r);
    let p = criterion_3(&mut r);
    criterion_4(&mut r, &p);
    criterion_5(&mut r, &p);
    criterion_6(&mut r, &p);
    if r.unexpected.is_empty() {
        println!(
            "acceptance: all checks passed except known failures {:?}",
            KNOWN_FAILURES.map(|(k, _)| k)
        );
    } else {
        println!("acceptance: unexpected failures {:?}", r.unexpected);
        std::process::exit(1);
    }
}
