//! Running workflow components as external processes and recording each
//! execution as a Run with provenance links.
//!
//! A binding lives on the Implementation node as `exec:*` properties. The
//! command template is split on whitespace and run directly, without a shell;
//! `{input}` and `{output}` are substituted inside tokens.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::mlschema::mls_concept;
use crate::model::{EntityId, Literal, Properties, OBJECT, SUBJECT};
use crate::store::record::BindingRecord;
use crate::store::{KbState, KnowledgeBase, Record, StoreError};

pub const TEMPLATE_PROPERTY: &str = "exec:template";
pub const TIMEOUT_PROPERTY: &str = "exec:timeout_s";
pub const WORKING_DIR_PROPERTY: &str = "exec:working_dir";
/// Input nodes name their file with this property.
pub const PATH_PROPERTY: &str = "path";
pub const SHA256_PROPERTY: &str = "sha256";
/// Captured stdout/stderr beyond this many bytes spills to a file.
pub const OUTPUT_CAP: usize = 64 * 1024;
pub const RUN_ID_ENV: &str = "HYPERKB_RUN_ID";

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("unknown node {0}")]
    UnknownNode(EntityId),
    #[error("unknown context {0}")]
    UnknownContext(EntityId),
    #[error("malformed template: {0}")]
    MalformedTemplate(String),
    #[error("{0} has no executor binding")]
    NoBinding(EntityId),
    #[error("input {0} has no `path` property")]
    NoInputPath(EntityId),
    #[error("cannot start `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutorBinding {
    pub implementation: EntityId,
    pub command_template: String,
    pub working_dir: PathBuf,
    pub timeout: Duration,
}

impl ExecutorBinding {
    pub fn validate(&self) -> Result<(), ExecError> {
        for p in ["{input}", "{output}"] {
            let n = self.command_template.matches(p).count();
            if n != 1 {
                return Err(ExecError::MalformedTemplate(format!(
                    "`{p}` appears {n} times, expected once"
                )));
            }
        }
        if self.timeout.is_zero() {
            return Err(ExecError::MalformedTemplate("timeout must be positive".into()));
        }
        Ok(())
    }

    /// Reads the binding stored on `implementation`, if any.
    pub fn load(state: &KbState, implementation: &EntityId) -> Option<ExecutorBinding> {
        let node = state.node(implementation)?;
        let Some(Literal::Text(template)) = node.property(TEMPLATE_PROPERTY) else {
            return None;
        };
        let timeout = match node.property(TIMEOUT_PROPERTY) {
            Some(Literal::Number(s)) => Duration::from_secs_f64(*s),
            Some(Literal::Integer(s)) => Duration::from_secs(*s as u64),
            _ => return None,
        };
        let working_dir = match node.property(WORKING_DIR_PROPERTY) {
            Some(Literal::Text(d)) => PathBuf::from(d),
            _ => return None,
        };
        Some(ExecutorBinding {
            implementation: implementation.clone(),
            command_template: template.clone(),
            working_dir,
            timeout,
        })
    }

    /// The argv for one execution.
    pub fn command_line(&self, input: &str, output: &str) -> Vec<String> {
        self.command_template
            .split_whitespace()
            .map(|tok| tok.replace("{input}", input).replace("{output}", output))
            .collect()
    }
}

/// Stores `binding` on its implementation node, replacing any previous one.
pub fn bind_executor(kb: &mut KnowledgeBase, binding: &ExecutorBinding) -> Result<(), ExecError> {
    binding.validate()?;
    if kb.state().node(&binding.implementation).is_none() {
        return Err(ExecError::UnknownNode(binding.implementation.clone()));
    }
    let props = Properties::from([
        (
            TEMPLATE_PROPERTY.to_owned(),
            Literal::Text(binding.command_template.clone()),
        ),
        (
            TIMEOUT_PROPERTY.to_owned(),
            Literal::Number(binding.timeout.as_secs_f64()),
        ),
        (
            WORKING_DIR_PROPERTY.to_owned(),
            Literal::Text(binding.working_dir.to_string_lossy().into_owned()),
        ),
    ]);
    kb.set_properties(&binding.implementation, props)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Succeeded,
    Failed,
    TimedOut,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Succeeded => "succeeded",
            RunStatus::Failed => "failed",
            RunStatus::TimedOut => "timeout",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExecutionRecord {
    pub run: EntityId,
    pub status: RunStatus,
    /// `None` when the process was killed.
    pub exit_code: Option<i32>,
    pub started: SystemTime,
    pub finished: SystemTime,
    pub stdout: String,
    pub stderr: String,
    /// Artifact nodes linked by `hasOutput`.
    pub outputs: Vec<EntityId>,
}

/// Everything needed to run once, read from one snapshot.
struct Plan {
    binding: ExecutorBinding,
    run: EntityId,
    input: EntityId,
    input_path: String,
    output_path: PathBuf,
    context: EntityId,
    algorithms: Vec<EntityId>,
}

struct Outcome {
    status: RunStatus,
    exit_code: Option<i32>,
    started: SystemTime,
    finished: SystemTime,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

fn fresh_run_id(state: &KbState) -> EntityId {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_millis();
    loop {
        let n = RUN_COUNTER.fetch_add(1, Ordering::Relaxed);
        let id = EntityId::new("exec", &format!("run_{stamp}_{}_{n}", std::process::id())).unwrap();
        if !state.contains(&id) {
            return id;
        }
    }
}

fn prepare(
    state: &KbState,
    implementation: &EntityId,
    input: &EntityId,
    context: &EntityId,
) -> Result<Plan, ExecError> {
    if state.node(implementation).is_none() {
        return Err(ExecError::UnknownNode(implementation.clone()));
    }
    let binding =
        ExecutorBinding::load(state, implementation).ok_or_else(|| ExecError::NoBinding(implementation.clone()))?;
    let input_node = state.node(input).ok_or_else(|| ExecError::UnknownNode(input.clone()))?;
    let input_path = match input_node.property(PATH_PROPERTY) {
        Some(Literal::Text(p)) => p.clone(),
        _ => return Err(ExecError::NoInputPath(input.clone())),
    };
    if state.context(context).is_none() {
        return Err(ExecError::UnknownContext(context.clone()));
    }
    let implements = EntityId::parse("mls:implements").unwrap();
    let algorithms = state
        .links_from(implementation, &implements)
        .iter()
        .filter_map(|l| state.link(l).and_then(|l| state.object_of(l)).cloned())
        .collect();
    let run = fresh_run_id(state);
    let output_path = binding.working_dir.join(format!("{}.out", run.local()));
    Ok(Plan {
        binding,
        run,
        input: input.clone(),
        input_path,
        output_path,
        context: context.clone(),
        algorithms,
    })
}

fn run_process(plan: &Plan) -> Result<Outcome, ExecError> {
    let argv = plan
        .binding
        .command_line(&plan.input_path, &plan.output_path.to_string_lossy());
    let (program, args) = argv.split_first().expect("validated template is non-empty");
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut cmd = Command::new(program);
    // own process group, so a timeout also kills anything the command forks
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
    let mut child = cmd
        .args(args)
        .current_dir(&plan.binding.working_dir)
        .env(RUN_ID_ENV, plan.run.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| ExecError::Spawn {
            program: program.clone(),
            source,
        })?;
    let drain = |mut pipe: Box<dyn Read + Send>| {
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = pipe.read_to_end(&mut buf);
            buf
        })
    };
    let out = drain(Box::new(child.stdout.take().unwrap()));
    let err = drain(Box::new(child.stderr.take().unwrap()));
    let (status, exit_code) = loop {
        if let Some(st) = child.try_wait()? {
            let ok = st.success();
            break (if ok { RunStatus::Succeeded } else { RunStatus::Failed }, st.code());
        }
        if clock.elapsed() >= plan.binding.timeout {
            kill_tree(&mut child)?;
            child.wait()?;
            break (RunStatus::TimedOut, None);
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    Ok(Outcome {
        status,
        exit_code,
        started,
        finished: SystemTime::now().max(started),
        stdout,
        stderr,
    })
}

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) -> std::io::Result<()> {
    // SAFETY: plain syscall on the group created at spawn
    let rc = unsafe { libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL) };
    if rc == 0 {
        Ok(())
    } else {
        child.kill()
    }
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) -> std::io::Result<()> {
    child.kill()
}

fn epoch_ms(t: SystemTime) -> i64 {
    t.duration_since(UNIX_EPOCH).unwrap_or_default().as_millis() as i64
}

/// Longest prefix of at most `OUTPUT_CAP` bytes ending on a char boundary.
fn capped(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let mut end = text.len().min(OUTPUT_CAP);
    while !text.is_char_boundary(end) {
        end -= 1;
    }
    text[..end].to_owned()
}

fn artifact_props(path: &Path) -> Result<Properties, ExecError> {
    let bytes = std::fs::read(path)?;
    Ok(Properties::from([
        (
            PATH_PROPERTY.to_owned(),
            Literal::Text(path.to_string_lossy().into_owned()),
        ),
        (
            SHA256_PROPERTY.to_owned(),
            Literal::Text(hex::encode(Sha256::digest(&bytes))),
        ),
        ("bytes".to_owned(), Literal::Integer(bytes.len() as i64)),
    ]))
}

/// Builds the record batch and applies it in one load.
fn record(kb: &mut KnowledgeBase, plan: Plan, outcome: Outcome) -> Result<ExecutionRecord, ExecError> {
    let ctx = Some(plan.context.clone());
    let mut records = Vec::new();
    let link = |conn: &str, s: &EntityId, o: &EntityId| Record::Link {
        id: None,
        conn: EntityId::parse(conn).unwrap(),
        ctx: ctx.clone(),
        b: BTreeMap::from([
            (SUBJECT.to_owned(), BindingRecord { n: s.clone(), a: None }),
            (OBJECT.to_owned(), BindingRecord { n: o.clone(), a: None }),
        ]),
        props: None,
    };

    // artifacts: the output file if it was written, plus spilled streams
    let mut files = Vec::new();
    if plan.output_path.is_file() {
        files.push(plan.output_path.clone());
    }
    for (stream, bytes) in [("stdout", &outcome.stdout), ("stderr", &outcome.stderr)] {
        if bytes.len() > OUTPUT_CAP {
            let path = plan.binding.working_dir.join(format!("{}.{stream}", plan.run.local()));
            std::fs::write(&path, bytes)?;
            files.push(path);
        }
    }
    let mut outputs = Vec::new();
    for (i, path) in files.iter().enumerate() {
        let id = EntityId::new("exec", &format!("{}_artifact_{}", plan.run.local(), i + 1)).unwrap();
        records.push(Record::Node {
            id: id.clone(),
            ctx: ctx.clone(),
            anchors: None,
            props: Some(artifact_props(path)?),
        });
        outputs.push(id);
    }

    let stdout = capped(&outcome.stdout);
    let stderr = capped(&outcome.stderr);
    let mut props = Properties::from([
        ("status".to_owned(), Literal::Text(outcome.status.as_str().into())),
        ("started".to_owned(), Literal::Integer(epoch_ms(outcome.started))),
        ("finished".to_owned(), Literal::Integer(epoch_ms(outcome.finished))),
        ("stdout".to_owned(), Literal::Text(stdout.clone())),
        ("stderr".to_owned(), Literal::Text(stderr.clone())),
        (
            "implementation".to_owned(),
            Literal::Text(plan.binding.implementation.to_string()),
        ),
    ]);
    if let Some(code) = outcome.exit_code {
        props.insert("exit_code".into(), Literal::Integer(code.into()));
    }
    records.push(Record::Node {
        id: plan.run.clone(),
        ctx: ctx.clone(),
        anchors: None,
        props: Some(props),
    });
    records.push(link("hk:instanceOf", &plan.run, &mls_concept("Run")));
    for alg in &plan.algorithms {
        records.push(link("mls:realizes", &plan.run, alg));
    }
    records.push(link("mls:hasInput", &plan.run, &plan.input));
    for out in &outputs {
        records.push(link("mls:hasOutput", &plan.run, out));
    }

    kb.bulk_load_records(records.into_iter().enumerate().collect(), Instant::now())?;
    Ok(ExecutionRecord {
        run: plan.run,
        status: outcome.status,
        exit_code: outcome.exit_code,
        started: outcome.started,
        finished: outcome.finished,
        stdout,
        stderr,
        outputs,
    })
}

/// Runs the component bound to `implementation` on `input` and records the
/// Run in `context`. A failed or timed-out process is still recorded; errors
/// before the process starts leave the store unchanged.
pub fn execute_component(
    kb: &mut KnowledgeBase,
    implementation: &EntityId,
    input: &EntityId,
    context: &EntityId,
) -> Result<ExecutionRecord, ExecError> {
    let plan = prepare(kb.state(), implementation, input, context)?;
    let outcome = run_process(&plan)?;
    record(kb, plan, outcome)
}

/// Shared-store execution: at most one run per implementation at a time,
/// and the store lock is not held while the process runs.
#[derive(Default)]
pub struct Executor {
    locks: Mutex<HashMap<EntityId, Arc<Mutex<()>>>>,
}

impl Executor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn execute(
        &self,
        kb: &Mutex<KnowledgeBase>,
        implementation: &EntityId,
        input: &EntityId,
        context: &EntityId,
    ) -> Result<ExecutionRecord, ExecError> {
        let lock = self
            .locks
            .lock()
            .unwrap()
            .entry(implementation.clone())
            .or_default()
            .clone();
        let _guard = lock.lock().unwrap();
        let snapshot = kb.lock().unwrap().snapshot();
        let plan = prepare(&snapshot, implementation, input, context)?;
        let outcome = run_process(&plan)?;
        let mut kb = kb.lock().unwrap();
        record(&mut kb, plan, outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlschema::bootstrap_ml_schema;

    struct Setup {
        kb: KnowledgeBase,
        dir: tempfile::TempDir,
        imp: EntityId,
        input: EntityId,
        ctx: EntityId,
    }

    fn setup() -> Setup {
        let dir = tempfile::tempdir().unwrap();
        let mut kb = KnowledgeBase::new();
        bootstrap_ml_schema(&mut kb).unwrap();
        let ctx = kb.add_context("wf", None).unwrap();
        let id = |s: &str| EntityId::new("wf", s).unwrap();
        let (imp, alg, input) = (id("copy_impl"), id("copy_alg"), id("data_in"));
        let path = dir.path().join("in.txt");
        std::fs::write(&path, "hello\n").unwrap();
        kb.add_node(Some(imp.clone()), Properties::new(), vec![], Some(&ctx))
            .unwrap();
        kb.add_node(Some(alg.clone()), Properties::new(), vec![], Some(&ctx))
            .unwrap();
        kb.add_node(
            Some(input.clone()),
            Properties::from([(PATH_PROPERTY.into(), Literal::Text(path.to_string_lossy().into()))]),
            vec![],
            Some(&ctx),
        )
        .unwrap();
        kb.relate(&imp, &EntityId::parse("mls:implements").unwrap(), &alg, Some(&ctx))
            .unwrap();
        Setup {
            kb,
            dir,
            imp,
            input,
            ctx,
        }
    }

    fn bind(s: &mut Setup, template: &str, timeout: f64) {
        let b = ExecutorBinding {
            implementation: s.imp.clone(),
            command_template: template.into(),
            working_dir: s.dir.path().to_owned(),
            timeout: Duration::from_secs_f64(timeout),
        };
        bind_executor(&mut s.kb, &b).unwrap();
    }

    #[test]
    fn template_rules() {
        let mut s = setup();
        let mut b = ExecutorBinding {
            implementation: s.imp.clone(),
            command_template: "run.sh {input} {output}".into(),
            working_dir: s.dir.path().to_owned(),
            timeout: Duration::from_secs(5),
        };
        bind_executor(&mut s.kb, &b).unwrap();
        assert_eq!(ExecutorBinding::load(s.kb.state(), &s.imp), Some(b.clone()));
        b.command_template = "other {input} --out={output}".into();
        bind_executor(&mut s.kb, &b).unwrap();
        assert_eq!(
            ExecutorBinding::load(s.kb.state(), &s.imp).unwrap().command_template,
            b.command_template
        );
        assert_eq!(b.command_line("a", "b"), ["other", "a", "--out=b"]);
        for bad in ["run.sh {input}", "cp {input} {output} {output}"] {
            b.command_template = bad.into();
            assert!(matches!(
                bind_executor(&mut s.kb, &b),
                Err(ExecError::MalformedTemplate(_))
            ));
        }
        b.implementation = EntityId::new("wf", "nope").unwrap();
        b.command_template = "cp {input} {output}".into();
        assert!(matches!(bind_executor(&mut s.kb, &b), Err(ExecError::UnknownNode(_))));
    }

    #[test]
    fn copy_round_trip() {
        let mut s = setup();
        bind(&mut s, "cp {input} {output}", 10.0);
        let rec = execute_component(&mut s.kb, &s.imp, &s.input, &s.ctx).unwrap();
        assert_eq!(rec.status, RunStatus::Succeeded);
        assert_eq!(rec.exit_code, Some(0));
        assert!(rec.finished >= rec.started);
        assert_eq!(rec.outputs.len(), 1);
        let st = s.kb.state();
        let art = st.node(&rec.outputs[0]).unwrap();
        assert_eq!(
            art.property(SHA256_PROPERTY),
            Some(&Literal::Text(hex::encode(Sha256::digest(b"hello\n"))))
        );
        let run = st.node(&rec.run).unwrap();
        assert_eq!(run.context, s.ctx);
        assert_eq!(run.property("status"), Some(&Literal::Text("succeeded".into())));
        assert_eq!(
            st.links_from(&rec.run, &EntityId::parse("mls:realizes").unwrap()).len(),
            1
        );
        assert!(s.kb.audit().is_ok());
    }

    #[test]
    fn no_binding_leaves_store_unchanged() {
        let mut s = setup();
        let before = s.kb.generation();
        assert!(matches!(
            execute_component(&mut s.kb, &s.imp, &s.input, &s.ctx),
            Err(ExecError::NoBinding(_))
        ));
        assert_eq!(s.kb.generation(), before);
    }

    #[test]
    fn failure_is_recorded_without_artifacts() {
        let mut s = setup();
        bind(&mut s, "false {input} {output}", 10.0);
        let rec = execute_component(&mut s.kb, &s.imp, &s.input, &s.ctx).unwrap();
        assert_eq!((rec.status, rec.exit_code), (RunStatus::Failed, Some(1)));
        assert!(rec.outputs.is_empty());
        let run = s.kb.state().node(&rec.run).unwrap();
        assert_eq!(run.property("status"), Some(&Literal::Text("failed".into())));
        assert_eq!(run.property("exit_code"), Some(&Literal::Integer(1)));
    }

    #[test]
    fn timeout_kills_process() {
        let mut s = setup();
        std::fs::write(s.dir.path().join("slow.sh"), "sleep 5\n").unwrap();
        bind(&mut s, "sh slow.sh {input} {output}", 0.2);
        let t = Instant::now();
        let rec = execute_component(&mut s.kb, &s.imp, &s.input, &s.ctx).unwrap();
        assert!(t.elapsed() < Duration::from_secs(3));
        assert_eq!((rec.status, rec.exit_code), (RunStatus::TimedOut, None));
    }

    #[test]
    fn run_id_env_and_executor() {
        let mut s = setup();
        bind(&mut s, "printenv HYPERKB_RUN_ID {input} {output}", 10.0);
        // printenv with extra args prints only variables that exist; the
        // paths are not variables, so the exit status is non-zero
        let kb = Mutex::new(std::mem::take(&mut s.kb));
        let rec = Executor::new().execute(&kb, &s.imp, &s.input, &s.ctx).unwrap();
        assert_eq!(rec.stdout.trim(), rec.run.to_string());
    }

    #[test]
    fn large_output_spills() {
        let mut s = setup();
        let big = s.dir.path().join("big.txt");
        std::fs::write(&big, vec![b'x'; OUTPUT_CAP + 10]).unwrap();
        let input = EntityId::new("wf", "big").unwrap();
        s.kb.add_node(
            Some(input.clone()),
            Properties::from([(PATH_PROPERTY.into(), Literal::Text(big.to_string_lossy().into()))]),
            vec![],
            Some(&s.ctx),
        )
        .unwrap();
        bind(&mut s, "cat {input} {output}", 10.0);
        let rec = execute_component(&mut s.kb, &s.imp, &input, &s.ctx).unwrap();
        assert_eq!(rec.stdout.len(), OUTPUT_CAP);
        // cat fails on the missing {output} file but has already streamed the input
        assert_eq!(rec.status, RunStatus::Failed);
        assert_eq!(rec.outputs.len(), 1);
        let spilled = s.kb.state().node(&rec.outputs[0]).unwrap();
        assert_eq!(
            spilled.property("bytes"),
            Some(&Literal::Integer((OUTPUT_CAP + 10) as i64))
        );
    }
}
