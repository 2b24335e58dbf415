//! Translation backends.
//!
//! A backend maps a source sentence to its translation. Three kinds exist:
//! a static TSV manifest, an external process speaking a line protocol
//! (one sentence in, one translation out, strictly 1:1, flushed per line),
//! and an in-process closure used for mocks and synthetic studies.
//!
//! Deterministic backends cache by exact source string and never ask the
//! engine twice for the same input. Non-deterministic backends (sampling
//! decoders) bypass the cache.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};

use thiserror::Error;

use crate::corpus::read_tsv_pairs;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("no translation in manifest for source {input:?}")]
    Miss { input: String },

    #[error("translation command failed on {input:?}: {msg}")]
    Command { input: String, msg: String },

    #[error("source {input:?} cannot be sent over the line protocol (contains a line break)")]
    Unsendable { input: String },

    #[error("invalid backend spec: {0}")]
    Spec(String),

    #[error("{0}")]
    Engine(String),
}

impl BackendError {
    pub fn input(&self) -> Option<&str> {
        match self {
            BackendError::Miss { input } | BackendError::Command { input, .. } | BackendError::Unsendable { input } => {
                Some(input)
            }
            _ => None,
        }
    }
}

pub type TranslateResult = Result<String, BackendError>;

pub trait Translate: Send + Sync {
    fn translate(&self, source: &str) -> TranslateResult;

    /// Order-preserving batch translation with per-item errors.
    fn translate_batch(&self, sources: &[String]) -> Vec<TranslateResult> {
        sources.iter().map(|s| self.translate(s)).collect()
    }

    fn is_deterministic(&self) -> bool;

    /// Short human-readable description recorded in reports.
    fn describe(&self) -> String;
}

impl<T: Translate + ?Sized> Translate for Box<T> {
    fn translate(&self, source: &str) -> TranslateResult {
        (**self).translate(source)
    }
    fn translate_batch(&self, sources: &[String]) -> Vec<TranslateResult> {
        (**self).translate_batch(sources)
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Source-keyed translation cache. Readers run concurrently, writers are serialized.
#[derive(Debug, Default)]
struct Cache {
    enabled: bool,
    map: RwLock<HashMap<String, String>>,
}

impl Cache {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            map: RwLock::default(),
        }
    }

    fn get(&self, source: &str) -> Option<String> {
        if !self.enabled {
            return None;
        }
        self.map.read().unwrap().get(source).cloned()
    }

    fn put(&self, source: &str, translation: &str) {
        if self.enabled {
            self.map
                .write()
                .unwrap()
                .insert(source.to_string(), translation.to_string());
        }
    }
}

/// Static lookup table loaded from `source<TAB>translation` lines.
#[derive(Debug, Clone, Default)]
pub struct ManifestBackend {
    table: HashMap<String, String>,
    origin: Option<PathBuf>,
}

impl ManifestBackend {
    pub fn from_pairs<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        Self {
            table: pairs.into_iter().map(|(s, t)| (s.into(), t.into())).collect(),
            origin: None,
        }
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let mut backend = Self::from_pairs(read_tsv_pairs(path)?);
        backend.origin = Some(path.to_path_buf());
        Ok(backend)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Translate for ManifestBackend {
    fn translate(&self, source: &str) -> TranslateResult {
        self.table.get(source).cloned().ok_or_else(|| BackendError::Miss {
            input: source.to_string(),
        })
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        match &self.origin {
            Some(p) => format!("manifest:{}", p.display()),
            None => format!("manifest:<{} entries>", self.table.len()),
        }
    }
}

/// Wraps a translation closure with caching and a call counter.
pub struct FnBackend<F> {
    engine: F,
    deterministic: bool,
    cache: Cache,
    calls: AtomicUsize,
    name: String,
}

impl<F> FnBackend<F>
where
    F: Fn(&str) -> TranslateResult + Send + Sync,
{
    pub fn new(name: impl Into<String>, engine: F) -> Self {
        Self {
            engine,
            deterministic: true,
            cache: Cache::new(true),
            calls: AtomicUsize::new(0),
            name: name.into(),
        }
    }

    pub fn nondeterministic(mut self) -> Self {
        self.deterministic = false;
        self.cache = Cache::new(false);
        self
    }

    /// Number of times the wrapped engine has been invoked.
    pub fn engine_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<F> Translate for FnBackend<F>
where
    F: Fn(&str) -> TranslateResult + Send + Sync,
{
    fn translate(&self, source: &str) -> TranslateResult {
        if let Some(hit) = self.cache.get(source) {
            return Ok(hit);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let out = (self.engine)(source)?;
        self.cache.put(source, &out);
        Ok(out)
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn describe(&self) -> String {
        format!("fn:{}", self.name)
    }
}

struct ChildProc {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl ChildProc {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// External translator speaking the line protocol over stdin/stdout.
///
/// At most one child process runs per backend. Up to `max_inflight`
/// requests are written before their responses are read back.
pub struct CommandBackend {
    program: String,
    args: Vec<String>,
    env_passthrough: Option<Vec<String>>,
    max_inflight: usize,
    deterministic: bool,
    cache: Cache,
    proc: Mutex<Option<ChildProc>>,
    calls: AtomicUsize,
}

impl CommandBackend {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
            env_passthrough: None,
            max_inflight: 16,
            deterministic: true,
            cache: Cache::new(true),
            proc: Mutex::new(None),
            calls: AtomicUsize::new(0),
        }
    }

    /// Parses a shell-style command line (`PROG ARG "quoted arg"`).
    pub fn from_command_line(line: &str) -> Result<Self, BackendError> {
        let mut argv = split_command_line(line)?;
        if argv.is_empty() {
            return Err(BackendError::Spec("empty command".into()));
        }
        let program = argv.remove(0);
        Ok(Self::new(program, argv))
    }

    pub fn with_max_inflight(mut self, n: usize) -> Self {
        self.max_inflight = n.max(1);
        self
    }

    /// Only the named environment variables reach the child.
    pub fn with_env_passthrough(mut self, vars: Vec<String>) -> Self {
        self.env_passthrough = Some(vars);
        self
    }

    pub fn nondeterministic(mut self) -> Self {
        self.deterministic = false;
        self.cache = Cache::new(false);
        self
    }

    /// Lines written to the child so far.
    pub fn external_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn spawn(&self) -> Result<ChildProc, String> {
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit());
        if let Some(vars) = &self.env_passthrough {
            cmd.env_clear();
            for v in vars {
                if let Ok(val) = std::env::var(v) {
                    cmd.env(v, val);
                }
            }
        }
        let mut child = cmd
            .spawn()
            .map_err(|e| format!("cannot start `{}`: {e}", self.program))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ChildProc { child, stdin, stdout })
    }

    /// Sends one window of requests and reads the responses back in order.
    fn exchange(&self, window: &[&str]) -> Vec<TranslateResult> {
        let mut guard = self.proc.lock().unwrap();
        if guard.is_none() {
            match self.spawn() {
                Ok(p) => *guard = Some(p),
                Err(msg) => {
                    return window
                        .iter()
                        .map(|s| {
                            Err(BackendError::Command {
                                input: s.to_string(),
                                msg: msg.clone(),
                            })
                        })
                        .collect()
                }
            }
        }
        let proc = guard.as_mut().unwrap();

        let mut failure: Option<String> = None;
        let mut written = 0;
        for src in window {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let res = proc
                .stdin
                .write_all(src.as_bytes())
                .and_then(|_| proc.stdin.write_all(b"\n"))
                .and_then(|_| proc.stdin.flush());
            if let Err(e) = res {
                failure = Some(format!("write failed: {e}"));
                break;
            }
            written += 1;
        }

        let mut out = Vec::with_capacity(window.len());
        while out.len() < written && failure.is_none() {
            let mut line = String::new();
            match proc.stdout.read_line(&mut line) {
                Ok(0) => failure = Some("process closed its output".into()),
                Ok(_) => {
                    let t = line.strip_suffix('\n').unwrap_or(&line);
                    let t = t.strip_suffix('\r').unwrap_or(t);
                    out.push(Ok(t.to_string()));
                }
                Err(e) => failure = Some(format!("read failed: {e}")),
            }
        }

        if let Some(msg) = failure {
            // the child is unusable now; the next window respawns it
            if let Some(p) = guard.take() {
                p.kill();
            }
            for src in &window[out.len()..] {
                out.push(Err(BackendError::Command {
                    input: src.to_string(),
                    msg: msg.clone(),
                }));
            }
        }
        out
    }
}

impl Drop for CommandBackend {
    fn drop(&mut self) {
        if let Ok(mut g) = self.proc.lock() {
            if let Some(mut p) = g.take() {
                // closing stdin lets well-behaved children exit on their own
                let _ = p.stdin.flush();
                drop(p.stdin);
                let _ = p.child.wait();
            }
        }
    }
}

impl Translate for CommandBackend {
    fn translate(&self, source: &str) -> TranslateResult {
        self.translate_batch(&[source.to_string()]).pop().unwrap()
    }

    fn translate_batch(&self, sources: &[String]) -> Vec<TranslateResult> {
        let mut results: Vec<Option<TranslateResult>> = vec![None; sources.len()];
        let mut pending: Vec<&str> = Vec::new();
        let mut seen = HashSet::new();
        for (i, src) in sources.iter().enumerate() {
            if src.contains('\n') || src.contains('\r') {
                results[i] = Some(Err(BackendError::Unsendable { input: src.clone() }));
            } else if let Some(hit) = self.cache.get(src) {
                results[i] = Some(Ok(hit));
            } else if !self.deterministic || seen.insert(src.as_str()) {
                pending.push(src.as_str());
            }
        }

        // translations of this batch, for sources that were not cached beforehand
        let mut fresh: HashMap<&str, TranslateResult> = HashMap::new();
        let mut sampled: Vec<TranslateResult> = Vec::new();
        for window in pending.chunks(self.max_inflight) {
            for (src, res) in window.iter().zip(self.exchange(window)) {
                if let Ok(t) = &res {
                    self.cache.put(src, t);
                }
                if self.deterministic {
                    fresh.insert(src, res);
                } else {
                    sampled.push(res);
                }
            }
        }

        let mut sampled = sampled.into_iter();
        results
            .into_iter()
            .zip(sources)
            .map(|(r, src)| match r {
                Some(r) => r,
                None if self.deterministic => fresh[src.as_str()].clone(),
                None => sampled.next().expect("one response per request"),
            })
            .collect()
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    fn describe(&self) -> String {
        let mut s = format!("cmd:{}", self.program);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        if !self.deterministic {
            s.push_str(" (nondeterministic)");
        }
        s
    }
}

fn split_command_line(line: &str) -> Result<Vec<String>, BackendError> {
    shlex::split(line).ok_or_else(|| BackendError::Spec(format!("unbalanced quoting in `{line}`")))
}

/// Parsed form of `manifest:FILE` / `cmd:PROG ARGS`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Manifest(PathBuf),
    Command(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, BackendError> {
        if let Some(path) = s.strip_prefix("manifest:") {
            Ok(BackendSpec::Manifest(PathBuf::from(path)))
        } else if let Some(cmd) = s.strip_prefix("cmd:") {
            let cmd = cmd.trim();
            let cmd = cmd.strip_prefix('"').and_then(|c| c.strip_suffix('"')).unwrap_or(cmd);
            Ok(BackendSpec::Command(cmd.to_string()))
        } else {
            Err(BackendError::Spec(format!(
                "expected `manifest:FILE` or `cmd:\"PROG ARGS\"`, got `{s}`"
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct BackendOptions {
    pub nondeterministic: bool,
    pub max_inflight: usize,
    pub env_passthrough: Option<Vec<String>>,
}

impl Default for BackendOptions {
    fn default() -> Self {
        Self {
            nondeterministic: false,
            max_inflight: 16,
            env_passthrough: None,
        }
    }
}

pub fn open_backend(spec: &BackendSpec, opts: &BackendOptions) -> crate::Result<Box<dyn Translate>> {
    match spec {
        BackendSpec::Manifest(path) => {
            if opts.nondeterministic {
                return Err(BackendError::Spec("manifest backends are always deterministic".into()).into());
            }
            Ok(Box::new(ManifestBackend::load(path)?))
        }
        BackendSpec::Command(line) => {
            let mut b = CommandBackend::from_command_line(line)?.with_max_inflight(opts.max_inflight);
            if let Some(vars) = &opts.env_passthrough {
                b = b.with_env_passthrough(vars.clone());
            }
            if opts.nondeterministic {
                b = b.nondeterministic();
            }
            Ok(Box::new(b))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_hit_and_miss() {
        let m = ManifestBackend::from_pairs([("a b", "x y")]);
        assert_eq!(m.translate("a b").unwrap(), "x y");
        let err = m.translate("c").unwrap_err();
        assert_eq!(err.input(), Some("c"));
        assert!(err.to_string().contains("\"c\""));
    }

    #[test]
    fn manifest_batch_interleaves_errors() {
        let m = ManifestBackend::from_pairs([("a", "1"), ("c", "3")]);
        let out = m.translate_batch(&["a".into(), "b".into(), "c".into()]);
        assert_eq!(out[0].as_deref(), Ok("1"));
        assert!(out[1].is_err());
        assert_eq!(out[2].as_deref(), Ok("3"));
    }

    #[test]
    fn fn_backend_caches() {
        let b = FnBackend::new("upper", |s: &str| Ok(s.to_uppercase()));
        let batch: Vec<String> = vec!["q".into(); 10];
        let out = b.translate_batch(&batch);
        assert!(out.iter().all(|r| r.as_deref() == Ok("Q")));
        assert_eq!(b.engine_calls(), 1);
        b.translate("q").unwrap();
        assert_eq!(b.engine_calls(), 1);
    }

    #[test]
    fn fn_backend_nondeterministic_skips_cache() {
        let b = FnBackend::new("id", |s: &str| Ok(s.to_string())).nondeterministic();
        b.translate("a").unwrap();
        b.translate("a").unwrap();
        assert_eq!(b.engine_calls(), 2);
        assert!(!b.is_deterministic());
    }

    #[test]
    fn command_line_splitting() {
        assert_eq!(
            split_command_line(r#"prog -x "two words" 'single q' a\ b"#).unwrap(),
            ["prog", "-x", "two words", "single q", "a b"]
        );
        assert!(split_command_line("prog \"open").is_err());
        assert_eq!(split_command_line("  ").unwrap(), Vec::<String>::new());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "manifest:/tmp/m.tsv".parse::<BackendSpec>().unwrap(),
            BackendSpec::Manifest("/tmp/m.tsv".into())
        );
        assert_eq!(
            "cmd:\"cat -u\"".parse::<BackendSpec>().unwrap(),
            BackendSpec::Command("cat -u".into())
        );
        assert!("http://x".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn command_identity_process() {
        let b = CommandBackend::new("cat", vec![]).with_max_inflight(4);
        assert_eq!(b.translate("das haus").unwrap(), "das haus");
        let batch: Vec<String> = (0..11).map(|i| format!("s {i}")).collect();
        let out = b.translate_batch(&batch);
        for (src, r) in batch.iter().zip(out) {
            assert_eq!(&r.unwrap(), src);
        }
        assert_eq!(b.external_calls(), 12);
    }

    #[test]
    fn command_identical_sources_one_call() {
        let b = CommandBackend::new("cat", vec![]);
        let out = b.translate_batch(&vec!["same".to_string(); 25]);
        assert_eq!(out.len(), 25);
        assert_eq!(b.external_calls(), 1);
        b.translate_batch(&vec!["same".to_string(); 3]);
        assert_eq!(b.external_calls(), 1);
    }

    #[test]
    fn command_rejects_newlines_and_missing_program() {
        let b = CommandBackend::new("cat", vec![]);
        assert!(matches!(b.translate("a\nb"), Err(BackendError::Unsendable { .. })));
        let bad = CommandBackend::new("/nonexistent/translator", vec![]);
        let err = bad.translate("x").unwrap_err();
        assert_eq!(err.input(), Some("x"));
    }

    #[test]
    fn command_failure_is_reported_per_item() {
        // `head -n 1` answers once and exits
        let b = CommandBackend::new("head", vec!["-n".into(), "1".into()]).with_max_inflight(1);
        let out = b.translate_batch(&["a".into(), "b".into()]);
        assert_eq!(out[0].as_deref(), Ok("a"));
        // the second request either fails or hits a respawned child
        if let Ok(t) = &out[1] {
            assert_eq!(t, "b");
        }
    }
}
