//! Running the compiler under test on one input and reading its output.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::HarnessSpec;

/// Output kept per stream; the rest is read and dropped.
pub const CAPTURE_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Exit {
    Ok,
    Nonzero(i32),
    Signal(i32),
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub input_id: String,
    pub exit: Exit,
    pub duration_ms: u64,
    pub triggers: BTreeMap<String, u64>,
    pub crash_signature: String,
    pub valid: bool,
    #[serde(skip)]
    pub stderr: String,
}

impl RunResult {
    pub fn crashed(&self) -> bool {
        !self.crash_signature.is_empty()
    }
}

#[derive(Debug, thiserror::Error)]
#[error("cannot run {program}: {source}")]
pub struct SpawnError {
    pub program: String,
    pub source: std::io::Error,
}

/// Compiled trigger counters of a harness.
#[derive(Debug, Clone)]
pub struct Counters(Vec<(String, Regex)>);

impl Counters {
    pub fn new(spec: &HarnessSpec) -> Counters {
        Counters(
            spec.counters
                .iter()
                .map(|c| (c.name.clone(), Regex::new(&c.pattern).expect("validated pattern")))
                .collect(),
        )
    }

    pub fn eval(&self, text: &str) -> BTreeMap<String, u64> {
        self.0
            .iter()
            .map(|(name, re)| {
                let n = if re.captures_len() > 1 {
                    re.captures_iter(text)
                        .filter_map(|c| c.get(1)?.as_str().parse::<u64>().ok())
                        .sum()
                } else {
                    re.find_iter(text).count() as u64
                };
                (name.clone(), n)
            })
            .collect()
    }
}

/// Substitute placeholders. An argument that is exactly `{prep}` expands to
/// one argument per preparation pass; elsewhere `{prep}` becomes the passes
/// joined with commas.
pub fn argv(template: &[String], input: &Path, spec: &HarnessSpec) -> Vec<String> {
    let input = input.display().to_string();
    let pass = spec.pass.clone().unwrap_or_default();
    let prep = spec.prep.join(",");
    let mut out = Vec::new();
    for a in template {
        if a == "{prep}" {
            out.extend(spec.prep.iter().cloned());
            continue;
        }
        out.push(
            a.replace("{input}", &input)
                .replace("{pass}", &pass)
                .replace("{prep}", &prep),
        );
    }
    out
}

struct Raw {
    exit: Exit,
    duration: Duration,
    stdout: String,
    stderr: String,
}

fn capture(mut r: impl Read + Send + 'static) -> std::thread::JoinHandle<Vec<u8>> {
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut buf = [0u8; 8192];
        while let Ok(n) = r.read(&mut buf) {
            if n == 0 {
                break;
            }
            let room = CAPTURE_CAP.saturating_sub(kept.len());
            kept.extend_from_slice(&buf[..n.min(room)]);
        }
        kept
    })
}

fn run(args: &[String], spec: &HarnessSpec) -> Result<Raw, SpawnError> {
    let start = Instant::now();
    let mut child = Command::new(&args[0])
        .args(&args[1..])
        .envs(&spec.env)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SpawnError {
            program: args[0].clone(),
            source,
        })?;
    let out = capture(child.stdout.take().expect("piped"));
    let err = capture(child.stderr.take().expect("piped"));
    let limit = Duration::from_millis(spec.timeout_ms);
    let status = loop {
        match child.try_wait() {
            Ok(Some(s)) => break Some(s),
            Ok(None) if start.elapsed() >= limit => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(2)),
            Err(_) => break None,
        }
    };
    let duration = start.elapsed();
    let exit = match status {
        None => Exit::Timeout,
        Some(s) if s.success() => Exit::Ok,
        Some(s) => match s.code() {
            Some(c) => Exit::Nonzero(c),
            None => Exit::Signal(signal_of(&s)),
        },
    };
    let text = |h: std::thread::JoinHandle<Vec<u8>>| String::from_utf8_lossy(&h.join().unwrap_or_default()).into_owned();
    Ok(Raw {
        exit,
        duration,
        stdout: text(out),
        stderr: text(err),
    })
}

#[cfg(unix)]
fn signal_of(s: &std::process::ExitStatus) -> i32 {
    use std::os::unix::process::ExitStatusExt;
    s.signal().unwrap_or(0)
}

#[cfg(not(unix))]
fn signal_of(_: &std::process::ExitStatus) -> i32 {
    0
}

fn assertion_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(assertion\b.*\bfailed|\bassert(ion)? failed|LLVM ERROR|UNREACHABLE executed|panicked at)")
            .unwrap()
    })
}

/// Run `input` through the harness. `parses` tells whether our own grammar
/// accepts the input, which is the validity verdict unless the harness has a
/// validity command.
pub fn execute(
    spec: &HarnessSpec,
    counters: &Counters,
    input: &Path,
    input_id: &str,
    parses: bool,
) -> Result<RunResult, SpawnError> {
    let raw = run(&argv(&spec.command, input, spec), spec)?;
    let crash = matches!(raw.exit, Exit::Signal(_)) || assertion_re().is_match(&raw.stderr);
    let triggers = match raw.exit {
        Exit::Ok | Exit::Nonzero(_) => counters.eval(&format!("{}\n{}", raw.stdout, raw.stderr)),
        _ => BTreeMap::new(),
    };
    let valid = match &spec.validity_command {
        Some(cmd) => run(&argv(cmd, input, spec), spec)?.exit == Exit::Ok,
        None => parses,
    };
    Ok(RunResult {
        input_id: input_id.to_string(),
        exit: raw.exit,
        duration_ms: raw.duration.as_millis() as u64,
        triggers,
        crash_signature: if crash { dedup_crash(&raw.stderr) } else { String::new() },
        valid,
        stderr: raw.stderr,
    })
}

fn frame_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(assert|error|abort|panick|unreachable|segmentation|signal|^\s*#\d+\s)").unwrap()
    })
}

/// Stable signature of a crash: a hash of the first five assertion or stack
/// frame lines of stderr, with addresses, paths and line numbers removed.
pub fn dedup_crash(stderr: &str) -> String {
    static NORM: OnceLock<[(Regex, &str); 4]> = OnceLock::new();
    let norm = NORM.get_or_init(|| {
        [
            (Regex::new(r"0x[0-9a-fA-F]+").unwrap(), "0x?"),
            (Regex::new(r"(?:[A-Za-z]:)?(?:[\w.\-+~]*[/\\])+([\w.\-+]+)").unwrap(), "$1"),
            (Regex::new(r":\d+(:\d+)?").unwrap(), ":N"),
            (Regex::new(r"\s+").unwrap(), " "),
        ]
    });
    if stderr.trim().is_empty() {
        return "unknown-crash".to_string();
    }
    let mut lines: Vec<&str> = stderr.lines().filter(|l| frame_re().is_match(l)).take(5).collect();
    if lines.is_empty() {
        lines = stderr.lines().filter(|l| !l.trim().is_empty()).take(5).collect();
    }
    let mut h = Sha256::new();
    for l in lines {
        let mut s = l.trim().to_string();
        for (re, rep) in norm {
            s = re.replace_all(&s, *rep).into_owned();
        }
        h.update(s.as_bytes());
        h.update(b"\n");
    }
    hex::encode(&h.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signatures_ignore_paths_and_addresses() {
        let a = "opt: /tmp/a1/LoopFuse.cpp:120: Assertion `x' failed.\n#0 0x7f00aa in fuse /tmp/a1/LoopFuse.cpp:120\n";
        let b = "opt: /home/b/src/LoopFuse.cpp:131: Assertion `x' failed.\n#0 0x55ffee in fuse /home/b/src/LoopFuse.cpp:131\n";
        let c = "opt: /tmp/a1/LoopFuse.cpp:120: Assertion `y' failed.\n";
        assert_eq!(dedup_crash(a), dedup_crash(b));
        assert_ne!(dedup_crash(a), dedup_crash(c));
        assert_eq!(dedup_crash(""), "unknown-crash");
        assert_eq!(dedup_crash(a).len(), 16);
    }

    #[test]
    fn counters_sum_groups_or_count() {
        let spec: HarnessSpec = toml::from_str(
            r#"
command = ["x", "{input}"]
[[counters]]
name = "fused"
pattern = "fused: (\\d+)"
[[counters]]
name = "lines"
pattern = "(?m)^stat"
"#,
        )
        .unwrap();
        let c = Counters::new(&spec);
        let got = c.eval("fused: 2\nstat a\nfused: 3\nstat b\nstat c\n");
        assert_eq!(got["fused"], 5);
        assert_eq!(got["lines"], 3);
    }

    #[test]
    fn placeholders() {
        let spec: HarnessSpec = toml::from_str(
            r#"
command = ["opt", "-p={prep},{pass}", "{prep}", "{input}"]
pass = "fuse"
prep = ["a", "b"]
"#,
        )
        .unwrap();
        let got = argv(&spec.command, Path::new("/t/in.c"), &spec);
        assert_eq!(got, ["opt", "-p=a,b,fuse", "a", "b", "/t/in.c"]);
    }
}
