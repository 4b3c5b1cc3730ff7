//! Backend invocation and outcome labeling.
//!
//! The verifier itself is an opaque external process. This module spawns it
//! with a rendered flag configuration under a wall-clock timeout, parses the
//! verdict from its output, compares against the benchmark's expected verdict,
//! and maps the result onto the 0-5 outcome class scale. A scriptable
//! [`MockAdapter`] stands in for the real binary in tests.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::flags::{FlagConfiguration, FlagGrid};

/// What the backend's output says, before comparison with ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RawVerdict {
    True,
    False,
    Unknown,
    Timeout,
    Error,
}

impl RawVerdict {
    pub fn tag(self) -> &'static str {
        match self {
            RawVerdict::True => "true",
            RawVerdict::False => "false",
            RawVerdict::Unknown => "unknown",
            RawVerdict::Timeout => "timeout",
            RawVerdict::Error => "error",
        }
    }
}

impl fmt::Display for RawVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RawVerdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(RawVerdict::True),
            "false" => Ok(RawVerdict::False),
            "unknown" => Ok(RawVerdict::Unknown),
            "timeout" => Ok(RawVerdict::Timeout),
            "error" => Ok(RawVerdict::Error),
            _ => Err(format!("invalid verdict tag '{s}'")),
        }
    }
}

/// The backend's answer judged against the expected verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    CorrectTrue,
    CorrectFalse,
    Unknown,
    Incorrect,
    Timeout,
    Error,
}

impl Verdict {
    pub fn is_correct(self) -> bool {
        matches!(self, Verdict::CorrectTrue | Verdict::CorrectFalse)
    }
}

/// Ground-truth expected verdict of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    True,
    False,
    Unspecified,
}

impl FromStr for Expected {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(Expected::True),
            "false" => Ok(Expected::False),
            "unknown" => Ok(Expected::Unspecified),
            _ => Err(format!("invalid expected verdict '{s}'")),
        }
    }
}

/// Ordinal outcome label, 0 (fast correct) through 5 (incorrect).
/// Lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeClass(u8);

/// Number of outcome classes.
pub const CLASS_COUNT: usize = 6;

impl OutcomeClass {
    pub fn new(value: u8) -> Option<Self> {
        (value <= 5).then_some(OutcomeClass(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One benchmark: program, property, and ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub program_path: PathBuf,
    pub property_path: PathBuf,
    pub expected: Expected,
}

impl BenchmarkSpec {
    /// Identifier used in datasets and journals: the program path as given.
    pub fn id(&self) -> String {
        self.program_path.display().to_string()
    }

    pub fn basename(&self) -> String {
        self.program_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

/// Result of one backend run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationOutcome {
    pub verdict: Verdict,
    pub wall_time_s: f64,
    pub raw: RawVerdict,
    /// Short excerpt of backend output for diagnostics.
    pub stdout_digest: String,
}

/// The backend binary could not be started at all. Distinct from a backend
/// run that crashed or produced no recognizable verdict (that is
/// [`RawVerdict::Error`]).
#[derive(Debug, Error)]
#[error("failed to spawn backend: {message}")]
pub struct SpawnFailure {
    pub message: String,
}

/// Raw record of one backend execution, before verdict parsing.
#[derive(Debug, Clone)]
pub struct RawRun {
    pub stdout: String,
    pub exit_code: Option<i32>,
    /// Authoritative timeout signal from the supervisor, not the clock.
    pub timed_out: bool,
    pub wall_time_s: f64,
}

/// A way of executing the backend on a benchmark with rendered flag
/// arguments. Implementations must be safe to share across campaign workers.
pub trait BackendAdapter: Sync {
    fn execute(
        &self,
        bench: &BenchmarkSpec,
        flag_args: &[String],
        timeout: Duration,
    ) -> Result<RawRun, SpawnFailure>;

    /// Output patterns mapped to verdicts; the match occurring last in the
    /// output wins.
    fn verdict_patterns(&self) -> &[(String, RawVerdict)];
}

/// Default output pattern table.
pub fn default_patterns() -> Vec<(String, RawVerdict)> {
    vec![
        ("VERIFICATION FAILED".to_string(), RawVerdict::False),
        ("VERIFICATION SUCCESSFUL".to_string(), RawVerdict::True),
        ("VERIFICATION UNKNOWN".to_string(), RawVerdict::Unknown),
    ]
}

/// Parse a raw verdict from backend output.
///
/// A supervisor-reported timeout dominates everything. Otherwise the pattern
/// whose occurrence appears last in the output decides; no match means the
/// run produced no verdict and is an error regardless of exit status.
pub fn parse_raw_verdict(
    stdout: &str,
    _exit_code: Option<i32>,
    timed_out: bool,
    patterns: &[(String, RawVerdict)],
) -> RawVerdict {
    if timed_out {
        return RawVerdict::Timeout;
    }
    let mut best: Option<(usize, RawVerdict)> = None;
    for (pattern, verdict) in patterns {
        if pattern.is_empty() {
            continue;
        }
        if let Some(pos) = stdout.rfind(pattern.as_str()) {
            if best.is_none_or(|(p, _)| pos >= p) {
                best = Some((pos, *verdict));
            }
        }
    }
    best.map_or(RawVerdict::Error, |(_, v)| v)
}

/// Judge a raw verdict against the expected one.
///
/// Without ground truth a definite true/false answer cannot be labeled
/// correct or incorrect, so it degrades to `Unknown`.
pub fn derive_verdict(raw: RawVerdict, expected: Expected) -> Verdict {
    match (raw, expected) {
        (RawVerdict::Timeout, _) => Verdict::Timeout,
        (RawVerdict::Unknown, _) => Verdict::Unknown,
        (RawVerdict::Error, _) => Verdict::Error,
        (RawVerdict::True, Expected::True) => Verdict::CorrectTrue,
        (RawVerdict::False, Expected::False) => Verdict::CorrectFalse,
        (RawVerdict::True, Expected::False) | (RawVerdict::False, Expected::True) => {
            Verdict::Incorrect
        }
        (RawVerdict::True, Expected::Unspecified) | (RawVerdict::False, Expected::Unspecified) => {
            Verdict::Unknown
        }
    }
}

/// Map an outcome onto the 0-5 class scale.
///
/// Correct verdicts stratify by wall time: t <= 10s is class 0,
/// 10s < t < 60s is class 1, t >= 60s is class 2. Unknown is 3, timeout 4,
/// incorrect 5. A crash with no verdict carries no information either,
/// so it lands with unknown in class 3.
pub fn classify_outcome(outcome: &VerificationOutcome) -> OutcomeClass {
    classify(outcome.verdict, outcome.wall_time_s)
}

/// Class as a function of (verdict kind, wall time) alone.
pub fn classify(verdict: Verdict, wall_time_s: f64) -> OutcomeClass {
    let value = match verdict {
        Verdict::CorrectTrue | Verdict::CorrectFalse => {
            if wall_time_s <= 10.0 {
                0
            } else if wall_time_s < 60.0 {
                1
            } else {
                2
            }
        }
        Verdict::Unknown | Verdict::Error => 3,
        Verdict::Timeout => 4,
        Verdict::Incorrect => 5,
    };
    OutcomeClass(value)
}

fn digest(stdout: &str) -> String {
    const MAX: usize = 200;
    let trimmed = stdout.trim();
    if trimmed.len() <= MAX {
        trimmed.to_string()
    } else {
        let mut cut = trimmed.len() - MAX;
        while !trimmed.is_char_boundary(cut) {
            cut += 1;
        }
        format!("...{}", &trimmed[cut..])
    }
}

/// Run the backend once on a benchmark with the given configuration.
pub fn run_backend(
    bench: &BenchmarkSpec,
    config: &FlagConfiguration,
    timeout_s: f64,
    adapter: &dyn BackendAdapter,
) -> Result<VerificationOutcome, SpawnFailure> {
    let flag_args = config.render_flags();
    let timeout = Duration::from_secs_f64(timeout_s);
    let run = adapter.execute(bench, &flag_args, timeout)?;
    let raw = parse_raw_verdict(
        &run.stdout,
        run.exit_code,
        run.timed_out,
        adapter.verdict_patterns(),
    );
    let verdict = derive_verdict(raw, bench.expected);
    Ok(VerificationOutcome {
        verdict,
        wall_time_s: run.wall_time_s,
        raw,
        stdout_digest: digest(&run.stdout),
    })
}

// ---------------------------------------------------------------------------
// Process adapter
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum AdapterConfigError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("adapter config is missing an 'exec' line")]
    MissingExec,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Adapter that spawns a real verifier binary.
///
/// The argument template is a whitespace-separated list where `{property}`,
/// `{arch}` and `{program}` expand to the respective values and `{flags}`
/// expands to the rendered flag arguments.
#[derive(Debug, Clone)]
pub struct ProcessAdapter {
    exec: PathBuf,
    template: Vec<String>,
    patterns: Vec<(String, RawVerdict)>,
    arch: String,
}

impl ProcessAdapter {
    pub fn new(exec: impl Into<PathBuf>) -> Self {
        ProcessAdapter {
            exec: exec.into(),
            template: default_template(),
            patterns: default_patterns(),
            arch: "32".to_string(),
        }
    }

    pub fn with_arch(mut self, arch: impl Into<String>) -> Self {
        self.arch = arch.into();
        self
    }

    pub fn with_template(mut self, template: Vec<String>) -> Self {
        self.template = template;
        self
    }

    /// Parse the line-oriented adapter config:
    ///
    /// ```text
    /// exec /path/to/verifier
    /// args -p {property} --arch {arch} {flags} {program}
    /// pattern VERIFICATION FAILED => false
    /// pattern VERIFICATION SUCCESSFUL => true
    /// ```
    ///
    /// `args` and `pattern` lines are optional; defaults apply when absent.
    pub fn from_config_text(text: &str) -> Result<Self, AdapterConfigError> {
        let mut exec: Option<PathBuf> = None;
        let mut template: Option<Vec<String>> = None;
        let mut patterns: Vec<(String, RawVerdict)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: String| AdapterConfigError::Malformed {
                line: idx + 1,
                message,
            };
            if let Some(rest) = line.strip_prefix("exec ") {
                exec = Some(PathBuf::from(rest.trim()));
            } else if let Some(rest) = line.strip_prefix("args ") {
                template = Some(rest.split_whitespace().map(str::to_string).collect());
            } else if let Some(rest) = line.strip_prefix("pattern ") {
                let (pat, verdict) = rest
                    .rsplit_once("=>")
                    .ok_or_else(|| malformed("pattern line needs '=> <verdict>'".into()))?;
                let verdict = RawVerdict::from_str(verdict.trim()).map_err(malformed)?;
                patterns.push((pat.trim().to_string(), verdict));
            } else {
                return Err(malformed(format!("unrecognized directive '{line}'")));
            }
        }
        let mut adapter = ProcessAdapter::new(exec.ok_or(AdapterConfigError::MissingExec)?);
        if let Some(t) = template {
            adapter.template = t;
        }
        if !patterns.is_empty() {
            adapter.patterns = patterns;
        }
        Ok(adapter)
    }

    pub fn from_config_file(path: &Path) -> Result<Self, AdapterConfigError> {
        Self::from_config_text(&std::fs::read_to_string(path)?)
    }

    fn build_args(&self, bench: &BenchmarkSpec, flag_args: &[String]) -> Vec<String> {
        let mut args = Vec::new();
        for token in &self.template {
            match token.as_str() {
                "{property}" => args.push(bench.property_path.display().to_string()),
                "{program}" => args.push(bench.program_path.display().to_string()),
                "{arch}" => args.push(self.arch.clone()),
                "{flags}" => args.extend(flag_args.iter().cloned()),
                other => args.push(other.to_string()),
            }
        }
        args
    }
}

fn default_template() -> Vec<String> {
    [
        "-p",
        "{property}",
        "--arch",
        "{arch}",
        "{flags}",
        "{program}",
    ]
    .into_iter()
    .map(str::to_string)
    .collect()
}

#[cfg(unix)]
fn kill_process_group(child: &std::process::Child) {
    // The child was placed in its own process group at spawn.
    unsafe {
        libc::killpg(child.id() as libc::pid_t, libc::SIGKILL);
    }
}

impl BackendAdapter for ProcessAdapter {
    fn execute(
        &self,
        bench: &BenchmarkSpec,
        flag_args: &[String],
        timeout: Duration,
    ) -> Result<RawRun, SpawnFailure> {
        let args = self.build_args(bench, flag_args);
        let mut cmd = Command::new(&self.exec);
        cmd.args(&args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }
        let start = Instant::now();
        let mut child = cmd.spawn().map_err(|e| SpawnFailure {
            message: format!("{}: {e}", self.exec.display()),
        })?;

        // Drain pipes on helper threads so a chatty child cannot block on a
        // full pipe while we poll for exit.
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let out_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout_pipe.read_to_string(&mut buf);
            buf
        });
        let err_reader = std::thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr_pipe.read_to_string(&mut buf);
            buf
        });

        let mut timed_out = false;
        let exit_code = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status.code(),
                Ok(None) => {
                    if start.elapsed() >= timeout {
                        timed_out = true;
                        #[cfg(unix)]
                        kill_process_group(&child);
                        let _ = child.kill();
                        let status = child.wait().ok();
                        break status.and_then(|s| s.code());
                    }
                    std::thread::sleep(Duration::from_millis(10));
                }
                Err(e) => {
                    let _ = child.kill();
                    return Err(SpawnFailure {
                        message: format!("wait failed: {e}"),
                    });
                }
            }
        };
        let wall_time_s = start.elapsed().as_secs_f64();
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        let combined = if stderr.is_empty() {
            stdout
        } else {
            format!("{stdout}\n{stderr}")
        };
        Ok(RawRun {
            stdout: combined,
            exit_code,
            timed_out,
            wall_time_s,
        })
    }

    fn verdict_patterns(&self) -> &[(String, RawVerdict)] {
        &self.patterns
    }
}

// ---------------------------------------------------------------------------
// Mock adapter
// ---------------------------------------------------------------------------

/// What a mock script entry makes the backend do.
#[derive(Debug, Clone, Copy, PartialEq)]
enum MockAction {
    Respond(RawVerdict),
    /// Simulate a missing/broken binary.
    SpawnFail,
}

#[derive(Debug, Clone)]
enum ConfigSelector {
    Any,
    Index(usize),
    /// Conjunction of field=value tests in grid-file field syntax.
    Fields(Vec<(String, String)>),
}

#[derive(Debug, Clone)]
struct MockRule {
    /// Benchmark basename, exact or `prefix*`.
    bench_pattern: String,
    selector: ConfigSelector,
    action: MockAction,
    delay_s: f64,
}

impl MockRule {
    fn matches_bench(&self, basename: &str) -> bool {
        match self.bench_pattern.strip_suffix('*') {
            Some(prefix) => basename.starts_with(prefix),
            None => self.bench_pattern == basename,
        }
    }

    fn matches_config(&self, config: &FlagConfiguration, grid: &FlagGrid) -> bool {
        match &self.selector {
            ConfigSelector::Any => true,
            ConfigSelector::Index(i) => grid.index_of(config) == Some(*i),
            ConfigSelector::Fields(tests) => tests.iter().all(|(field, value)| {
                let c = config.normalized();
                match field.as_str() {
                    "context_bound" => c.context_bound.to_string() == *value,
                    "strategy" => c.strategy.name() == value,
                    "k_step" => c.k_step.to_string() == *value,
                    "unwind" => c.unwind.to_string() == *value,
                    "no_por" => (c.no_por as u8).to_string() == *value,
                    "no_goto_merge" => (c.no_goto_merge as u8).to_string() == *value,
                    "state_hashing" => (c.state_hashing as u8).to_string() == *value,
                    "add_symex_value_sets" => (c.add_symex_value_sets as u8).to_string() == *value,
                    _ => false,
                }
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum MockScriptError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Deterministic in-process backend for testing.
///
/// A script table maps (benchmark basename, configuration selector) to a
/// verdict and a synthetic delay. The first matching rule wins; an unmatched
/// run behaves like a backend crash. Delays are simulated by default so
/// campaigns run at full speed; [`MockAdapter::with_real_sleep`] switches to
/// actual sleeping for supervision tests.
#[derive(Debug, Clone)]
pub struct MockAdapter {
    rules: Vec<MockRule>,
    grid: FlagGrid,
    patterns: Vec<(String, RawVerdict)>,
    real_sleep: bool,
}

impl MockAdapter {
    /// Parse a mock script. One rule per line:
    ///
    /// ```text
    /// <basename[*]> <selector> <true|false|unknown|error|spawnfail> <delay_s>
    /// ```
    ///
    /// where selector is `*`, `cfg=<index>`, or `field=value[&field=value...]`
    /// over the eight flag fields. `#` comments and blank lines are ignored.
    pub fn from_script_text(text: &str, grid: FlagGrid) -> Result<Self, MockScriptError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: String| MockScriptError::Malformed {
                line: idx + 1,
                message,
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(malformed(format!(
                    "expected 4 whitespace-separated fields, found {}",
                    parts.len()
                )));
            }
            let selector = if parts[1] == "*" {
                ConfigSelector::Any
            } else if let Some(rest) = parts[1].strip_prefix("cfg=") {
                let i = rest
                    .parse()
                    .map_err(|_| malformed(format!("invalid config index '{rest}'")))?;
                ConfigSelector::Index(i)
            } else {
                let mut tests = Vec::new();
                for clause in parts[1].split('&') {
                    let (field, value) = clause
                        .split_once('=')
                        .ok_or_else(|| malformed(format!("invalid predicate '{clause}'")))?;
                    tests.push((field.to_string(), value.to_string()));
                }
                ConfigSelector::Fields(tests)
            };
            let action = match parts[2] {
                "spawnfail" => MockAction::SpawnFail,
                tag => MockAction::Respond(RawVerdict::from_str(tag).map_err(malformed)?),
            };
            let delay_s: f64 = parts[3]
                .parse()
                .map_err(|_| malformed(format!("invalid delay '{}'", parts[3])))?;
            if !delay_s.is_finite() || delay_s < 0.0 {
                return Err(malformed(
                    "delay must be a finite nonnegative number".into(),
                ));
            }
            rules.push(MockRule {
                bench_pattern: parts[0].to_string(),
                selector,
                action,
                delay_s,
            });
        }
        Ok(MockAdapter {
            rules,
            grid,
            patterns: default_patterns(),
            real_sleep: false,
        })
    }

    pub fn from_script_file(path: &Path, grid: FlagGrid) -> Result<Self, MockScriptError> {
        Self::from_script_text(&std::fs::read_to_string(path)?, grid)
    }

    pub fn with_real_sleep(mut self) -> Self {
        self.real_sleep = true;
        self
    }

    /// The verdict and delay the script assigns to a (benchmark, config)
    /// cell, resolved against the adapter's grid. Useful as an oracle.
    pub fn scripted_response(
        &self,
        basename: &str,
        config: &FlagConfiguration,
    ) -> Option<(RawVerdict, f64)> {
        self.rules
            .iter()
            .find(|r| r.matches_bench(basename) && r.matches_config(config, &self.grid))
            .and_then(|r| match r.action {
                MockAction::Respond(v) => Some((v, r.delay_s)),
                MockAction::SpawnFail => None,
            })
    }
}

impl BackendAdapter for MockAdapter {
    fn execute(
        &self,
        bench: &BenchmarkSpec,
        flag_args: &[String],
        timeout: Duration,
    ) -> Result<RawRun, SpawnFailure> {
        // The mock receives rendered args like a real backend would, but
        // matches on the configuration they denote.
        let config = config_from_args(flag_args).ok_or_else(|| SpawnFailure {
            message: format!("mock could not decode flag args {flag_args:?}"),
        })?;
        let basename = bench.basename();
        let rule = self
            .rules
            .iter()
            .find(|r| r.matches_bench(&basename) && r.matches_config(&config, &self.grid));
        let (action, delay_s) = match rule {
            Some(r) => (r.action, r.delay_s),
            None => (MockAction::Respond(RawVerdict::Error), 0.0),
        };
        if action == MockAction::SpawnFail {
            return Err(SpawnFailure {
                message: format!("scripted spawn failure for {basename}"),
            });
        }
        let timeout_s = timeout.as_secs_f64();
        let times_out = delay_s >= timeout_s;
        let wall_time_s = if times_out { timeout_s } else { delay_s };
        if self.real_sleep {
            // Sleep like a supervised process: never past the kill point.
            let start = Instant::now();
            let budget = Duration::from_secs_f64(wall_time_s);
            while start.elapsed() < budget {
                let remaining = budget - start.elapsed();
                std::thread::sleep(remaining.min(Duration::from_millis(10)));
            }
        }
        let (stdout, exit_code) = if times_out {
            // Killed before printing a verdict.
            (String::new(), None)
        } else {
            match action {
                MockAction::Respond(RawVerdict::True) => {
                    ("VERIFICATION SUCCESSFUL\n".to_string(), Some(0))
                }
                MockAction::Respond(RawVerdict::False) => {
                    ("VERIFICATION FAILED\n".to_string(), Some(0))
                }
                MockAction::Respond(RawVerdict::Unknown) => {
                    ("VERIFICATION UNKNOWN\n".to_string(), Some(0))
                }
                MockAction::Respond(RawVerdict::Error | RawVerdict::Timeout) => {
                    (String::new(), Some(1))
                }
                MockAction::SpawnFail => unreachable!(),
            }
        };
        Ok(RawRun {
            stdout,
            exit_code,
            timed_out: times_out,
            wall_time_s,
        })
    }

    fn verdict_patterns(&self) -> &[(String, RawVerdict)] {
        &self.patterns
    }
}

/// Reconstruct a configuration from rendered flag arguments. Inverse of
/// [`FlagConfiguration::render_flags`] for well-formed argument lists.
fn config_from_args(args: &[String]) -> Option<FlagConfiguration> {
    use crate::flags::{Bound, Strategy};
    let mut config = crate::flags::default_config();
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--context-bound" => {
                config.context_bound = Bound::Finite(args.get(i + 1)?.parse().ok()?);
                i += 2;
            }
            "--unwind" => {
                config.unwind = Bound::Finite(args.get(i + 1)?.parse().ok()?);
                i += 2;
            }
            "--incremental-bmc" => {
                config.strategy = Strategy::Incr;
                i += 1;
            }
            "--k-induction" => {
                config.strategy = Strategy::KInduction;
                i += 1;
            }
            "--k-step" => {
                config.k_step = args.get(i + 1)?.parse().ok()?;
                i += 2;
            }
            "--no-por" => {
                config.no_por = true;
                i += 1;
            }
            "--no-goto-merge" => {
                config.no_goto_merge = true;
                i += 1;
            }
            "--state-hashing" => {
                config.state_hashing = true;
                i += 1;
            }
            "--add-symex-value-sets" => {
                config.add_symex_value_sets = true;
                i += 1;
            }
            _ => return None,
        }
    }
    Some(config.normalized())
}
