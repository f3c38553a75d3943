//! Admissibility checks applied to rendered candidates before querying.

use crate::granularity::{token_texts, Language};
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidityMode {
    /// Every candidate is admissible.
    None,
    /// Balanced `(){}[]` with correct nesting and terminated literals.
    Structural(Language),
    /// Local check passes; the oracle's `valid` field decides.
    OracleDelegated,
    /// `<command> <tempfile>`; exit status 0 means valid.
    ExternalCommand { command: String, timeout: Duration },
}

#[derive(Debug, Clone)]
pub struct ValidityPolicy {
    mode: ValidityMode,
    warnings: Arc<AtomicU64>,
}

impl PartialEq for ValidityPolicy {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode
    }
}

impl Default for ValidityPolicy {
    fn default() -> Self {
        Self::new(ValidityMode::None)
    }
}

impl ValidityPolicy {
    pub fn new(mode: ValidityMode) -> Self {
        Self {
            mode,
            warnings: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn none() -> Self {
        Self::new(ValidityMode::None)
    }

    pub fn structural(language: Language) -> Self {
        Self::new(ValidityMode::Structural(language))
    }

    pub fn external(command: impl Into<String>) -> Self {
        Self::new(ValidityMode::ExternalCommand {
            command: command.into(),
            timeout: crate::oracle::DEFAULT_TIMEOUT,
        })
    }

    pub fn mode(&self) -> &ValidityMode {
        &self.mode
    }

    /// Number of external-validator crashes or timeouts seen so far.
    pub fn warnings(&self) -> u64 {
        self.warnings.load(Ordering::Relaxed)
    }

    pub fn check(&self, text: &str) -> bool {
        match &self.mode {
            ValidityMode::None | ValidityMode::OracleDelegated => true,
            ValidityMode::Structural(language) => structurally_valid(text, *language),
            ValidityMode::ExternalCommand { command, timeout } => match run_external(command, text, *timeout) {
                Ok(valid) => valid,
                Err(reason) => {
                    self.warnings.fetch_add(1, Ordering::Relaxed);
                    log::warn!("validator {command:?} failed, treating candidate as invalid: {reason}");
                    false
                }
            },
        }
    }

    /// Merges the local verdict with an oracle-side `valid` field.
    pub fn accepts_response(&self, oracle_valid: Option<bool>) -> bool {
        oracle_valid != Some(false)
    }
}

/// Delimiter balance over the token stream; lexing failures (unterminated
/// strings or comments) are invalid.
pub fn structurally_valid(text: &str, language: Language) -> bool {
    let Ok(tokens) = token_texts(text, language) else {
        return false;
    };
    let mut stack = Vec::new();
    for tok in &tokens {
        match tok.as_str() {
            "(" | "[" | "{" => stack.push(tok.as_str()),
            ")" | "]" | "}" => {
                let want = match tok.as_str() {
                    ")" => "(",
                    "]" => "[",
                    _ => "{",
                };
                if stack.pop() != Some(want) {
                    return false;
                }
            }
            _ => {}
        }
    }
    stack.is_empty()
}

fn run_external(command: &str, text: &str, timeout: Duration) -> Result<bool, String> {
    let mut file = tempfile::NamedTempFile::new().map_err(|e| e.to_string())?;
    file.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    file.flush().map_err(|e| e.to_string())?;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(format!("{command} \"$1\""))
        .arg("validator")
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let started = Instant::now();
    loop {
        if let Some(status) = child.try_wait().map_err(|e| e.to_string())? {
            // Killed by a signal: crash.
            return match status.code() {
                Some(code) => Ok(code == 0),
                None => Err(format!("validator terminated by signal ({status})")),
            };
        }
        if started.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(format!("validator timed out after {timeout:?}"));
        }
        thread::sleep(Duration::from_millis(2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_examples() {
        let p = ValidityPolicy::structural(Language::JavaLike);
        assert!(p.check("void f(){}"));
        assert!(!p.check("void f(){"));
        assert!(!p.check("void f( {"));
        assert!(!p.check("f(]"));
        assert!(!p.check("s = \"abc"));
        assert!(p.check("s = \"(\";"));
        assert!(p.check("/* ) */ x"));
    }

    #[test]
    fn none_accepts_mutilated_text() {
        let p = ValidityPolicy::none();
        assert!(p.check("id onCreate(Bu save) { s.onCreate(snte);; }"));
        assert!(p.check("}}}((("));
    }

    #[test]
    fn oracle_delegation_uses_response_field() {
        let p = ValidityPolicy::new(ValidityMode::OracleDelegated);
        assert!(p.check("anything {"));
        assert!(!p.accepts_response(Some(false)));
        assert!(p.accepts_response(Some(true)));
        assert!(p.accepts_response(None));
    }

    #[test]
    fn external_command_exit_status() {
        let p = ValidityPolicy::external("grep -q ok");
        assert!(p.check("this is ok"));
        assert!(!p.check("nope"));
        assert_eq!(p.warnings(), 0);
    }

    #[test]
    fn external_command_failures_close() {
        let p = ValidityPolicy::new(ValidityMode::ExternalCommand {
            command: "sleep 5; true".into(),
            timeout: Duration::from_millis(100),
        });
        assert!(!p.check("x"));
        assert_eq!(p.warnings(), 1);

        let crash = ValidityPolicy::external("kill -9 $$; true");
        assert!(!crash.check("x"));
        assert_eq!(crash.warnings(), 1);
    }
}
