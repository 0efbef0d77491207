//! Crash-only oracle over an external compiler command.

use std::io::Write as _;
use std::process::Command;
use std::time::Duration;

use regex::Regex;

use super::trace::{ExecutionResult, Phase};

pub struct ExternalCompiler {
    /// Shell command; `{file}` is replaced by the source path.
    pub template: String,
    /// Output lines matching this count as crashes even on exit status 0.
    pub crash_pattern: Option<Regex>,
    pub timeout: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("cannot run external command: {0}")]
    Io(#[from] std::io::Error),
}

impl ExternalCompiler {
    pub fn new(template: &str) -> ExternalCompiler {
        ExternalCompiler { template: template.to_string(), crash_pattern: None, timeout: Duration::from_secs(10) }
    }

    /// Compiles `source`; a nonzero exit or a crash-pattern match yields a
    /// `CompilerCrash` with the matching line as its location.
    pub fn run(&self, source: &str) -> Result<ExecutionResult, ExternalError> {
        let mut f = tempfile::Builder::new().suffix(".tl").tempfile()?;
        f.write_all(source.as_bytes())?;
        f.flush()?;
        let path = f.path().display().to_string();
        let cmd = self.template.replace("{file}", &shell_quote(&path));
        let mut child = Command::new("sh").arg("-c").arg(&cmd).stdout(std::process::Stdio::piped()).stderr(std::process::Stdio::piped()).spawn()?;
        let start = std::time::Instant::now();
        loop {
            if child.try_wait()?.is_some() {
                break;
            }
            if start.elapsed() > self.timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(ExecutionResult::crash(Phase::Backend, "timeout", "external"));
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        let out = child.wait_with_output()?;
        let text = format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
        if let Some(re) = &self.crash_pattern {
            if let Some(line) = text.lines().find(|l| re.is_match(l)) {
                return Ok(ExecutionResult::crash(Phase::Backend, "pattern", line.trim()));
            }
        }
        if !out.status.success() {
            let loc = match out.status.code() {
                Some(c) => format!("exit {c}"),
                None => "signal".to_string(),
            };
            return Ok(ExecutionResult::crash(Phase::Backend, "exit", &loc));
        }
        Ok(ExecutionResult { outcome: super::Outcome::Completed, trace: Vec::new(), events: 0, digest: 0 })
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Outcome;

    #[test]
    fn exit_status_and_pattern() {
        let ok = ExternalCompiler::new("cat {file} > /dev/null").run("fun main() {}").unwrap();
        assert_eq!(ok.outcome, Outcome::Completed);
        let bad = ExternalCompiler::new("exit 3").run("").unwrap();
        assert!(matches!(bad.outcome, Outcome::CompilerCrash { ref location, .. } if location == "exit 3"));
        let mut c = ExternalCompiler::new("echo 'internal error: boom'");
        c.crash_pattern = Some(Regex::new("internal error").unwrap());
        assert!(matches!(c.run("").unwrap().outcome, Outcome::CompilerCrash { .. }));
    }
}
