//! Runs SMT-LIB scripts on an external solver process, one process per
//! query.

use std::io::{ErrorKind, Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use tree_sentinel_core::smt::RunError;
use tree_sentinel_core::ScriptRunner;

pub const DEFAULT_SOLVER_CMD: &str = "z3 -in";
pub const SOLVER_ENV: &str = "TREE_SENTINEL_SOLVER";

pub struct ProcessRunner {
    program: String,
    args: Vec<String>,
    per_call_timeout: Duration,
    deadline: Option<Instant>,
    solver_time: Duration,
    calls: usize,
    dump_dir: Option<PathBuf>,
}

impl ProcessRunner {
    /// `cmd` is split on whitespace; the script is written to the child's
    /// standard input. The budget clock starts now. The budget is only
    /// consulted between calls, so a session can overrun it by at most one
    /// per-call timeout.
    pub fn new(cmd: &str, per_call_timeout: Duration, total_budget: Duration) -> Result<Self, RunError> {
        let mut words = cmd.split_whitespace().map(String::from);
        let program = words.next().ok_or_else(|| RunError::NotFound(String::from("(empty solver command)")))?;
        Ok(ProcessRunner {
            program,
            args: words.collect(),
            per_call_timeout,
            deadline: Instant::now().checked_add(total_budget),
            solver_time: Duration::ZERO,
            calls: 0,
            dump_dir: None,
        })
    }

    /// Writes every script to `dir/query-NNNNN.smt2` before running it.
    pub fn dump_scripts_to(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dump_dir = Some(dir.into());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl ScriptRunner for ProcessRunner {
    fn run(&mut self, script: &str) -> Result<String, RunError> {
        self.calls += 1;
        if let Some(dir) = &self.dump_dir {
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join(format!("query-{:05}.smt2", self.calls)), script))
                .map_err(|e| RunError::Io(format!("dumping script: {e}")))?;
        }
        let started = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| match e.kind() {
                ErrorKind::NotFound | ErrorKind::PermissionDenied => RunError::NotFound(self.program.clone()),
                _ => RunError::Io(e.to_string()),
            })?;

        let mut stdin = child.stdin.take().expect("stdin is piped");
        let input = script.to_owned();
        let writer = thread::spawn(move || stdin.write_all(input.as_bytes()));
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = thread::spawn(move || {
            let mut out = String::new();
            stdout.read_to_string(&mut out).map(|_| out)
        });

        let status = child.wait_timeout(self.per_call_timeout).map_err(|e| RunError::Io(e.to_string()))?;
        let finished = status.is_some();
        if !finished {
            let _ = child.kill();
            let _ = child.wait();
        }
        self.solver_time += started.elapsed();
        let written = writer.join().map_err(|_| RunError::Io(String::from("stdin writer panicked")))?;
        let output = reader.join().map_err(|_| RunError::Io(String::from("stdout reader panicked")))?;
        if !finished {
            return Err(RunError::Timeout);
        }
        // a solver may exit before reading all input (e.g. on a parse error);
        // its output still says what went wrong
        let output = output.map_err(|e| RunError::Io(e.to_string()))?;
        if let Err(e) = written {
            if output.trim().is_empty() {
                return Err(RunError::Io(e.to_string()));
            }
        }
        Ok(output)
    }

    fn budget_exhausted(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn solver_time(&self) -> Duration {
        self.solver_time
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_command_is_rejected() {
        assert!(matches!(ProcessRunner::new("  ", Duration::from_secs(1), Duration::from_secs(1)), Err(RunError::NotFound(_))));
    }

    #[test]
    fn missing_program_is_not_found() {
        let mut r = ProcessRunner::new("definitely-not-a-solver-binary -in", Duration::from_secs(1), Duration::from_secs(5)).unwrap();
        assert_eq!(r.run("(check-sat)"), Err(RunError::NotFound(String::from("definitely-not-a-solver-binary"))));
    }

    #[test]
    fn slow_solver_times_out() {
        let mut r = ProcessRunner::new("sleep 5", Duration::from_millis(200), Duration::from_secs(60)).unwrap();
        let started = Instant::now();
        assert_eq!(r.run(""), Err(RunError::Timeout));
        assert!(started.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn zero_budget_is_exhausted_at_once() {
        let r = ProcessRunner::new("z3 -in", Duration::from_secs(1), Duration::ZERO).unwrap();
        assert!(r.budget_exhausted());
    }
}
