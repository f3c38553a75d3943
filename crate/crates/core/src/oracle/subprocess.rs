//! Oracle worker speaking newline-delimited JSON over stdin/stdout.
//!
//! One request is in flight at a time. A worker that dies, closes its
//! stdout, or misses the timeout is restarted once and the request retried;
//! a second failure is returned to the caller.

use super::wire::{Request, Response};
use super::{OracleError, Prediction, Predictor, Query, Transport, DEFAULT_TIMEOUT};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(command: &str) -> Result<Self, OracleError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::Transport(format!("cannot spawn {command:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exchange(&mut self, request: &Request, timeout: Duration) -> Result<Prediction, OracleError> {
        let mut line = request.to_line();
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| OracleError::Transport(format!("write to worker: {e}")))?;
        let reply = match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(OracleError::Transport(format!("read from worker: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(OracleError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(OracleError::Transport("worker closed its stdout".into()))
            }
        };
        Response::parse(&reply)?.into_prediction(request.id)
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Predictor backed by a long-running worker process (`sh -c <command>`).
pub struct SubprocessOracle {
    command: String,
    timeout: Duration,
    worker: Option<Worker>,
    next_id: u64,
    restarts: u64,
}

impl SubprocessOracle {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout: DEFAULT_TIMEOUT,
            worker: None,
            next_id: 0,
            restarts: 0,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn restarts(&self) -> u64 {
        self.restarts
    }

    fn worker(&mut self) -> Result<&mut Worker, OracleError> {
        if self.worker.is_none() {
            self.worker = Some(Worker::spawn(&self.command)?);
        }
        Ok(self.worker.as_mut().expect("worker was just spawned"))
    }
}

impl Predictor for SubprocessOracle {
    fn predict(&mut self, query: Query<'_>) -> Result<Prediction, OracleError> {
        self.next_id += 1;
        let request = Request {
            id: self.next_id,
            text: query.text.to_string(),
            units: query.units.iter().map(|u| u.text.clone()).collect(),
        };
        let timeout = self.timeout;
        match self.worker()?.exchange(&request, timeout) {
            Ok(p) => Ok(p),
            // Protocol violations are not retried; the stream may be out of
            // step, so the worker is discarded.
            Err(e @ (OracleError::Malformed(_) | OracleError::IdMismatch { .. })) => {
                self.worker = None;
                Err(e)
            }
            Err(first) => {
                log::warn!("oracle worker failed ({first}); restarting once");
                self.worker = None;
                self.restarts += 1;
                self.worker()?.exchange(&request, timeout).inspect_err(|_| {
                    self.worker = None;
                })
            }
        }
    }

    fn transport(&self) -> Transport {
        Transport::Subprocess
    }
}
