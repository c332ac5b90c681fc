//! Games answered by an external process.
//!
//! The parent writes one coalition bitstring per line to the child's stdin
//! and reads one decimal number per line back. Only one request is ever in
//! flight. Closing stdin ends the session and the child is expected to exit
//! with status 0.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use shapkadd_core::{Coalition, Error as CoreError, Game, PlayerCount, Result as CoreResult};

use crate::error::{Error, Result};

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    line: String,
}

pub struct OracleGame {
    n: PlayerCount,
    command: Vec<String>,
    session: Mutex<Session>,
    cache: Mutex<HashMap<u64, f64>>,
    round_trips: AtomicUsize,
}

impl std::fmt::Debug for OracleGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleGame")
            .field("n", &self.n)
            .field("command", &self.command)
            .finish()
    }
}

impl OracleGame {
    /// Spawns `command[0]` with the remaining arguments.
    pub fn spawn(command: &[String], n: PlayerCount) -> Result<Self> {
        let (prog, args) = command
            .split_first()
            .ok_or_else(|| Error::Usage("empty oracle command".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| CoreError::Evaluation(format!("cannot start oracle {prog:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        log::debug!("spawned oracle {command:?} (pid {})", child.id());
        Ok(Self {
            n,
            command: command.to_vec(),
            session: Mutex::new(Session {
                child,
                stdin,
                stdout,
                line: String::new(),
            }),
            cache: Mutex::new(HashMap::new()),
            round_trips: AtomicUsize::new(0),
        })
    }

    /// Requests actually sent to the child (cache hits excluded).
    pub fn round_trips(&self) -> usize {
        self.round_trips.load(Ordering::SeqCst)
    }

    /// Ends the session and checks the child's exit status.
    pub fn close(mut self) -> Result<()> {
        let s = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        drop(s.stdin.take());
        let status = s
            .child
            .wait()
            .map_err(|e| CoreError::Evaluation(format!("oracle wait failed: {e}")))?;
        if !status.success() {
            return Err(CoreError::Evaluation(format!("oracle exited with {status}")).into());
        }
        Ok(())
    }

    fn query(&self, s: &mut Session, c: Coalition) -> CoreResult<f64> {
        let request = c.to_bitstring(self.n);
        let stdin = s
            .stdin
            .as_mut()
            .ok_or_else(|| CoreError::Evaluation("oracle session already closed".into()))?;
        writeln!(stdin, "{request}")
            .and_then(|_| stdin.flush())
            .map_err(|e| {
                CoreError::Evaluation(format!("oracle write failed for {request}: {e}"))
            })?;
        s.line.clear();
        let read = s
            .stdout
            .read_line(&mut s.line)
            .map_err(|e| CoreError::Evaluation(format!("oracle read failed for {request}: {e}")))?;
        if read == 0 {
            return Err(CoreError::Evaluation(format!(
                "oracle exited before answering {request}"
            )));
        }
        self.round_trips.fetch_add(1, Ordering::SeqCst);
        let reply = s.line.trim();
        let v: f64 = reply.parse().map_err(|_| {
            CoreError::Evaluation(format!(
                "oracle replied {reply:?} to {request}, expected a number"
            ))
        })?;
        if !v.is_finite() {
            return Err(CoreError::NonFinite {
                bits: c.bits(),
                value: v,
            });
        }
        Ok(v)
    }
}

impl Game for OracleGame {
    fn players(&self) -> PlayerCount {
        self.n
    }

    fn value(&self, c: Coalition) -> CoreResult<f64> {
        if !c.fits(self.n) {
            return Err(CoreError::CoalitionOutOfRange {
                bits: c.bits(),
                n: self.n.get(),
            });
        }
        let cached = || {
            self.cache
                .lock()
                .unwrap_or_else(|p| p.into_inner())
                .get(&c.bits())
                .copied()
        };
        if let Some(v) = cached() {
            return Ok(v);
        }
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        // another thread may have asked while we waited
        if let Some(v) = cached() {
            return Ok(v);
        }
        let v = self.query(&mut session, c)?;
        self.cache
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(c.bits(), v);
        Ok(v)
    }
}

impl Drop for OracleGame {
    fn drop(&mut self) {
        let s = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        drop(s.stdin.take());
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match s.child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = s.child.kill();
                    let _ = s.child.wait();
                    return;
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            }
        }
    }
}
