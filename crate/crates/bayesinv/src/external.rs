//! Restorators running in a child process.
//!
//! Wire protocol, one request in flight per process:
//! request `RESTORE n strength\n` followed by `n` little-endian f64;
//! reply `OK n\n` followed by `n` little-endian f64, or `ERR message\n`.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use bayesinv_core::error::{Error, Result};
use bayesinv_core::implicit::{Restorator, Restored};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

enum Reply {
    Ok(Vec<f64>),
    Err(String),
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<io::Result<Reply>>,
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A restorator backed by an external command. The child is started on first
/// use; every chain gets its own child through `instance_for_chain`.
pub struct ExternalRestorator {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    session: Mutex<Option<Session>>,
}

impl ExternalRestorator {
    /// Splits `command` on whitespace into program and arguments.
    pub fn new(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::invalid("empty restorator command"))?;
        Ok(Self::with_args(program, parts.collect()))
    }

    pub fn with_args(program: String, args: Vec<String>) -> Self {
        ExternalRestorator {
            program,
            args,
            timeout: DEFAULT_TIMEOUT,
            session: Mutex::new(None),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn spawn(&self) -> Result<Session> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Restoration(format!("cannot start '{}': {e}", self.command_line())))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let reply = read_reply(&mut reader);
                let stop = reply.is_err();
                if tx.send(reply).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Session {
            child,
            stdin,
            replies: rx,
        })
    }

    fn call(&self, session: &mut Session, x: &[f64], strength: f64) -> Result<Vec<f64>> {
        let mut fail = |what: String| {
            // a child that closed its pipes is usually about to exit
            let mut status = None;
            for _ in 0..20 {
                status = session.child.try_wait().ok().flatten();
                if status.is_some() {
                    break;
                }
                thread::sleep(Duration::from_millis(5));
            }
            let status = status.map_or("running".to_string(), |s| s.to_string());
            Error::Restoration(format!("restorator '{}' {what} (child status: {status})", self.command_line()))
        };
        let mut buf = format!("RESTORE {} {}\n", x.len(), strength).into_bytes();
        for v in x {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if let Err(e) = session.stdin.write_all(&buf).and_then(|_| session.stdin.flush()) {
            return Err(fail(format!("write failed: {e}")));
        }
        match session.replies.recv_timeout(self.timeout) {
            Ok(Ok(Reply::Ok(v))) if v.len() == x.len() => Ok(v),
            Ok(Ok(Reply::Ok(v))) => Err(fail(format!("returned {} values for {}", v.len(), x.len()))),
            Ok(Ok(Reply::Err(m))) => Err(Error::Restoration(format!("restorator '{}' reported: {m}", self.command_line()))),
            Ok(Err(e)) => Err(fail(format!("sent a malformed reply: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(fail(format!("timed out after {:?}", self.timeout))),
            Err(RecvTimeoutError::Disconnected) => Err(fail("closed its output".into())),
        }
    }
}

impl Restorator for ExternalRestorator {
    fn id(&self) -> String {
        format!("external({})", self.command_line())
    }

    fn restore(&self, x: &[f64], strength: f64) -> Result<Restored> {
        let mut guard = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let session = guard.as_mut().expect("session started");
        match self.call(session, x, strength) {
            Ok(v) => Ok(Restored { x: v, info: None }),
            Err(e) => {
                // a failed child is not reused
                if !matches!(&e, Error::Restoration(m) if m.contains("reported:")) {
                    *guard = None;
                }
                Err(e)
            }
        }
    }

    fn instance_for_chain(&self) -> Result<Option<Arc<dyn Restorator>>> {
        Ok(Some(Arc::new(
            ExternalRestorator::with_args(self.program.clone(), self.args.clone()).with_timeout(self.timeout),
        )))
    }
}

fn read_header(r: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim_end_matches(['\n', '\r']).to_string()))
}

fn read_floats(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

fn read_reply(r: &mut impl BufRead) -> io::Result<Reply> {
    let line = read_header(r)?.ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "end of stream"))?;
    if let Some(msg) = line.strip_prefix("ERR") {
        return Ok(Reply::Err(msg.trim().to_string()));
    }
    let n = line
        .strip_prefix("OK ")
        .and_then(|s| s.trim().parse::<usize>().ok())
        .ok_or_else(|| invalid(format!("unexpected reply header '{line}'")))?;
    Ok(Reply::Ok(read_floats(r, n)?))
}

/// Child-side loop: answers requests with `f` until the input closes.
pub fn serve(
    input: &mut impl BufRead,
    output: &mut impl Write,
    mut f: impl FnMut(&[f64], f64) -> std::result::Result<Vec<f64>, String>,
) -> io::Result<()> {
    while let Some(line) = read_header(input)? {
        let mut parts = line.split_whitespace();
        let (n, s) = match (parts.next(), parts.next(), parts.next()) {
            (Some("RESTORE"), Some(n), Some(s)) => match (n.parse::<usize>(), s.parse::<f64>()) {
                (Ok(n), Ok(s)) => (n, s),
                _ => {
                    writeln!(output, "ERR malformed request '{line}'")?;
                    output.flush()?;
                    return Ok(());
                }
            },
            _ => {
                writeln!(output, "ERR malformed request '{line}'")?;
                output.flush()?;
                return Ok(());
            }
        };
        let x = read_floats(input, n)?;
        match f(&x, s) {
            Ok(y) => {
                let mut buf = format!("OK {}\n", y.len()).into_bytes();
                for v in &y {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
                output.write_all(&buf)?;
            }
            Err(m) => writeln!(output, "ERR {}", m.replace('\n', " "))?,
        }
        output.flush()?;
    }
    Ok(())
}
