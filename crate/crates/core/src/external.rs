//! Line protocol for out-of-process models.
//!
//! Each request is one line of space-separated decimal reals (the factor
//! values of a single point); each response is one line holding a single
//! decimal real. Closing the request stream ends the session.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::problem::{ModelError, ModelEvaluator};

/// Formats one request line. `{:e}` round-trips every f64 exactly.
pub fn format_request(x: &[f64]) -> String {
    let mut line = x
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ");
    line.push('\n');
    line
}

pub fn parse_response(line: &str) -> Result<f64, ModelError> {
    line.trim()
        .parse::<f64>()
        .map_err(|e| ModelError(format!("bad response line `{}`: {e}", line.trim())))
}

struct Channel<R, W> {
    reader: R,
    writer: W,
}

/// A model reached over any request writer / response reader pair.
pub struct LineProtocolModel<R, W> {
    channel: Mutex<Channel<R, W>>,
    dimension: Option<usize>,
    child: Option<Mutex<Child>>,
}

impl<R: BufRead + Send, W: Write + Send> LineProtocolModel<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self {
            channel: Mutex::new(Channel { reader, writer }),
            dimension: None,
            child: None,
        }
    }

    pub fn with_dimension(mut self, k: usize) -> Self {
        self.dimension = Some(k);
        self
    }
}

impl LineProtocolModel<BufReader<ChildStdout>, ChildStdin> {
    /// Spawns `program args...` and talks to it over its stdin/stdout.
    pub fn spawn(program: &str, args: &[&str]) -> std::io::Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut model = Self::new(BufReader::new(stdout), stdin);
        model.child = Some(Mutex::new(child));
        Ok(model)
    }
}

impl<R, W> Drop for LineProtocolModel<R, W> {
    fn drop(&mut self) {
        if let Some(child) = self.child.take() {
            let mut child = child.into_inner().unwrap_or_else(|e| e.into_inner());
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl<R: BufRead + Send, W: Write + Send> ModelEvaluator for LineProtocolModel<R, W> {
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.try_evaluate(x).unwrap_or(f64::NAN)
    }

    fn try_evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        let mut channel = self
            .channel
            .lock()
            .map_err(|_| ModelError("model channel poisoned".into()))?;
        let io_err = |e: std::io::Error| ModelError(e.to_string());
        channel
            .writer
            .write_all(format_request(x).as_bytes())
            .map_err(io_err)?;
        channel.writer.flush().map_err(io_err)?;
        let mut line = String::new();
        let n = channel.reader.read_line(&mut line).map_err(io_err)?;
        if n == 0 {
            return Err(ModelError("model closed its output stream".into()));
        }
        parse_response(&line)
    }

    // A remote process may keep state between requests; evaluate in order.
    fn is_deterministic(&self) -> bool {
        false
    }

    fn dimension(&self) -> Option<usize> {
        self.dimension
    }
}
