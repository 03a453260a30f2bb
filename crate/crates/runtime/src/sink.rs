//! Command sinks: newline-delimited JSON records to stdout or a TCP peer.
//!
//! One record per processed frame:
//! `{"t":<ms>,"steering":<s>,"throttle":<th>}` with both values printed to
//! four decimal places. Layout bindings to `emit_command` add event records
//! of the form `{"t":<ms>,"event":"click","zone":"<id>","value":<v>}`.

use std::io::{self, Write};
use std::net::TcpStream;
use std::str::FromStr;

use fizi_core::{DriveCommand, InterfaceEvent};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SinkError {
    #[error("invalid sink {0:?}: expected stdout or tcp:HOST:PORT")]
    Spec(String),

    #[error("sink write failed after retry: {0}")]
    Write(io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SinkSpec {
    Stdout,
    Tcp(String),
}

impl FromStr for SinkSpec {
    type Err = SinkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stdout" {
            return Ok(SinkSpec::Stdout);
        }
        match s.strip_prefix("tcp:") {
            Some(addr) if addr.rsplit_once(':').is_some_and(|(h, p)| !h.is_empty() && p.parse::<u16>().is_ok()) => {
                Ok(SinkSpec::Tcp(addr.to_string()))
            }
            _ => Err(SinkError::Spec(s.to_string())),
        }
    }
}

/// Fixed-point rendering that never prints a negative zero.
pub fn fixed4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

pub fn command_record(cmd: &DriveCommand) -> String {
    format!(
        "{{\"t\":{},\"steering\":{},\"throttle\":{}}}",
        cmd.timestamp_ms,
        fixed4(cmd.steering),
        fixed4(cmd.throttle)
    )
}

pub fn event_record(ev: &InterfaceEvent) -> String {
    format!(
        "{{\"t\":{},\"event\":\"{}\",\"zone\":{},\"value\":{}}}",
        ev.timestamp_ms,
        ev.kind.as_str(),
        serde_json::Value::from(ev.zone_id.as_str()),
        fixed4(ev.value)
    )
}

type Connector = Box<dyn FnMut() -> io::Result<Box<dyn Write + Send>> + Send>;

/// A line writer that reconnects and retries once when a write fails.
pub struct Sink {
    connect: Connector,
    writer: Option<Box<dyn Write + Send>>,
    records: u64,
}

impl Sink {
    pub fn open(spec: &SinkSpec) -> io::Result<Sink> {
        let connect: Connector = match spec.clone() {
            SinkSpec::Stdout => Box::new(|| Ok(Box::new(io::stdout()) as Box<dyn Write + Send>)),
            SinkSpec::Tcp(addr) => Box::new(move || {
                let stream = TcpStream::connect(&addr)?;
                stream.set_nodelay(true)?;
                Ok(Box::new(io::BufWriter::new(stream)) as Box<dyn Write + Send>)
            }),
        };
        Sink::with_connector(connect)
    }

    /// Builds a sink from a connection factory; the first connection is
    /// made eagerly so that an unreachable peer fails at startup.
    pub fn with_connector(mut connect: Connector) -> io::Result<Sink> {
        let writer = connect()?;
        Ok(Sink {
            connect,
            writer: Some(writer),
            records: 0,
        })
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    fn attempt(&mut self, line: &str) -> io::Result<()> {
        if self.writer.is_none() {
            self.writer = Some((self.connect)()?);
        }
        let w = self.writer.as_mut().expect("connected above");
        let result = w
            .write_all(line.as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush());
        if result.is_err() {
            self.writer = None;
        }
        result
    }

    pub fn write_line(&mut self, line: &str) -> Result<(), SinkError> {
        if let Err(first) = self.attempt(line) {
            log::warn!("sink write failed ({first}), retrying once");
            self.attempt(line).map_err(SinkError::Write)?;
        }
        self.records += 1;
        Ok(())
    }
}
