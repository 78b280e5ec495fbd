//! Line-oriented serial turning device.
//!
//! Protocol: the host writes `TURN\n`; the device answers `OK\n` once the
//! page has been turned. Any other line from the device is ignored. A
//! background thread reads lines so that the host can wait with a deadline.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, TryRecvError};
use std::thread;
use std::time::{Duration, Instant};

use pageflip_core::device::{Ack, DeviceError, TurnDevice};

use crate::Error;

pub const TURN_COMMAND: &[u8] = b"TURN\n";
pub const ACK_LINE: &str = "OK";
pub const TIMEOUT_ENV: &str = "PAGEFLIP_DEVICE_TIMEOUT_MS";

/// `device_timeout_ms` unless the environment overrides it.
pub fn timeout_from_env(default_ms: u64) -> Result<u64, Error> {
    match std::env::var(TIMEOUT_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&ms| ms > 0)
            .ok_or_else(|| Error::Config(format!("{TIMEOUT_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(default_ms),
    }
}

type Line = std::io::Result<String>;

pub struct SerialDevice<W> {
    writer: W,
    lines: Receiver<Line>,
    timeout: Duration,
}

impl<W> std::fmt::Debug for SerialDevice<W> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SerialDevice").field("timeout", &self.timeout).finish_non_exhaustive()
    }
}

impl SerialDevice<std::fs::File> {
    /// Opens a character device (tty, pty, fifo) for reading and writing.
    /// Line settings such as the baud rate are left as configured.
    pub fn open(path: &Path, timeout_ms: u64) -> Result<Self, Error> {
        let open_err = |source| Error::DeviceOpen { path: path.to_owned(), source };
        let file = OpenOptions::new().read(true).write(true).open(path).map_err(open_err)?;
        let reader = file.try_clone().map_err(open_err)?;
        Ok(Self::from_stream(reader, file, timeout_ms))
    }
}

impl<W: Write> SerialDevice<W> {
    pub fn from_stream<R: Read + Send + 'static>(reader: R, writer: W, timeout_ms: u64) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("pageflip-serial-rx".into())
            .spawn(move || {
                let mut reader = BufReader::new(reader);
                loop {
                    let mut line = String::new();
                    let msg = match reader.read_line(&mut line) {
                        Ok(0) => Err(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "device closed the stream")),
                        Ok(_) => Ok(line.trim_end_matches(['\n', '\r']).to_owned()),
                        Err(e) => Err(e),
                    };
                    let stop = msg.is_err();
                    if tx.send(msg).is_err() || stop {
                        break;
                    }
                }
            })
            .expect("spawn serial reader");
        Self { writer, lines: rx, timeout: Duration::from_millis(timeout_ms) }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Drops acknowledgements that arrived after an earlier timeout.
    fn drain_stale(&mut self) -> Result<(), DeviceError> {
        loop {
            match self.lines.try_recv() {
                Ok(Ok(_)) => continue,
                Ok(Err(e)) => return Err(DeviceError::Io(e.to_string())),
                Err(TryRecvError::Empty) => return Ok(()),
                Err(TryRecvError::Disconnected) => return Err(DeviceError::Io("device reader stopped".into())),
            }
        }
    }
}

impl<W: Write> TurnDevice for SerialDevice<W> {
    fn turn_page(&mut self) -> Result<Ack, DeviceError> {
        self.drain_stale()?;
        self.writer
            .write_all(TURN_COMMAND)
            .and_then(|_| self.writer.flush())
            .map_err(|e| DeviceError::Io(e.to_string()))?;
        let start = Instant::now();
        let timeout_ms = self.timeout.as_millis() as u64;
        loop {
            let remaining = self.timeout.saturating_sub(start.elapsed());
            if remaining.is_zero() {
                return Err(DeviceError::Timeout { timeout_ms });
            }
            match self.lines.recv_timeout(remaining) {
                Ok(Ok(line)) if line.trim() == ACK_LINE => {
                    return Ok(Ack { latency_ms: start.elapsed().as_secs_f64() * 1000.0 });
                }
                Ok(Ok(_)) => continue,
                Ok(Err(e)) => return Err(DeviceError::Io(e.to_string())),
                Err(RecvTimeoutError::Timeout) => return Err(DeviceError::Timeout { timeout_ms }),
                Err(RecvTimeoutError::Disconnected) => return Err(DeviceError::Io("device reader stopped".into())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::os::unix::net::UnixStream;

    #[test]
    fn chatter_before_ok_is_ignored() {
        let (host, mut peer) = UnixStream::pair().unwrap();
        let mut dev = SerialDevice::from_stream(host.try_clone().unwrap(), host, 500);
        let h = thread::spawn(move || {
            let mut buf = [0u8; 5];
            peer.read_exact(&mut buf).unwrap();
            assert_eq!(&buf, TURN_COMMAND);
            peer.write_all(b"busy\r\nOK\r\n").unwrap();
            peer
        });
        assert!(dev.turn_page().is_ok());
        drop(h.join().unwrap());
    }

    #[test]
    fn closed_peer_is_io_error() {
        let (host, peer) = UnixStream::pair().unwrap();
        drop(peer);
        let mut dev = SerialDevice::from_stream(host.try_clone().unwrap(), host, 200);
        thread::sleep(Duration::from_millis(20));
        assert!(matches!(dev.turn_page(), Err(DeviceError::Io(_))));
    }
}
