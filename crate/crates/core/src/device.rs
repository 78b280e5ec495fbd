//! Page-turning device contract.
//!
//! The device only turns forward; there is deliberately no way to ask for a
//! backward turn. Calls are blocking and serialized by the caller.

use alloc::collections::VecDeque;
use alloc::string::String;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ack {
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeviceError {
    #[error("device did not acknowledge within {timeout_ms} ms")]
    Timeout { timeout_ms: u64 },
    #[error("device i/o failure: {0}")]
    Io(String),
}

pub trait TurnDevice {
    /// Turns one page forward and waits for the acknowledgement.
    fn turn_page(&mut self) -> Result<Ack, DeviceError>;
}

impl<D: TurnDevice + ?Sized> TurnDevice for &mut D {
    fn turn_page(&mut self) -> Result<Ack, DeviceError> {
        (**self).turn_page()
    }
}

impl<D: TurnDevice + ?Sized> TurnDevice for alloc::boxed::Box<D> {
    fn turn_page(&mut self) -> Result<Ack, DeviceError> {
        (**self).turn_page()
    }
}

/// In-memory device. Acknowledges with a fixed simulated latency, unless a
/// scripted outcome is queued.
#[derive(Debug, Clone, Default)]
pub struct MockDevice {
    latency_ms: f64,
    script: VecDeque<Result<Ack, DeviceError>>,
    turns: usize,
    calls: usize,
}

impl MockDevice {
    pub fn new(latency_ms: f64) -> Self {
        Self { latency_ms, ..Self::default() }
    }

    /// Queues outcomes returned by the next calls, in order.
    pub fn with_script(mut self, outcomes: impl IntoIterator<Item = Result<Ack, DeviceError>>) -> Self {
        self.script.extend(outcomes);
        self
    }

    /// Successful turns so far.
    pub fn turns(&self) -> usize {
        self.turns
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl TurnDevice for MockDevice {
    fn turn_page(&mut self) -> Result<Ack, DeviceError> {
        self.calls += 1;
        let outcome = self.script.pop_front().unwrap_or(Ok(Ack { latency_ms: self.latency_ms }));
        if outcome.is_ok() {
            self.turns += 1;
        }
        outcome
    }
}
