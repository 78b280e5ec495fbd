//! Session loop: tracker source → filter → policy → device, with an event
//! log that is sufficient to evaluate turn timing offline.
//!
//! The session clock is the prediction timestamp, never the wall clock, so a
//! given source, configuration and mock device always produce the same log.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::device::{DeviceError, TurnDevice};
use crate::filter::{reset_for_page, FilterConfig, FilterOutcome, ReadingPosition, RejectReason, TrackerPrediction};
use crate::layout::PageLayout;
use crate::policy::{PolicyConfig, PolicyKind, PolicyState, TurnDecision};
use crate::sim::SyntheticSample;

pub const NO_NEXT_PAGE: &str = "no_next_page";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub rate_hz: f64,
    /// Predictions are ignored for this long after a physical turn.
    pub blackout_sec: f64,
    pub device_timeout_ms: u64,
    pub filter: FilterConfig,
    pub policy: PolicyConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            rate_hz: 20.0,
            blackout_sec: 1.0,
            device_timeout_ms: 500,
            filter: FilterConfig::default(),
            policy: PolicyConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rate_hz > 0.0) || !(self.blackout_sec > 0.0) || self.device_timeout_ms == 0 {
            return Err("rate_hz, blackout_sec and device_timeout_ms must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.filter.backward_conf) || !(self.filter.backtrack_eps >= 0.0) {
            return Err("backward_conf must be in [0, 1] and backtrack_eps >= 0".into());
        }
        self.policy.validate().map_err(String::from)
    }
}

/// One prediction as delivered to the session. `page` is set when the source
/// knows which page the prediction refers to (synthetic streams); such
/// predictions are skipped while a different page is on the stand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceItem {
    pub page: Option<usize>,
    pub prediction: TrackerPrediction,
}

impl From<TrackerPrediction> for SourceItem {
    fn from(prediction: TrackerPrediction) -> Self {
        Self { page: None, prediction }
    }
}

impl From<&SyntheticSample> for SourceItem {
    fn from(s: &SyntheticSample) -> Self {
        Self { page: Some(s.page), prediction: s.prediction }
    }
}

impl From<SyntheticSample> for SourceItem {
    fn from(s: SyntheticSample) -> Self {
        Self::from(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Blackout,
    OtherPage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageTurnEvent {
    pub t: f64,
    pub from_page: usize,
    pub to_page: usize,
    pub policy: PolicyKind,
    pub trigger: ReadingPosition,
    pub device_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionEvent {
    Accept {
        t: f64,
        page: usize,
        system: usize,
        x: f64,
        frac_in_system: f64,
        frac_page: f64,
    },
    Reject {
        t: f64,
        page: usize,
        reason: RejectReason,
    },
    Skip {
        t: f64,
        page: usize,
        reason: SkipReason,
    },
    Turn(PageTurnEvent),
    DeviceAck {
        t: f64,
        page: usize,
        latency_ms: f64,
    },
    DeviceTimeout {
        t: f64,
        page: usize,
        timeout_ms: u64,
    },
    PageReset {
        t: f64,
        page: usize,
    },
    Warning {
        t: f64,
        page: usize,
        message: String,
    },
}

impl SessionEvent {
    pub fn t(&self) -> f64 {
        match self {
            SessionEvent::Accept { t, .. }
            | SessionEvent::Reject { t, .. }
            | SessionEvent::Skip { t, .. }
            | SessionEvent::DeviceAck { t, .. }
            | SessionEvent::DeviceTimeout { t, .. }
            | SessionEvent::PageReset { t, .. }
            | SessionEvent::Warning { t, .. } => *t,
            SessionEvent::Turn(e) => e.t,
        }
    }

    /// Page on the stand when the event happened (the source page for turns).
    pub fn page(&self) -> usize {
        match self {
            SessionEvent::Accept { page, .. }
            | SessionEvent::Reject { page, .. }
            | SessionEvent::Skip { page, .. }
            | SessionEvent::DeviceAck { page, .. }
            | SessionEvent::DeviceTimeout { page, .. }
            | SessionEvent::PageReset { page, .. }
            | SessionEvent::Warning { page, .. } => *page,
            SessionEvent::Turn(e) => e.from_page,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub events: Vec<SessionEvent>,
}

impl SessionLog {
    pub fn turns(&self) -> impl Iterator<Item = &PageTurnEvent> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Turn(t) => Some(t),
            _ => None,
        })
    }

    pub fn count(&self, pred: impl Fn(&SessionEvent) -> bool) -> usize {
        self.events.iter().filter(|e| pred(e)).count()
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Warning { message, .. } => Some(message.as_str()),
            _ => None,
        })
    }
}

/// Runs one session over `layouts` (one per page, in order) until the source
/// is exhausted.
pub fn run_session<D, I>(layouts: &[PageLayout], source: I, cfg: &SessionConfig, device: &mut D) -> SessionLog
where
    D: TurnDevice + ?Sized,
    I: IntoIterator,
    I::Item: Into<SourceItem>,
{
    assert!(!layouts.is_empty(), "a session needs at least one page");
    let mut log = SessionLog::default();
    let mut page = 0usize;
    let mut filter = reset_for_page(0, &layouts[0]);
    let mut policy = PolicyState::new();
    let mut blackout_until: Option<f64> = None;
    let mut started = false;

    for item in source {
        let SourceItem { page: item_page, prediction: pred } = item.into();
        let t = pred.t;
        if !started {
            log.events.push(SessionEvent::PageReset { t, page });
            started = true;
        }
        if blackout_until.is_some_and(|end| t < end) {
            log.events.push(SessionEvent::Skip { t, page, reason: SkipReason::Blackout });
            continue;
        }
        if item_page.is_some_and(|p| p != page) {
            log.events.push(SessionEvent::Skip { t, page, reason: SkipReason::OtherPage });
            continue;
        }

        let layout = &layouts[page];
        let (next, outcome) = filter.step(&pred, layout, &cfg.filter);
        filter = next;
        let pos = match outcome {
            FilterOutcome::Reject(reason) => {
                log.events.push(SessionEvent::Reject { t, page, reason });
                continue;
            }
            FilterOutcome::Accept(pos) => pos,
        };
        log.events.push(SessionEvent::Accept {
            t,
            page,
            system: pos.system_index,
            x: pos.x,
            frac_in_system: pos.frac_in_system,
            frac_page: pos.frac_page,
        });

        let (next, decision) = core::mem::take(&mut policy).step(&pos, layout, &cfg.policy);
        policy = next;
        let TurnDecision::Turn(trigger) = decision else { continue };

        if page + 1 >= layouts.len() {
            log.events.push(SessionEvent::Warning { t, page, message: NO_NEXT_PAGE.into() });
            continue;
        }
        match device.turn_page() {
            Ok(ack) => {
                log.events.push(SessionEvent::DeviceAck { t, page, latency_ms: ack.latency_ms });
                log.events.push(SessionEvent::Turn(PageTurnEvent {
                    t,
                    from_page: page,
                    to_page: page + 1,
                    policy: cfg.policy.kind,
                    trigger,
                    device_latency_ms: ack.latency_ms,
                }));
                page += 1;
                filter = reset_for_page(page, &layouts[page]);
                policy = PolicyState::new();
                blackout_until = Some(t + cfg.blackout_sec);
                log.events.push(SessionEvent::PageReset { t, page });
            }
            Err(err) => {
                // the page stays; the next qualifying trigger retries
                policy.turned = false;
                let event = match err {
                    DeviceError::Timeout { timeout_ms } => SessionEvent::DeviceTimeout { t, page, timeout_ms },
                    DeviceError::Io(msg) => SessionEvent::Warning { t, page, message: format!("device_io: {msg}") },
                };
                log.events.push(event);
            }
        }
    }
    if !started {
        log.events.push(SessionEvent::PageReset { t: 0.0, page: 0 });
    }
    log
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("log turns page {page} but the oracle covers only {oracle_pages} pages")]
    LogMismatch { page: usize, oracle_pages: usize },
    #[error("log turns page {page} more than once")]
    DuplicateTurn { page: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageMetric {
    pub page: usize,
    pub oracle_t: f64,
    pub turn_t: Option<f64>,
    /// `turn_t - oracle_t`; positive means late.
    pub offset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnMetrics {
    pub pages: Vec<PageMetric>,
    pub missed_pages: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub skipped: usize,
}

impl TurnMetrics {
    pub fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        self.pages.iter().filter_map(|p| p.offset)
    }

    pub fn mean_abs_offset(&self) -> Option<f64> {
        let offsets: Vec<f64> = self.offsets().collect();
        (!offsets.is_empty()).then(|| offsets.iter().map(|o| o.abs()).sum::<f64>() / offsets.len() as f64)
    }
}

/// Compares the turns in `log` with per-page oracle turn times (index =
/// page, one entry per non-final page).
pub fn evaluate_turns(log: &SessionLog, oracle_times: &[f64]) -> Result<TurnMetrics, EvalError> {
    let mut turn_t: Vec<Option<f64>> = vec![None; oracle_times.len()];
    for turn in log.turns() {
        let page = turn.from_page;
        let slot = turn_t
            .get_mut(page)
            .ok_or(EvalError::LogMismatch { page, oracle_pages: oracle_times.len() })?;
        if slot.is_some() {
            return Err(EvalError::DuplicateTurn { page });
        }
        *slot = Some(turn.t);
    }
    let pages: Vec<PageMetric> = oracle_times
        .iter()
        .zip(&turn_t)
        .enumerate()
        .map(|(page, (&oracle_t, &turn_t))| PageMetric { page, oracle_t, turn_t, offset: turn_t.map(|t| t - oracle_t) })
        .collect();
    Ok(TurnMetrics {
        missed_pages: pages.iter().filter(|p| p.turn_t.is_none()).count(),
        pages,
        accepted: log.count(|e| matches!(e, SessionEvent::Accept { .. })),
        rejected: log.count(|e| matches!(e, SessionEvent::Reject { .. })),
        skipped: log.count(|e| matches!(e, SessionEvent::Skip { .. })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{Ack, MockDevice};
    use crate::layout::System;
    use crate::sim::{oracle_turn_time, synth_trajectory, SyntheticConfig};

    fn layout(page: usize, n: usize) -> PageLayout {
        let systems = (0..n)
            .map(|i| System {
                index: i,
                y_top: 100 + 300 * i,
                y_bottom: 220 + 300 * i,
                x_left: 80,
                x_right: 920,
                x_fallback: false,
                band_count: 10,
            })
            .collect();
        PageLayout { page_index: page, width: 1000, height: 300 + 300 * n, systems, warnings: vec![] }
    }

    fn turn(t: f64, from_page: usize) -> SessionEvent {
        SessionEvent::Turn(PageTurnEvent {
            t,
            from_page,
            to_page: from_page + 1,
            policy: PolicyKind::Halfway,
            trigger: ReadingPosition { page_index: from_page, system_index: 1, x: 0.0, frac_in_system: 0.5, frac_page: 0.75, t },
            device_latency_ms: 0.0,
        })
    }

    #[test]
    fn two_pages_noiseless_halfway() {
        let layouts = vec![layout(0, 2), layout(1, 2)];
        let sim = SyntheticConfig::noiseless(10.0);
        let source = synth_trajectory(&layouts, &sim);
        let cfg = SessionConfig::default();
        let mut dev = MockDevice::new(20.0);
        let log = run_session(&layouts, &source, &cfg, &mut dev);
        let turns: Vec<_> = log.turns().collect();
        assert_eq!(turns.len(), 1);
        let oracle = oracle_turn_time(&layouts[0], &sim, &cfg.policy);
        let delay = turns[0].t - oracle;
        let budget = (cfg.policy.confirm_count as f64 + 1.0) / sim.rate_hz;
        assert!(delay >= -1e-3 && delay <= budget, "delay {delay}");
        assert_eq!(turns[0].device_latency_ms, 20.0);
        // the final page triggers as well and is suppressed
        assert_eq!(log.warnings().filter(|w| *w == NO_NEXT_PAGE).count(), 1);
        assert_eq!(dev.turns(), 1);
    }

    #[test]
    fn single_page_never_turns() {
        let layouts = vec![layout(0, 3)];
        let source = synth_trajectory(&layouts, &SyntheticConfig::noiseless(6.0));
        let log = run_session(&layouts, &source, &SessionConfig::default(), &mut MockDevice::new(0.0));
        assert_eq!(log.turns().count(), 0);
        assert!(log.warnings().any(|w| w == NO_NEXT_PAGE));
    }

    #[test]
    fn noisy_run_turns_like_noiseless() {
        let layouts = vec![layout(0, 3), layout(1, 3), layout(2, 3)];
        let cfg = SessionConfig::default();
        let clean = run_session(&layouts, synth_trajectory(&layouts, &SyntheticConfig::noiseless(10.0)), &cfg, &mut MockDevice::new(0.0));
        let noisy_cfg = SyntheticConfig { seconds_per_page: 10.0, seed: 7, ..Default::default() };
        let noisy = run_session(&layouts, synth_trajectory(&layouts, &noisy_cfg), &cfg, &mut MockDevice::new(0.0));
        assert_eq!(clean.turns().count(), noisy.turns().count());
        assert_eq!(noisy.turns().count(), 2);
    }

    #[test]
    fn timeout_keeps_page_and_retries() {
        let layouts = vec![layout(0, 2), layout(1, 2)];
        let source = synth_trajectory(&layouts, &SyntheticConfig::noiseless(10.0));
        let mut dev = MockDevice::new(0.0).with_script([Err(DeviceError::Timeout { timeout_ms: 500 })]);
        let log = run_session(&layouts, &source, &SessionConfig::default(), &mut dev);
        let timeout_at = log
            .events
            .iter()
            .position(|e| matches!(e, SessionEvent::DeviceTimeout { .. }))
            .expect("a timeout is logged");
        // nothing between the timeout and the retry changes the page
        let turn_at = log.events.iter().position(|e| matches!(e, SessionEvent::Turn(_))).unwrap();
        assert!(turn_at > timeout_at);
        assert!(log.events[timeout_at..turn_at].iter().all(|e| e.page() == 0));
        let turn = log.turns().next().unwrap();
        assert!((turn.t - log.events[timeout_at].t() - 0.05).abs() < 1e-9);
        assert_eq!(dev.calls(), 2);
    }

    #[test]
    fn io_error_is_a_warning() {
        let layouts = vec![layout(0, 2), layout(1, 2)];
        let source = synth_trajectory(&layouts, &SyntheticConfig::noiseless(10.0));
        let mut dev = MockDevice::new(0.0).with_script([Err(DeviceError::Io("broken pipe".into())), Ok(Ack { latency_ms: 1.0 })]);
        let log = run_session(&layouts, &source, &SessionConfig::default(), &mut dev);
        assert!(log.warnings().any(|w| w.starts_with("device_io")));
        assert_eq!(log.turns().count(), 1);
    }

    #[test]
    fn blackout_has_no_accepts() {
        let layouts = vec![layout(0, 2), layout(1, 2)];
        let source: Vec<SourceItem> = synth_trajectory(&layouts, &SyntheticConfig::noiseless(10.0))
            .iter()
            .map(|s| SourceItem { page: None, ..SourceItem::from(s) })
            .collect();
        let cfg = SessionConfig::default();
        let log = run_session(&layouts, source, &cfg, &mut MockDevice::new(0.0));
        let turn_t = log.turns().next().unwrap().t;
        for e in &log.events {
            if let SessionEvent::Accept { t, .. } = e {
                assert!(!(*t > turn_t && *t < turn_t + cfg.blackout_sec));
            }
        }
        assert!(log.count(|e| matches!(e, SessionEvent::Skip { reason: SkipReason::Blackout, .. })) > 0);
    }

    #[test]
    fn empty_source() {
        let log = run_session(&[layout(0, 2)], Vec::<TrackerPrediction>::new(), &SessionConfig::default(), &mut MockDevice::new(0.0));
        assert_eq!(log.events, vec![SessionEvent::PageReset { t: 0.0, page: 0 }]);
    }

    #[test]
    fn evaluation() {
        let log = SessionLog { events: vec![turn(7.65, 0)] };
        let m = evaluate_turns(&log, &[7.5, 17.5]).unwrap();
        assert!((m.pages[0].offset.unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(m.missed_pages, 1);
        let empty = evaluate_turns(&SessionLog::default(), &[7.5, 17.5]).unwrap();
        assert_eq!(empty.missed_pages, 2);
        assert_eq!(
            evaluate_turns(&SessionLog { events: vec![turn(30.0, 2)] }, &[7.5, 17.5]),
            Err(EvalError::LogMismatch { page: 2, oracle_pages: 2 })
        );
        assert_eq!(
            evaluate_turns(&SessionLog { events: vec![turn(7.6, 0), turn(7.7, 0)] }, &[7.5]),
            Err(EvalError::DuplicateTurn { page: 0 })
        );
    }
}
