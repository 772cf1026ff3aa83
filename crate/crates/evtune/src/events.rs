//! Event streams, windowed rate estimation, and signal-region counting.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sign of the brightness change that triggered an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// On-disk encoding: 1 = positive, 0 = negative.
    pub fn to_disk(self) -> u8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        }
    }

    pub fn from_disk(v: u8) -> Option<Self> {
        match v {
            1 => Some(Polarity::Positive),
            0 => Some(Polarity::Negative),
            _ => None,
        }
    }
}

/// One polarized brightness-change report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Timestamp in microseconds.
    pub t_us: u64,
    /// Pixel column.
    pub x: u32,
    /// Pixel row.
    pub y: u32,
    pub polarity: Polarity,
}

impl Event {
    pub fn t_seconds(&self) -> f64 {
        self.t_us as f64 * 1e-6
    }
}

/// A time-sorted sequence of events from a `width` x `height` sensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStream {
    pub width: u32,
    pub height: u32,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream, checking the sort and coordinate invariants.
    pub fn new(width: u32, height: u32, events: Vec<Event>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "stream dimensions must be positive".into(),
            ));
        }
        let mut last = 0u64;
        for (i, ev) in events.iter().enumerate() {
            if ev.t_us < last {
                return Err(Error::Validation(format!(
                    "event {i} timestamp {} precedes {}",
                    ev.t_us, last
                )));
            }
            if ev.x >= width || ev.y >= height {
                return Err(Error::Validation(format!(
                    "event {i} at ({}, {}) outside {width}x{height}",
                    ev.x, ev.y
                )));
            }
            last = ev.t_us;
        }
        Ok(Self { width, height, events })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, events: Vec::new() }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.events.last().map_or(0.0, Event::t_seconds)
    }
}

/// Per-polarity background event rates measured over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Positive events per second.
    pub pos_rate: f64,
    /// Negative events per second.
    pub neg_rate: f64,
    /// Window length in seconds.
    pub window: f64,
    pub n_pos: f64,
    pub n_neg: f64,
}

impl RateEstimate {
    /// An estimate derived from event counts over `window` seconds.
    pub fn from_counts(n_pos: f64, n_neg: f64, window: f64) -> Self {
        Self {
            pos_rate: n_pos / window,
            neg_rate: n_neg / window,
            window,
            n_pos,
            n_neg,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.pos_rate + self.neg_rate
    }
}

/// A circular pixel region (Euclidean distance, inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

impl RegionOfInterest {
    pub fn new(cx: f64, cy: f64, radius: f64) -> Result<Self> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "radius must be non-negative, got {radius}"
            )));
        }
        Ok(Self { cx, cy, radius })
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        let dx = x as f64 - self.cx;
        let dy = y as f64 - self.cy;
        (dx * dx + dy * dy).sqrt() <= self.radius
    }
}

/// Counts events with `t` in `[t_start, t_start + window)` split by polarity
/// and converts to rates.
pub fn estimate_rates(stream: &EventStream, t_start: f64, window: f64) -> Result<RateEstimate> {
    if !(window > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "window must be positive, got {window}"
        )));
    }
    let t_end = t_start + window;
    let mut n_pos = 0u64;
    let mut n_neg = 0u64;
    for ev in stream.events() {
        let t = ev.t_seconds();
        if t < t_start {
            continue;
        }
        if t >= t_end {
            break;
        }
        match ev.polarity {
            Polarity::Positive => n_pos += 1,
            Polarity::Negative => n_neg += 1,
        }
    }
    Ok(RateEstimate::from_counts(n_pos as f64, n_neg as f64, window))
}

/// Events of one polarity inside the region during `[0, t_span)`, divided by
/// the number of signal periods recorded.
pub fn count_signal_events(
    stream: &EventStream,
    roi: &RegionOfInterest,
    polarity: Polarity,
    t_span: f64,
    n_periods: u32,
) -> Result<f64> {
    if n_periods < 1 {
        return Err(Error::InvalidArgument("n_periods must be >= 1".into()));
    }
    if !(t_span > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_span must be positive, got {t_span}"
        )));
    }
    let mut count = 0u64;
    for ev in stream.events() {
        if ev.t_seconds() >= t_span {
            break;
        }
        if ev.polarity == polarity && roi.contains(ev.x, ev.y) {
            count += 1;
        }
    }
    Ok(count as f64 / n_periods as f64)
}
