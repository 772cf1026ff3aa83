//! Event-rate budget arithmetic and the cluster false-alarm estimate.
//!
//! With the background rate capped, a detection cluster of `m` events inside
//! a short window and a small neighborhood is essentially never produced by
//! background alone: the per-event chance of finding `m - 1` accidental
//! neighbors is `(pixels * rate_per_pixel * period)^(m-1)`.

use crate::error::{Error, Result};
use crate::events::{EventStream, RateEstimate};
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};

/// Systemic rate ceilings, events/second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    /// Above this the stream stability degrades.
    pub max_smooth_rate: f64,
    /// Never operate here.
    pub hazard_rate: f64,
    /// Rule-of-thumb staring cap.
    pub cap: f64,
    /// Pipeline-specific cap `D <= cap`.
    pub pipeline_cap: f64,
}

impl Default for RateBudget {
    fn default() -> Self {
        Self {
            max_smooth_rate: 1e6,
            hazard_rate: 1e7,
            cap: 1e5,
            pipeline_cap: 1e5,
        }
    }
}

impl RateBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.cap <= self.max_smooth_rate && self.max_smooth_rate <= self.hazard_rate) {
            return Err(Error::InvalidArgument(
                "need cap <= max_smooth_rate <= hazard_rate".into(),
            ));
        }
        if !(self.pipeline_cap <= self.cap) {
            return Err(Error::InvalidArgument("need pipeline_cap <= cap".into()));
        }
        Ok(())
    }
}

/// Parameters of the accidental-cluster estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    /// Neighborhood size in pixels (9 = the 3x3 square around the seed).
    pub neighborhood_pixels: f64,
    /// Background rate of a single pixel, events/second.
    pub per_pixel_rate: f64,
    /// Cluster window in seconds (one signal period).
    pub period: f64,
    /// Required cluster size in events.
    pub cluster_size: u32,
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.neighborhood_pixels > 0.0 && self.period > 0.0) || self.per_pixel_rate < 0.0 {
            return Err(Error::InvalidArgument(
                "neighborhood, period must be positive and rate non-negative".into(),
            ));
        }
        if self.cluster_size < 1 {
            return Err(Error::InvalidArgument("cluster_size must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            neighborhood_pixels: 9.0,
            per_pixel_rate: 0.1,
            period: 0.01,
            cluster_size: 5,
        }
    }
}

/// Average rate of a single pixel given the full-frame rate.
pub fn per_pixel_rate(total_rate: f64, width: u32, height: u32) -> Result<f64> {
    let pixels = width as u64 * height as u64;
    if pixels == 0 {
        return Err(Error::InvalidArgument("zero-pixel sensor".into()));
    }
    Ok(total_rate / pixels as f64)
}

/// Per-event probability that a background event seeds an accidental cluster:
/// `(pixels * rate * period)^(m - 1)`.
pub fn cluster_false_alarm(spec: &ClusterSpec) -> Result<f64> {
    spec.validate()?;
    let lambda = spec.neighborhood_pixels * spec.per_pixel_rate * spec.period;
    Ok(lambda.powi(spec.cluster_size as i32 - 1))
}

/// Expected accidental clusters per second at the given total rate, using
/// the exact per-event estimate.
pub fn per_second_false_alarm(spec: &ClusterSpec, total_rate: f64) -> Result<f64> {
    if total_rate < 0.0 {
        return Err(Error::InvalidArgument("total_rate must be non-negative".into()));
    }
    Ok(total_rate * cluster_false_alarm(spec)?)
}

/// Where a measured rate stands against the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetVerdict {
    Ok,
    OverPipeline,
    OverCap,
    Hazard,
}

pub fn check_budget(budget: &RateBudget, estimate: &RateEstimate) -> BudgetVerdict {
    let total = estimate.total_rate();
    if total >= budget.hazard_rate {
        BudgetVerdict::Hazard
    } else if total > budget.cap {
        BudgetVerdict::OverCap
    } else if total > budget.pipeline_cap {
        BudgetVerdict::OverPipeline
    } else {
        BudgetVerdict::Ok
    }
}

/// A stream of background events uniform in time and over the frame, for
/// validating the cluster estimate empirically.
pub fn uniform_background_stream(
    width: u32,
    height: u32,
    total_rate: f64,
    duration: f64,
    seed: u64,
) -> Result<EventStream> {
    if !(duration > 0.0) || total_rate < 0.0 {
        return Err(Error::InvalidArgument(
            "duration must be positive and rate non-negative".into(),
        ));
    }
    let mut rng = CounterRng::from_parts(&[seed, 0x756e_6966_6f72_6d]);
    let n = (total_rate * duration).round() as u64;
    let mut stamps: Vec<u64> = (0..n)
        .map(|_| (rng.next_f64() * duration * 1e6) as u64)
        .collect();
    stamps.sort_unstable();
    let events = stamps
        .into_iter()
        .map(|t_us| crate::events::Event {
            t_us,
            x: (rng.next_f64() * width as f64) as u32,
            y: (rng.next_f64() * height as f64) as u32,
            polarity: if rng.next_f64() < 0.5 {
                crate::events::Polarity::Positive
            } else {
                crate::events::Polarity::Negative
            },
        })
        .collect();
    EventStream::new(width, height, events)
}

/// Fraction of events that seed a cluster: at least `cluster_size - 1`
/// further events within `period` seconds and within the Chebyshev 3x3-style
/// neighborhood of the seed pixel.
pub fn measured_cluster_fraction(stream: &EventStream, spec: &ClusterSpec) -> Result<f64> {
    spec.validate()?;
    let events = stream.events();
    if events.is_empty() {
        return Ok(0.0);
    }
    // Neighborhood radius from the pixel count: 9 -> radius 1.
    let radius = (((spec.neighborhood_pixels.sqrt() - 1.0) / 2.0).round() as i64).max(0);
    let window_us = (spec.period * 1e6) as u64;
    let needed = spec.cluster_size as usize - 1;
    let mut seeds = 0u64;
    for (i, seed_ev) in events.iter().enumerate() {
        let mut found = 0usize;
        for other in &events[i + 1..] {
            if other.t_us - seed_ev.t_us > window_us {
                break;
            }
            let dx = (other.x as i64 - seed_ev.x as i64).abs();
            let dy = (other.y as i64 - seed_ev.y as i64).abs();
            if dx <= radius && dy <= radius {
                found += 1;
                if found >= needed {
                    break;
                }
            }
        }
        if found >= needed {
            seeds += 1;
        }
    }
    Ok(seeds as f64 / events.len() as f64)
}
