//! Bias registers and their hardware ranges.
//!
//! Four registers are tunable: the low-pass filter bias `fo`, the high-pass
//! filter bias `hpf`, and the two comparator threshold biases `diff_on`
//! (positive events) and `diff_off` (negative events). All are dimensionless
//! integer DAC units. The refractory period is fixed and not a register here.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One setting of the four tunable bias registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BiasTuple {
    /// Low-pass filter bias (raising it passes higher frequencies).
    pub fo: i32,
    /// High-pass filter bias (raising it blocks more low frequencies).
    pub hpf: i32,
    /// Positive-event threshold bias (raising it makes the pixel less sensitive).
    pub diff_on: i32,
    /// Negative-event threshold bias (raising it makes the pixel less sensitive).
    pub diff_off: i32,
}

impl BiasTuple {
    pub fn new(fo: i32, hpf: i32, diff_on: i32, diff_off: i32) -> Self {
        Self { fo, hpf, diff_on, diff_off }
    }

    /// All four registers at zero, the manufacturer-style default point.
    pub fn default_biases() -> Self {
        Self::new(0, 0, 0, 0)
    }

    pub fn validate(&self, ranges: &BiasRanges) -> Result<()> {
        let check = |name: &str, v: i32, lo: i32, hi: i32| {
            if v < lo || v > hi {
                Err(Error::InvalidArgument(format!(
                    "{name} = {v} outside [{lo}, {hi}]"
                )))
            } else {
                Ok(())
            }
        };
        check("fo", self.fo, ranges.fo_min, ranges.fo_max)?;
        check("hpf", self.hpf, ranges.hpf_min, ranges.hpf_max)?;
        check("diff_on", self.diff_on, ranges.diff_on_min, ranges.diff_on_max)?;
        check("diff_off", self.diff_off, ranges.diff_off_min, ranges.diff_off_max)?;
        Ok(())
    }
}

/// Inclusive register limits of the (real or simulated) sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasRanges {
    pub fo_min: i32,
    pub fo_max: i32,
    pub hpf_min: i32,
    pub hpf_max: i32,
    pub diff_on_min: i32,
    pub diff_on_max: i32,
    pub diff_off_min: i32,
    pub diff_off_max: i32,
}

impl BiasRanges {
    pub fn new(
        fo: (i32, i32),
        hpf: (i32, i32),
        diff_on: (i32, i32),
        diff_off: (i32, i32),
    ) -> Result<Self> {
        for (name, (lo, hi)) in [
            ("fo", fo),
            ("hpf", hpf),
            ("diff_on", diff_on),
            ("diff_off", diff_off),
        ] {
            if lo >= hi {
                return Err(Error::InvalidArgument(format!(
                    "{name} range [{lo}, {hi}] needs min < max"
                )));
            }
        }
        Ok(Self {
            fo_min: fo.0,
            fo_max: fo.1,
            hpf_min: hpf.0,
            hpf_max: hpf.1,
            diff_on_min: diff_on.0,
            diff_on_max: diff_on.1,
            diff_off_min: diff_off.0,
            diff_off_max: diff_off.1,
        })
    }

    /// Width of the threshold axes in DAC units.
    pub fn diff_on_span(&self) -> i32 {
        self.diff_on_max - self.diff_on_min
    }

    pub fn diff_off_span(&self) -> i32 {
        self.diff_off_max - self.diff_off_min
    }

    pub fn clamp(&self, b: BiasTuple) -> BiasTuple {
        BiasTuple {
            fo: b.fo.clamp(self.fo_min, self.fo_max),
            hpf: b.hpf.clamp(self.hpf_min, self.hpf_max),
            diff_on: b.diff_on.clamp(self.diff_on_min, self.diff_on_max),
            diff_off: b.diff_off.clamp(self.diff_off_min, self.diff_off_max),
        }
    }
}

impl Default for BiasRanges {
    /// Desk-scale defaults: filter axes bracket the sweep grid, threshold
    /// axes are wide enough that one DAC step moves the background rate by
    /// about a percent near the balanced operating point.
    fn default() -> Self {
        Self {
            fo_min: -100,
            fo_max: 100,
            hpf_min: 0,
            hpf_max: 200,
            diff_on_min: -256,
            diff_on_max: 256,
            diff_off_min: -256,
            diff_off_max: 256,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_accepts_interior_and_rejects_outside() {
        let ranges = BiasRanges::default();
        assert!(BiasTuple::new(0, 0, 0, 0).validate(&ranges).is_ok());
        assert!(BiasTuple::new(-100, 0, 256, -256).validate(&ranges).is_ok());
        assert!(BiasTuple::new(-101, 0, 0, 0).validate(&ranges).is_err());
        assert!(BiasTuple::new(0, 201, 0, 0).validate(&ranges).is_err());
        assert!(BiasTuple::new(0, 0, 257, 0).validate(&ranges).is_err());
    }

    #[test]
    fn degenerate_range_rejected() {
        assert!(BiasRanges::new((0, 0), (0, 1), (0, 1), (0, 1)).is_err());
    }

    #[test]
    fn clamp_projects_into_range() {
        let ranges = BiasRanges::default();
        let b = ranges.clamp(BiasTuple::new(500, -500, 300, -300));
        assert_eq!(b, BiasTuple::new(100, 0, 256, -256));
    }
}
