//! Closed-form background-rate and signal surfaces.
//!
//! The rate family is
//!
//! ```text
//! ber_n = f(x, y) = S(L, H) * T(x) * (1 + eps * T(y))
//! ber_p = g(x, y) = S(L, H) * T(y) * (1 + eps * T(x))
//! ```
//!
//! with `T(s) = s / (1 - s)` on the open unit square, where `x` and `y` are
//! the normalized negative threshold biases (`x` from `diff_off`, `y` from
//! `diff_on`; raising a bias lowers its coordinate) and
//! `S(L, H) = s0 * 2^(fo / sigma_fo) * 2^(-hpf / sigma_hpf)` rescales both
//! polarities with the filter biases.
//!
//! On the open interior this family has, by one-line proofs:
//! vanishing limits at the low edges, divergence at the high edges,
//! `f_x - g_x = S * T'(x) > 0`, `g_y - f_y = S * T'(y) > 0`, all four
//! partials positive, and Jacobian
//! `J = S^2 * T'(x) * T'(y) * (1 + eps*T(x) + eps*T(y)) > 0`.
//! On the balanced diagonal `f = g = C` the quadratic
//! `eps*T^2 + T - C/S = 0` gives a closed-form solution used as a test
//! oracle throughout.

use crate::bias::{BiasRanges, BiasTuple};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Threshold biases mapped to the open unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedDomain {
    /// Normalized negative-threshold coordinate, from `diff_off`.
    pub x: f64,
    /// Normalized positive-threshold coordinate, from `diff_on`.
    pub y: f64,
}

fn t_map(s: f64) -> f64 {
    s / (1.0 - s)
}

fn t_map_deriv(s: f64) -> f64 {
    let d = 1.0 - s;
    1.0 / (d * d)
}

/// Inverse of `T`: the `s` with `T(s) = t`.
pub(crate) fn t_map_inverse(t: f64) -> f64 {
    t / (1.0 + t)
}

/// Partial derivatives of `(ber_n, ber_p)` with respect to the normalized
/// coordinates `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partials {
    pub f_x: f64,
    pub f_y: f64,
    pub g_x: f64,
    pub g_y: f64,
}

impl Partials {
    pub fn jacobian(&self) -> f64 {
        self.f_x * self.g_y - self.f_y * self.g_x
    }
}

/// Parameters of the closed-form background-rate family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRateModel {
    /// Cross-polarity coupling, in (0, 1).
    pub epsilon: f64,
    /// Base scale in events/second at `fo = hpf = 0`.
    pub s0: f64,
    /// DAC units per rate doubling along the `fo` axis.
    pub sigma_fo: f64,
    /// DAC units per rate halving along the `hpf` axis.
    pub sigma_hpf: f64,
    #[serde(default)]
    pub ranges: BiasRanges,
}

impl Default for AnalyticRateModel {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            s0: 1000.0,
            sigma_fo: 20.0,
            sigma_hpf: 20.0,
            ranges: BiasRanges::default(),
        }
    }
}

impl AnalyticRateModel {
    pub fn new(
        epsilon: f64,
        s0: f64,
        sigma_fo: f64,
        sigma_hpf: f64,
        ranges: BiasRanges,
    ) -> Result<Self> {
        let model = Self { epsilon, s0, sigma_fo, sigma_hpf, ranges };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.s0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "s0 must be positive, got {}",
                self.s0
            )));
        }
        if !(self.sigma_fo > 0.0 && self.sigma_hpf > 0.0) {
            return Err(Error::InvalidArgument(
                "sigma_fo and sigma_hpf must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Filter-bias scale factor `S(L, H)`.
    pub fn scale(&self, fo: i32, hpf: i32) -> f64 {
        self.s0 * (fo as f64 / self.sigma_fo - hpf as f64 / self.sigma_hpf).exp2()
    }

    /// Maps threshold biases to the open unit square; boundary values are a
    /// domain error.
    pub fn normalized(&self, biases: &BiasTuple) -> Result<NormalizedDomain> {
        biases.validate(&self.ranges)?;
        let x = (self.ranges.diff_off_max - biases.diff_off) as f64
            / self.ranges.diff_off_span() as f64;
        let y = (self.ranges.diff_on_max - biases.diff_on) as f64
            / self.ranges.diff_on_span() as f64;
        if x <= 0.0 || x >= 1.0 || y <= 0.0 || y >= 1.0 {
            return Err(Error::Domain(format!(
                "threshold biases on the range boundary: normalized ({x}, {y})"
            )));
        }
        Ok(NormalizedDomain { x, y })
    }

    /// As `normalized` but projecting boundary values into the closed square,
    /// for surfaces defined on the closure (the signal model).
    pub fn normalized_clamped(&self, biases: &BiasTuple) -> NormalizedDomain {
        let clamped = self.ranges.clamp(*biases);
        let x = (self.ranges.diff_off_max - clamped.diff_off) as f64
            / self.ranges.diff_off_span() as f64;
        let y = (self.ranges.diff_on_max - clamped.diff_on) as f64
            / self.ranges.diff_on_span() as f64;
        NormalizedDomain { x, y }
    }

    /// `(ber_n, ber_p)` at the given biases.
    pub fn eval_ber(&self, biases: &BiasTuple) -> Result<(f64, f64)> {
        let n = self.normalized(biases)?;
        Ok(self.at(biases.fo, biases.hpf).both(n.x, n.y))
    }

    /// Partial derivatives at the given biases, in normalized coordinates.
    pub fn eval_partials(&self, biases: &BiasTuple) -> Result<Partials> {
        let n = self.normalized(biases)?;
        Ok(self.at(biases.fo, biases.hpf).partials(n.x, n.y))
    }

    /// The continuous rate surface at fixed filter biases.
    pub fn at(&self, fo: i32, hpf: i32) -> RateSurface {
        RateSurface { epsilon: self.epsilon, scale: self.scale(fo, hpf) }
    }
}

/// The two-argument rate surface `(f, g)` at fixed `(L, H)`, over continuous
/// normalized coordinates.
#[derive(Debug, Clone, Copy)]
pub struct RateSurface {
    epsilon: f64,
    scale: f64,
}

impl RateSurface {
    /// A surface with an explicit scale, for oracle tests (`S = 1`).
    pub fn with_scale(epsilon: f64, scale: f64) -> Self {
        Self { epsilon, scale }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `f(x, y) = ber_n`.
    pub fn f(&self, x: f64, y: f64) -> f64 {
        self.scale * t_map(x) * (1.0 + self.epsilon * t_map(y))
    }

    /// `g(x, y) = ber_p`.
    pub fn g(&self, x: f64, y: f64) -> f64 {
        self.scale * t_map(y) * (1.0 + self.epsilon * t_map(x))
    }

    pub fn both(&self, x: f64, y: f64) -> (f64, f64) {
        (self.f(x, y), self.g(x, y))
    }

    pub fn partials(&self, x: f64, y: f64) -> Partials {
        let (tx, ty) = (t_map(x), t_map(y));
        let (dx, dy) = (t_map_deriv(x), t_map_deriv(y));
        Partials {
            f_x: self.scale * dx * (1.0 + self.epsilon * ty),
            f_y: self.scale * tx * self.epsilon * dy,
            g_x: self.scale * ty * self.epsilon * dx,
            g_y: self.scale * dy * (1.0 + self.epsilon * tx),
        }
    }

    /// Closed-form balanced-diagonal solution of `f = g = C` (requires the
    /// symmetric family, which this type is by construction).
    pub fn balanced_closed_form(&self, c: f64) -> f64 {
        let ratio = c / self.scale;
        let t = if self.epsilon > 0.0 {
            (-1.0 + (1.0 + 4.0 * self.epsilon * ratio).sqrt()) / (2.0 * self.epsilon)
        } else {
            ratio
        };
        t_map_inverse(t)
    }
}

/// Smooth stand-in for the detected signal strength: a unimodal bump over the
/// filter plane times a factor that strictly rewards sensitivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSignalModel {
    pub peak_fo: f64,
    pub peak_hpf: f64,
    pub width_fo: f64,
    pub width_hpf: f64,
    /// Events per period at the peak with maximal sensitivity.
    pub amplitude: f64,
    /// Strictly positive decay exponent in the normalized coordinates.
    pub sensitivity_decay: f64,
    #[serde(default)]
    pub ranges: BiasRanges,
}

impl Default for AnalyticSignalModel {
    fn default() -> Self {
        Self {
            peak_fo: 0.0,
            peak_hpf: 80.0,
            width_fo: 40.0,
            width_hpf: 60.0,
            amplitude: 30.0,
            sensitivity_decay: 3.0,
            ranges: BiasRanges::default(),
        }
    }
}

impl AnalyticSignalModel {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude < 0.0 {
            return Err(Error::InvalidArgument("amplitude must be >= 0".into()));
        }
        if !(self.width_fo > 0.0 && self.width_hpf > 0.0) {
            return Err(Error::InvalidArgument("widths must be positive".into()));
        }
        if self.sensitivity_decay < 0.0 {
            return Err(Error::InvalidArgument(
                "sensitivity_decay must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Signal strength in events per period at integer biases.
    pub fn eval_sig(&self, biases: &BiasTuple) -> f64 {
        let rate_helper = AnalyticRateModel {
            ranges: self.ranges,
            ..AnalyticRateModel::default()
        };
        let n = rate_helper.normalized_clamped(biases);
        self.eval_continuous(biases.fo as f64, biases.hpf as f64, n.x, n.y)
    }

    /// Continuous evaluation used when walking the balanced curve.
    pub fn eval_continuous(&self, fo: f64, hpf: f64, x: f64, y: f64) -> f64 {
        let du = (fo - self.peak_fo) / self.width_fo;
        let dv = (hpf - self.peak_hpf) / self.width_hpf;
        let bump = (-0.5 * (du * du + dv * dv)).exp();
        let decay = (self.sensitivity_decay * (x + y - 2.0)).exp();
        self.amplitude * bump * decay
    }
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of sampling the proposition's hypotheses over the surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub grid_resolution: usize,
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Samples limit behavior near the boundary, the derivative orderings, and
/// Jacobian positivity on an interior grid. Failures are report entries.
pub fn verify_hypotheses(model: &AnalyticRateModel, grid_resolution: usize) -> Result<HypothesisReport> {
    if grid_resolution < 2 {
        return Err(Error::InvalidArgument(
            "grid_resolution must be at least 2".into(),
        ));
    }
    let surface = model.at(0, 0);
    let s = surface.scale();
    let mut checks = Vec::new();

    // Limits are taken at fixed interior values of the other coordinate.
    let edge = 1e-6;
    let tol = 1e-3;
    let anchors = [0.1, 0.5, 0.9];

    let mut worst_low = f64::NEG_INFINITY;
    let mut worst_high = f64::INFINITY;
    for &a in &anchors {
        worst_low = worst_low
            .max(surface.f(edge, a) / s)
            .max(surface.g(a, edge) / s);
        worst_high = worst_high
            .min(surface.f(1.0 - edge, a) / s)
            .min(surface.g(a, 1.0 - edge) / s);
    }
    checks.push(HypothesisCheck {
        name: "vanishing_low_edge".into(),
        passed: worst_low < tol,
        detail: format!("max f/S, g/S near low edges = {worst_low:.3e} (tol {tol:.0e})"),
    });
    checks.push(HypothesisCheck {
        name: "divergent_high_edge".into(),
        passed: worst_high > 1.0 / tol,
        detail: format!("min f/S, g/S near high edges = {worst_high:.3e} (floor {:.0e})", 1.0 / tol),
    });

    // Derivative orderings and Jacobian positivity on the interior grid.
    let mut ordering_ok = true;
    let mut jacobian_ok = true;
    let mut min_gap_x = f64::INFINITY;
    let mut min_gap_y = f64::INFINITY;
    let mut min_jacobian = f64::INFINITY;
    let n = grid_resolution;
    for i in 0..n {
        for j in 0..n {
            let x = (i as f64 + 1.0) / (n as f64 + 1.0);
            let y = (j as f64 + 1.0) / (n as f64 + 1.0);
            let p = surface.partials(x, y);
            ordering_ok &= p.f_x > p.g_x && p.g_x > 0.0 && p.g_y > p.f_y && p.f_y > 0.0;
            min_gap_x = min_gap_x.min(p.f_x - p.g_x).min(p.g_x);
            min_gap_y = min_gap_y.min(p.g_y - p.f_y).min(p.f_y);
            let j_det = p.jacobian();
            jacobian_ok &= j_det > 0.0;
            min_jacobian = min_jacobian.min(j_det);
        }
    }
    checks.push(HypothesisCheck {
        name: "derivative_ordering".into(),
        passed: ordering_ok,
        detail: format!(
            "min(f_x - g_x, g_x) = {min_gap_x:.3e}, min(g_y - f_y, f_y) = {min_gap_y:.3e}"
        ),
    });
    checks.push(HypothesisCheck {
        name: "jacobian_positive".into(),
        passed: jacobian_ok,
        detail: format!("min Jacobian on grid = {min_jacobian:.3e}"),
    });

    Ok(HypothesisReport { grid_resolution, checks })
}
