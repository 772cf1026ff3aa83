//! Pixel-level event-camera simulation.
//!
//! Each pixel runs a logarithmic photoreceptor followed by a bias-controlled
//! first-order low-pass filter, a high-pass stage formed by subtracting a
//! slow running average, and an ON/OFF comparator against a stored reference
//! with a fixed refractory period:
//!
//! ```text
//! sample  = ln(intensity + floor) + drift + white noise
//! v_lpf  += alpha_lpf * (sample - v_lpf)        cutoff f_lpf0 * 2^(fo / lambda_lpf)
//! v_avg  += alpha_hpf * (v_lpf - v_avg)         cutoff f_hpf0 * 2^(hpf / lambda_hpf)
//! h       = v_lpf - v_avg + readout noise
//! h - v_ref >= theta_on  -> positive event, v_ref = h
//! v_ref - h >= theta_off -> negative event, v_ref = h
//! ```
//!
//! with `theta = theta0 * 2^(diff / lambda_theta)`, so lowering a threshold
//! bias makes the pixel more sensitive.
//!
//! Background activity has three components, all scaled by `noise_sigma`:
//! white photoreceptor noise (shaped by both filters), a slow
//! Ornstein-Uhlenbeck drift standing in for illumination wander and air
//! turbulence (removed by the high-pass stage), and white comparator-referred
//! readout noise (untouched by the filters). The drift term is what makes
//! raising `hpf` cheap in rate, and the readout floor is what eventually
//! punishes starving the photoreceptor bandwidth; together they give the
//! filter plane its interior optimum. Per-pixel comparator mismatch
//! (lognormal, `mismatch_sigma`) spreads the thresholds so the aggregate
//! rate responds smoothly, a few percent per DAC step, rather than with the
//! cliff of a single Gaussian tail.
//!
//! All randomness is drawn from per-pixel counter-seeded streams, so results
//! are bit-identical regardless of how pixels are partitioned across threads.

use crate::bias::BiasTuple;
use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Polarity};
use crate::rng::CounterRng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Additive intensity floor inside the logarithm.
pub const INTENSITY_FLOOR: f64 = 1e-9;

const STREAM_PIXEL_SETUP: u64 = 0x7365_7475_70;
const STREAM_PIXEL_NOISE: u64 = 0x6e6f_6973_65;

/// Sensor and pixel-model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub width: u32,
    pub height: u32,
    /// Simulation step in seconds.
    pub dt: f64,
    /// Fixed refractory period in seconds.
    pub refractory: f64,
    /// White photoreceptor noise, log-intensity units per step.
    pub noise_sigma: f64,
    /// Stationary drift std as a multiple of `noise_sigma`.
    pub drift_ratio: f64,
    /// Drift corner frequency in Hz.
    pub drift_corner_hz: f64,
    /// Comparator-referred white noise as a multiple of `noise_sigma`.
    pub readout_ratio: f64,
    /// Lognormal sigma of per-pixel threshold mismatch.
    pub mismatch_sigma: f64,
    /// Photoreceptor low-pass cutoff at `fo = 0`, Hz.
    pub f_lpf0: f64,
    /// High-pass cutoff at `hpf = 0`, Hz.
    pub f_hpf0: f64,
    /// DAC units per octave of low-pass cutoff.
    pub lambda_lpf: f64,
    /// DAC units per octave of high-pass cutoff.
    pub lambda_hpf: f64,
    /// Comparator threshold at `diff = 0`, log-intensity units.
    pub theta0: f64,
    /// DAC units per octave of threshold.
    pub lambda_theta: f64,
    pub seed: u64,
    /// Refuse simulations above this many pixel-steps.
    pub max_pixel_steps: u64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 128,
            height: 72,
            dt: 1e-4,
            refractory: 50e-6,
            noise_sigma: 0.08,
            drift_ratio: 1.25,
            drift_corner_hz: 2.0,
            readout_ratio: 0.18,
            mismatch_sigma: 0.5,
            f_lpf0: 300.0,
            f_hpf0: 0.1,
            lambda_lpf: 25.0,
            lambda_hpf: 10.0,
            theta0: 0.15,
            lambda_theta: 30.0,
            seed: 1,
            max_pixel_steps: 2_000_000_000,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("sensor must have pixels".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.refractory < 0.0 {
            return Err(Error::InvalidArgument("refractory must be >= 0".into()));
        }
        if !(self.f_lpf0 > 0.0 && self.f_hpf0 > 0.0 && self.theta0 > 0.0) {
            return Err(Error::InvalidArgument(
                "filter cutoffs and theta0 must be positive".into(),
            ));
        }
        if !(self.lambda_lpf > 0.0 && self.lambda_hpf > 0.0 && self.lambda_theta > 0.0) {
            return Err(Error::InvalidArgument("lambda constants must be positive".into()));
        }
        if self.noise_sigma < 0.0
            || self.drift_ratio < 0.0
            || self.readout_ratio < 0.0
            || self.mismatch_sigma < 0.0
        {
            return Err(Error::InvalidArgument("noise parameters must be >= 0".into()));
        }
        Ok(())
    }
}

/// The staring scene: a dark background plus a rectified-sinusoid lamp spot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub background_intensity: f64,
    pub lamp_center: (f64, f64),
    /// Gaussian footprint of the lamp spot, pixels.
    pub lamp_sigma: f64,
    pub lamp_amplitude: f64,
    /// Electrical grid frequency; the rectified lamp flickers at twice this.
    pub grid_hz: f64,
    pub duration: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            background_intensity: 1.0,
            lamp_center: (64.0, 36.0),
            lamp_sigma: 2.0,
            lamp_amplitude: 1.5,
            grid_hz: 50.0,
            duration: 0.5,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lamp_amplitude < 0.0 || self.background_intensity < 0.0 {
            return Err(Error::InvalidArgument("intensities must be >= 0".into()));
        }
        if !(self.lamp_sigma > 0.0) {
            return Err(Error::InvalidArgument("lamp_sigma must be positive".into()));
        }
        if !(self.grid_hz > 0.0) {
            return Err(Error::InvalidArgument("grid_hz must be positive".into()));
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        Ok(())
    }

    /// Spatial lamp gain at a pixel.
    pub fn lamp_gain(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.lamp_center.0;
        let dy = y - self.lamp_center.1;
        self.lamp_amplitude * (-(dx * dx + dy * dy) / (2.0 * self.lamp_sigma * self.lamp_sigma)).exp()
    }

    /// Period of the rectified lamp waveform in seconds.
    pub fn signal_period(&self) -> f64 {
        1.0 / (2.0 * self.grid_hz)
    }
}

/// Linear scene intensity at pixel `(x, y)` and time `t`.
pub fn scene_intensity(scene: &SceneConfig, x: f64, y: f64, t: f64) -> f64 {
    scene.background_intensity
        + scene.lamp_gain(x, y) * (std::f64::consts::TAU * scene.grid_hz * t).sin().abs()
}

/// Filter and comparator state of one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelState {
    /// Photoreceptor low-pass output, log-intensity units.
    pub v_lpf: f64,
    /// Slow average subtracted by the high-pass stage.
    pub v_avg: f64,
    /// Comparator reference level.
    pub v_ref: f64,
    /// Earliest time the pixel may fire again, seconds.
    pub refractory_until: f64,
}

impl PixelState {
    /// A settled pixel at the given log-intensity level.
    pub fn settled(level: f64) -> Self {
        Self { v_lpf: level, v_avg: level, v_ref: 0.0, refractory_until: -1.0 }
    }
}

/// Per-pixel constants derived from biases and camera config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelParams {
    pub alpha_lpf: f64,
    pub alpha_hpf: f64,
    pub theta_on: f64,
    pub theta_off: f64,
    pub refractory: f64,
}

impl PixelParams {
    pub fn from_biases(biases: &BiasTuple, config: &CameraConfig) -> Self {
        let f_lpf = config.f_lpf0 * (biases.fo as f64 / config.lambda_lpf).exp2();
        let f_hpf = config.f_hpf0 * (biases.hpf as f64 / config.lambda_hpf).exp2();
        Self {
            alpha_lpf: iir_alpha(f_lpf, config.dt),
            alpha_hpf: iir_alpha(f_hpf, config.dt),
            theta_on: config.theta0 * (biases.diff_on as f64 / config.lambda_theta).exp2(),
            theta_off: config.theta0 * (biases.diff_off as f64 / config.lambda_theta).exp2(),
            refractory: config.refractory,
        }
    }

    fn with_mismatch(&self, m_on: f64, m_off: f64) -> Self {
        Self {
            theta_on: self.theta_on * m_on,
            theta_off: self.theta_off * m_off,
            ..*self
        }
    }
}

/// First-order IIR coefficient for a cutoff at `f` Hz sampled every `dt`.
fn iir_alpha(f: f64, dt: f64) -> f64 {
    1.0 - (-std::f64::consts::TAU * f * dt).exp()
}

/// Advances one pixel by one step. `log_sample` is the photoreceptor input
/// (log intensity plus any caller-applied pre-filter noise); `readout_noise`
/// is the comparator-referred draw for this step. Emits at most one event.
#[inline]
pub fn step_pixel(
    state: &mut PixelState,
    log_sample: f64,
    readout_noise: f64,
    t: f64,
    params: &PixelParams,
) -> Option<Polarity> {
    state.v_lpf += params.alpha_lpf * (log_sample - state.v_lpf);
    state.v_avg += params.alpha_hpf * (state.v_lpf - state.v_avg);
    let h = state.v_lpf - state.v_avg + readout_noise;
    if t < state.refractory_until {
        return None;
    }
    if h - state.v_ref >= params.theta_on {
        state.v_ref = h;
        state.refractory_until = t + params.refractory;
        Some(Polarity::Positive)
    } else if state.v_ref - h >= params.theta_off {
        state.v_ref = h;
        state.refractory_until = t + params.refractory;
        Some(Polarity::Negative)
    } else {
        None
    }
}

/// Runs the full sensor over the scene. Deterministic for a fixed
/// `(scene, biases, config)` triple including `config.seed`, independent of
/// thread count.
pub fn simulate(scene: &SceneConfig, biases: &BiasTuple, config: &CameraConfig) -> Result<EventStream> {
    scene.validate()?;
    config.validate()?;
    if scene.duration < config.dt {
        return Err(Error::InvalidArgument(format!(
            "duration {} shorter than one step {}",
            scene.duration, config.dt
        )));
    }
    let n_steps = (scene.duration / config.dt).round() as u64;
    let n_pixels = config.width as u64 * config.height as u64;
    let requested = n_steps.saturating_mul(n_pixels);
    if requested > config.max_pixel_steps {
        return Err(Error::SizeGuard { requested, cap: config.max_pixel_steps });
    }

    let base_params = PixelParams::from_biases(biases, config);
    let ln_bg = (scene.background_intensity + INTENSITY_FLOOR).ln();

    // The rectified lamp waveform sampled once per step, shared by all pixels.
    let waveform: Vec<f64> = (0..n_steps)
        .map(|i| {
            (std::f64::consts::TAU * scene.grid_hz * (i as f64 * config.dt))
                .sin()
                .abs()
        })
        .collect();

    let sigma_white = config.noise_sigma;
    let sigma_drift = config.drift_ratio * config.noise_sigma;
    let sigma_readout = config.readout_ratio * config.noise_sigma;
    let drift_rho = (-std::f64::consts::TAU * config.drift_corner_hz * config.dt).exp();
    let drift_step = sigma_drift * (1.0 - drift_rho * drift_rho).sqrt();
    let dt_us = config.dt * 1e6;

    let per_pixel: Vec<Vec<Event>> = (0..n_pixels)
        .into_par_iter()
        .map(|pixel| {
            let px = (pixel % config.width as u64) as u32;
            let py = (pixel / config.width as u64) as u32;

            let mut setup = CounterRng::from_parts(&[config.seed, pixel, STREAM_PIXEL_SETUP]);
            let z_on: f64 = setup.sample(StandardNormal);
            let z_off: f64 = setup.sample(StandardNormal);
            let z_drift: f64 = setup.sample(StandardNormal);
            let params = base_params.with_mismatch(
                (config.mismatch_sigma * z_on).exp(),
                (config.mismatch_sigma * z_off).exp(),
            );
            let mut drift = sigma_drift * z_drift;

            let gain = scene.lamp_gain(px as f64, py as f64);
            let lit = gain > scene.background_intensity * 1e-12 + 1e-300;

            let mut rng = CounterRng::from_parts(&[config.seed, pixel, STREAM_PIXEL_NOISE]);
            let base0 = if lit {
                (scene.background_intensity + gain * waveform[0] + INTENSITY_FLOOR).ln()
            } else {
                ln_bg
            };
            let mut state = PixelState::settled(base0 + drift);
            let mut events = Vec::new();

            for (i, &w) in waveform.iter().enumerate() {
                let z_white: f64 = rng.sample(StandardNormal);
                let z_read: f64 = rng.sample(StandardNormal);
                let z_ou: f64 = rng.sample(StandardNormal);
                drift = drift_rho * drift + drift_step * z_ou;

                let base = if lit {
                    (scene.background_intensity + gain * w + INTENSITY_FLOOR).ln()
                } else {
                    ln_bg
                };
                let t = i as f64 * config.dt;
                if let Some(polarity) = step_pixel(
                    &mut state,
                    base + drift + sigma_white * z_white,
                    sigma_readout * z_read,
                    t,
                    &params,
                ) {
                    events.push(Event {
                        t_us: (i as f64 * dt_us).round() as u64,
                        x: px,
                        y: py,
                        polarity,
                    });
                }
            }
            events
        })
        .collect();

    let mut events: Vec<Event> = per_pixel.into_iter().flatten().collect();
    events.sort_unstable_by_key(|e| (e.t_us, e.y, e.x, e.polarity.to_disk()));
    EventStream::new(config.width, config.height, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_scene(duration: f64) -> SceneConfig {
        SceneConfig {
            lamp_amplitude: 0.0,
            duration,
            ..SceneConfig::default()
        }
    }

    fn small_camera() -> CameraConfig {
        CameraConfig { width: 24, height: 18, ..CameraConfig::default() }
    }

    #[test]
    fn scene_intensity_far_from_lamp_is_background() {
        let scene = SceneConfig::default();
        let v = scene_intensity(&scene, 0.0, 0.0, 0.0025);
        assert!((v - scene.background_intensity).abs() / scene.background_intensity < 1e-6);
    }

    #[test]
    fn scene_intensity_peaks_at_center() {
        let scene = SceneConfig::default();
        // sin(2 pi * 50 * t) = 1 at t = 5 ms.
        let v = scene_intensity(&scene, scene.lamp_center.0, scene.lamp_center.1, 0.005);
        assert!((v - (scene.background_intensity + scene.lamp_amplitude)).abs() < 1e-12);
    }

    #[test]
    fn rectified_waveform_period_is_half_cycle() {
        let scene = SceneConfig::default();
        assert!((scene.signal_period() - 0.01).abs() < 1e-15);
        for k in 0..20 {
            let t = k as f64 * 3.7e-4;
            let a = scene_intensity(&scene, 64.0, 36.0, t);
            let b = scene_intensity(&scene, 64.0, 36.0, t + scene.signal_period());
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_scene_zero_noise_emits_nothing() {
        let scene = quiet_scene(0.2);
        let camera = CameraConfig { noise_sigma: 0.0, ..small_camera() };
        let stream = simulate(&scene, &BiasTuple::default_biases(), &camera).unwrap();
        assert!(stream.is_empty());
    }

    #[test]
    fn step_response_fires_within_five_time_constants() {
        // Wide-open low-pass, negligible high-pass, zero noise.
        let config = CameraConfig {
            f_lpf0: 1000.0,
            f_hpf0: 0.01,
            ..CameraConfig::default()
        };
        let biases = BiasTuple::default_biases();
        let params = PixelParams::from_biases(&biases, &config);
        let mut state = PixelState::settled(0.0);
        let tau = 1.0 / (std::f64::consts::TAU * 1000.0);
        let step_level = 2.0 * params.theta_on;
        let mut fired_at = None;
        for i in 0..(5.0 * tau / config.dt).ceil() as usize + 1 {
            let t = i as f64 * config.dt;
            if let Some(p) = step_pixel(&mut state, step_level, 0.0, t, &params) {
                assert_eq!(p, Polarity::Positive);
                fired_at = Some(t);
                break;
            }
        }
        let t = fired_at.expect("no event within 5 LPF time constants");
        assert!(t <= 5.0 * tau);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let scene = SceneConfig {
            lamp_center: (12.0, 9.0),
            duration: 0.1,
            ..SceneConfig::default()
        };
        let camera = small_camera();
        let biases = BiasTuple::default_biases();
        let a = simulate(&scene, &biases, &camera).unwrap();
        let b = simulate(&scene, &biases, &camera).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn different_seed_differs() {
        let scene = quiet_scene(0.1);
        let camera = small_camera();
        let biases = BiasTuple::default_biases();
        let a = simulate(&scene, &biases, &camera).unwrap();
        let b = simulate(&scene, &biases, &CameraConfig { seed: 2, ..camera }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn raising_diff_on_cannot_add_positive_events() {
        let scene = quiet_scene(0.2);
        let camera = small_camera();
        let count_pos = |diff_on: i32| {
            let biases = BiasTuple::new(0, 0, diff_on, 0);
            let stream = simulate(&scene, &biases, &camera).unwrap();
            stream
                .events()
                .iter()
                .filter(|e| e.polarity == Polarity::Positive)
                .count()
        };
        let base = count_pos(0);
        let deaf = count_pos(camera.lambda_theta as i32);
        assert!(base > 0);
        assert!(deaf <= base, "{deaf} > {base}");
    }

    #[test]
    fn refractory_spacing_holds_per_pixel() {
        // Sub-refractory step size so the dead time actually bites.
        let scene = SceneConfig {
            lamp_center: (8.0, 6.0),
            lamp_amplitude: 4.0,
            duration: 0.05,
            ..SceneConfig::default()
        };
        let camera = CameraConfig {
            width: 16,
            height: 12,
            dt: 2e-5,
            ..CameraConfig::default()
        };
        let biases = BiasTuple::new(0, 0, -60, -60);
        let stream = simulate(&scene, &biases, &camera).unwrap();
        assert!(!stream.is_empty());
        let mut last: std::collections::HashMap<(u32, u32), u64> = Default::default();
        let refractory_us = (camera.refractory * 1e6) as u64;
        for ev in stream.events() {
            if let Some(prev) = last.insert((ev.x, ev.y), ev.t_us) {
                assert!(
                    ev.t_us - prev >= refractory_us,
                    "pixel ({}, {}) fired {} us apart",
                    ev.x,
                    ev.y,
                    ev.t_us - prev
                );
            }
        }
    }

    #[test]
    fn size_guard_refuses_oversized_runs() {
        let scene = quiet_scene(1.0);
        let camera = CameraConfig { max_pixel_steps: 1000, ..small_camera() };
        match simulate(&scene, &BiasTuple::default_biases(), &camera) {
            Err(Error::SizeGuard { .. }) => {}
            other => panic!("expected size guard, got {other:?}"),
        }
    }

    #[test]
    fn sub_step_duration_rejected() {
        let scene = quiet_scene(1e-5);
        let camera = small_camera();
        assert!(simulate(&scene, &BiasTuple::default_biases(), &camera).is_err());
    }

    #[test]
    fn raising_hpf_blocks_slow_drift_scene() {
        // A deterministic quarter-wave ramp: grid_hz = 1 over 0.2 s.
        let scene = SceneConfig {
            lamp_center: (12.0, 9.0),
            lamp_sigma: 40.0,
            lamp_amplitude: 2.0,
            grid_hz: 1.0,
            duration: 0.2,
            ..SceneConfig::default()
        };
        let camera = CameraConfig { noise_sigma: 0.0, ..small_camera() };
        let counts: Vec<usize> = [0, 40, 80, 120]
            .iter()
            .map(|&hpf| {
                simulate(&scene, &BiasTuple::new(0, hpf, -30, -30), &camera)
                    .unwrap()
                    .len()
            })
            .collect();
        assert!(counts[0] > 0);
        for pair in counts.windows(2) {
            assert!(pair[1] <= pair[0], "counts not monotone: {counts:?}");
        }
    }

    #[test]
    fn raising_fo_passes_fast_scene() {
        // 800 Hz rectified flicker; more low-pass bandwidth, more events.
        let scene = SceneConfig {
            lamp_center: (12.0, 9.0),
            lamp_sigma: 40.0,
            lamp_amplitude: 2.0,
            grid_hz: 400.0,
            duration: 0.1,
            ..SceneConfig::default()
        };
        let camera = CameraConfig { noise_sigma: 0.0, ..small_camera() };
        let counts: Vec<usize> = [-50, -25, 0, 25, 50]
            .iter()
            .map(|&fo| {
                simulate(&scene, &BiasTuple::new(fo, 0, -30, -30), &camera)
                    .unwrap()
                    .len()
            })
            .collect();
        assert!(counts.last().unwrap() > &0);
        for pair in counts.windows(2) {
            assert!(pair[1] >= pair[0], "counts not monotone: {counts:?}");
        }
    }
}
