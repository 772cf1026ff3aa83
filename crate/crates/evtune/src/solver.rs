//! Two-parameter root finding on the rate surface.
//!
//! `solve_system` finds the unique `(x, y)` with `f(x, y) = C1` and
//! `g(x, y) = C2` by nested bisection: the inner loop solves `g(x, .) = C2`
//! for `y(x)` (g is strictly increasing in y), and the outer loop bisects the
//! residual `r(x) = f(x, y(x)) - C1`, which is strictly increasing because
//! `dr/dx = (f_x * g_y - f_y * g_x) / g_y = J / g_y > 0`. Bisection is
//! therefore globally convergent with no step-size tuning.
//!
//! `sensitivity` evaluates the implicit derivatives of the balanced solution
//! with respect to the common target:
//!
//! ```text
//! dx/dC = (g_y - f_y) / J,    dy/dC = (f_x - g_x) / J,
//! ```
//!
//! both strictly positive under the derivative-ordering hypotheses, which is
//! the differential form of the monotonicity statement.

use crate::analytic::{AnalyticRateModel, AnalyticSignalModel, RateSurface};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use serde::{Deserialize, Serialize};

/// Brackets are clamped to this margin inside the open unit interval.
pub const DOMAIN_MARGIN: f64 = 1e-12;

/// Default residual tolerance in rate units.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_BISECTIONS: u32 = 200;

/// A converged solution of the two-equation system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionPair {
    pub x: f64,
    pub y: f64,
    pub residual_f: f64,
    pub residual_g: f64,
    pub iterations: u32,
}

/// The implicit derivatives of the balanced solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub dx_dc: f64,
    pub dy_dc: f64,
}

/// Ordering check for two balanced solutions at increasing targets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub c: f64,
    pub c_prime: f64,
    pub first: SolutionPair,
    pub second: SolutionPair,
    pub strictly_increasing: bool,
}

/// Solves `g(x, .) = c2` for `y` at fixed `x` by bisection.
pub fn solve_inner_y(surface: &RateSurface, x: f64, c2: f64, tol: f64) -> f64 {
    let mut lo = DOMAIN_MARGIN;
    let mut hi = 1.0 - DOMAIN_MARGIN;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let value = surface.g(x, mid);
        if (value - c2).abs() <= tol {
            return mid;
        }
        if value < c2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the full system on an explicit outer bracket.
pub fn solve_system_bracketed(
    surface: &RateSurface,
    c1: f64,
    c2: f64,
    tol: f64,
    x_lo: f64,
    x_hi: f64,
) -> Result<SolutionPair> {
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "targets must be positive, got C1 = {c1}, C2 = {c2}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let mut lo = x_lo.clamp(DOMAIN_MARGIN, 1.0 - DOMAIN_MARGIN);
    let mut hi = x_hi.clamp(DOMAIN_MARGIN, 1.0 - DOMAIN_MARGIN);
    if lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "bracket [{x_lo}, {x_hi}] is empty after clamping"
        )));
    }

    let inner_tol = tol * 1e-3;
    let residual = |x: f64| {
        let y = solve_inner_y(surface, x, c2, inner_tol);
        (surface.f(x, y) - c1, y)
    };

    let (r_lo, _) = residual(lo);
    let (r_hi, _) = residual(hi);
    if r_lo > 0.0 || r_hi < 0.0 {
        return Err(Error::DomainExhausted(format!(
            "residual does not change sign on [{lo:.3e}, {hi:.3e}]: r(lo) = {r_lo:.3e}, r(hi) = {r_hi:.3e}"
        )));
    }

    let mut iterations = 0u32;
    let mut best = (0.5 * (lo + hi), f64::INFINITY, 0.0f64);
    for _ in 0..MAX_BISECTIONS {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let (r, y) = residual(mid);
        if r.abs() < best.1.abs() || !best.1.is_finite() {
            best = (mid, r, y);
        }
        if r.abs() <= 0.5 * tol {
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < f64::EPSILON * hi.max(1.0) {
            break;
        }
    }

    let (x, _, _) = best;
    let y = solve_inner_y(surface, x, c2, inner_tol);
    let residual_f = surface.f(x, y) - c1;
    let residual_g = surface.g(x, y) - c2;
    if residual_f.abs() > tol || residual_g.abs() > tol {
        return Err(Error::DomainExhausted(format!(
            "bisection hit the floating-point floor at residuals ({residual_f:.3e}, {residual_g:.3e}) > tol {tol:.0e}"
        )));
    }
    Ok(SolutionPair { x, y, residual_f, residual_g, iterations })
}

/// Solves `f = C1`, `g = C2` over the whole open domain.
pub fn solve_system(surface: &RateSurface, c1: f64, c2: f64, tol: f64) -> Result<SolutionPair> {
    solve_system_bracketed(surface, c1, c2, tol, DOMAIN_MARGIN, 1.0 - DOMAIN_MARGIN)
}

/// Solves the balanced system `f = g = C`.
pub fn solve_balanced(surface: &RateSurface, c: f64, tol: f64) -> Result<SolutionPair> {
    solve_system(surface, c, c, tol)
}

/// Runs `solve_system` from `n` randomized outer brackets and reports the
/// largest coordinate spread among the solutions.
pub fn multistart_spread(
    surface: &RateSurface,
    c1: f64,
    c2: f64,
    tol: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = CounterRng::from_parts(&[seed, 0x6d75_6c74_6973_7461]);
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for _ in 0..n {
        let lo = rng.next_range(DOMAIN_MARGIN, 0.02);
        let hi = rng.next_range(0.99, 1.0 - DOMAIN_MARGIN);
        let sol = solve_system_bracketed(surface, c1, c2, tol, lo, hi)?;
        min_x = min_x.min(sol.x);
        max_x = max_x.max(sol.x);
        min_y = min_y.min(sol.y);
        max_y = max_y.max(sol.y);
    }
    Ok((max_x - min_x).max(max_y - min_y))
}

/// Solves both balanced systems and checks componentwise strict increase.
pub fn check_monotone_in_c(
    surface: &RateSurface,
    c: f64,
    c_prime: f64,
    tol: f64,
) -> Result<MonotoneReport> {
    if !(c > 0.0 && c <= c_prime) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < C <= C', got C = {c}, C' = {c_prime}"
        )));
    }
    let first = solve_balanced(surface, c, tol)?;
    let second = solve_balanced(surface, c_prime, tol)?;
    let strictly_increasing = first.x < second.x && first.y < second.y;
    Ok(MonotoneReport { c, c_prime, first, second, strictly_increasing })
}

/// Implicit derivatives at a converged balanced solution.
pub fn sensitivity(surface: &RateSurface, solution: &SolutionPair) -> Result<SensitivityReport> {
    let p = surface.partials(solution.x, solution.y);
    let jacobian = p.jacobian();
    if jacobian.abs() < 1e-12 {
        return Err(Error::Singular { jacobian });
    }
    Ok(SensitivityReport {
        dx_dc: (p.g_y - p.f_y) / jacobian,
        dy_dc: (p.f_x - p.g_x) / jacobian,
    })
}

/// The balanced solution at `C = D/2` plus a brute-force check that no point
/// of the balanced curve below it scores a larger signal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalSensitivity {
    pub target_c: f64,
    pub solution: SolutionPair,
    pub sig_value: f64,
    pub curve_samples: usize,
    pub curve_max_sig: f64,
    /// True when the sampled curve maximum sits at `C = D/2`.
    pub curve_max_at_target: bool,
}

/// Realizes the constrained optimum: balanced rates at `D/2` per polarity.
pub fn optimal_sensitivity(
    rate_model: &AnalyticRateModel,
    fo: i32,
    hpf: i32,
    sig_model: &AnalyticSignalModel,
    d: f64,
    curve_samples: usize,
    tol: f64,
) -> Result<OptimalSensitivity> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("D must be positive, got {d}")));
    }
    let surface = rate_model.at(fo, hpf);
    let target_c = d / 2.0;
    let solution = solve_balanced(&surface, target_c, tol)?;
    let sig_value =
        sig_model.eval_continuous(fo as f64, hpf as f64, solution.x, solution.y);

    let mut curve_max_sig = sig_value;
    let mut max_at_target = true;
    for k in 1..=curve_samples {
        let c = target_c * k as f64 / curve_samples as f64;
        let sol = solve_balanced(&surface, c, tol)?;
        let sig = sig_model.eval_continuous(fo as f64, hpf as f64, sol.x, sol.y);
        if sig > curve_max_sig {
            curve_max_sig = sig;
            max_at_target = false;
        }
    }
    Ok(OptimalSensitivity {
        target_c,
        solution,
        sig_value,
        curve_samples,
        curve_max_sig,
        curve_max_at_target: max_at_target,
    })
}

/// One target tuple of an asymmetric ordering search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TargetQuad {
    pub c1: f64,
    pub c2: f64,
    pub c1_prime: f64,
    pub c2_prime: f64,
}

/// Grid over which `find_counterexample` looks for an ordering violation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleSearch {
    pub epsilons: Vec<f64>,
    pub targets: Vec<TargetQuad>,
    pub tol: f64,
}

impl Default for CounterexampleSearch {
    /// Strongly unequal targets where the cross-coupling term dominates:
    /// raising the large target floods the other polarity's equation, so its
    /// coordinate can drop even though both targets increased.
    fn default() -> Self {
        let epsilons = (1..=9).map(|k| k as f64 / 10.0).collect();
        let mut targets = Vec::new();
        for &c2 in &[5.0, 10.0, 20.0] {
            for &c1 in &[0.05, 0.1, 0.5] {
                for &bump in &[1.05, 1.2] {
                    for &boost in &[5.0, 10.0] {
                        targets.push(TargetQuad {
                            c1,
                            c2,
                            c1_prime: c1 * bump,
                            c2_prime: c2 * boost,
                        });
                    }
                }
            }
        }
        Self { epsilons, targets, tol: DEFAULT_TOL }
    }
}

/// A found violation of componentwise ordering under unequal targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleWitness {
    pub epsilon: f64,
    pub scale: f64,
    pub targets: TargetQuad,
    pub first: SolutionPair,
    pub second: SolutionPair,
}

impl CounterexampleWitness {
    /// Re-checks the witness: both solutions inside tolerance and the
    /// ordering violation strict.
    pub fn verify(&self, tol: f64) -> bool {
        let residuals_ok = self.first.residual_f.abs() <= tol
            && self.first.residual_g.abs() <= tol
            && self.second.residual_f.abs() <= tol
            && self.second.residual_g.abs() <= tol;
        let violated = self.first.x >= self.second.x || self.first.y >= self.second.y;
        residuals_ok && violated
    }
}

/// Scans the search grid for a tuple whose two solutions violate
/// componentwise ordering. Returns the first witness, or `None` when the
/// grid is exhausted; the statement being probed claims non-necessity, not
/// existence, so an empty result is a valid outcome.
pub fn find_counterexample(search: &CounterexampleSearch) -> Result<Option<CounterexampleWitness>> {
    for &epsilon in &search.epsilons {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        let surface = RateSurface::with_scale(epsilon, 1.0);
        for quad in &search.targets {
            if !(quad.c1 < quad.c1_prime && quad.c2 < quad.c2_prime) || quad.c1 == quad.c2 {
                return Err(Error::InvalidArgument(format!(
                    "target quad must satisfy C1 < C1', C2 < C2', C1 != C2: {quad:?}"
                )));
            }
            let first = solve_system(&surface, quad.c1, quad.c2, search.tol)?;
            let second = solve_system(&surface, quad.c1_prime, quad.c2_prime, search.tol)?;
            if first.x >= second.x || first.y >= second.y {
                return Ok(Some(CounterexampleWitness {
                    epsilon,
                    scale: 1.0,
                    targets: *quad,
                    first,
                    second,
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_surface() -> RateSurface {
        RateSurface::with_scale(0.5, 1.0)
    }

    #[test]
    fn diagonal_oracle_c4() {
        let sol = solve_balanced(&unit_surface(), 4.0, DEFAULT_TOL).unwrap();
        assert!((sol.x - 2.0 / 3.0).abs() < 1e-9, "x = {}", sol.x);
        assert!((sol.y - 2.0 / 3.0).abs() < 1e-9);
        assert!(sol.residual_f.abs() <= DEFAULT_TOL);
        assert!(sol.residual_g.abs() <= DEFAULT_TOL);
    }

    #[test]
    fn diagonal_oracle_c1() {
        let expected = (3f64.sqrt() - 1.0) / 3f64.sqrt();
        let sol = solve_balanced(&unit_surface(), 1.0, DEFAULT_TOL).unwrap();
        assert!((sol.x - expected).abs() < 1e-9);
        assert!((sol.y - expected).abs() < 1e-9);
    }

    #[test]
    fn balanced_controller_scale_oracle() {
        // C = 50000, S = 1000: T = sqrt(101) - 1, x ~ 0.9005.
        let surface = RateSurface::with_scale(0.5, 1000.0);
        let sol = solve_balanced(&surface, 50_000.0, 1e-6).unwrap();
        let t = 101f64.sqrt() - 1.0;
        let expected = t / (1.0 + t);
        assert!((sol.x - expected).abs() < 1e-8, "x = {}", sol.x);
        assert!((sol.x - sol.y).abs() < 1e-8);
    }

    #[test]
    fn solution_matches_closed_form_across_targets() {
        let surface = unit_surface();
        for &c in &[0.01, 0.1, 0.5, 2.0, 10.0, 40.0] {
            let sol = solve_balanced(&surface, c, DEFAULT_TOL).unwrap();
            let expected = surface.balanced_closed_form(c);
            assert!((sol.x - expected).abs() < 1e-9, "C = {c}");
        }
    }

    #[test]
    fn balanced_solution_vanishes_with_target() {
        let surface = unit_surface();
        let mut last = 1.0;
        for &c in &[1e-2, 1e-4, 1e-6] {
            let sol = solve_balanced(&surface, c, 1e-12).unwrap();
            assert!(sol.x < last);
            last = sol.x;
        }
        assert!(last < 2e-6);
    }

    #[test]
    fn multistart_agrees_within_tolerance() {
        let surface = unit_surface();
        let spread = multistart_spread(&surface, 4.0, 4.0, DEFAULT_TOL, 100, 99).unwrap();
        assert!(spread < 1e-6, "spread = {spread:.3e}");
    }

    #[test]
    fn asymmetric_system_consistent() {
        let surface = unit_surface();
        let sol = solve_system(&surface, 2.0, 7.0, DEFAULT_TOL).unwrap();
        let (f, g) = surface.both(sol.x, sol.y);
        assert!((f - 2.0).abs() <= DEFAULT_TOL);
        assert!((g - 7.0).abs() <= DEFAULT_TOL);
        // The larger target claims the larger coordinate here.
        assert!(sol.y > sol.x);
    }

    #[test]
    fn non_positive_targets_rejected() {
        let surface = unit_surface();
        assert!(solve_system(&surface, 0.0, 1.0, DEFAULT_TOL).is_err());
        assert!(solve_system(&surface, 1.0, -2.0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn outer_residual_strictly_increasing() {
        // The algorithmic form of Jacobian positivity.
        let surface = RateSurface::with_scale(0.3, 7.0);
        let c2 = 3.0;
        let inner_tol = 1e-12;
        let mut last = f64::NEG_INFINITY;
        for i in 1..40 {
            let x = i as f64 / 40.0;
            let y = solve_inner_y(&surface, x, c2, inner_tol);
            let r = surface.f(x, y);
            assert!(r > last, "residual not increasing at x = {x}");
            last = r;
        }
    }

    #[test]
    fn monotone_in_c_oracle_values() {
        let surface = unit_surface();
        let report = check_monotone_in_c(&surface, 1.0, 4.0, DEFAULT_TOL).unwrap();
        assert!(report.strictly_increasing);
        assert!((report.first.x - 0.4226).abs() < 1e-3);
        assert!((report.second.x - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_c_degenerate_equality() {
        let surface = unit_surface();
        let report = check_monotone_in_c(&surface, 2.5, 2.5, DEFAULT_TOL).unwrap();
        assert!(!report.strictly_increasing);
        assert!((report.first.x - report.second.x).abs() <= 2.0 * DEFAULT_TOL);
        assert!((report.first.y - report.second.y).abs() <= 2.0 * DEFAULT_TOL);
    }

    #[test]
    fn sensitivity_hand_value_at_center() {
        let surface = unit_surface();
        // f(0.5, 0.5) = 1.5, so the balanced solution at C = 1.5 is the center.
        let sol = solve_balanced(&surface, 1.5, 1e-12).unwrap();
        assert!((sol.x - 0.5).abs() < 1e-10);
        let report = sensitivity(&surface, &sol).unwrap();
        assert!((report.dx_dc - 0.125).abs() < 1e-9);
        assert!((report.dy_dc - 0.125).abs() < 1e-9);
    }

    #[test]
    fn sensitivity_matches_finite_differences() {
        let surface = RateSurface::with_scale(0.5, 100.0);
        let c = 42.0;
        let sol = solve_balanced(&surface, c, 1e-10).unwrap();
        let report = sensitivity(&surface, &sol).unwrap();
        let delta = c * 1e-5;
        let plus = solve_balanced(&surface, c + delta, 1e-12).unwrap();
        let minus = solve_balanced(&surface, c - delta, 1e-12).unwrap();
        let fd_x = (plus.x - minus.x) / (2.0 * delta);
        let fd_y = (plus.y - minus.y) / (2.0 * delta);
        assert!(((report.dx_dc - fd_x) / fd_x).abs() < 1e-3);
        assert!(((report.dy_dc - fd_y) / fd_y).abs() < 1e-3);
    }

    #[test]
    fn symmetric_model_sensitivities_equal() {
        let surface = unit_surface();
        let sol = solve_balanced(&surface, 7.0, 1e-10).unwrap();
        let report = sensitivity(&surface, &sol).unwrap();
        assert!((report.dx_dc - report.dy_dc).abs() < 1e-12);
    }

    #[test]
    fn counterexample_found_on_default_grid() {
        let witness = find_counterexample(&CounterexampleSearch::default())
            .unwrap()
            .expect("the default asymmetric grid contains a violation");
        assert!(witness.verify(DEFAULT_TOL));
    }

    #[test]
    fn balanced_restriction_never_violates() {
        // Equal targets fall under part 2: ordering always holds.
        let surface = unit_surface();
        for k in 1..20 {
            let c = 0.2 * k as f64;
            let report = check_monotone_in_c(&surface, c, c * 1.7, DEFAULT_TOL).unwrap();
            assert!(report.strictly_increasing, "violated at C = {c}");
        }
    }

    #[test]
    fn invalid_search_grid_rejected() {
        let mut search = CounterexampleSearch::default();
        search.targets[0].c1_prime = search.targets[0].c1;
        assert!(find_counterexample(&search).is_err());
    }

    #[test]
    fn corollary_curve_max_at_cap() {
        let rate = AnalyticRateModel::default();
        let sig = AnalyticSignalModel::default();
        let report =
            optimal_sensitivity(&rate, 0, 80, &sig, 100_000.0, 100, 1e-6).unwrap();
        assert!(report.curve_max_at_target);
        assert!((report.curve_max_sig - report.sig_value).abs() < 1e-12);
        // The balanced solution at D/2 = 50k with S(0, 80) = 1000 / 16.
        let t = (1.0 + 4.0 * 0.5 * 50_000.0 / (1000.0 / 16.0)).sqrt() - 1.0;
        let expected = t / (1.0 + t);
        assert!((report.solution.x - expected).abs() < 1e-6);
    }

    #[test]
    fn corollary_constant_signal_is_degenerate() {
        let rate = AnalyticRateModel::default();
        let sig = AnalyticSignalModel {
            sensitivity_decay: 0.0,
            width_fo: 1e9,
            width_hpf: 1e9,
            ..AnalyticSignalModel::default()
        };
        let report = optimal_sensitivity(&rate, 0, 0, &sig, 1000.0, 50, 1e-9).unwrap();
        // All curve samples tie; the maximum is still reported at the cap.
        assert!(report.curve_max_at_target);
        assert!((report.curve_max_sig - report.sig_value).abs() < 1e-9);
    }
}
