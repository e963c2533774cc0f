//! Centralized and decentralized inventory levels for the two-echelon supply chain.
//!
//! All quantities are expressed in units of the selling price `p`: the cost ratio is `r = c/p`,
//! profits are `Π/p = -rQ + M(Q)`, and wholesale prices are reported as `w/p`.

use serde::{Deserialize, Serialize};

use crate::error::{PoaError, Result};
use crate::exec::{map_range, Execution};
use crate::generalized_model::{check_model_igfr, gen_gfr, gen_lfr, kink_tolerance, marginal_slope, GeneralizedModel};
use crate::numeric::{bisect, golden_section_max};

/// Fixed-point damping factor `λ` in `Q ← (1-λ)Q + λ Q_proposed`.
pub const FIXED_POINT_DAMPING: f64 = 0.5;
/// Fixed-point stopping rule on `|ΔQ|`.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 10_000;
/// Lower end of the decentralized bracket, relative to `Q_c`.
pub const BRACKET_EPS: f64 = 1e-12;
/// Grid size of the IGFR diagnostic attached to each equilibrium.
pub const IGFR_DIAGNOSTIC_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChainConfig {
    /// Retailer stocks, manufacturer sets `w`.
    PushManufacturerLeader,
    /// Retailer stocks and sets `w`.
    PushRetailerLeader,
    /// Manufacturer stocks and sets `w`.
    PullManufacturerLeader,
    /// Manufacturer stocks, retailer sets `w`.
    PullRetailerLeader,
}

impl ChainConfig {
    pub const ALL: [ChainConfig; 4] = [
        ChainConfig::PushManufacturerLeader,
        ChainConfig::PushRetailerLeader,
        ChainConfig::PullManufacturerLeader,
        ChainConfig::PullRetailerLeader,
    ];

    /// The two configurations where the follower holds the inventory and `PoA` can exceed one.
    pub fn is_nontrivial(self) -> bool {
        matches!(self, Self::PushManufacturerLeader | Self::PullRetailerLeader)
    }

    pub fn slug(self) -> &'static str {
        match self {
            Self::PushManufacturerLeader => "push-manufacturer",
            Self::PushRetailerLeader => "push-retailer",
            Self::PullManufacturerLeader => "pull-manufacturer",
            Self::PullRetailerLeader => "pull-retailer",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.slug() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    #[default]
    Bisection,
    FixedPoint,
}

/// A priced supply chain: model, cost ratio and configuration.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<'a> {
    model: &'a dyn GeneralizedModel,
    r: f64,
    config: ChainConfig,
    echelons: usize,
}

impl<'a> Scenario<'a> {
    pub fn new(model: &'a dyn GeneralizedModel, r: f64, config: ChainConfig) -> Result<Self> {
        check_admissible(model, r)?;
        Ok(Self {
            model,
            r,
            config,
            echelons: 2,
        })
    }

    pub fn with_echelons(mut self, echelons: usize) -> Result<Self> {
        if echelons < 2 {
            return Err(PoaError::InvalidParameter(format!("echelon count {echelons} must be at least 2")));
        }
        self.echelons = echelons;
        Ok(self)
    }

    pub fn model(&self) -> &'a dyn GeneralizedModel {
        self.model
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn config(&self) -> ChainConfig {
        self.config
    }

    pub fn echelons(&self) -> usize {
        self.echelons
    }

    /// `r̃ = r / X(0)`.
    pub fn rescaled_ratio(&self) -> f64 {
        self.r / self.model.marginal_at_zero()
    }

    pub fn solve(&self, method: SolveMethod) -> Result<EquilibriumResult> {
        solve(self.model, self.r, self.config, method)
    }
}

/// `lim X < r < X(0)`; otherwise no positive stock is profitable or profit is unbounded.
pub fn check_admissible(model: &dyn GeneralizedModel, r: f64) -> Result<()> {
    let upper = model.marginal_at_zero();
    let lower = model.marginal_at_infinity();
    if !(r > lower && r < upper && r.is_finite()) {
        return Err(PoaError::InadmissibleRatio { r, lower, upper });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub config: ChainConfig,
    pub r: f64,
    pub q_c: f64,
    pub q_d: f64,
    /// `w/p`: `X(Q_d)` in push-manufacturer, `r/X(Q_d)` in pull-retailer, `r` and `1` in the
    /// two trivial configurations.
    pub w_over_p: f64,
    pub profit_c: f64,
    pub profit_d: f64,
    pub alpha: f64,
    /// `g(Q_d)`; NaN where `g` is undefined (kinks, vanishing marginal).
    pub k: f64,
    /// `g(Q_c)`.
    pub s: f64,
    pub l_d: f64,
    pub l_c: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `Q_d` sits on a kink of `M` and satisfies the subgradient, not the first-order, condition.
    pub at_kink: bool,
    /// Grid IGFR check (`g` nondecreasing, `g ≤ 1`) on `[0, Q_c]`.
    pub igfr_holds: bool,
}

/// `Π/p = -rQ + M(Q)`.
pub fn expected_profit(model: &dyn GeneralizedModel, r: f64, q: f64) -> f64 {
    -r * q + model.order(q)
}

/// `Q_c = X⁻¹(r)`; at a jump of `X` spanning `r` the jump location (supporting-line solution).
pub fn solve_centralized(model: &dyn GeneralizedModel, r: f64) -> Result<f64> {
    check_admissible(model, r)?;
    Ok(model.inverse_marginal(r))
}

/// Residual of `X(Q)(1 - g(Q)) = r`, written as `X + Q X' - r`.
pub fn push_residual(model: &dyn GeneralizedModel, r: f64, q: f64) -> Result<f64> {
    Ok(model.marginal(q) + q * marginal_slope(model, q)? - r)
}

/// Residual of `X(Q) / (1 + l(Q)) = r`.
pub fn pull_residual(model: &dyn GeneralizedModel, r: f64, q: f64) -> Result<f64> {
    let x = model.marginal(q);
    let slope = marginal_slope(model, q)?;
    let denom = x * x - slope * model.order(q);
    if denom <= 0.0 {
        return Ok(-r);
    }
    Ok(x * x * x / denom - r)
}

/// Same sign as [`pull_residual`] without the division: `X³ - r(X² - X'M)`.
fn pull_residual_polynomial(model: &dyn GeneralizedModel, r: f64, q: f64) -> Result<f64> {
    let x = model.marginal(q);
    let slope = marginal_slope(model, q)?;
    Ok(x * x * x - r * (x * x - slope * model.order(q)))
}

struct BracketSolution {
    q: f64,
    iterations: usize,
    at_kink: bool,
}

/// Root of a residual that is positive near zero and nonpositive at `Q_c`, scanning across the
/// model's kinks.
fn bracket_decentralized<R>(model: &dyn GeneralizedModel, q_c: f64, residual: R) -> Result<BracketSolution>
where
    R: Fn(f64) -> Result<f64>,
{
    let eps = BRACKET_EPS * q_c;
    let mut kinks: Vec<f64> = model
        .kinks()
        .into_iter()
        .filter(|&k| k > eps && k <= q_c + kink_tolerance(k))
        .collect();
    kinks.sort_by(f64::total_cmp);

    // Probe points: ε, then both sides of every kink, then Q_c (if not itself a kink).
    let mut probes: Vec<(f64, Option<f64>)> = vec![(eps, None)];
    let mut end_is_kink = false;
    for &k in &kinks {
        let delta = 10.0 * kink_tolerance(k);
        probes.push((k - delta, None));
        probes.push((k + delta, Some(k)));
        if (k - q_c).abs() <= kink_tolerance(k) {
            end_is_kink = true;
        }
    }
    if !end_is_kink {
        probes.push((q_c, None));
    }

    let mut prev = probes[0];
    let mut prev_val = residual(prev.0)?;
    if prev_val <= 0.0 {
        return Err(PoaError::BracketFailure { lo: eps, hi: q_c });
    }
    for &probe in &probes[1..] {
        let val = residual(probe.0)?;
        if val <= 0.0 {
            if let Some(k) = probe.1 {
                if prev.0 >= k - 20.0 * kink_tolerance(k) {
                    return Ok(BracketSolution {
                        q: k,
                        iterations: 0,
                        at_kink: true,
                    });
                }
            }
            if val == 0.0 {
                return Ok(BracketSolution {
                    q: probe.0,
                    iterations: 0,
                    at_kink: false,
                });
            }
            let root = bisect(|q| residual(q).unwrap_or(f64::NAN), prev.0, probe.0, 0.0)?;
            return Ok(BracketSolution {
                q: root.x,
                iterations: root.iterations,
                at_kink: false,
            });
        }
        prev = probe;
        prev_val = val;
    }
    let _ = prev_val;
    Err(PoaError::BracketFailure { lo: eps, hi: q_c })
}

fn or_nan(v: Result<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    model: &dyn GeneralizedModel,
    r: f64,
    config: ChainConfig,
    q_c: f64,
    q_d: f64,
    w_over_p: f64,
    iterations: usize,
    residual: f64,
    at_kink: bool,
) -> EquilibriumResult {
    EquilibriumResult {
        config,
        r,
        q_c,
        q_d,
        w_over_p,
        profit_c: expected_profit(model, r, q_c),
        profit_d: expected_profit(model, r, q_d),
        alpha: q_c / q_d,
        k: or_nan(gen_gfr(model, q_d)),
        s: or_nan(gen_gfr(model, q_c)),
        l_d: or_nan(gen_lfr(model, q_d)),
        l_c: or_nan(gen_lfr(model, q_c)),
        iterations,
        residual,
        at_kink,
        igfr_holds: check_model_igfr(model, 0.0, q_c, IGFR_DIAGNOSTIC_POINTS).holds(),
    }
}

/// Manufacturer leads, retailer stocks: `X(Q_d)(1 - g(Q_d)) = r`, `w = p X(Q_d)`.
pub fn solve_push_manufacturer(model: &dyn GeneralizedModel, r: f64, method: SolveMethod) -> Result<EquilibriumResult> {
    let q_c = solve_centralized(model, r)?;
    let use_fixed_point = method == SolveMethod::FixedPoint && model.kinks().is_empty();
    let (q_d, iterations, at_kink) = if use_fixed_point {
        let (q, it) = fixed_point(q_c, |q| {
            // ε = r + g(Q) X(Q) = r - Q X'(Q)
            let eps = r - q * marginal_slope(model, q)?;
            Ok(model.inverse_marginal(eps))
        })?;
        (q, it, false)
    } else {
        let sol = bracket_decentralized(model, q_c, |q| push_residual(model, r, q))?;
        (sol.q, sol.iterations, sol.at_kink)
    };
    let residual = if at_kink { 0.0 } else { push_residual(model, r, q_d)? };
    let w = if at_kink { model.marginal_at_zero().min(model.marginal(q_d)) } else { model.marginal(q_d) };
    Ok(assemble(model, r, ChainConfig::PushManufacturerLeader, q_c, q_d, w, iterations, residual, at_kink))
}

/// Retailer leads and stocks: `w = c`, `Q_d = Q_c`.
pub fn solve_push_retailer(model: &dyn GeneralizedModel, r: f64) -> Result<EquilibriumResult> {
    let q_c = solve_centralized(model, r)?;
    Ok(assemble(model, r, ChainConfig::PushRetailerLeader, q_c, q_c, r, 0, 0.0, false))
}

/// Manufacturer leads and stocks: `w = p`, `Q_d = Q_c`.
pub fn solve_pull_manufacturer(model: &dyn GeneralizedModel, r: f64) -> Result<EquilibriumResult> {
    let q_c = solve_centralized(model, r)?;
    Ok(assemble(model, r, ChainConfig::PullManufacturerLeader, q_c, q_c, 1.0, 0, 0.0, false))
}

/// Retailer leads, manufacturer stocks: `X(Q_d) / (1 + l(Q_d)) = r`, `w = c / X(Q_d)`.
pub fn solve_pull_retailer(model: &dyn GeneralizedModel, r: f64, method: SolveMethod) -> Result<EquilibriumResult> {
    let q_c = solve_centralized(model, r)?;
    let use_fixed_point = method == SolveMethod::FixedPoint && model.kinks().is_empty();
    let (q_d, iterations, at_kink) = if use_fixed_point {
        let x0 = model.marginal_at_zero();
        let (q, it) = fixed_point(q_c, |q| {
            let x = model.marginal(q);
            // 1/δ = 1/r - l(Q)/X(Q)
            let inv_delta = 1.0 / r - gen_lfr(model, q)? / x;
            if inv_delta <= 1.0 / x0 {
                return Ok(0.0);
            }
            Ok(model.inverse_marginal(1.0 / inv_delta))
        })?;
        (q, it, false)
    } else {
        let sol = bracket_decentralized(model, q_c, |q| pull_residual_polynomial(model, r, q))?;
        (sol.q, sol.iterations, sol.at_kink)
    };
    let residual = if at_kink { 0.0 } else { pull_residual(model, r, q_d)? };
    let w = r / model.marginal(q_d).max(r);
    Ok(assemble(model, r, ChainConfig::PullRetailerLeader, q_c, q_d, w, iterations, residual, at_kink))
}

/// Damped iteration `Q ← (1-λ)Q + λ T(Q)` from `start`.
///
/// `λ` starts at [`FIXED_POINT_DAMPING`] and is halved whenever a step is longer than the one
/// before it.
fn fixed_point<T>(start: f64, map: T) -> Result<(f64, usize)>
where
    T: Fn(f64) -> Result<f64>,
{
    let mut q = start;
    let mut lambda = FIXED_POINT_DAMPING;
    let mut last_step = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let proposed = map(q)?;
        let proposed = if proposed.is_finite() { proposed.max(0.0) } else { start };
        let next = (1.0 - lambda) * q + lambda * proposed;
        let step = (next - q).abs();
        if step <= FIXED_POINT_TOL {
            return Ok((next, it));
        }
        if step > last_step {
            lambda *= 0.5;
        }
        last_step = step;
        q = next;
    }
    Err(PoaError::NoConvergence {
        iterations: MAX_ITERATIONS,
        last_q: q,
    })
}

/// Dispatches on the configuration.
pub fn solve(model: &dyn GeneralizedModel, r: f64, config: ChainConfig, method: SolveMethod) -> Result<EquilibriumResult> {
    match config {
        ChainConfig::PushManufacturerLeader => solve_push_manufacturer(model, r, method),
        ChainConfig::PushRetailerLeader => solve_push_retailer(model, r),
        ChainConfig::PullManufacturerLeader => solve_pull_manufacturer(model, r),
        ChainConfig::PullRetailerLeader => solve_pull_retailer(model, r, method),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerialConfig {
    PushManufacturer,
    PullRetailer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NSerialResult {
    pub echelons: usize,
    pub q_d: f64,
    pub residual: f64,
    /// `X(1-g)^{N-1}` (push) or `X(1+l)^{-(N-1)}` (pull) at `Q_d`.
    pub inequality_value: f64,
    /// Whether `inequality_value ≥ r`; the operator root need not satisfy it for `N > 2`.
    pub inequality_holds: bool,
}

/// Stirling numbers of the second kind `S(n, k)` for `n, k ≤ max`.
fn stirling2(max: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; max + 1]; max + 1];
    s[0][0] = 1.0;
    for n in 1..=max {
        for k in 1..=n {
            s[n][k] = k as f64 * s[n - 1][k] + s[n - 1][k - 1];
        }
    }
    s
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Central difference with one Richardson step, `(4D(h/2) - D(h))/3`, at relative step `1e-2`.
///
/// The `O(h⁴)` truncation allows a step large enough that nesting a few of these does not
/// amplify rounding noise.
fn richardson_slope<F: Fn(f64) -> f64>(f: F, q: f64) -> f64 {
    let h = 1e-2 * q.abs().max(1e-8);
    let d = |h: f64| (f(q + h) - f(q - h)) / (2.0 * h);
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// `(1 + Q d/dQ)^m X` at `q`.
///
/// Uses the expansion `(Q d/dQ)^j = Σᵢ S(j,i) Qⁱ dⁱ/dQⁱ` when the model supplies analytic
/// derivatives up to order `m`, nested differences otherwise.
pub fn push_serial_operator(model: &dyn GeneralizedModel, q: f64, m: usize) -> f64 {
    let derivs: Option<Vec<f64>> = (0..=m).map(|i| model.marginal_derivative_n(q, i)).collect();
    if let Some(d) = derivs {
        let s = stirling2(m);
        let mut total = 0.0;
        for j in 0..=m {
            let theta_j: f64 = (0..=j).map(|i| s[j][i] * q.powi(i as i32) * d[i]).sum();
            total += binomial(m, j) * theta_j;
        }
        return total;
    }
    push_operator_nested(model, q, m)
}

fn push_operator_nested(model: &dyn GeneralizedModel, q: f64, m: usize) -> f64 {
    if m == 0 {
        return model.marginal(q);
    }
    let inner = push_operator_nested(model, q, m - 1);
    let slope = match (m, model.marginal_derivative(q)) {
        (1, Some(d)) => d,
        _ => richardson_slope(|x| push_operator_nested(model, x, m - 1), q),
    };
    inner + q * slope
}

/// `(1 + (M/X) d/dQ)^m (1/X)` at `q`, by nested differences (analytic innermost slope when
/// available).
pub fn pull_serial_operator(model: &dyn GeneralizedModel, q: f64, m: usize) -> f64 {
    let x = model.marginal(q);
    if m == 0 {
        return 1.0 / x;
    }
    let inner = pull_serial_operator(model, q, m - 1);
    let slope = match (m, model.marginal_derivative(q)) {
        (1, Some(dx)) => -dx / (x * x),
        _ => richardson_slope(|t| pull_serial_operator(model, t, m - 1), q),
    };
    inner + model.order(q) / x * slope
}

/// Points of the sign-change scan used by [`solve_n_serial`].
const SERIAL_SCAN_POINTS: usize = 512;

/// Decentralized inventory level of an `N`-stage serial chain from the operator equations
/// `(1 + Q d/dQ)^{N-1} X(Q) = r` (push) and `(1 + (M/X) d/dQ)^{N-1} X⁻¹ = 1/r` (pull).
pub fn solve_n_serial(model: &dyn GeneralizedModel, r: f64, echelons: usize, config: SerialConfig) -> Result<NSerialResult> {
    if echelons < 2 {
        return Err(PoaError::InvalidParameter(format!("echelon count {echelons} must be at least 2")));
    }
    if !model.kinks().is_empty() {
        return Err(PoaError::DerivativeUnavailable(format!("{} has kinks", model.name())));
    }
    let q_c = solve_centralized(model, r)?;
    let m = echelons - 1;
    let residual = |q: f64| match config {
        SerialConfig::PushManufacturer => push_serial_operator(model, q, m) - r,
        SerialConfig::PullRetailer => 1.0 / r - pull_serial_operator(model, q, m),
    };
    let lo = BRACKET_EPS * q_c;
    let h = (q_c - lo) / SERIAL_SCAN_POINTS as f64;
    let mut a = lo;
    if !(residual(a) > 0.0) {
        return Err(PoaError::BracketFailure { lo, hi: q_c });
    }
    let mut bracket = None;
    for i in 1..=SERIAL_SCAN_POINTS {
        let b = if i == SERIAL_SCAN_POINTS { q_c } else { lo + h * i as f64 };
        let fb = residual(b);
        if fb.is_finite() && fb <= 0.0 {
            bracket = Some((a, b));
            break;
        }
        a = b;
    }
    let (a, b) = bracket.ok_or(PoaError::BracketFailure { lo, hi: q_c })?;
    let root = bisect(residual, a, b, 0.0)?;
    let q_d = root.x;
    let inequality_value = match config {
        SerialConfig::PushManufacturer => model.marginal(q_d) * (1.0 - gen_gfr(model, q_d)?).powi(m as i32),
        SerialConfig::PullRetailer => model.marginal(q_d) * (1.0 + gen_lfr(model, q_d)?).powi(-(m as i32)),
    };
    Ok(NSerialResult {
        echelons,
        q_d,
        residual: residual(q_d),
        inequality_value,
        inequality_holds: inequality_value >= r - 1e-9,
    })
}

/// Grid argmax of `objective` on `[lo, hi]` followed by golden-section refinement inside the
/// bracketing cell. Ties go to the smallest grid point.
pub fn brute_force_optimum_on<F>(objective: F, lo: f64, hi: f64, grid_points: usize, exec: Execution) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let n = grid_points.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let point = |i: usize| if i + 1 == n { hi } else { lo + h * i as f64 };
    let values = map_range(exec, n, |i| objective(point(i)));
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let (mut q_best, mut v_best) = (point(best), values[best]);
    let a = point(best.saturating_sub(1));
    let b = point((best + 1).min(n - 1));
    if b > a {
        let (q, v) = golden_section_max(&objective, a, b, 1e-12 * (hi - lo).abs().max(1e-300));
        if v > v_best {
            q_best = q;
            v_best = v;
        }
    }
    (q_best, v_best)
}

/// [`brute_force_optimum_on`] over `[0, q_max]`.
pub fn brute_force_optimum<F>(objective: F, q_max: f64, grid_points: usize) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    brute_force_optimum_on(objective, 0.0, q_max, grid_points, Execution::Sequential)
}

/// Leader's profit as a function of the follower's inventory level, which is in one-to-one
/// correspondence with the wholesale price.
pub fn leader_profit_by_quantity(model: &dyn GeneralizedModel, r: f64, config: ChainConfig, q: f64) -> f64 {
    let x = model.marginal(q);
    match config {
        // w/p = X(Q): (w - c) Q
        ChainConfig::PushManufacturerLeader => (x - r) * q,
        // w/p = r / X(Q): (p - w) M(Q)
        ChainConfig::PullRetailerLeader => {
            if x <= 0.0 {
                f64::NEG_INFINITY
            } else {
                (1.0 - r / x) * model.order(q)
            }
        }
        _ => expected_profit(model, r, q),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackelbergOutcome {
    pub w_over_p: f64,
    pub q_follower: f64,
    pub leader_profit: f64,
}

/// Full Stackelberg game by brute force: outer grid over the wholesale price, inner follower
/// optimization by grid search for each price.
pub fn stackelberg_oracle(
    model: &dyn GeneralizedModel,
    r: f64,
    config: ChainConfig,
    outer_points: usize,
    inner_points: usize,
    exec: Execution,
) -> Result<StackelbergOutcome> {
    let q_c = solve_centralized(model, r)?;
    let q_max = (1.5 * q_c).min(model.support_upper().max(q_c));
    let x0 = model.marginal_at_zero();
    let follower = |omega: f64| -> f64 {
        match config {
            ChainConfig::PushManufacturerLeader | ChainConfig::PushRetailerLeader => {
                brute_force_optimum(|q| -omega * q + model.order(q), q_max, inner_points).0
            }
            _ => brute_force_optimum(|q| -r * q + omega * model.order(q), q_max, inner_points).0,
        }
    };
    let leader = |omega: f64| -> f64 {
        let q = follower(omega);
        match config {
            ChainConfig::PushManufacturerLeader => (omega - r) * q,
            ChainConfig::PushRetailerLeader => -omega * q + model.order(q),
            ChainConfig::PullManufacturerLeader => -r * q + omega * model.order(q),
            ChainConfig::PullRetailerLeader => (1.0 - omega) * model.order(q),
        }
    };
    let (lo, hi) = match config {
        ChainConfig::PushManufacturerLeader | ChainConfig::PushRetailerLeader => (r, x0),
        _ => (r / x0, 1.0),
    };
    let (omega, value) = brute_force_optimum_on(leader, lo, hi, outer_points, exec);
    Ok(StackelbergOutcome {
        w_over_p: omega,
        q_follower: follower(omega),
        leader_profit: value,
    })
}
