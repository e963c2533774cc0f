//! Price of anarchy and its analytic bounds.
//!
//! Every bound is built from two integral sandwiches with `A = Q_d X(Q_d)`:
//!
//! * tail: `∫_{Q_d}^{Q_c} X` between `L(α, s)` and a power-law envelope in `k`,
//! * head: `M(Q_d)` between `A` and `A[1 + k(1 - ρ)/(1-k)]`, `ρ = (X(Q_d)/X(0))^{1/k-1}`,
//!
//! so that `PoA = 1 + (tail - r Q_d (α-1)) / (M(Q_d) - r Q_d)` with `r Q_d = A(1-k)`. The pull
//! configuration reuses the push algebra under `k = l/(1+l)`, `s = t/(1+t)`.

use serde::Serialize;

use crate::error::{PoaError, Result};
use crate::generalized_model::GeneralizedModel;
use crate::numeric::adaptive_simpson;
use crate::solver::{solve, ChainConfig, EquilibriumResult, SolveMethod};

/// Profits at or below this make the ratio meaningless.
pub const DEGENERACY_FLOOR: f64 = 1e-12;
/// Slack of the `lower ≤ PoA ≤ improved` checks.
pub const SANDWICH_TOL: f64 = 1e-6;
/// Slack of the `improved ≤ prev` check.
pub const PREV_TOL: f64 = 1e-9;
/// Below this `k` the `(1-k)^{-1/k}` family switches to its series.
const SMALL_K: f64 = 1e-6;
/// `k` this close to 1 makes every bound blow up.
const SINGULAR_K: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `α ≥ (1-k)^{-1/k}`: the improved bound coincides with the previous one.
    AlphaLarge,
    /// `α < (1-k)^{-1/k}`: the improved bound is strictly tighter.
    AlphaSmall,
}

impl Branch {
    pub fn slug(self) -> &'static str {
        match self {
            Branch::AlphaLarge => "alpha_large",
            Branch::AlphaSmall => "alpha_small",
        }
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) || !k.is_finite() {
        return Err(PoaError::OutOfRange { name: "k", value: k });
    }
    if 1.0 - k < SINGULAR_K {
        return Err(PoaError::SingularParameter { name: "k", value: k });
    }
    Ok(())
}

fn check_l(l: f64) -> Result<()> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(PoaError::OutOfRange { name: "l", value: l });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 1.0 - 1e-12 && alpha.is_finite()) {
        return Err(PoaError::OutOfRange { name: "alpha", value: alpha });
    }
    Ok(())
}

/// `-ln(1-k)/k`, with the series `1 + k/2 + k²/3 + k³/4` near zero.
fn neg_log1m_over_k(k: f64) -> f64 {
    if k < SMALL_K {
        1.0 + k * (0.5 + k * (1.0 / 3.0 + k * 0.25))
    } else {
        -(-k).ln_1p() / k
    }
}

/// `(1-k)^{-1/k}`, the `α` threshold between the two branches; `e` at `k = 0`.
pub fn alpha_threshold(k: f64) -> f64 {
    neg_log1m_over_k(k).exp()
}

/// `l/(1+l)`: the push-equivalent parameter of a pull-configuration `l`.
pub fn pull_to_push(l: f64) -> f64 {
    l / (1.0 + l)
}

/// Previous upper bound, push: `(1-k)^{-1/k} - (1-k)^{-1}`.
pub fn prev_upper_push(k: f64) -> Result<f64> {
    check_k(k)?;
    Ok(alpha_threshold(k) - 1.0 / (1.0 - k))
}

/// Previous upper bound, pull: `(1+l)^{1+1/l} - (1+l)`.
pub fn prev_upper_pull(l: f64) -> Result<f64> {
    check_l(l)?;
    prev_upper_push(pull_to_push(l))
}

/// Upper bound for a known `α = Q_c/Q_d`.
///
/// `α < (1-k)^{-1/k}`: `(α^{1-k} - (1-k)²α)/(k(1-k)) - (1-k)^{-1}`; otherwise the previous bound.
pub fn improved_upper_push(k: f64, alpha: f64) -> Result<(f64, Branch)> {
    check_k(k)?;
    check_alpha(alpha)?;
    let alpha = alpha.max(1.0);
    if alpha >= alpha_threshold(k) {
        return Ok((prev_upper_push(k)?, Branch::AlphaLarge));
    }
    // α(e^{-k ln α} - 1 + 2k - k²)/k, free of the 0/0 at small k
    let ln_a = alpha.ln();
    let head = if k == 0.0 { -ln_a } else { (-k * ln_a).exp_m1() / k };
    let value = alpha * (head + 2.0 - k) / (1.0 - k) - 1.0 / (1.0 - k);
    Ok((value, Branch::AlphaSmall))
}

/// [`improved_upper_push`] under `k = l/(1+l)`; threshold `(1+l)^{1+1/l}`.
pub fn improved_upper_pull(l: f64, alpha: f64) -> Result<(f64, Branch)> {
    check_l(l)?;
    improved_upper_push(pull_to_push(l), alpha)
}

/// `(t(1-k)^{1-1/t} - 1)/(1-t)`, evaluated as `-1 + t·expm1(-(1-t)ln(1-k)/t)/(1-t)`.
///
/// At `t = 1` this is `-1 - ln(1-k)`.
fn tail_constant(k: f64, t: f64) -> f64 {
    let ln1mk = (-k).ln_1p();
    let u = 1.0 - t;
    if u == 0.0 {
        return -1.0 - ln1mk;
    }
    -1.0 + t * (-u * ln1mk / t).exp_m1() / u
}

/// `L(α, t)/A = (1-k)α + (t(1-k)^{1-1/t} - 1)/(1-t)`.
fn tail_lower_factor(k: f64, alpha: f64, t: f64) -> f64 {
    (1.0 - k) * alpha + tail_constant(k, t)
}

/// `1 + k(1 - ρ)/(1-k)` with `ρ = x_ratio^{1/k-1}` and `x_ratio = X(Q_d)/X(0)`.
fn head_upper_factor(k: f64, x_ratio: f64) -> f64 {
    let rho = if k == 0.0 {
        if x_ratio < 1.0 {
            0.0
        } else {
            1.0
        }
    } else {
        ((1.0 / k - 1.0) * x_ratio.ln()).exp()
    };
    1.0 + k * (1.0 - rho) / (1.0 - k)
}

/// A lower bound together with the formula value before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    /// `max(raw, 1)`.
    pub value: f64,
    pub raw: f64,
    /// The closed-form display the derivation is checked against.
    pub printed: f64,
}

/// Lower bound on `PoA`, push configuration, with `r̃ = r/X(0)`.
///
/// Derived from the tail lower bound and the head upper bound at `X(Q_d) = r/(1-k)`; it does not
/// depend on `α`.
pub fn lower_bound_push(k: f64, s: f64, r_tilde: f64) -> Result<LowerBound> {
    check_k(k)?;
    if !(k > 0.0) {
        return Err(PoaError::OutOfRange { name: "k", value: k });
    }
    if !(s.is_finite() && s >= k - 1e-12) {
        return Err(PoaError::OutOfRange { name: "s", value: s });
    }
    if !(r_tilde > 0.0 && r_tilde < 1.0) {
        return Err(PoaError::OutOfRange { name: "r_tilde", value: r_tilde });
    }
    let x_ratio = r_tilde / (1.0 - k);
    // (tail lower - rQ_d(α-1))/A: the α terms cancel.
    let numerator = tail_lower_factor(k, 1.0, s);
    // (head upper - rQ_d)/A
    let denominator = head_upper_factor(k, x_ratio) - (1.0 - k);
    let raw = 1.0 + numerator / denominator;
    Ok(LowerBound {
        value: raw.max(1.0),
        raw,
        printed: lower_bound_push_printed(k, s, r_tilde),
    })
}

/// The ratio in its closed display form; numerically identical to the unclamped derivation.
pub fn lower_bound_push_printed(k: f64, s: f64, r_tilde: f64) -> f64 {
    let w = r_tilde.powf(1.0 / k - 1.0) * (1.0 - k).powf(1.0 - 1.0 / k);
    let first = if s == 1.0 {
        -(-k).ln_1p()
    } else {
        (s * (1.0 - k).powf(1.0 - 1.0 / s) - s) / (1.0 - s)
    };
    let numerator = first - (k * w - k) / (1.0 - k);
    let denominator = k + (k - k * w) / (1.0 - k);
    numerator / denominator
}

/// Lower bound on `PoA`, pull configuration: [`lower_bound_push`] under `k = l/(1+l)`,
/// `s = t/(1+t)`. `printed` holds the pull display with its `(1+l)^{-1}` denominator term.
pub fn lower_bound_pull(l: f64, t: f64, r_tilde: f64) -> Result<LowerBound> {
    check_l(l)?;
    if !(t.is_finite() && t >= l - 1e-12) {
        return Err(PoaError::OutOfRange { name: "t", value: t });
    }
    let derived = lower_bound_push(pull_to_push(l), pull_to_push(t), r_tilde)?;
    Ok(LowerBound {
        printed: lower_bound_pull_printed(l, t, r_tilde),
        ..derived
    })
}

/// `[t(1+l)^{1/t} - t + l - l r̃^{1/l}(1+l)^{1/l}] / [(1+l)^{-1} + l - l r̃^{1/l}(1+l)^{1/l}]`.
pub fn lower_bound_pull_printed(l: f64, t: f64, r_tilde: f64) -> f64 {
    let w = l * r_tilde.powf(1.0 / l) * (1.0 + l).powf(1.0 / l);
    (t * (1.0 + l).powf(1.0 / t) - t + l - w) / (1.0 / (1.0 + l) + l - w)
}

/// Bounds on `∫_{Q_d}^{Q_c} X`.
///
/// Lower: `L(α, s) = A[(1-k)α + (s(1-k)^{1-1/s} - 1)/(1-s)]`, from `X ≥ max(X(Q_d)(ξ/Q_d)^{-s},
/// (1-k)X(Q_d))`. Upper: `A(α^{1-k} - 1)/(1-k)` from `X ≤ X(Q_d)(ξ/Q_d)^{-k}` for
/// `α ≤ (1-k)^{-1/k}`, relaxed to `L(α, k)` beyond it.
pub fn integral_tail_bounds(model: &dyn GeneralizedModel, q_d: f64, q_c: f64, k: f64, s: f64) -> Result<(f64, f64)> {
    if !(q_d > 0.0 && q_c >= q_d) {
        if q_c == q_d {
            return Ok((0.0, 0.0));
        }
        return Err(PoaError::OutOfRange { name: "q_d", value: q_d });
    }
    if q_c == q_d {
        return Ok((0.0, 0.0));
    }
    check_k(k)?;
    if !(s.is_finite() && s >= k - 1e-12 && s > 0.0) {
        return Err(PoaError::OutOfRange { name: "s", value: s });
    }
    let alpha = q_c / q_d;
    let ln1mk = (-k).ln_1p();
    let alpha_min = (-ln1mk / s).exp();
    if alpha < alpha_min * (1.0 - 1e-12) {
        return Err(PoaError::OutOfRange { name: "alpha", value: alpha });
    }
    let a = q_d * model.marginal(q_d);
    let lower = a * tail_lower_factor(k, alpha, s);
    let upper = if alpha <= alpha_threshold(k) {
        let ln_a = alpha.ln();
        a * ((1.0 - k) * ln_a).exp_m1() / (1.0 - k)
    } else {
        a * tail_lower_factor(k, alpha, k)
    };
    Ok((lower, upper))
}

/// Bounds on `M(Q_d) = ∫_0^{Q_d} X`: `A ≤ M(Q_d) ≤ A[1 + k(1 - (X(Q_d)/X(0))^{1/k-1})/(1-k)]`.
pub fn integral_head_bounds(model: &dyn GeneralizedModel, q_d: f64, k: f64) -> Result<(f64, f64)> {
    check_k(k)?;
    if !(q_d >= 0.0 && q_d.is_finite()) {
        return Err(PoaError::OutOfRange { name: "q_d", value: q_d });
    }
    let x_d = model.marginal(q_d);
    let a = q_d * x_d;
    let x_ratio = x_d / model.marginal_at_zero();
    Ok((a, a * head_upper_factor(k, x_ratio)))
}

/// `∫_a^b X` by adaptive quadrature; the oracle the sandwiches are tested against.
pub fn marginal_integral(model: &dyn GeneralizedModel, a: f64, b: f64) -> f64 {
    adaptive_simpson(|q| model.marginal(q), a, b, 1e-12)
}

/// `Π(Q_c)/Π(Q_d)` of an already solved equilibrium.
pub fn poa_of(eq: &EquilibriumResult) -> Result<f64> {
    if !(eq.profit_d > DEGENERACY_FLOOR) {
        return Err(PoaError::DegenerateScenario { profit_d: eq.profit_d });
    }
    Ok(eq.profit_c / eq.profit_d)
}

/// `Π(Q_c)/Π(Q_d)` for the given configuration.
pub fn price_of_anarchy(model: &dyn GeneralizedModel, r: f64, config: ChainConfig) -> Result<f64> {
    poa_of(&solve(model, r, config, SolveMethod::Bisection)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub k: f64,
    pub s: f64,
    pub l_d: f64,
    pub l_c: f64,
    pub alpha: f64,
    pub r_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoaReport {
    pub config: ChainConfig,
    pub poa: f64,
    pub prev_upper: f64,
    pub improved_upper: f64,
    /// Clamped at 1.
    pub lower: f64,
    pub lower_raw: f64,
    pub lower_printed: f64,
    /// `None` for the two configurations where `PoA = 1` identically.
    pub branch: Option<Branch>,
    pub valid: bool,
    pub params: BoundParams,
}

impl PoaReport {
    /// `lower ≤ poa ≤ improved` within [`SANDWICH_TOL`] and `improved ≤ prev` within [`PREV_TOL`].
    pub fn sandwich_holds(&self) -> bool {
        self.lower <= self.poa + SANDWICH_TOL
            && self.poa <= self.improved_upper + SANDWICH_TOL
            && self.improved_upper <= self.prev_upper + PREV_TOL
    }
}

/// Bounds for a solved equilibrium. Bounds that cannot be evaluated (kinks, parameters outside
/// the formulas' domain) are NaN and make the report invalid.
pub fn poa_report(model: &dyn GeneralizedModel, eq: &EquilibriumResult) -> Result<PoaReport> {
    let poa = poa_of(eq)?;
    let params = BoundParams {
        k: eq.k,
        s: eq.s,
        l_d: eq.l_d,
        l_c: eq.l_c,
        alpha: eq.alpha,
        r_tilde: eq.r / model.marginal_at_zero(),
    };
    let trivial = !eq.config.is_nontrivial() || (eq.at_kink && (eq.q_c - eq.q_d).abs() <= 1e-12 * eq.q_c);
    if trivial {
        let mut report = PoaReport {
            config: eq.config,
            poa,
            prev_upper: 1.0,
            improved_upper: 1.0,
            lower: 1.0,
            lower_raw: 1.0,
            lower_printed: 1.0,
            branch: None,
            valid: false,
            params,
        };
        report.valid = report.sandwich_holds();
        return Ok(report);
    }
    let (prev, improved, lower) = match eq.config {
        ChainConfig::PushManufacturerLeader => (
            prev_upper_push(eq.k),
            improved_upper_push(eq.k, eq.alpha),
            lower_bound_push(eq.k, eq.s, params.r_tilde),
        ),
        _ => (
            prev_upper_pull(eq.l_d),
            improved_upper_pull(eq.l_d, eq.alpha),
            lower_bound_pull(eq.l_d, eq.l_c, params.r_tilde),
        ),
    };
    let nan_lower = LowerBound {
        value: f64::NAN,
        raw: f64::NAN,
        printed: f64::NAN,
    };
    let (improved_upper, branch) = improved.map(|(v, b)| (v, Some(b))).unwrap_or((f64::NAN, None));
    let lower = lower.unwrap_or(nan_lower);
    let mut report = PoaReport {
        config: eq.config,
        poa,
        prev_upper: prev.unwrap_or(f64::NAN),
        improved_upper,
        lower: lower.value,
        lower_raw: lower.raw,
        lower_printed: lower.printed,
        branch,
        valid: false,
        params,
    };
    report.valid = report.sandwich_holds();
    Ok(report)
}
