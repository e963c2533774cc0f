//! Generalized newsvendor: expected profit `-cQ + p M(Q)` for a concave order function `M`
//! with marginal `X = dM/dQ`, `M(0) = 0`.
//!
//! [`NewsvendorModel`] recovers the classical case (`X = F̄`, `M = ∫₀^Q F̄`). The generalized
//! failure rates are `g(Q) = -Q X'(Q)/X(Q)` and `l(Q) = -X'(Q) M(Q) / X(Q)²`.

use crate::demand_models::{check_igfr_with, DemandModel, IgfrReport, QUANTILE_TOL, SURVIVAL_FLOOR};
use crate::error::{PoaError, Result};
use crate::numeric::{central_difference, invert_nonincreasing};

pub trait GeneralizedModel: Send + Sync + std::fmt::Debug {
    /// Order function `M(Q)`.
    fn order(&self, q: f64) -> f64;

    /// Marginal `X(Q) = dM/dQ`, nonincreasing and positive on the region of interest.
    fn marginal(&self, q: f64) -> f64;

    /// Analytic `X'(Q)` when available.
    fn marginal_derivative(&self, _q: f64) -> Option<f64> {
        None
    }

    /// `n`-th derivative of `X`, when available analytically.
    fn marginal_derivative_n(&self, q: f64, n: usize) -> Option<f64> {
        match n {
            0 => Some(self.marginal(q)),
            1 => self.marginal_derivative(q),
            _ => None,
        }
    }

    fn marginal_at_zero(&self) -> f64 {
        self.marginal(0.0)
    }

    /// `lim X(Q)` as `Q → ∞`; a cost ratio at or below it makes the profit unbounded.
    fn marginal_at_infinity(&self) -> f64 {
        0.0
    }

    /// Points where `X` jumps, so `M` has a kink and the first-order condition is unavailable.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Beyond this point `X` vanishes identically.
    fn support_upper(&self) -> f64 {
        f64::INFINITY
    }

    /// Smallest `Q` with `X(Q) ≤ y`; at a jump of `X` spanning `y` this is the jump location.
    fn inverse_marginal(&self, y: f64) -> f64 {
        invert_nonincreasing(|q| self.marginal(q), y, 1.0, self.support_upper(), QUANTILE_TOL)
    }

    fn name(&self) -> String;
}

/// Distance under which a point is considered to sit on a declared kink.
pub fn kink_tolerance(kink: f64) -> f64 {
    1e-9 * kink.abs().max(1.0)
}

/// The kink of `model` at `q`, if any.
pub fn kink_at(model: &dyn GeneralizedModel, q: f64) -> Option<f64> {
    model.kinks().into_iter().find(|k| (q - k).abs() <= kink_tolerance(*k))
}

/// `X'(Q)`: analytic when the model provides it, else a central difference with relative step
/// `1e-6`.
pub fn marginal_slope(model: &dyn GeneralizedModel, q: f64) -> Result<f64> {
    if let Some(k) = kink_at(model, q) {
        return Err(PoaError::NonDifferentiablePoint { q: k });
    }
    Ok(model
        .marginal_derivative(q)
        .unwrap_or_else(|| central_difference(|x| model.marginal(x), q)))
}

/// `g(Q) = -Q X'(Q) / X(Q)`.
pub fn gen_gfr(model: &dyn GeneralizedModel, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let slope = marginal_slope(model, q)?;
    let x = model.marginal(q);
    if x <= SURVIVAL_FLOOR {
        return Err(PoaError::SurvivalUnderflow { q, survival: x });
    }
    Ok(-q * slope / x)
}

/// `l(Q) = -X'(Q) M(Q) / X(Q)²`.
pub fn gen_lfr(model: &dyn GeneralizedModel, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let slope = marginal_slope(model, q)?;
    let x = model.marginal(q);
    if x <= SURVIVAL_FLOOR {
        return Err(PoaError::SurvivalUnderflow { q, survival: x });
    }
    Ok(-slope * model.order(q) / (x * x))
}

/// Grid IGFR check on the generalized failure rate.
pub fn check_model_igfr(model: &dyn GeneralizedModel, lo: f64, hi: f64, grid_points: usize) -> IgfrReport {
    check_igfr_with(|q| gen_gfr(model, q), lo, hi, grid_points)
}

/// Classical newsvendor: `X = F̄`, `M(Q) = ∫₀^Q F̄`.
#[derive(Debug, Clone)]
pub struct NewsvendorModel<D> {
    demand: D,
}

impl<D: DemandModel> NewsvendorModel<D> {
    pub fn new(demand: D) -> Self {
        Self { demand }
    }

    pub fn demand(&self) -> &D {
        &self.demand
    }
}

impl<D: DemandModel> GeneralizedModel for NewsvendorModel<D> {
    fn order(&self, q: f64) -> f64 {
        self.demand.cumulative_order(q)
    }

    fn marginal(&self, q: f64) -> f64 {
        self.demand.survival(q)
    }

    fn marginal_derivative(&self, q: f64) -> Option<f64> {
        Some(-self.demand.density(q))
    }

    fn marginal_derivative_n(&self, q: f64, n: usize) -> Option<f64> {
        match n {
            0 => Some(self.demand.survival(q)),
            _ => self.demand.density_derivative(q, n - 1).map(|d| -d),
        }
    }

    fn marginal_at_zero(&self) -> f64 {
        1.0
    }

    fn kinks(&self) -> Vec<f64> {
        self.demand.atoms()
    }

    fn support_upper(&self) -> f64 {
        self.demand.support_upper()
    }

    fn inverse_marginal(&self, y: f64) -> f64 {
        self.demand.inverse_survival(y)
    }

    fn name(&self) -> String {
        self.demand.name()
    }
}

/// `M(Q) = tanh Q`, so `X = 1 - tanh²Q`, `g = 2Q tanh Q`, `l = 2 sinh²Q`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TanhModel;

impl TanhModel {
    pub fn closed_form_gfr(q: f64) -> f64 {
        2.0 * q * q.tanh()
    }

    pub fn closed_form_lfr(q: f64) -> f64 {
        2.0 * q.sinh().powi(2)
    }
}

impl GeneralizedModel for TanhModel {
    fn order(&self, q: f64) -> f64 {
        q.max(0.0).tanh()
    }

    fn marginal(&self, q: f64) -> f64 {
        let c = q.max(0.0).cosh();
        1.0 / (c * c)
    }

    fn marginal_derivative(&self, q: f64) -> Option<f64> {
        let t = q.tanh();
        Some(-2.0 * t * (1.0 - t * t))
    }

    fn marginal_derivative_n(&self, q: f64, n: usize) -> Option<f64> {
        // X = P₀(t) with t = tanh Q and dt/dQ = 1 - t², so P_{n+1} = P_n'(t)·(1 - t²).
        let mut poly = vec![1.0, 0.0, -1.0];
        for _ in 0..n {
            let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
            let mut next = vec![0.0; deriv.len() + 2];
            for (i, c) in deriv.iter().enumerate() {
                next[i] += c;
                next[i + 2] -= c;
            }
            poly = next;
        }
        let t = q.tanh();
        Some(poly.iter().rev().fold(0.0, |acc, c| acc * t + c))
    }

    fn marginal_at_zero(&self) -> f64 {
        1.0
    }

    fn inverse_marginal(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return 0.0;
        }
        if y <= 0.0 {
            return f64::INFINITY;
        }
        (1.0 - y).sqrt().atanh()
    }

    fn name(&self) -> String {
        "tanh".to_string()
    }
}

/// `M(Q) = log(1 + Q)` up to the knee `Q_v`, then linear with slope `v < 1/(1 + Q_v)`.
///
/// `X` drops from `1/(1 + Q_v)` to `v` at the knee, so for cost ratios inside that gap the
/// optimum sits on the kink with no slope match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseLogModel {
    knee: f64,
    tail_slope: f64,
}

impl PiecewiseLogModel {
    pub fn new(knee: f64, tail_slope: f64) -> Result<Self> {
        if !(knee > 0.0 && knee.is_finite()) {
            return Err(PoaError::InvalidParameter(format!("knee {knee} must be positive")));
        }
        if !(tail_slope > 0.0 && tail_slope < 1.0 / (1.0 + knee)) {
            return Err(PoaError::InvalidParameter(format!(
                "tail slope {tail_slope} must lie in (0, 1/(1 + knee))"
            )));
        }
        Ok(Self { knee, tail_slope })
    }

    pub fn knee(&self) -> f64 {
        self.knee
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    /// `(X(Q_v⁺), X(Q_v⁻))`: the cost ratios whose optimum is pinned to the knee.
    pub fn derivative_gap(&self) -> (f64, f64) {
        (self.tail_slope, 1.0 / (1.0 + self.knee))
    }
}

impl GeneralizedModel for PiecewiseLogModel {
    fn order(&self, q: f64) -> f64 {
        let q = q.max(0.0);
        if q <= self.knee {
            q.ln_1p()
        } else {
            self.tail_slope * (q - self.knee) + self.knee.ln_1p()
        }
    }

    fn marginal(&self, q: f64) -> f64 {
        if q <= self.knee {
            1.0 / (1.0 + q.max(0.0))
        } else {
            self.tail_slope
        }
    }

    fn marginal_derivative(&self, q: f64) -> Option<f64> {
        Some(if q < self.knee { -1.0 / (1.0 + q).powi(2) } else { 0.0 })
    }

    fn marginal_derivative_n(&self, q: f64, n: usize) -> Option<f64> {
        if n == 0 {
            return Some(self.marginal(q));
        }
        if q >= self.knee {
            return Some(0.0);
        }
        let factorial: f64 = (1..=n).map(|i| i as f64).product();
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        Some(sign * factorial / (1.0 + q).powi(n as i32 + 1))
    }

    fn marginal_at_zero(&self) -> f64 {
        1.0
    }

    fn marginal_at_infinity(&self) -> f64 {
        self.tail_slope
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.knee]
    }

    fn inverse_marginal(&self, y: f64) -> f64 {
        let (low, high) = self.derivative_gap();
        if y >= 1.0 {
            0.0
        } else if y >= high {
            1.0 / y - 1.0
        } else if y > low {
            self.knee
        } else {
            f64::INFINITY
        }
    }

    fn name(&self) -> String {
        format!("piecewise(knee={}, v={})", self.knee, self.tail_slope)
    }
}

/// Wraps a model and hides its analytic derivatives, forcing finite differences.
#[derive(Debug, Clone)]
pub struct FiniteDifference<M>(pub M);

impl<M: GeneralizedModel> GeneralizedModel for FiniteDifference<M> {
    fn order(&self, q: f64) -> f64 {
        self.0.order(q)
    }

    fn marginal(&self, q: f64) -> f64 {
        self.0.marginal(q)
    }

    fn marginal_derivative_n(&self, q: f64, n: usize) -> Option<f64> {
        (n == 0).then(|| self.0.marginal(q))
    }

    fn marginal_at_zero(&self) -> f64 {
        self.0.marginal_at_zero()
    }

    fn marginal_at_infinity(&self) -> f64 {
        self.0.marginal_at_infinity()
    }

    fn kinks(&self) -> Vec<f64> {
        self.0.kinks()
    }

    fn support_upper(&self) -> f64 {
        self.0.support_upper()
    }

    fn inverse_marginal(&self, y: f64) -> f64 {
        self.0.inverse_marginal(y)
    }

    fn name(&self) -> String {
        format!("fd({})", self.0.name())
    }
}
