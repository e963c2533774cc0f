//! Stochastic demand distributions and the two failure-rate functionals.
//!
//! A [`DemandModel`] exposes the survival function `F̄(ξ) = P(D ≥ ξ)`, the density, the inverse
//! survival and the expected sales `∫₀^Q F̄(ξ)dξ`. The generalized failure rate
//! `g(Q) = Q f(Q) / F̄(Q)` and its companion `l(Q) = f(Q) ∫₀^Q F̄ / F̄(Q)²` drive the
//! decentralized equilibrium conditions.

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{PoaError, Result};
use crate::numeric::{adaptive_simpson, gauss_legendre5, invert_nonincreasing};

/// Below this survival value `g` and `l` are reported as [`PoaError::SurvivalUnderflow`].
pub const SURVIVAL_FLOOR: f64 = 1e-14;

/// Absolute tolerance in `Q` of bisection-based inverses.
pub const QUANTILE_TOL: f64 = 1e-12;

/// Relative tolerance of quadrature fallbacks.
pub const QUADRATURE_REL_TOL: f64 = 1e-9;

pub trait DemandModel: Send + Sync + std::fmt::Debug {
    /// `P(D ≥ ξ)`; equals 1 at `ξ = 0` since demand is nonnegative.
    fn survival(&self, xi: f64) -> f64;

    fn density(&self, xi: f64) -> f64;

    /// Upper end of the support, `f64::INFINITY` when unbounded.
    fn support_upper(&self) -> f64 {
        f64::INFINITY
    }

    /// Smallest `ξ` with `F̄(ξ) ≤ y` for `y ∈ (0, 1]`.
    fn inverse_survival(&self, y: f64) -> f64 {
        invert_nonincreasing(|x| self.survival(x), y, 1.0, self.support_upper(), QUANTILE_TOL)
    }

    /// Expected sales `∫₀^Q F̄(ξ)dξ`.
    fn cumulative_order(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let top = q.min(self.support_upper());
        adaptive_simpson(|x| self.survival(x), 0.0, top, QUADRATURE_REL_TOL)
    }

    /// `order`-th derivative of the density, when known analytically.
    fn density_derivative(&self, xi: f64, order: usize) -> Option<f64> {
        (order == 0).then(|| self.density(xi))
    }

    /// Points where the survival function jumps (atoms of the demand distribution).
    fn atoms(&self) -> Vec<f64> {
        Vec::new()
    }

    fn name(&self) -> String;
}

/// Uniform demand on `[0, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDemand {
    upper: f64,
}

impl UniformDemand {
    pub fn new(upper: f64) -> Result<Self> {
        if !(upper > 0.0 && upper.is_finite()) {
            return Err(PoaError::InvalidParameter(format!("uniform upper bound {upper} must be positive")));
        }
        Ok(Self { upper })
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

impl DemandModel for UniformDemand {
    fn survival(&self, xi: f64) -> f64 {
        (1.0 - xi / self.upper).clamp(0.0, 1.0)
    }

    fn density(&self, xi: f64) -> f64 {
        if (0.0..=self.upper).contains(&xi) {
            1.0 / self.upper
        } else {
            0.0
        }
    }

    fn support_upper(&self) -> f64 {
        self.upper
    }

    fn inverse_survival(&self, y: f64) -> f64 {
        self.upper * (1.0 - y.clamp(0.0, 1.0))
    }

    fn cumulative_order(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, self.upper);
        q - q * q / (2.0 * self.upper)
    }

    fn density_derivative(&self, xi: f64, order: usize) -> Option<f64> {
        match order {
            0 => Some(self.density(xi)),
            _ => Some(0.0),
        }
    }

    fn name(&self) -> String {
        format!("uniform(b={})", self.upper)
    }
}

/// Half-normal demand with scale `σ`: density `2/(σ√(2π)) exp(-ξ²/2σ²)` on `ξ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfNormalDemand {
    scale: f64,
}

impl HalfNormalDemand {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PoaError::InvalidParameter(format!("half-normal scale {scale} must be positive")));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl DemandModel for HalfNormalDemand {
    fn survival(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 1.0;
        }
        erfc(xi / (self.scale * std::f64::consts::SQRT_2))
    }

    fn density(&self, xi: f64) -> f64 {
        if xi < 0.0 {
            return 0.0;
        }
        let z = xi / self.scale;
        (2.0 / std::f64::consts::PI).sqrt() / self.scale * (-0.5 * z * z).exp()
    }

    fn inverse_survival(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return 0.0;
        }
        if y <= 0.0 {
            return f64::INFINITY;
        }
        let mut x = self.scale * std::f64::consts::SQRT_2 * erfc_inv(y);
        // Two Newton polish steps; erfc_inv alone is accurate to a few ulps only near y = 1/2.
        for _ in 0..2 {
            let f = self.density(x);
            if f > 0.0 {
                x = (x + (self.survival(x) - y) / f).max(0.0);
            }
        }
        x
    }

    fn cumulative_order(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let z = q / self.scale;
        q * self.survival(q) + self.scale * (2.0 / std::f64::consts::PI).sqrt() * -(-0.5 * z * z).exp_m1()
    }

    fn density_derivative(&self, xi: f64, order: usize) -> Option<f64> {
        // f⁽ⁿ⁾(ξ) = (-1)ⁿ Heₙ(ξ/σ) f(ξ) / σⁿ with probabilists' Hermite polynomials.
        let z = xi / self.scale;
        let (mut prev, mut cur) = (0.0, 1.0);
        for n in 0..order {
            let next = z * cur - n as f64 * prev;
            prev = cur;
            cur = next;
        }
        let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
        Some(sign * cur * self.density(xi) / self.scale.powi(order as i32))
    }

    fn name(&self) -> String {
        format!("halfnormal(sigma={})", self.scale)
    }
}

/// Deterministic demand fixed at `Q₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMassDemand {
    atom: f64,
}

impl PointMassDemand {
    pub fn new(atom: f64) -> Result<Self> {
        if !(atom > 0.0 && atom.is_finite()) {
            return Err(PoaError::InvalidParameter(format!("point mass location {atom} must be positive")));
        }
        Ok(Self { atom })
    }

    pub fn atom(&self) -> f64 {
        self.atom
    }
}

impl DemandModel for PointMassDemand {
    fn survival(&self, xi: f64) -> f64 {
        if xi <= self.atom {
            1.0
        } else {
            0.0
        }
    }

    /// Zero away from the atom; the Dirac mass itself has no density.
    fn density(&self, _xi: f64) -> f64 {
        0.0
    }

    fn support_upper(&self) -> f64 {
        self.atom
    }

    fn inverse_survival(&self, _y: f64) -> f64 {
        self.atom
    }

    fn cumulative_order(&self, q: f64) -> f64 {
        q.clamp(0.0, self.atom)
    }

    fn density_derivative(&self, _xi: f64, _order: usize) -> Option<f64> {
        Some(0.0)
    }

    fn atoms(&self) -> Vec<f64> {
        vec![self.atom]
    }

    fn name(&self) -> String {
        format!("pointmass(q0={})", self.atom)
    }
}

/// Polynomial in the standardized log-coordinate `z = (log ξ - center) / half_width`.
///
/// Fits are carried out in `z` to keep the Vandermonde system well conditioned; [`raw_coefficients`]
/// expands back to powers of `log ξ`.
///
/// [`raw_coefficients`]: LogPolynomial::raw_coefficients
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPolynomial {
    pub center: f64,
    pub half_width: f64,
    /// Coefficients of `z⁰, z¹, …`.
    pub coefficients: Vec<f64>,
}

impl LogPolynomial {
    pub fn standardize(&self, log_xi: f64) -> f64 {
        (log_xi - self.center) / self.half_width
    }

    /// Value at `log ξ`.
    pub fn eval_log(&self, log_xi: f64) -> f64 {
        let z = self.standardize(log_xi);
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// Coefficients of `(log ξ)⁰, (log ξ)¹, …` obtained by binomial expansion.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        let n = self.coefficients.len();
        let mut raw = vec![0.0; n];
        let a = 1.0 / self.half_width;
        let b = -self.center / self.half_width;
        for (j, c) in self.coefficients.iter().enumerate() {
            // c (a u + b)^j = c Σ_i C(j,i) aⁱ b^{j-i} uⁱ
            let mut binom = 1.0;
            for i in 0..=j {
                raw[i] += c * binom * a.powi(i as i32) * b.powi((j - i) as i32);
                binom = binom * (j - i) as f64 / (i + 1) as f64;
            }
        }
        raw
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }
}

/// Number of knots of the cached survival table of [`EmpiricalDemand`].
pub const EMPIRICAL_KNOTS: usize = 1024;

/// Demand whose log-density is a polynomial in `log ξ` on `[ξ_min, ξ_max]` and zero outside.
#[derive(Debug, Clone)]
pub struct EmpiricalDemand {
    log_density: LogPolynomial,
    lower: f64,
    upper: f64,
    normalization: f64,
    knot_step: f64,
    survival_knots: Vec<f64>,
    cumulative_knots: Vec<f64>,
}

impl EmpiricalDemand {
    /// Builds the normalized model and its survival table.
    pub fn new(log_density: LogPolynomial, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && upper > lower && upper.is_finite()) {
            return Err(PoaError::InvalidParameter(format!(
                "empirical support [{lower}, {upper}] must be a positive finite interval"
            )));
        }
        if log_density.coefficients.is_empty() || !(log_density.half_width > 0.0) {
            return Err(PoaError::InvalidParameter("empty log-density polynomial".into()));
        }
        let n = EMPIRICAL_KNOTS;
        let knot_step = (upper - lower) / (n - 1) as f64;
        let knot = |i: usize| lower + knot_step * i as f64;
        let raw = |x: f64| log_density.eval_log(x.ln()).exp();
        let pieces: Vec<f64> = (0..n - 1).map(|i| gauss_legendre5(raw, knot(i), knot(i + 1))).collect();
        let normalization: f64 = pieces.iter().sum();
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(PoaError::NonNormalizable(format!("integral of exp(poly) is {normalization}")));
        }

        let mut survival_knots = Vec::with_capacity(n);
        let mut remaining = 1.0;
        survival_knots.push(1.0);
        for (i, p) in pieces.iter().enumerate() {
            remaining -= p / normalization;
            survival_knots.push(if i == n - 2 { 0.0 } else { remaining.max(0.0) });
        }

        let mut model = Self {
            log_density,
            lower,
            upper,
            normalization,
            knot_step,
            survival_knots,
            cumulative_knots: Vec::new(),
        };
        // ∫ₐᵇ F̄ = b F̄(b) - a F̄(a) + ∫ₐᵇ ξ f(ξ) dξ
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = lower;
        cumulative.push(acc);
        for i in 0..n - 1 {
            let (a, b) = (model.knot(i), model.knot(i + 1));
            acc += b * model.survival_knots[i + 1] - a * model.survival_knots[i]
                + gauss_legendre5(|x| x * model.density(x), a, b);
            cumulative.push(acc);
        }
        model.cumulative_knots = cumulative;
        Ok(model)
    }

    fn knot(&self, i: usize) -> f64 {
        if i + 1 == self.survival_knots.len() {
            self.upper
        } else {
            self.lower + self.knot_step * i as f64
        }
    }

    fn interval(&self, xi: f64) -> usize {
        let i = ((xi - self.lower) / self.knot_step).floor() as usize;
        i.min(self.survival_knots.len() - 2)
    }

    pub fn log_density(&self) -> &LogPolynomial {
        &self.log_density
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn knot_count(&self) -> usize {
        self.survival_knots.len()
    }
}

impl DemandModel for EmpiricalDemand {
    fn survival(&self, xi: f64) -> f64 {
        if xi <= self.lower {
            return 1.0;
        }
        if xi >= self.upper {
            return 0.0;
        }
        let i = self.interval(xi);
        let a = self.knot(i);
        (self.survival_knots[i] - gauss_legendre5(|x| self.density(x), a, xi)).clamp(0.0, 1.0)
    }

    fn density(&self, xi: f64) -> f64 {
        if xi < self.lower || xi > self.upper {
            return 0.0;
        }
        self.log_density.eval_log(xi.ln()).exp() / self.normalization
    }

    fn support_upper(&self) -> f64 {
        self.upper
    }

    fn inverse_survival(&self, y: f64) -> f64 {
        if y >= 1.0 {
            return self.lower;
        }
        if y <= 0.0 {
            return self.upper;
        }
        // Knot table is nonincreasing: locate the bracketing interval, then bisect inside it.
        let idx = self.survival_knots.partition_point(|&s| s > y);
        let hi_i = idx.min(self.survival_knots.len() - 1);
        let lo_i = hi_i.saturating_sub(1);
        let (mut lo, mut hi) = (self.knot(lo_i), self.knot(hi_i));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= QUANTILE_TOL || mid <= lo || mid >= hi {
                break;
            }
            if self.survival(mid) > y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn cumulative_order(&self, q: f64) -> f64 {
        if q <= self.lower {
            return q.max(0.0);
        }
        if q >= self.upper {
            return *self.cumulative_knots.last().expect("table is nonempty");
        }
        let i = self.interval(q);
        let a = self.knot(i);
        self.cumulative_knots[i] + q * self.survival(q) - a * self.survival_knots[i]
            + gauss_legendre5(|x| x * self.density(x), a, q)
    }

    fn name(&self) -> String {
        format!("empirical(degree={}, support=[{}, {}])", self.log_density.degree(), self.lower, self.upper)
    }
}

/// Generalized failure rate `g(Q) = Q f(Q) / F̄(Q)`.
pub fn gfr(model: &dyn DemandModel, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let s = model.survival(q);
    if s <= SURVIVAL_FLOOR {
        return Err(PoaError::SurvivalUnderflow { q, survival: s });
    }
    Ok(q * model.density(q) / s)
}

/// `l(Q) = f(Q) ∫₀^Q F̄ / F̄(Q)²`.
pub fn lfr(model: &dyn DemandModel, q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let s = model.survival(q);
    if s <= SURVIVAL_FLOOR {
        return Err(PoaError::SurvivalUnderflow { q, survival: s });
    }
    Ok(model.density(q) * model.cumulative_order(q) / (s * s))
}

/// Right side of Young's inequality, `Qφ + ∫_φ¹ F̄⁻¹(y) dy`; it bounds `∫₀^Q F̄` from above
/// for every `φ ∈ [0, 1]`, with equality at `φ = F̄(Q)`.
pub fn young_upper(model: &dyn DemandModel, q: f64, phi: f64) -> f64 {
    q * phi + adaptive_simpson(|y| model.inverse_survival(y), phi, 1.0, QUADRATURE_REL_TOL)
}

/// Outcome of sampling `g` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IgfrReport {
    pub is_nondecreasing: bool,
    /// Largest drop `g(Qᵢ) - g(Qᵢ₊₁)` between consecutive grid points (0 when monotone).
    pub max_violation: f64,
    /// Hull of the grid points where `g > 1`, or where `g` could not be evaluated.
    pub range_where_g_exceeds_1: Option<(f64, f64)>,
}

impl IgfrReport {
    /// Monotone and bounded by one on the whole range.
    pub fn holds(&self) -> bool {
        self.is_nondecreasing && self.range_where_g_exceeds_1.is_none()
    }
}

/// Relative slack allowed before a decrease of `g` counts as a violation.
const IGFR_MONOTONE_TOL: f64 = 1e-9;

/// Samples a failure-rate function on `grid_points` equispaced points of `[lo, hi]`.
pub fn check_igfr_with<G: Fn(f64) -> Result<f64>>(g: G, lo: f64, hi: f64, grid_points: usize) -> IgfrReport {
    let n = grid_points.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut prev: Option<f64> = None;
    let mut max_violation: f64 = 0.0;
    let mut exceeds: Option<(f64, f64)> = None;
    for i in 0..n {
        let q = if i + 1 == n { hi } else { lo + h * i as f64 };
        let value = g(q).unwrap_or(f64::INFINITY);
        if value > 1.0 + 1e-12 {
            exceeds = Some(match exceeds {
                None => (q, q),
                Some((first, _)) => (first, q),
            });
        }
        if let Some(p) = prev {
            if value.is_finite() && p.is_finite() {
                let drop = p - value;
                if drop > IGFR_MONOTONE_TOL * p.abs().max(1.0) {
                    max_violation = max_violation.max(drop);
                }
            }
        }
        prev = Some(value);
    }
    IgfrReport {
        is_nondecreasing: max_violation == 0.0,
        max_violation,
        range_where_g_exceeds_1: exceeds,
    }
}

/// Grid check of the IGFR assumption (`g` nondecreasing and `g ≤ 1`) on `[lo, hi]`.
pub fn check_igfr(model: &dyn DemandModel, lo: f64, hi: f64, grid_points: usize) -> IgfrReport {
    check_igfr_with(|q| gfr(model, q), lo, hi, grid_points)
}
