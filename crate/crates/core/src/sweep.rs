//! Row-oriented data behind the CLI: `r`-sweeps, bound curves over `α`, and supporting-line
//! geometry.

use serde::Serialize;

use crate::error::{PoaError, Result};
use crate::exec::{map_slice, Execution};
use crate::generalized_model::GeneralizedModel;
use crate::poa_bounds::{alpha_threshold, improved_upper_push, lower_bound_push, poa_report};
use crate::solver::{expected_profit, solve, ChainConfig, SolveMethod};

/// `steps` equispaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub q_c: f64,
    pub q_d: f64,
    pub w_ratio: f64,
    pub profit_c: f64,
    pub profit_d: f64,
    pub poa: f64,
    pub prev_upper: f64,
    pub improved_upper: f64,
    pub lower: f64,
    /// `alpha_large`, `alpha_small`, `trivial`, or `none` when the bounds are undefined.
    pub branch: String,
    pub valid: bool,
    pub igfr: bool,
    /// Error code of a failed solve; all numeric fields are NaN then.
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(r: f64, err: &PoaError) -> Self {
        Self {
            r,
            q_c: f64::NAN,
            q_d: f64::NAN,
            w_ratio: f64::NAN,
            profit_c: f64::NAN,
            profit_d: f64::NAN,
            poa: f64::NAN,
            prev_upper: f64::NAN,
            improved_upper: f64::NAN,
            lower: f64::NAN,
            branch: "none".into(),
            valid: false,
            igfr: false,
            error: Some(err.code().to_string()),
        }
    }
}

/// One row of an `r`-sweep. Never fails: solver errors become an error code on the row.
pub fn sweep_row(model: &dyn GeneralizedModel, config: ChainConfig, r: f64, method: SolveMethod) -> SweepRow {
    let eq = match solve(model, r, config, method) {
        Ok(eq) => eq,
        Err(e) => return SweepRow::failed(r, &e),
    };
    let report = match poa_report(model, &eq) {
        Ok(rep) => rep,
        Err(e) => {
            return SweepRow {
                q_c: eq.q_c,
                q_d: eq.q_d,
                w_ratio: eq.w_over_p,
                profit_c: eq.profit_c,
                profit_d: eq.profit_d,
                igfr: eq.igfr_holds,
                ..SweepRow::failed(r, &e)
            }
        }
    };
    let branch = match (config.is_nontrivial(), report.branch) {
        (false, _) => "trivial".to_string(),
        (true, Some(b)) => b.slug().to_string(),
        (true, None) if report.prev_upper == 1.0 => "trivial".to_string(),
        (true, None) => "none".to_string(),
    };
    SweepRow {
        r,
        q_c: eq.q_c,
        q_d: eq.q_d,
        w_ratio: eq.w_over_p,
        profit_c: eq.profit_c,
        profit_d: eq.profit_d,
        poa: report.poa,
        prev_upper: report.prev_upper,
        improved_upper: report.improved_upper,
        lower: report.lower,
        branch,
        valid: report.valid,
        igfr: eq.igfr_holds,
        error: None,
    }
}

/// Rows for every `r`, in input order.
pub fn sweep(model: &dyn GeneralizedModel, config: ChainConfig, rs: &[f64], exec: Execution) -> Vec<SweepRow> {
    map_slice(exec, rs, |&r| sweep_row(model, config, r, SolveMethod::Bisection))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCurveRow {
    pub alpha: f64,
    pub improved_upper: f64,
    pub lower: f64,
}

/// Smallest `α` compatible with `g ≤ s` on `[Q_d, Q_c]`: `(1-k)^{-1/s}`.
pub fn alpha_floor(k: f64, s: f64) -> f64 {
    (-(-k).ln_1p() / s).exp()
}

/// `r̃` of a push equilibrium with survival ratio `X(Q_d)/X(0)`: `r̃ = (1-k) X(Q_d)/X(0)`.
pub fn r_tilde_from_survival(k: f64, survival_at_qd: f64) -> f64 {
    (1.0 - k) * survival_at_qd
}

/// Both push bounds as functions of `α` at fixed `(k, s, r̃)`.
pub fn bound_curves(k: f64, s: f64, r_tilde: f64, alphas: &[f64]) -> Result<Vec<BoundCurveRow>> {
    let lower = lower_bound_push(k, s, r_tilde)?.value;
    alphas
        .iter()
        .map(|&alpha| {
            Ok(BoundCurveRow {
                alpha,
                improved_upper: improved_upper_push(k, alpha)?.0,
                lower,
            })
        })
        .collect()
}

/// Default `α` range of a bound curve: from [`alpha_floor`] to twice the branch threshold.
pub fn default_alpha_range(k: f64, s: f64) -> (f64, f64) {
    (alpha_floor(k, s), 2.0 * alpha_threshold(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryRow {
    pub q: f64,
    /// `M(Q)` (in units of `p`).
    pub p_m: f64,
    /// `rQ + Π(Q_c)`: the supporting line of slope `r`.
    pub y_central: f64,
    /// `rQ + Π(Q_d)`: slope-`r` line through the decentralized point.
    pub y_decentralized: f64,
    /// Follower's line of slope `X(Q_d)` through `(Q_d, M(Q_d))`.
    pub y_follower: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometrySummary {
    pub r: f64,
    pub q_c: f64,
    pub q_d: f64,
    pub intercept_central: f64,
    pub intercept_decentralized: f64,
    pub follower_slope: f64,
    pub follower_intercept: f64,
    pub w_ratio: f64,
    /// `X(Q_c) = r`: false when `r` falls in a jump of `X` and the line only touches the kink.
    pub central_slope_matches: bool,
    pub at_kink: bool,
}

/// Curve, supporting lines and their intercepts on `steps` points of `[0, q_max]`.
pub fn geometry(
    model: &dyn GeneralizedModel,
    r: f64,
    config: ChainConfig,
    q_max: f64,
    steps: usize,
) -> Result<(Vec<GeometryRow>, GeometrySummary)> {
    if !(q_max > 0.0) || steps < 2 {
        return Err(PoaError::InvalidParameter(format!("q_max {q_max} and steps {steps} must be positive, steps ≥ 2")));
    }
    let eq = solve(model, r, config, SolveMethod::Bisection)?;
    let follower_slope = if eq.at_kink {
        // Any slope in the jump supports the curve; report the left limit.
        model.marginal(eq.q_d * (1.0 - 1e-9))
    } else {
        model.marginal(eq.q_d)
    };
    let summary = GeometrySummary {
        r,
        q_c: eq.q_c,
        q_d: eq.q_d,
        intercept_central: eq.profit_c,
        intercept_decentralized: eq.profit_d,
        follower_slope,
        follower_intercept: model.order(eq.q_d) - follower_slope * eq.q_d,
        w_ratio: eq.w_over_p,
        central_slope_matches: (model.marginal(eq.q_c) - r).abs() <= 1e-9,
        at_kink: eq.at_kink,
    };
    let rows = linspace(0.0, q_max, steps)
        .into_iter()
        .map(|q| GeometryRow {
            q,
            p_m: model.order(q),
            y_central: r * q + summary.intercept_central,
            y_decentralized: r * q + summary.intercept_decentralized,
            y_follower: summary.follower_slope * q + summary.follower_intercept,
        })
        .collect();
    debug_assert!((expected_profit(model, r, eq.q_c) - summary.intercept_central).abs() < 1e-12);
    Ok((rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demand_models::UniformDemand;
    use crate::generalized_model::{NewsvendorModel, PiecewiseLogModel, TanhModel};
    use approx::assert_relative_eq;

    #[test]
    fn linspace_is_inclusive() {
        assert_eq!(linspace(0.1, 0.9, 5).len(), 5);
        assert_eq!(*linspace(0.1, 0.9, 5).last().unwrap(), 0.9);
        assert_eq!(linspace(0.0, 1.0, 1), vec![0.0]);
    }

    #[test]
    fn uniform_sweep_rows() {
        let u = NewsvendorModel::new(UniformDemand::new(1.0).unwrap());
        let rs = linspace(0.1, 0.9, 9);
        let rows = sweep(&u, ChainConfig::PushManufacturerLeader, &rs, Execution::Parallel);
        assert_eq!(rows.len(), 9);
        for row in &rows {
            assert_relative_eq!(row.poa, 4.0 / 3.0, max_relative = 1e-9);
            assert!(row.error.is_none());
        }
        assert_eq!(rows, sweep(&u, ChainConfig::PushManufacturerLeader, &rs, Execution::Sequential));
        let trivial = sweep(&u, ChainConfig::PushRetailerLeader, &rs, Execution::Sequential);
        assert!(trivial.iter().all(|r| r.branch == "trivial" && r.poa == 1.0 && r.valid));
    }

    #[test]
    fn failed_rows_are_kept() {
        let rows = sweep(&TanhModel, ChainConfig::PullRetailerLeader, &[0.5, 1.5], Execution::Sequential);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_none());
        assert_eq!(rows[1].error.as_deref(), Some("inadmissible_ratio"));
        assert!(rows[1].poa.is_nan());
    }

    #[test]
    fn bound_curve_parameter_sets() {
        let (k, s) = (0.01, 1.0 - 1e-9);
        let rt = r_tilde_from_survival(k, 0.5);
        let a0 = alpha_floor(k, s);
        let rows = bound_curves(k, s, rt, &[a0]).unwrap();
        assert!((rows[0].improved_upper - 1.0).abs() < 0.05 && (rows[0].lower - 1.0).abs() < 0.05);

        let (lo, hi) = default_alpha_range(0.2, s);
        let rows = bound_curves(0.2, s, 0.4, &linspace(lo, hi, 50)).unwrap();
        assert!(rows.iter().all(|r| r.improved_upper > 1.0 && r.lower > 1.0));
    }

    #[test]
    fn uniform_central_geometry() {
        let u = NewsvendorModel::new(UniformDemand::new(1.0).unwrap());
        let (rows, summary) = geometry(&u, 0.5, ChainConfig::PushManufacturerLeader, 1.0, 101).unwrap();
        assert_relative_eq!(summary.intercept_central, 0.125, max_relative = 1e-12);
        assert_relative_eq!(summary.q_c, 0.5, max_relative = 1e-12);
        assert!(summary.central_slope_matches);
        assert!(summary.intercept_central >= summary.intercept_decentralized);
        // The supporting line lies above the curve and touches it at Q_c.
        for row in &rows {
            assert!(row.y_central >= row.p_m - 1e-12);
            assert!(row.y_follower >= row.p_m - 1e-12);
        }
        assert!((rows[50].y_central - rows[50].p_m).abs() < 1e-12);
    }

    #[test]
    fn piecewise_gap_geometry() {
        let pw = PiecewiseLogModel::new(1.0, 0.1).unwrap();
        let (_, summary) = geometry(&pw, 0.3, ChainConfig::PushRetailerLeader, 3.0, 31).unwrap();
        assert_eq!(summary.q_c, 1.0);
        assert!(!summary.central_slope_matches);
    }
}
