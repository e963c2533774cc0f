//! Property and oracle suites run by `poa validate` and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::demand_models::{DemandModel, HalfNormalDemand, PointMassDemand, UniformDemand, young_upper};
use crate::exec::{map_slice, Execution};
use crate::generalized_model::{check_model_igfr, gen_gfr, gen_lfr, GeneralizedModel, NewsvendorModel, TanhModel};
use crate::poa_bounds::{poa_of, poa_report, PoaReport};
use crate::solver::{
    brute_force_optimum, leader_profit_by_quantity, solve, solve_centralized, solve_n_serial, stackelberg_oracle,
    ChainConfig, SerialConfig, SolveMethod,
};
use crate::sweep::linspace;

/// Seed of the random draws in the property checks.
pub const PROPERTY_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariants,
    Oracle,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Deliberate corruptions used to prove the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Lower bound moved above the exact value.
    InflateLowerBound,
    /// Improved upper bound collapsed to 1.
    DeflateUpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: &'static str,
    pub check: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub violations: usize,
    /// Largest violation magnitude (or largest error for oracle checks).
    pub worst: f64,
    pub detail: String,
}

struct Tally {
    suite: &'static str,
    check: &'static str,
    checked: usize,
    violations: usize,
    worst: f64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(suite: &'static str, check: &'static str) -> Self {
        Self {
            suite,
            check,
            checked: 0,
            violations: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    /// Records `excess`; positive values are violations.
    fn record(&mut self, excess: f64, context: impl FnOnce() -> String) {
        self.checked += 1;
        if !(excess <= 0.0) {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
        if excess.is_nan() {
            self.worst = f64::NAN;
        } else if !self.worst.is_nan() {
            self.worst = self.worst.max(excess);
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            suite: self.suite,
            check: self.check,
            passed: self.violations == 0 && self.checked > 0,
            checked: self.checked,
            violations: self.violations,
            worst: self.worst,
            detail: self.first_failure.unwrap_or_default(),
        }
    }
}

/// Uniform(1), HalfNormal(1) and the tanh model.
pub fn smooth_models() -> Vec<Box<dyn GeneralizedModel>> {
    vec![
        Box::new(NewsvendorModel::new(UniformDemand::new(1.0).expect("valid"))),
        Box::new(NewsvendorModel::new(HalfNormalDemand::new(1.0).expect("valid"))),
        Box::new(TanhModel),
    ]
}

/// `0.05, 0.10, …, 0.95`.
pub fn r_grid_19() -> Vec<f64> {
    (1..20).map(|i| 0.05 * i as f64).collect()
}

pub const NONTRIVIAL: [ChainConfig; 2] = [ChainConfig::PushManufacturerLeader, ChainConfig::PullRetailerLeader];

fn apply_faults(mut report: PoaReport, faults: &[Fault]) -> PoaReport {
    for fault in faults {
        match fault {
            Fault::InflateLowerBound => report.lower = report.poa + 0.5,
            Fault::DeflateUpperBound => report.improved_upper = 1.0,
        }
    }
    report.valid = report.sandwich_holds();
    report
}

/// Sandwich check on every IGFR `(model, config, r)` of the given models. Also returns whether
/// the improved bound was strictly below the previous one somewhere.
pub fn sandwich_check(models: &[&dyn GeneralizedModel], rs: &[f64], faults: &[Fault], exec: Execution) -> (CheckOutcome, bool) {
    let mut tally = Tally::new("invariants", "bound_sandwich");
    let mut improved_somewhere = false;
    for model in models {
        for config in NONTRIVIAL {
            let reports = map_slice(exec, rs, |&r| {
                let eq = solve(*model, r, config, SolveMethod::Bisection).ok()?;
                if !eq.igfr_holds {
                    return None;
                }
                Some((r, poa_report(*model, &eq).ok()?))
            });
            for (r, report) in reports.into_iter().flatten() {
                let report = apply_faults(report, faults);
                let excess = (report.lower - report.poa - crate::poa_bounds::SANDWICH_TOL)
                    .max(report.poa - report.improved_upper - crate::poa_bounds::SANDWICH_TOL)
                    .max(report.improved_upper - report.prev_upper - crate::poa_bounds::PREV_TOL);
                let excess = if report.valid { excess.min(0.0) } else { excess.max(f64::MIN_POSITIVE) };
                tally.record(excess, || {
                    format!(
                        "{} {} r={r:.2}: lower={:.9} poa={:.9} improved={:.9} prev={:.9}",
                        model.name(),
                        config.slug(),
                        report.lower,
                        report.poa,
                        report.improved_upper,
                        report.prev_upper
                    )
                });
                if report.improved_upper < report.prev_upper - 1e-6 {
                    improved_somewhere = true;
                }
            }
        }
    }
    (tally.finish(), improved_somewhere)
}

fn poa_at_least_one(models: &[&dyn GeneralizedModel], rs: &[f64]) -> CheckOutcome {
    let mut t = Tally::new("invariants", "poa_at_least_one");
    for m in models {
        for config in ChainConfig::ALL {
            for &r in rs {
                match solve(*m, r, config, SolveMethod::Bisection).and_then(|eq| poa_of(&eq)) {
                    Ok(poa) => t.record(1.0 - 1e-9 - poa, || format!("{} {} r={r:.2}: {poa}", m.name(), config.slug())),
                    Err(e) => t.record(f64::INFINITY, || format!("{} {} r={r:.2}: {e}", m.name(), config.slug())),
                }
            }
        }
    }
    t.finish()
}

fn magnitude_relations(models: &[&dyn GeneralizedModel], rs: &[f64]) -> Vec<CheckOutcome> {
    let mut q = Tally::new("invariants", "pull_stocks_at_least_push");
    let mut p = Tally::new("invariants", "push_poa_at_least_pull");
    for m in models {
        for &r in rs {
            let push = solve(*m, r, ChainConfig::PushManufacturerLeader, SolveMethod::Bisection);
            let pull = solve(*m, r, ChainConfig::PullRetailerLeader, SolveMethod::Bisection);
            let (Ok(push), Ok(pull)) = (push, pull) else {
                q.record(f64::INFINITY, || format!("{} r={r:.2}: solve failed", m.name()));
                continue;
            };
            q.record(push.q_d - pull.q_d - 1e-12, || format!("{} r={r:.2}: push {} pull {}", m.name(), push.q_d, pull.q_d));
            let (a, b) = (poa_of(&push).unwrap_or(f64::NAN), poa_of(&pull).unwrap_or(f64::NAN));
            p.record(b - a - 1e-12, || format!("{} r={r:.2}: push {a} pull {b}", m.name()));
        }
    }
    vec![q.finish(), p.finish()]
}

/// Right end of the range `[0, q]` where `g ≤ 1`, scanning up to `q_max`.
fn igfr_range(model: &dyn GeneralizedModel, q_max: f64) -> f64 {
    let grid = linspace(0.0, q_max, 2001);
    let mut last = 0.0;
    for &q in &grid {
        match gen_gfr(model, q) {
            Ok(g) if g <= 1.0 => last = q,
            _ => break,
        }
    }
    last
}

fn failure_rate_relations(models: &[&dyn GeneralizedModel]) -> Vec<CheckOutcome> {
    let mut dom = Tally::new("invariants", "l_at_least_g");
    let mut mono = Tally::new("invariants", "l_nondecreasing_under_igfr");
    for m in models {
        let q_max = solve_centralized(*m, 0.02).unwrap_or(1.0);
        for &q in &linspace(q_max / 400.0, q_max, 400) {
            if let (Ok(g), Ok(l)) = (gen_gfr(*m, q), gen_lfr(*m, q)) {
                dom.record(g - l - 1e-12 * g.abs().max(1.0), || format!("{} Q={q}: g={g} l={l}", m.name()));
            }
        }
        let hi = igfr_range(*m, q_max);
        if hi > 0.0 && check_model_igfr(*m, 0.0, hi, 256).holds() {
            let mut prev = 0.0;
            for &q in &linspace(0.0, hi, 256) {
                let l = gen_lfr(*m, q).unwrap_or(f64::NAN);
                mono.record(prev - l - 1e-12 * prev.max(1.0), || format!("{} Q={q}: l fell from {prev} to {l}", m.name()));
                prev = l;
            }
        }
    }
    vec![dom.finish(), mono.finish()]
}

/// Young's sandwich at 20 random `(Q, φ)` per demand, with `Q` drawn through the quantile function.
fn young_sandwich(demands: &[&dyn DemandModel], rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut young = Tally::new("invariants", "young_sandwich");
    for d in demands {
        for _ in 0..20 {
            let q = d.inverse_survival(rng.random_range(0.02..0.98f64));
            let phi: f64 = rng.random_range(0.01..1.0);
            let co = d.cumulative_order(q);
            let lower = q * d.survival(q);
            let upper = young_upper(*d, q, phi);
            let tol = 1e-9 * q.max(1.0);
            young.record((lower - co).max(co - upper) - tol, || format!("{} Q={q} φ={phi}: {lower} ≤ {co} ≤ {upper}", d.name()));
        }
    }
    young.finish()
}

/// Concavity of `M` at 100 random triples per model on `[0, span]`, `span` covering `Q_c(0.02)`.
fn order_concavity(models: &[&dyn GeneralizedModel], rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut concave = Tally::new("invariants", "order_concavity");
    for m in models {
        let span = 1.5 * solve_centralized(*m, 0.02).unwrap_or(2.0);
        for _ in 0..100 {
            let (a, b): (f64, f64) = (rng.random_range(0.0..span), rng.random_range(0.0..span));
            let lambda: f64 = rng.random();
            let mid = m.order(lambda * a + (1.0 - lambda) * b);
            let chord = lambda * m.order(a) + (1.0 - lambda) * m.order(b);
            concave.record(chord - mid - 1e-9 * span.max(1.0), || format!("{} Q={a} Q'={b} λ={lambda}", m.name()));
        }
    }
    concave.finish()
}

/// Model-generic properties: PoA ≥ 1, push/pull ordering, failure-rate relations, Young's
/// sandwich and concavity of `M`.
pub fn model_invariants(models: &[&dyn GeneralizedModel], demands: &[&dyn DemandModel], rs: &[f64]) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROPERTY_SEED);
    let mut out = vec![poa_at_least_one(models, rs)];
    out.extend(magnitude_relations(models, rs));
    out.extend(failure_rate_relations(models));
    out.push(young_sandwich(demands, &mut rng));
    out.push(order_concavity(models, &mut rng));
    out
}

fn point_mass_degeneracy() -> CheckOutcome {
    let mut t = Tally::new("invariants", "fixed_order_degeneracy");
    let pm = NewsvendorModel::new(PointMassDemand::new(2.0).expect("valid"));
    for &r in &r_grid_19() {
        for config in ChainConfig::ALL {
            match solve(&pm, r, config, SolveMethod::Bisection) {
                Ok(eq) => {
                    let poa = poa_of(&eq).unwrap_or(f64::NAN);
                    t.record((eq.q_d - 2.0).abs().max((poa - 1.0).abs()) - 1e-9, || format!("{} r={r:.2}: Q_d={} poa={poa}", config.slug(), eq.q_d));
                }
                Err(e) => t.record(f64::INFINITY, || format!("{} r={r:.2}: {e}", config.slug())),
            }
        }
    }
    t.finish()
}

/// Structural properties of the built-in models, with optional fault injection into the bound sandwich.
pub fn invariant_suite(faults: &[Fault], exec: Execution) -> Vec<CheckOutcome> {
    let models = smooth_models();
    let rs = r_grid_19();
    let uniform = UniformDemand::new(1.0).expect("valid");
    let half_normal = HalfNormalDemand::new(1.0).expect("valid");
    let point_mass = NewsvendorModel::new(PointMassDemand::new(1.0).expect("valid"));
    let refs: Vec<&dyn GeneralizedModel> = models.iter().map(|m| m.as_ref()).collect();
    let mut out = model_invariants(&refs, &[&uniform, &half_normal], &rs);
    let mut rng = ChaCha8Rng::seed_from_u64(PROPERTY_SEED ^ 1);
    let pm_concavity = order_concavity(&[&point_mass], &mut rng);
    if let Some(c) = out.iter_mut().find(|o| o.check == "order_concavity") {
        c.checked += pm_concavity.checked;
        c.violations += pm_concavity.violations;
        c.worst = c.worst.max(pm_concavity.worst);
        c.passed &= pm_concavity.passed;
    }
    out.push(point_mass_degeneracy());
    let (mut sandwich, improved) = sandwich_check(&refs, &rs, faults, exec);
    if !improved && sandwich.passed {
        sandwich.passed = false;
        sandwich.detail = "improved bound never strictly below the previous bound".into();
    }
    out.push(sandwich);
    out
}

/// Grid size of the brute-force `Q` oracle.
pub const ORACLE_GRID: usize = 10_000;

/// Solver against brute force: reduced leader objectives over `Q`, the centralized optimum,
/// both solve methods, `N = 2` serial reduction, and the full wholesale-price game.
pub fn oracle_suite(exec: Execution) -> Vec<CheckOutcome> {
    let models = smooth_models();
    let rs = r_grid_19();
    let mut central = Tally::new("oracle", "centralized_vs_grid");
    let mut decentral = Tally::new("oracle", "decentralized_vs_grid");
    let mut methods = Tally::new("oracle", "bisection_vs_fixed_point");
    let mut residuals = Tally::new("oracle", "residuals");
    let mut serial = Tally::new("oracle", "n_serial_reduction");
    for m in &models {
        let m = m.as_ref();
        for &r in &rs {
            let Ok(q_c) = solve_centralized(m, r) else {
                central.record(f64::INFINITY, || format!("{} r={r:.2}: centralized failed", m.name()));
                continue;
            };
            let (q_star, _) = brute_force_optimum(|q| -r * q + m.order(q), 2.0 * q_c, ORACLE_GRID);
            central.record((q_star - q_c).abs() - 1e-6, || format!("{} r={r:.2}: {q_c} vs grid {q_star}", m.name()));
            for config in NONTRIVIAL {
                let (Ok(a), Ok(b)) = (solve(m, r, config, SolveMethod::Bisection), solve(m, r, config, SolveMethod::FixedPoint)) else {
                    methods.record(f64::INFINITY, || format!("{} {} r={r:.2}: solve failed", m.name(), config.slug()));
                    continue;
                };
                methods.record((a.q_d - b.q_d).abs() - 1e-7, || format!("{} {} r={r:.2}: {} vs {}", m.name(), config.slug(), a.q_d, b.q_d));
                residuals.record(a.residual.abs().max(b.residual.abs()) - 1e-9, || format!("{} {} r={r:.2}: {} {}", m.name(), config.slug(), a.residual, b.residual));
                let (q_grid, _) = brute_force_optimum(|q| leader_profit_by_quantity(m, r, config, q), q_c, ORACLE_GRID);
                decentral.record((q_grid - a.q_d).abs() - 1e-6, || format!("{} {} r={r:.2}: {} vs grid {q_grid}", m.name(), config.slug(), a.q_d));
                let sc = match config {
                    ChainConfig::PushManufacturerLeader => SerialConfig::PushManufacturer,
                    _ => SerialConfig::PullRetailer,
                };
                match solve_n_serial(m, r, 2, sc) {
                    Ok(n) => serial.record((n.q_d - a.q_d).abs() - 1e-6, || format!("{} {} r={r:.2}: {} vs {}", m.name(), config.slug(), n.q_d, a.q_d)),
                    Err(e) => serial.record(f64::INFINITY, || format!("{} {} r={r:.2}: {e}", m.name(), config.slug())),
                }
            }
        }
    }
    let mut out = vec![central.finish(), decentral.finish(), methods.finish(), residuals.finish(), serial.finish()];
    out.push(stackelberg_check(&models[..2], exec));
    out
}

/// Leader's wholesale price from a grid over `w` against the closed-form `w/p`.
pub fn stackelberg_check(models: &[Box<dyn GeneralizedModel>], exec: Execution) -> CheckOutcome {
    let mut t = Tally::new("oracle", "stackelberg_wholesale_price");
    for m in models {
        for &r in &[0.3, 0.5, 0.7] {
            for config in NONTRIVIAL {
                let eq = solve(m.as_ref(), r, config, SolveMethod::Bisection);
                let game = stackelberg_oracle(m.as_ref(), r, config, 200, 2000, exec);
                match (eq, game) {
                    (Ok(eq), Ok(game)) => t.record((game.w_over_p - eq.w_over_p).abs() - 1e-3, || {
                        format!("{} {} r={r}: grid w/p {} vs {}", m.name(), config.slug(), game.w_over_p, eq.w_over_p)
                    }),
                    _ => t.record(f64::INFINITY, || format!("{} {} r={r}: solve failed", m.name(), config.slug())),
                }
            }
        }
    }
    t.finish()
}

pub fn run_suite(suite: Suite, faults: &[Fault], exec: Execution) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    if suite.includes(Suite::Invariants) {
        out.extend(invariant_suite(faults, exec));
    }
    if suite.includes(Suite::Oracle) {
        out.extend(oracle_suite(exec));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_pass_without_faults() {
        for outcome in invariant_suite(&[], Execution::Parallel) {
            assert!(outcome.passed, "{outcome:?}");
        }
    }

    #[test]
    fn faults_are_detected() {
        for fault in [Fault::InflateLowerBound, Fault::DeflateUpperBound] {
            let failing: Vec<_> = invariant_suite(&[fault], Execution::Parallel)
                .into_iter()
                .filter(|o| !o.passed)
                .map(|o| o.check)
                .collect();
            assert_eq!(failing, vec!["bound_sandwich"], "{fault:?}");
        }
    }
}
