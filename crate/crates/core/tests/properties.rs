use proptest::prelude::*;

use poa_core::demand_models::{young_upper, DemandModel, HalfNormalDemand, UniformDemand};
use poa_core::generalized_model::{gen_gfr, gen_lfr, GeneralizedModel, NewsvendorModel, TanhModel};
use poa_core::poa_bounds::{poa_of, poa_report};
use poa_core::solver::{solve, ChainConfig, SolveMethod};

fn models() -> Vec<Box<dyn GeneralizedModel>> {
    vec![
        Box::new(NewsvendorModel::new(UniformDemand::new(1.0).unwrap())),
        Box::new(NewsvendorModel::new(HalfNormalDemand::new(1.0).unwrap())),
        Box::new(TanhModel),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn young_sandwich(scale in 0.2f64..5.0, u in 0.01f64..0.99, phi in 0.01f64..1.0) {
        let d = HalfNormalDemand::new(scale).unwrap();
        let q = d.inverse_survival(u);
        let co = d.cumulative_order(q);
        prop_assert!(q * d.survival(q) <= co + 1e-12 * scale);
        prop_assert!(co <= young_upper(&d, q, phi) + 1e-9 * scale);
    }

    #[test]
    fn order_is_concave(idx in 0usize..3, a in 0.0f64..3.0, b in 0.0f64..3.0, lambda in 0.0f64..1.0) {
        let m = &models()[idx];
        let mid = m.order(lambda * a + (1.0 - lambda) * b);
        prop_assert!(lambda * m.order(a) + (1.0 - lambda) * m.order(b) <= mid + 1e-12);
    }

    #[test]
    fn lost_sales_rate_dominates(idx in 0usize..3, q in 0.001f64..2.0) {
        let m = &models()[idx];
        let q = q.min(0.999 * m.support_upper());
        let (g, l) = (gen_gfr(m.as_ref(), q).unwrap(), gen_lfr(m.as_ref(), q).unwrap());
        prop_assert!(l >= g - 1e-12 * g.max(1.0), "g={g} l={l}");
    }

    #[test]
    fn push_and_pull_ordering(idx in 0usize..3, r in 0.02f64..0.98) {
        let m = &models()[idx];
        let push = solve(m.as_ref(), r, ChainConfig::PushManufacturerLeader, SolveMethod::Bisection).unwrap();
        let pull = solve(m.as_ref(), r, ChainConfig::PullRetailerLeader, SolveMethod::Bisection).unwrap();
        prop_assert!(pull.q_d >= push.q_d - 1e-12);
        prop_assert!(poa_of(&push).unwrap() >= poa_of(&pull).unwrap() - 1e-12);
        prop_assert!(poa_of(&pull).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn sandwich_under_igfr(idx in 1usize..3, r in 0.02f64..0.98, pull in any::<bool>()) {
        let m = &models()[idx];
        let config = if pull { ChainConfig::PullRetailerLeader } else { ChainConfig::PushManufacturerLeader };
        let eq = solve(m.as_ref(), r, config, SolveMethod::Bisection).unwrap();
        prop_assume!(eq.igfr_holds);
        let report = poa_report(m.as_ref(), &eq).unwrap();
        prop_assert!(report.valid, "{report:?}");
    }
}
