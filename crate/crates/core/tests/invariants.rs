//! Exact invariants that hold path by path on shared seeds.

mod common;

use common::*;
use proptest::prelude::*;
use rsjd::estimators::{estimate_green, estimate_harmonic};
use rsjd::model::{BoundaryData, BoundaryFamily, Region};
use rsjd::sampler::{sample_paths, EventKind, SamplerConfig, StopRule};

fn cfg(seed: u64) -> SamplerConfig {
    SamplerConfig::new(2e-3, 50.0, seed).unwrap()
}

fn ramp(offset: f64, slope: f64) -> BoundaryFamily {
    BoundaryFamily::Affine {
        offset,
        slope: vec![slope],
        lo: 0.0,
        hi: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn event_times_nondecreasing_and_regimes_in_range(seed in 0u64..1_000, x0 in -1.0f64..1.0, start in 0usize..2) {
        let s = spec(TWO_REGIME_JUMPS);
        let paths = sample_paths(&s, &[x0], start, &StopRule::Horizon { t: 0.5 }, &cfg(seed), 8, false).unwrap();
        for tr in &paths {
            prop_assert!(tr.events.windows(2).all(|w| w[0].t <= w[1].t));
            prop_assert!(tr.events.iter().all(|e| e.regime.is_none_or(|r| r < 2)));
            prop_assert_eq!(tr.events.last().unwrap().kind, EventKind::Stop);
            prop_assert!(tr.end.time <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn harmonic_is_monotone_and_positive(seed in 0u64..1_000, x in 0.05f64..0.95, lift in 0.0f64..0.5) {
        let s = spec(TWO_REGIME_JUMPS);
        let region = Region::interval(0.0, 1.0);
        let low = BoundaryData::per_regime(vec![ramp(0.0, 0.5), ramp(0.1, 0.2)]);
        let high = BoundaryData::per_regime(vec![ramp(lift, 0.5), ramp(0.1 + lift, 0.2)]);
        let queries = vec![(vec![x], 0), (vec![x], 1)];
        let a = estimate_harmonic(&s, &region, &low, &queries, &cfg(seed), 200).unwrap();
        let b = estimate_harmonic(&s, &region, &high, &queries, &cfg(seed), 200).unwrap();
        for (ea, eb) in a.estimates.iter().zip(&b.estimates) {
            prop_assert!(ea.value >= 0.0);
            prop_assert!(ea.value <= eb.value + 1e-12);
        }
    }

    #[test]
    fn harmonic_is_linear_in_boundary_data(seed in 0u64..1_000, x in 0.05f64..0.95, c in 0.1f64..3.0) {
        let s = spec(UNIFORM_JUMPS_1D);
        let region = Region::interval(0.0, 1.0);
        let face = |v: f64| BoundaryData::uniform(BoundaryFamily::Indicator { set: Region::interval(1.0, 1e300), value: v }, 1);
        let queries = vec![(vec![x], 0)];
        let one = estimate_harmonic(&s, &region, &face(1.0), &queries, &cfg(seed), 200).unwrap();
        let scaled = estimate_harmonic(&s, &region, &face(c), &queries, &cfg(seed), 200).unwrap();
        prop_assert!((scaled.estimates[0].value - c * one.estimates[0].value).abs() < 1e-12);
    }

    #[test]
    fn green_operator_is_linear(seed in 0u64..1_000, x in 0.05f64..0.95, a in -2.0f64..2.0) {
        let s = spec(TWO_REGIME_JUMPS);
        let region = Region::interval(0.0, 1.0);
        let c = cfg(seed);
        let f = |y: &[f64]| y[0] * y[0];
        let g = |y: &[f64]| 1.0 + y[0];
        let sum = move |y: &[f64]| f(y) + a * g(y);
        let gf = estimate_green(&s, 1, &region, &f, &[x], &c, 100).unwrap().value;
        let gg = estimate_green(&s, 1, &region, &g, &[x], &c, 100).unwrap().value;
        let gs = estimate_green(&s, 1, &region, &sum, &[x], &c, 100).unwrap().value;
        prop_assert!((gs - (gf + a * gg)).abs() < 1e-9 * (1.0 + gs.abs()));
        prop_assert!(gf >= 0.0 && gg >= 0.0);
    }
}
