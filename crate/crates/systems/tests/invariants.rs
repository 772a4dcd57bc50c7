use ges_core::state::CoeffState;
use ges_core::{
    compose_check, pullback_image, BranchSelect, MetricKind, SeedSource, TrajectoryFamily,
};
use ges_systems::branch2::{ball_sample, TwoRateDecay};
use ges_systems::bump::{bump_state, curve, TravellingBump};
use ges_systems::forced::{forced_sample, ForcedScalar};
use ges_systems::heat::{heat_evolve, heat_space, HeatSystem, HEAT_TAG};
use ges_systems::nse::{ForcingProfile, TimeProfile};
use ges_systems::single::{circle_state, SingleSeeds, SingleTrajectory};
use proptest::prelude::*;

fn ordered3() -> impl Strategy<Value = (f64, f64, f64)> {
    prop::array::uniform3(-20.0f64..0.0).prop_map(|mut a| {
        a.sort_by(f64::total_cmp);
        (a[0], a[1], a[2])
    })
}

fn heat_data() -> impl Strategy<Value = (i32, Vec<f64>)> {
    (32i32..256, prop::collection::vec(-1.0f64..1.0, 1..40))
}

fn heat_state(lo: i32, vals: &[f64]) -> CoeffState<f64> {
    let x = CoeffState::from_real(
        HEAT_TAG,
        vals.iter()
            .enumerate()
            .map(|(i, v)| (lo + 3 * i as i32, *v)),
    )
    .unwrap();
    let n = heat_space::<f64>().strong_norm(&x).unwrap();
    x.scaled(1.0 / n.max(1e-300))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_norm_is_nonincreasing((lo, vals) in heat_data(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assume!(vals.iter().any(|v| v.abs() > 1e-3));
        let x = heat_state(lo, &vals);
        let space = heat_space::<f64>();
        let (t1, t2) = (a.min(b), a.max(b));
        let n1 = space.strong_norm(&heat_evolve(&x, 0.0, t1).unwrap()).unwrap();
        let n2 = space.strong_norm(&heat_evolve(&x, 0.0, t2).unwrap()).unwrap();
        prop_assert!(n2 <= n1 * (1.0 + 1e-14));
        // Support in |xi| >= xi_min decays at least like exp(-xi_min^2 (t - s)).
        let xi_min = f64::from(lo) / 64.0;
        let fam = HeatSystem::<f64>::new();
        let img = pullback_image(&fam, &[x], 0.0, -t2, BranchSelect::All).unwrap();
        let n = space.strong_norm(&img.entries[0].state).unwrap();
        prop_assert!(n <= (-(xi_min * xi_min) * t2).exp() * (1.0 + 1e-12));
    }

    #[test]
    fn bump_stays_on_the_sphere(t in -50.0f64..50.0, r in -5.0f64..5.0) {
        let space = TravellingBump::<f64>::new().space().clone();
        let x = bump_state(r, t);
        prop_assert!((space.strong_norm(&x).unwrap() - 1.0).abs() < 1e-12);
        let n = (t - r).floor().abs();
        let w = space.dist(MetricKind::Weak, &x, &space.zero()).unwrap();
        prop_assert!(w <= 3.0 * 2f64.powf(-n + 1.0), "{w} at n = {n}");
    }

    #[test]
    fn restriction_inclusion_for_closed_forms((r, s, t) in ordered3(), seed in 0u64..1000) {
        let single = SingleTrajectory::<f64>::new();
        let bump = TravellingBump::<f64>::new();
        let heat = HeatSystem::<f64>::new();
        let branch = TwoRateDecay::<f64>::new();
        let forced = ForcedScalar::<f64>::new(0.4);
        let heat_seeds = vec![heat_state(40, &[0.5, -0.2, 0.7])];
        let checks = [
            compose_check(&single, &SingleSeeds.seeds_at(r, t).unwrap(), r, s, t).unwrap(),
            compose_check(&bump, &[curve(r + 0.3), curve(r - 2.0)], r, s, t).unwrap(),
            compose_check(&heat, &heat_seeds, r, s, t).unwrap(),
            compose_check(&branch, &ball_sample(3, seed), r, s, t).unwrap(),
            compose_check(&forced, &forced_sample(), r, s, t).unwrap(),
        ];
        for c in checks {
            prop_assert!(c <= 1e-6, "{c}");
        }
    }

    #[test]
    fn ensembles_ignore_seed_order(seed in 0u64..1000, s in -10.0f64..0.0) {
        let fam = TwoRateDecay::<f64>::new();
        let seeds = ball_sample::<f64>(5, seed);
        let mut rev = seeds.clone();
        rev.reverse();
        let a = pullback_image(&fam, &seeds, 0.0, s, BranchSelect::All).unwrap().states();
        let b = pullback_image(&fam, &rev, 0.0, s, BranchSelect::All).unwrap().states();
        let space = fam.space();
        prop_assert!(space.hausdorff(&a, &b, MetricKind::Strong).unwrap() == 0.0);
    }

    #[test]
    fn translational_bound_is_shift_invariant(shift in -10.0f64..10.0, omega in 0.5f64..2.0) {
        let f = ForcingProfile::single([1, 1, 0], 1.0, TimeProfile::Sin { omega, phase: 0.0 }).unwrap();
        let g = ForcingProfile::single([1, 1, 0], 1.0, TimeProfile::Sin { omega, phase: omega * shift }).unwrap();
        let a = f.translational_bound(f.default_window(), 0.01);
        let b = g.translational_bound(g.default_window(), 0.01);
        prop_assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn single_ensembles_sit_on_the_trajectory() {
    let fam = SingleTrajectory::<f64>::new();
    let img = pullback_image(
        &fam,
        &SingleSeeds.seeds_at(-7.0, 1.0).unwrap(),
        1.0,
        -7.0,
        BranchSelect::All,
    )
    .unwrap();
    assert_eq!(img.states(), vec![circle_state(1.0)]);
}
