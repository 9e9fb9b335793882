//! Property tests for the invariants that hold for arbitrary inputs: the
//! smoothing bound on the friction functional, the parallelogram identity on
//! combined trajectories, load ordering, and CSV float round-tripping.

use proptest::prelude::*;
use tresca::csvout::fmt_f64;
use tresca::fem::{assemble, build_mesh};
use tresca::functionals::{norm_l2h_sq, phi};
use tresca::state::{
    solve_parabolic_vi, BcMode, ControlField, Discretization, ProblemSpec, StateTrajectory,
};

proptest! {
    #[test]
    fn smoothing_bound_on_friction_functional(
        values in prop::collection::vec(-10.0f64..10.0, 5),
        eps in 1e-6f64..1.0,
        q in 0.0f64..3.0,
    ) {
        let mesh = build_mesh(1, 4).unwrap();
        let ops = assemble(&mesh, 1.0).unwrap();
        let qvec = vec![q; 5];
        let exact = phi(&values, &ops, &qvec, 0.0);
        let smoothed = phi(&values, &ops, &qvec, eps);
        let wq_sum: f64 = ops.gamma2_weights.iter().map(|w| w * q).sum();
        prop_assert!(smoothed >= exact - 1e-15);
        prop_assert!(smoothed - exact <= eps * wq_sum + 1e-12);
    }

    #[test]
    fn parallelogram_identity_for_any_trajectories(
        a in prop::collection::vec(-5.0f64..5.0, 15),
        b in prop::collection::vec(-5.0f64..5.0, 15),
        mu in 0.0f64..1.0,
    ) {
        let mesh = build_mesh(1, 4).unwrap();
        let ops = assemble(&mesh, 1.0).unwrap();
        let build = |vals: &[f64]| {
            let mut t = StateTrajectory::new(2, 5, 0.5);
            t.level_mut(1).copy_from_slice(&vals[..5]);
            t.level_mut(2).copy_from_slice(&vals[5..10]);
            t
        };
        let u1 = build(&a);
        let u2 = build(&b);
        let u3 = StateTrajectory::combine(mu, &u1, &u2);
        let lhs = norm_l2h_sq(&u3, &ops);
        let rhs = mu * norm_l2h_sq(&u1, &ops) + (1.0 - mu) * norm_l2h_sq(&u2, &ops)
            - mu * (1.0 - mu) * norm_l2h_sq(&u1.sub(&u2), &ops);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn csv_floats_round_trip(v in prop::num::f64::NORMAL) {
        let s = fmt_f64(v);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back, v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn state_ordering_follows_load_ordering(
        seed in 0u64..1_000,
        shift in 0.0f64..1.0,
        q in 0.01f64..1.0,
    ) {
        let mut spec = ProblemSpec::new(1, 4, 4, BcMode::Robin { h: 5.0 }).unwrap();
        spec = spec.with_constant_b_and_start(0.5);
        let disc = Discretization::build(&spec).unwrap();
        let spec = spec.with_constant_q(&disc.mesh, q);
        let low = ControlField::random(seed, (-1.0, 1.0), 4, 5);
        let high = low.map(|v| v + shift);
        let (u_low, _) = solve_parabolic_vi(&spec, &low, &disc).unwrap();
        let (u_high, _) = solve_parabolic_vi(&spec, &high, &disc).unwrap();
        let worst = u_high.sub(&u_low).min_value();
        prop_assert!(worst >= -10.0 * spec.newton_tol, "worst ordering violation {worst}");
    }
}
