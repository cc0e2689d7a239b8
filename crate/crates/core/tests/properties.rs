use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hybrid_maneuver::ident::{fit_ridge, RegressionProblem, RidgeConfig};
use hybrid_maneuver::model::{
    jet_thrust, physical_rhs_prime, sway_yaw_accel, ControlInput, MotionState, NondimScheme, Pose, SurgeCoeffs,
    SwayYawCoeffs, VesselParams,
};
use hybrid_maneuver::net::{
    hybrid_predict, loss, loss_gradient, FeatureVector, FfnWeights, HybridModel, OutputMode, ResidualNet, Scaling,
    TrainingSample,
};
use hybrid_maneuver::ode::Solver;
use hybrid_maneuver::rollout::{integrate_pose, rmse, turning_diameter, PhysicalModel, VelocityModel};

fn state() -> impl Strategy<Value = MotionState> {
    (0.0..12.0f64, -1.5..1.5f64, -0.6..0.6f64).prop_map(|(u, v, r)| MotionState::new(u, v, r))
}

fn control() -> impl Strategy<Value = ControlInput> {
    (-0.52..0.52f64, 0.0..4500.0f64).prop_map(|(d, n)| ControlInput::new(d, n))
}

fn coeffs() -> impl Strategy<Value = SwayYawCoeffs> {
    (prop::array::uniform7(-5.0..5.0f64), prop::array::uniform8(-5.0..5.0f64))
        .prop_map(|(s, y)| SwayYawCoeffs::from_parts(s, y))
}

fn weights(seed: u64) -> FfnWeights {
    FfnWeights::random(10, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn samples() -> impl Strategy<Value = Vec<TrainingSample>> {
    prop::collection::vec(
        (
            prop::array::uniform3(-1.5..1.5f64),
            -0.5..0.5f64,
            -10.0..10.0f64,
            prop::array::uniform3(-1.5..1.5f64),
        )
            .prop_map(|(vel, delta, psi, target)| TrainingSample {
                feature: FeatureVector::new(&MotionState::from_array(vel), delta, psi),
                target,
            }),
        1..12,
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn prime_round_trip(s in state(), l in 1.0..50.0f64, u in 0.5..20.0f64) {
        let scheme = NondimScheme::new(l, u, 1000.0).unwrap();
        let back = scheme.from_prime(&scheme.to_prime(&s));
        prop_assert!(close(back.u, s.u, 1e-12) && close(back.v, s.v, 1e-12) && close(back.r, s.r, 1e-12));
    }

    #[test]
    fn sway_yaw_is_linear_in_coefficients(
        a in coeffs(), b in coeffs(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64, s in state(), c in control()
    ) {
        let comb = SwayYawCoeffs::from_parts(
            std::array::from_fn(|i| alpha * a.sway()[i] + beta * b.sway()[i]),
            std::array::from_fn(|i| alpha * a.yaw()[i] + beta * b.yaw()[i]),
        );
        let (va, ra) = sway_yaw_accel(&s, &c, &a);
        let (vb, rb) = sway_yaw_accel(&s, &c, &b);
        let (vc, rc) = sway_yaw_accel(&s, &c, &comb);
        prop_assert!(close(vc, alpha * va + beta * vb, 1e-9));
        prop_assert!(close(rc, alpha * ra + beta * rb, 1e-9));
    }

    #[test]
    fn thrust_is_even_in_steering_and_never_negative(c in control()) {
        let p = VesselParams::default();
        let pos = jet_thrust(&c, &p.jet, 1000.0);
        let neg = jet_thrust(&ControlInput::new(-c.delta, c.n), &p.jet, 1000.0);
        prop_assert_eq!(pos, neg);
        prop_assert!(pos >= 0.0);
    }

    // The centripetal m'v'r' term lives in the surge equation, so only
    // sway and yaw vanish for every state; surge vanishes when v'r' = 0.
    #[test]
    fn zero_coefficients_and_thrust_give_zero_rates(s in state(), delta in -0.52..0.52f64) {
        let mut p = VesselParams::default();
        p.swayyaw = SwayYawCoeffs::ZERO;
        p.surge = SurgeCoeffs { x_u: 0.0, x_uu: 0.0, x_uuu: 0.0, ..p.surge };
        let idle = ControlInput::new(delta, 0.0);
        let d = physical_rhs_prime(&s, &idle, &p);
        prop_assert_eq!((d.dv, d.dr), (0.0, 0.0));
        let straight = MotionState::new(s.u, 0.0, s.r);
        prop_assert_eq!(physical_rhs_prime(&straight, &idle, &p).du, 0.0);
    }

    #[test]
    fn zero_weight_hybrid_matches_physical_step(s in state(), c in control(), psi in -10.0..10.0f64, dt in 0.01..0.5f64) {
        let physics = PhysicalModel::new(VesselParams::default(), Solver::Euler);
        let hybrid = HybridModel { physics: physics.clone(), net: ResidualNet::zeros(OutputMode::Residual, 10) };
        let a = physics.next_velocity(&s, psi, &c, dt);
        let b = hybrid.next_velocity(&s, psi, &c, dt);
        prop_assert_eq!(a.to_array().map(f64::to_bits), b.to_array().map(f64::to_bits));
    }

    #[test]
    fn hybrid_prediction_is_periodic_in_heading(s in state(), c in control(), psi in -4.0..4.0f64, seed in any::<u64>()) {
        let physics = PhysicalModel::new(VesselParams::default(), Solver::Euler);
        let hybrid = HybridModel {
            physics,
            net: ResidualNet { mode: OutputMode::Residual, scaling: Scaling::identity(), weights: weights(seed) },
        };
        let a = hybrid_predict(&hybrid, &s, psi, &c, 0.1);
        let b = hybrid_predict(&hybrid, &s, psi + std::f64::consts::TAU, &c, 0.1);
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn regularizer_adds_half_lambda_weight_norm(batch in samples(), seed in any::<u64>(), lambda in 0.0..1.0f64) {
        let w = weights(seed);
        let sc = Scaling::identity();
        let l0 = loss(&w, &sc, OutputMode::Residual, &batch, 0.0).unwrap();
        let l1 = loss(&w, &sc, OutputMode::Residual, &batch, lambda).unwrap();
        prop_assert!(close(l1 - l0, 0.5 * lambda * w.matrix_sq_norm(), 1e-12));
    }

    #[test]
    fn regularizer_gradient_is_lambda_times_matrices(batch in samples(), seed in any::<u64>()) {
        let w = weights(seed);
        let sc = Scaling::identity();
        let (_, g0) = loss_gradient(&w, &sc, OutputMode::Direct, &batch, 0.0).unwrap();
        let (_, g1) = loss_gradient(&w, &sc, OutputMode::Direct, &batch, 0.01).unwrap();
        let pairs = [(&g1.w1, &g0.w1, &w.w1), (&g1.w2, &g0.w2, &w.w2), (&g1.w3, &g0.w3, &w.w3)];
        for (a, b, m) in pairs {
            for ((a, b), m) in a.iter().zip(b).zip(m) {
                prop_assert!((a - b - 0.01 * m).abs() < 1e-12);
            }
        }
        for (a, b) in [(&g1.b1, &g0.b1), (&g1.b2, &g0.b2), (&g1.b3, &g0.b3)] {
            for (a, b) in a.iter().zip(b) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences(batch in samples(), seed in any::<u64>(), k in 0usize..200) {
        let w = weights(seed);
        let sc = Scaling::identity();
        let (_, g) = loss_gradient(&w, &sc, OutputMode::Residual, &batch, 0.01).unwrap();
        let flat = w.to_flat();
        let i = k % flat.len();
        let h = 1e-6;
        let at = |delta: f64| {
            let mut f = flat.clone();
            f[i] += delta;
            loss(&FfnWeights::from_flat(10, &f), &sc, OutputMode::Residual, &batch, 0.01).unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let an = g.to_flat()[i];
        prop_assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "fd {fd} analytic {an}");
    }

    #[test]
    fn ridge_without_penalty_recovers_exact_data(
        c in prop::array::uniform4(-10.0..10.0f64),
        rows in prop::collection::vec(prop::array::uniform3(-2.0..2.0f64), 12..40),
        standardize in any::<bool>(),
    ) {
        let mut p = RegressionProblem::new(&["a", "b", "c", "one"]);
        for x in &rows {
            let row = [x[0], x[1], x[0] * x[2] + x[1] * x[1], 1.0];
            p.push(&row, row.iter().zip(&c).map(|(a, b)| a * b).sum());
        }
        let fit = match fit_ridge(&p, &RidgeConfig { lambda: 0.0, standardize }) {
            Ok(f) => f,
            // near-collinear random draws are legitimately refused
            Err(_) => return Ok(()),
        };
        for (f, t) in fit.iter().zip(&c) {
            prop_assert!((f - t).abs() <= 1e-8 * (1.0 + t.abs()), "{fit:?} vs {c:?}");
        }
    }

    #[test]
    fn ridge_shrinks_monotonically(
        rows in prop::collection::vec((prop::array::uniform3(-2.0..2.0f64), -5.0..5.0f64), 8..30),
        l1 in 0.0..10.0f64,
        dl in 0.0..10.0f64,
    ) {
        let mut p = RegressionProblem::new(&["a", "b", "c"]);
        for (x, y) in &rows {
            p.push(x, *y);
        }
        let norm = |lambda: f64| {
            fit_ridge(&p, &RidgeConfig { lambda, standardize: false })
                .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        };
        if let (Ok(a), Ok(b)) = (norm(l1 + 1e-9), norm(l1 + dl + 1e-9)) {
            prop_assert!(a >= b * (1.0 - 1e-9), "{a} < {b}");
        }
    }

    #[test]
    fn unpenalized_ridge_ignores_sample_duplication(
        rows in prop::collection::vec((prop::array::uniform3(-2.0..2.0f64), -5.0..5.0f64), 8..30),
    ) {
        let mut once = RegressionProblem::new(&["a", "b", "c"]);
        for (x, y) in &rows {
            once.push(x, *y);
        }
        let mut twice = once.clone();
        twice.extend(once.clone());
        let cfg = RidgeConfig { lambda: 0.0, standardize: true };
        if let (Ok(a), Ok(b)) = (fit_ridge(&once, &cfg), fit_ridge(&twice, &cfg)) {
            for (a, b) in a.iter().zip(&b) {
                prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn rmse_is_symmetric_and_zero_on_self(
        pairs in prop::collection::vec((prop::array::uniform3(-3.0..3.0f64), prop::array::uniform3(-3.0..3.0f64)), 1..50)
    ) {
        let a: Vec<_> = pairs.iter().map(|(x, _)| MotionState::from_array(*x)).collect();
        let b: Vec<_> = pairs.iter().map(|(_, y)| MotionState::from_array(*y)).collect();
        prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        prop_assert_eq!(rmse(&a, &a).unwrap(), [0.0; 3]);
    }

    #[test]
    fn steady_circle_diameter_is_recovered(u in 2.0..10.0f64, radius in 20.0..200.0f64, port in any::<bool>()) {
        let r = if port { -u / radius } else { u / radius };
        let s = MotionState::new(u, 0.0, r);
        let dt = 0.1;
        let steps = (3.5 * std::f64::consts::PI / r.abs() / dt) as usize;
        let mut poses = vec![Pose::new(0.0, 0.0, 0.3)];
        for _ in 0..steps {
            poses.push(integrate_pose(&s, poses.last().unwrap(), dt));
        }
        let d = turning_diameter(&poses).unwrap();
        prop_assert!((d - 2.0 * radius).abs() / (2.0 * radius) < 1e-3, "{d} vs {}", 2.0 * radius);
    }
}
