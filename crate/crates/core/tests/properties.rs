use lsv_core::asymptotics::{sabr_smile_point, smile, smile_point};
use lsv_core::geometry::{distance_point, solve_line_geodesic, speed_squared};
use lsv_core::model::{parse_model, AlphaFamily, MuFamily, SigmaFamily};
use lsv_core::ModelSpec;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = ModelSpec> {
    (
        0.05f64..0.5,
        0.2f64..1.5,
        0.4f64..1.0,
        prop_oneof![
            Just(None),
            (0.6f64..0.95, 1.05f64..1.6, 0.5f64..4.0).prop_map(Some)
        ],
        prop_oneof![
            Just(MuFamily::Zero),
            (0.0f64..2.0).prop_map(|kappa| MuFamily::Rational { mu0: 0.0, kappa })
        ],
        0.0f64..0.3,
    )
        .prop_map(|(y0, nu, p, logistic, mu, lambda)| {
            let mut m = ModelSpec::sabr(y0, nu).with_lambda(lambda);
            m.alpha = AlphaFamily::Power { nu, p };
            m.mu = mu;
            // jump-to-default is only defined with σ ≡ 1
            if let Some((low, high, steepness)) = logistic {
                m.sigma = SigmaFamily::Logistic {
                    low,
                    high,
                    steepness,
                    center: 0.0,
                };
                m.lambda = 0.0;
            }
            m
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn config_text_round_trips(m in model_strategy()) {
        let back = parse_model(&m.to_config_string()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn line_geodesic_is_unit_speed_and_hits_line(m in model_strategy(), x1 in prop_oneof![-0.4f64..-0.01, 0.01f64..0.4]) {
        let geo = solve_line_geodesic(&m, x1).unwrap();
        prop_assert!(geo.d > 0.0);
        prop_assert!((geo.end().x - x1).abs() < 1e-6);
        for s in geo.path.iter().step_by(64) {
            prop_assert!((speed_squared(&m, s) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn distance_to_line_is_below_any_point_distance(m in model_strategy(), x1 in 0.02f64..0.3, ratio in 0.5f64..2.0) {
        let line = solve_line_geodesic(&m, x1).unwrap();
        let q = [x1, m.y0 * ratio];
        let point = distance_point(&m, [m.x0, m.y0], q).unwrap();
        prop_assert!(line.d <= point.d * (1.0 + 1e-9), "{} > {}", line.d, point.d);
    }

    #[test]
    fn point_distance_is_symmetric(x in -0.3f64..0.3, y in 0.1f64..0.6) {
        let m = ModelSpec::sabr(0.2, 1.0);
        let (p, q) = ([0.0, 0.2], [x, y]);
        prop_assume!((x.abs() + (y - 0.2).abs()) > 1e-3);
        let a = distance_point(&m, p, q).unwrap().d;
        let b = distance_point(&m, q, p).unwrap().d;
        prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
        // hyperbolic closed form for SABR with ν = 1
        let cosh = 1.0 + (x * x + (y - 0.2) * (y - 0.2)) / (2.0 * 0.2 * y);
        prop_assert!((a - cosh.acosh()).abs() < 1e-8);
    }

    #[test]
    fn sabr_smile_is_symmetric_and_above_spot_vol(x in 0.001f64..0.5, y0 in 0.1f64..0.5, nu in 0.2f64..2.0) {
        let up = sabr_smile_point(x, y0, nu, 0.1, 0.0).unwrap();
        let down = sabr_smile_point(-x, y0, nu, 0.1, 0.0).unwrap();
        prop_assert!((up.sigma0 - down.sigma0).abs() < 1e-15);
        prop_assert!((up.a - down.a).abs() < 1e-15);
        prop_assert!(up.sigma0 >= y0);
    }

    #[test]
    fn generic_smile_tracks_closed_form(x in prop_oneof![-0.3f64..-0.005, 0.005f64..0.3]) {
        let m = ModelSpec::sabr(0.2, 1.0);
        let g = smile_point(&m, x, 0.1).unwrap();
        let c = sabr_smile_point(x, 0.2, 1.0, 0.1, 0.0).unwrap();
        prop_assert!((g.sigma0 / c.sigma0 - 1.0).abs() < 1e-7);
        prop_assert!((g.a - c.a).abs() < 1e-6);
    }

    #[test]
    fn jump_terms_are_nonnegative(m in model_strategy(), x in prop_oneof![-0.3f64..-0.01, 0.01f64..0.3]) {
        let p = smile_point(&m, m.x0 + x, 0.05).unwrap();
        prop_assert!(p.a_jump >= p.a);
        prop_assert!(p.delta_sigma_jump >= 0.0);
        if m.lambda == 0.0 {
            prop_assert_eq!(p.a_jump, p.a);
        }
    }
}

#[test]
fn smile_order_matches_input_order() {
    let m = ModelSpec::sabr(0.2, 1.0);
    let xs = [0.2, -0.1, 0.05, 0.0, -0.3];
    let out = smile(&m, &xs, 0.1);
    for (r, &x) in out.iter().zip(&xs) {
        match r {
            Ok(p) => assert_eq!(p.x, x),
            Err(_) => assert_eq!(x, 0.0),
        }
    }
}
