use aerialnet::analysis::{exclusion_radius, threshold_s, Analyzer};
use aerialnet::model::los_probability;
use aerialnet::sweep::{format_float, GridSpec, Param};
use aerialnet::{ChannelParams, Environment, LayerSpec, LinkClass, NetworkSpec};
use proptest::prelude::*;

fn channel() -> impl Strategy<Value = ChannelParams> {
    (2.1f64..4.0, 0.0f64..1.5, 1u32..4, 1u32..4, 0.05f64..5.0).prop_map(
        |(al, gap, ml, mn, beta)| ChannelParams {
            alpha_los: al,
            alpha_nlos: (al + gap).min(6.0),
            m_los: ml,
            m_nlos: mn,
            beta,
            ..ChannelParams::urban()
        },
    )
}

proptest! {
    #[test]
    fn los_probability_is_a_probability(h in 1.0f64..1000.0, extra in 0.0f64..20_000.0) {
        let layer = LayerSpec::new(1e-5, h, 1.0);
        let ch = ChannelParams::urban();
        let near = los_probability(&layer, &ch, h + extra).unwrap();
        let far = los_probability(&layer, &ch, h + extra + 10.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&near));
        prop_assert!(far <= near);
    }

    #[test]
    fn same_class_exclusion_is_serving_length(y in 100.0f64..2000.0, ch in channel()) {
        let net = NetworkSpec::new(vec![LayerSpec::new(1e-5, 100.0, 1.0)], ch).unwrap();
        for env in Environment::ALL {
            let c = LinkClass::new(0, env);
            let r = exclusion_radius(&net, c, c, y);
            prop_assert!((r - y).abs() <= 1e-9 * y);
        }
    }

    #[test]
    fn floats_round_trip_through_csv_format(v in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
        let s = format_float(v);
        prop_assert!(s.contains('.'));
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }

    #[test]
    fn log_grids_are_increasing_with_exact_ends(lo in 1e-8f64..1.0, span in 1.01f64..1e4, n in 2usize..40) {
        let g = GridSpec::log(Param::Density { layer: 0 }, lo, lo * span, n).unwrap();
        prop_assert_eq!(g.values.len(), n);
        prop_assert_eq!(g.values[0], lo);
        prop_assert_eq!(g.values[n - 1], lo * span);
        prop_assert!(g.values.windows(2).all(|w| w[0] < w[1]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn laplace_is_completely_monotone(
        ch in channel(),
        h in 20.0f64..400.0,
        stretch in 1.0f64..3.0,
        frac in 0.0f64..2.0,
    ) {
        let net = NetworkSpec::new(vec![LayerSpec::new(1e-5, h, 1.0)], ch).unwrap();
        let main = LinkClass::new(0, Environment::Los);
        let y = h * stretch;
        let s = frac * threshold_s(&net, main, y);
        let d = Analyzer::default().conditional_laplace_derivs(&net, main, y, s, 3).unwrap();
        prop_assert!(d.completely_monotone(), "{:?}", d.values);
        prop_assert!(d.values[0] <= 1.0);
    }

    #[test]
    fn conditional_stp_is_a_probability(ch in channel(), h in 20.0f64..400.0, stretch in 1.0f64..4.0) {
        let net = NetworkSpec::new(vec![LayerSpec::new(1e-5, h, 1.0)], ch).unwrap();
        for env in Environment::ALL {
            let p = Analyzer::default().conditional_stp(&net, LinkClass::new(0, env), h * stretch).unwrap();
            prop_assert!((0.0..=1.0).contains(&p), "{p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn association_sums_to_one(
        l1 in 1e-7f64..1e-4,
        l2 in 1e-7f64..1e-4,
        h1 in 0.0f64..300.0,
        h2 in 10.0f64..500.0,
        p2 in 0.1f64..10.0,
    ) {
        let net = NetworkSpec::new(
            vec![LayerSpec::new(l1, h1, 1.0), LayerSpec::new(l2, h2, p2)],
            ChannelParams::urban(),
        )
        .unwrap();
        let t = Analyzer::default().association_probability(&net).unwrap();
        prop_assert!((t.total() - 1.0).abs() <= 1e-6, "{}", t.total());
        let stp = Analyzer::default().total_stp(&net).unwrap().value;
        prop_assert!((0.0..=1.0 + 1e-9).contains(&stp));
    }
}
