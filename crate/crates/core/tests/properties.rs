use nsrlab_core::autodiff::{Model, RngStream};
use nsrlab_core::baselines::{MlpParams, OutputActivation};
use nsrlab_core::gnn::{eval_rollout, GnnModel, MessageOrder};
use nsrlab_core::harness::classify;
use nsrlab_core::nsr::{sign_bit_hat, zero_bit_hat, NsrParams, NsrWeightRow};
use nsrlab_core::recurrent::{CountCell, MinCell};
use nsrlab_core::snapshot::Snapshot;
use nsrlab_core::tasks::{
    bellman_ford, random_graph, reference_distances, ComparisonOp, Magnitude, TaskKind, TaskSpec, WeightedGraph,
};
use nsrlab_core::ScalarModel;
use proptest::prelude::*;

fn op() -> impl Strategy<Value = ComparisonOp> {
    prop::sample::select(ComparisonOp::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sign_bit_is_odd_and_bounded(x in -50.0f64..50.0, lambda in 1e-3f64..1e3) {
        let s = sign_bit_hat(x, lambda);
        prop_assert_eq!(sign_bit_hat(-x, lambda), -s);
        prop_assert!((-1.0..=1.0).contains(&s));
    }

    #[test]
    fn zero_bit_is_even_and_bounded(x in -50.0f64..50.0, lambda in 1e-3f64..1e3) {
        let z = zero_bit_hat(x, lambda);
        prop_assert_eq!(zero_bit_hat(-x, lambda), z);
        prop_assert!((-1.0..=1.0).contains(&z));
        prop_assert!(z <= zero_bit_hat(0.0, lambda));
    }

    #[test]
    fn bits_are_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, lambda in 0.01f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sign_bit_hat(lo, lambda) <= sign_bit_hat(hi, lambda));
        if lo >= 0.0 {
            prop_assert!(zero_bit_hat(lo, lambda) >= zero_bit_hat(hi, lambda));
        }
    }

    #[test]
    fn lambda_rescales_the_input(x in -20.0f64..20.0, lambda in 0.01f64..100.0) {
        prop_assert!((sign_bit_hat(x, lambda) - sign_bit_hat(lambda * x, 1.0)).abs() < 1e-15);
        prop_assert!((zero_bit_hat(x, lambda) - zero_bit_hat(lambda * x, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn selection_softmax_ignores_logit_shifts(seed in any::<u64>(), shift in -30.0f64..30.0) {
        let mut rng = RngStream::new(seed);
        let nsr = NsrParams::init(3, 4, 1.0, &mut rng).unwrap();
        let mut shifted = nsr.clone();
        for v in shifted.select_first.value.iter_mut().chain(shifted.select_second.value.iter_mut()) {
            *v += shift;
        }
        let x = [rng.uniform() * 10.0, -3.0, 7.5];
        prop_assert!((nsr.predict(&x) - shifted.predict(&x)).abs() < 1e-12);
    }

    #[test]
    fn output_is_a_probability_pair(seed in any::<u64>(), x0 in -1e3f64..1e3, x1 in -1e3f64..1e3) {
        let nsr = NsrParams::init(2, 5, 1.0, &mut RngStream::new(seed)).unwrap();
        let t = nsr.forward(&[x0, x1]).unwrap();
        prop_assert!((0.0..=1.0).contains(&t.y));
        prop_assert!((t.y + t.ybar - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_weights_extrapolate(op in op(), a in -1_000_000_000i64..1_000_000_000, d in -3i64..=3) {
        let nsr = NsrWeightRow::for_op(op).build(1.0).unwrap();
        let (x0, x1) = (a as f64, (a + d) as f64);
        prop_assert_eq!(classify(nsr.predict(&[x0, x1])) == 1.0, op.truth(x0, x1));
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(seed in any::<u64>(), r in 1usize..6, lambda in 0.01f64..100.0) {
        let nsr = NsrParams::init(2, r, lambda, &mut RngStream::new(seed)).unwrap();
        let text = nsr.snapshot().to_text();
        let back = NsrParams::from_snapshot(&Snapshot::from_text(&text).unwrap()).unwrap();
        prop_assert_eq!(back.parameter_count(), nsr.parameter_count());
        prop_assert_eq!(back.lambda, nsr.lambda);
        for (a, b) in nsr.parameters().iter().zip(back.parameters()) {
            prop_assert_eq!(&a.value, &b.value);
        }
    }

    #[test]
    fn bellman_ford_matches_dijkstra(seed in any::<u64>(), n in 2usize..14, w in 1u64..50) {
        let g = random_graph(n, w, &mut RngStream::new(seed)).unwrap();
        prop_assert!(g.is_connected());
        let iterates = bellman_ford(&g);
        prop_assert_eq!(iterates.len(), n + 1);
        prop_assert_eq!(iterates[0][g.source], 0.0);
        let truth: Vec<f64> = reference_distances(&g).into_iter().map(|d| d.unwrap() as f64).collect();
        prop_assert_eq!(iterates.last().unwrap(), &truth);
        for pair in iterates.windows(2) {
            prop_assert!(pair[1].iter().zip(&pair[0]).all(|(next, prev)| next <= prev));
        }
    }

    #[test]
    fn edge_list_round_trip(seed in any::<u64>(), n in 2usize..20) {
        let g = random_graph(n, 9, &mut RngStream::new(seed)).unwrap();
        let back = WeightedGraph::from_edge_list(&g.to_edge_list()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn perfect_gnn_rollout_is_exact(seed in any::<u64>(), n in 2usize..12, shuffle in any::<u64>()) {
        let g = random_graph(n, 20, &mut RngStream::new(seed)).unwrap();
        prop_assert_eq!(eval_rollout(&g, &GnnModel::perfect(), 20.0, MessageOrder::Shuffled(shuffle)), 0.0);
    }

    #[test]
    fn perfect_recurrent_cells(list in prop::collection::vec(-20i64..20, 1..40)) {
        let xs: Vec<f64> = list.iter().map(|&v| v as f64).collect();
        let min = MinCell::new(NsrWeightRow::for_op(ComparisonOp::Lt).build(1.0).unwrap());
        prop_assert_eq!(min.run(&xs), *list.iter().min().unwrap() as f64);
        let count = CountCell::new(NsrWeightRow::for_op(ComparisonOp::Eq).build(1.0).unwrap());
        let expected = list[1..].iter().filter(|&&v| v == list[0]).count() as f64;
        prop_assert!((count.run(&xs) - expected).abs() < 1e-6);
    }

    #[test]
    fn datasets_are_reproducible(seed in any::<u64>(), op in op(), exp in 2u32..13) {
        let spec = TaskSpec::new(TaskKind::Comparison(op), seed).with_magnitude(Magnitude::new(10, exp).unwrap());
        prop_assert_eq!(spec.dataset().unwrap(), spec.dataset().unwrap());
    }
}

#[test]
fn mlp_and_nsr_parameter_counts() {
    let mut rng = RngStream::new(0);
    assert_eq!(NsrParams::init(2, 10, 1.0, &mut rng).unwrap().parameter_count(), 70);
    assert_eq!(NsrParams::init(2, 1, 1.0, &mut rng).unwrap().parameter_count(), 7);
    assert_eq!(MlpParams::init(2, 20, OutputActivation::Sigmoid, &mut rng).unwrap().parameter_count(), 81);
}

#[test]
fn eq_suite_is_rebalanced() {
    let d = TaskSpec::new(TaskKind::Comparison(ComparisonOp::Eq), 1)
        .with_magnitude(Magnitude::new(10, 4).unwrap())
        .dataset()
        .unwrap();
    assert_eq!(d.len(), 21);
    assert_eq!(d.examples.iter().filter(|e| e.target == 1.0).count(), 11);
}
