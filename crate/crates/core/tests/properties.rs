use proptest::prelude::*;

use holdclass::dynamics::{enumerate_transitions, feature_row, holding_rate, signature, StateTracker, ThetaVector};
use holdclass::graph::{generate_er, Graph};
use holdclass::{Configuration, Model, ModelParams};

fn model_strategy() -> impl Strategy<Value = Model> {
    prop_oneof![Just(Model::Contact), Just(Model::Reversible)]
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n, 0.0..1.0f64, any::<u64>()).prop_map(|(n, p, seed)| generate_er(n, p, seed, false).unwrap())
}

fn params(model: Model, mu: f64, beta: f64, delta: f64) -> ModelParams {
    ModelParams::new(model, mu, beta, delta).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn feature_row_reproduces_holding_rate(
        g in graph_strategy(16),
        code in any::<u64>(),
        model in model_strategy(),
        mu in 0.01..5.0f64, beta in 0.01..5.0f64, delta in 0.01..3.0f64,
    ) {
        let n = g.n();
        let x = Configuration::from_index(code & ((1u64 << n) - 1), n);
        let p = params(model, mu, beta, delta);
        let theta = ThetaVector::from_params(&p, g.max_degree());
        let row = feature_row(&signature(&g, &x, model), n, g.max_degree());
        prop_assert_eq!(row.len(), theta.len());
        let dot: f64 = row.iter().zip(theta.as_slice()).map(|(a, b)| a * b).sum();
        prop_assert!(close(dot, holding_rate(&g, &x, &p), 1e-12));
    }

    #[test]
    fn equal_signatures_share_rates(
        g in graph_strategy(10),
        a in any::<u64>(), b in any::<u64>(),
        model in model_strategy(),
        mu in 0.01..5.0f64, beta in 0.01..5.0f64, delta in 0.01..3.0f64,
    ) {
        let n = g.n();
        let mask = (1u64 << n) - 1;
        let (xa, xb) = (Configuration::from_index(a & mask, n), Configuration::from_index(b & mask, n));
        let p = params(model, mu, beta, delta);
        if signature(&g, &xa, model) == signature(&g, &xb, model) {
            prop_assert!(close(holding_rate(&g, &xa, &p), holding_rate(&g, &xb, &p), 1e-12));
        }
    }

    #[test]
    fn transitions_flip_one_node_and_sum_to_holding_rate(
        g in graph_strategy(14),
        code in any::<u64>(),
        model in model_strategy(),
        mu in 0.01..5.0f64, beta in prop_oneof![Just(0.0), 0.0..5.0f64], delta in 0.01..3.0f64,
    ) {
        let n = g.n();
        let x = Configuration::from_index(code & ((1u64 << n) - 1), n);
        let p = params(model, mu, beta.max(if model == Model::Reversible { 0.01 } else { 0.0 }), delta);
        let ts = enumerate_transitions(&g, &x, &p);
        let mut total = 0.0;
        for t in &ts {
            prop_assert!(t.rate >= 0.0);
            prop_assert_eq!(t.new_state, !x.get(t.node));
            let m = g.neighbors(t.node).iter().filter(|&&j| x.get(j)).count();
            let expect = if x.get(t.node) { p.mu } else { p.infection_rate(m) };
            prop_assert_eq!(t.rate, expect);
            total += t.rate;
        }
        let nodes: Vec<usize> = ts.iter().map(|t| t.node).collect();
        prop_assert_eq!(nodes, (0..n).collect::<Vec<_>>());
        prop_assert!(close(total, holding_rate(&g, &x, &p), 1e-12));
    }

    #[test]
    fn tracker_matches_recomputation(
        g in graph_strategy(16),
        flips in proptest::collection::vec(any::<usize>(), 0..60),
        model in model_strategy(),
    ) {
        let n = g.n();
        let mut tracker = StateTracker::new(&g, Configuration::susceptible(n)).unwrap();
        for f in flips {
            tracker.flip(f % n);
            prop_assert_eq!(tracker.signature(model), signature(&g, tracker.config(), model));
        }
    }
}
