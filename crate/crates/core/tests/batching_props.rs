mod common;

use proptest::prelude::*;
use rand::Rng;

use dispatch_core::batching::Batcher;
use dispatch_core::{CostModel, Limits};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pair_weights_are_nonnegative(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = common::city(&mut rng);
        let t = common::clock(&mut rng);
        let count = rng.random_range(2..=12);
        let orders = common::orders(&mut rng, &net, count, t);
        let g = Batcher::new(CostModel::new(&net, Limits::default()), t).build_order_graph(&orders);
        for (&pair, &w) in &g.edges {
            prop_assert!(w >= 0.0, "{pair:?}: {w}");
        }
    }

    #[test]
    fn clustering_partitions_the_orders(seed in any::<u64>(), eta in 0.0..900.0f64) {
        let mut rng = common::rng(seed);
        let net = common::city(&mut rng);
        let limits = Limits::default();
        let model = CostModel::new(&net, limits);
        let t = common::clock(&mut rng);
        let count = rng.random_range(1..=25);
        let orders = common::orders(&mut rng, &net, count, t);
        let batcher = Batcher::new(model, t);
        let c = batcher.cluster(&orders, eta);

        let mut seen: Vec<_> = c.batches.iter().flat_map(|b| b.order_ids()).chain(c.unplannable.iter().copied()).collect();
        seen.sort_unstable();
        let mut input: Vec<_> = orders.iter().map(|o| o.id).collect();
        input.sort_unstable();
        prop_assert_eq!(seen, input);

        let mut sum = 0.0;
        for b in &c.batches {
            prop_assert!(b.orders.len() <= limits.max_orders && b.items() <= limits.max_items);
            prop_assert!(b.cost >= 0.0);
            let (plan, fresh) = batcher.plan(&b.orders).expect("batch has a plan");
            prop_assert_eq!(fresh, b.cost);
            prop_assert_eq!(plan.stops.len(), 2 * b.orders.len());
            sum += fresh;
        }
        prop_assert_eq!(sum, c.total_cost);
    }
}
