//! Bipartite batch/vehicle graph with omega-capped marginal-cost weights.

use std::collections::{BinaryHeap, HashMap};

use crate::batching::Batch;
use crate::costmodel::{CostModel, Order, Vehicle};
use crate::matching::CostMatrix;
use crate::roadnet::{angular_distance, slot_of, Frontier, NodeId};

/// Rows are batches, columns vehicles. Missing edges hold omega.
#[derive(Clone, Debug)]
pub struct FoodGraph {
    pub weights: CostMatrix,
    /// Entries set by an evaluation rather than left at the default.
    pub real_edges: usize,
    /// Marginal-cost evaluations performed while building.
    pub evaluations: usize,
    pub omega: f64,
}

impl FoodGraph {
    pub fn weight(&self, batch: usize, vehicle: usize) -> f64 {
        self.weights.get(batch, vehicle)
    }

    pub fn batches(&self) -> usize {
        self.weights.rows()
    }

    pub fn vehicles(&self) -> usize {
        self.weights.cols()
    }
}

/// Edges per vehicle for a window with `orders` orders, `vehicles`
/// vehicles and `batches` batches: `round(k_factor * orders / vehicles)`
/// clamped to `[1, batches]`.
pub fn sparsity_k(k_factor: f64, orders: usize, vehicles: usize, batches: usize) -> usize {
    if vehicles == 0 {
        return batches.max(1);
    }
    let k = (k_factor * orders as f64 / vehicles as f64).round() as usize;
    k.clamp(1, batches.max(1))
}

fn batch_cost(model: &CostModel, base: f64, batch: &Batch, vehicle: &Vehicle, t: f64) -> f64 {
    model.marginal_cost_from(base, &batch.orders, batch.first_pickup, vehicle, t)
}

/// Every batch against every vehicle.
pub fn build_full(model: &CostModel, batches: &[Batch], vehicles: &[Vehicle], t: f64) -> FoodGraph {
    let omega = model.limits.omega;
    let mut weights = CostMatrix::filled(batches.len(), vehicles.len(), omega);
    let mut evaluations = 0;
    for (c, v) in vehicles.iter().enumerate() {
        let base = model.current_cost(v, t);
        for (r, b) in batches.iter().enumerate() {
            weights.set(r, c, batch_cost(model, base, b, v, t));
            evaluations += 1;
        }
    }
    FoodGraph { weights, real_edges: evaluations, evaluations, omega }
}

/// Each vehicle connects to the first `k` batches whose first pickup is
/// reached by a best-first search from its location, keyed by accumulated
/// vehicle-sensitive weight with blend `gamma`. When `k` covers every batch
/// the search would reach them all, so this is the full graph.
pub fn build_sparsified(
    model: &CostModel,
    batches: &[Batch],
    vehicles: &[Vehicle],
    k: usize,
    t: f64,
    gamma: f64,
) -> FoodGraph {
    if k >= batches.len() {
        return build_full(model, batches, vehicles, t);
    }
    let net = model.net;
    let omega = model.limits.omega;
    let mut weights = CostMatrix::filled(batches.len(), vehicles.len(), omega);
    let mut by_pickup: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for (i, b) in batches.iter().enumerate() {
        by_pickup.entry(b.first_pickup).or_default().push(i);
    }
    let slot = slot_of(t);
    let mut evaluations = 0;
    let mut dist = vec![f64::INFINITY; net.node_count()];
    let mut settled = vec![false; net.node_count()];
    let mut touched: Vec<usize> = Vec::new();
    // angular term per node, filled on first use for each vehicle
    let mut angle = vec![f64::NAN; net.node_count()];
    let mut angled: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    for (c, v) in vehicles.iter().enumerate() {
        if k == 0 {
            break;
        }
        for &n in &touched {
            dist[n] = f64::INFINITY;
            settled[n] = false;
        }
        touched.clear();
        for &n in &angled {
            angle[n] = f64::NAN;
        }
        angled.clear();
        heap.clear();
        let base = model.current_cost(v, t);
        let mut degree = 0;
        dist[v.location.index()] = 0.0;
        touched.push(v.location.index());
        heap.push(Frontier { dist: 0.0, node: v.location.0 });
        'search: while let Some(Frontier { dist: d, node }) = heap.pop() {
            let u = node as usize;
            if settled[u] {
                continue;
            }
            settled[u] = true;
            if let Some(found) = by_pickup.get(&NodeId(node)) {
                for &r in found {
                    weights.set(r, c, batch_cost(model, base, &batches[r], v, t));
                    evaluations += 1;
                    degree += 1;
                    if degree >= k {
                        break 'search;
                    }
                }
            }
            for &e in net.out_edges(NodeId(node)) {
                let edge = &net.edges()[e.index()];
                let to = edge.to.index();
                if settled[to] {
                    continue;
                }
                let adist = match v.dest {
                    Some(dest) => {
                        if angle[to].is_nan() {
                            angle[to] = angular_distance(net.position(v.location), net.position(dest), net.position(edge.to))
                                .unwrap_or(0.0);
                            angled.push(to);
                        }
                        angle[to]
                    }
                    None => 0.0,
                };
                let cand = d + net.blend_in_slot(adist, edge, slot, gamma);
                if cand < dist[to] {
                    if dist[to] == f64::INFINITY {
                        touched.push(to);
                    }
                    dist[to] = cand;
                    heap.push(Frontier { dist: cand, node: edge.to.0 });
                }
            }
        }
    }
    FoodGraph { weights, real_edges: evaluations, evaluations, omega }
}

/// One batch per order, for the baselines.
pub fn singleton_batches(model: &CostModel, orders: &[Order], t: f64) -> Vec<Batch> {
    orders
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let plan = model
                .quickest_route_plan(o.restaurant, &[], std::slice::from_ref(o), t)
                .unwrap_or_else(|_| crate::costmodel::RoutePlan::infeasible());
            Batch { id: i, orders: vec![o.clone()], plan, cost: 0.0, first_pickup: o.restaurant }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::{Limits, VehicleId};
    use crate::fixtures::worked_example;
    use crate::matching::min_weight_matching;

    #[test]
    fn k_rule() {
        assert_eq!(sparsity_k(200.0, 10, 1000, 50), 2);
        assert_eq!(sparsity_k(200.0, 1, 100_000, 50), 1);
        assert_eq!(sparsity_k(200.0, 100, 10, 30), 30);
        assert_eq!(sparsity_k(200.0, 5, 0, 3), 3);
    }

    #[test]
    fn worked_example_full_graph() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let batches = singleton_batches(&model, &ex.orders, 0.0);
        let g = build_full(&model, &batches, &ex.vehicles, 0.0);
        assert_eq!(g.weight(0, 0), 3.0);
        assert_eq!(g.weight(1, 2), 0.0);
        assert_eq!(min_weight_matching(&g.weights).total_cost, 5.0);
    }

    #[test]
    fn full_vehicle_row_is_omega() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let batches = singleton_batches(&model, &ex.orders, 0.0);
        let mut v = ex.vehicle(1).clone();
        v.committed = ex.orders.clone();
        let g = build_full(&model, &batches, &[v], 0.0);
        assert!((0..3).all(|r| g.weight(r, 0) == 7200.0));
    }

    #[test]
    fn no_batches() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let g = build_full(&model, &[], &ex.vehicles, 0.0);
        assert_eq!((g.batches(), g.vehicles()), (0, 3));
        let g = build_sparsified(&model, &[], &ex.vehicles, 1, 0.0, 0.5);
        assert_eq!(g.evaluations, 0);
    }

    #[test]
    fn exhaustive_k_equals_full() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let batches = singleton_batches(&model, &ex.orders, 0.0);
        let full = build_full(&model, &batches, &ex.vehicles, 0.0);
        let sparse = build_sparsified(&model, &batches, &ex.vehicles, batches.len(), 0.0, 1.0);
        assert_eq!(full.weights, sparse.weights);
    }

    #[test]
    fn k_one_picks_nearest_pickup() {
        let ex = worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let batches = singleton_batches(&model, &ex.orders, 0.0);
        let g = build_sparsified(&model, &batches, &ex.vehicles, 1, 0.0, 1.0);
        assert_eq!(g.evaluations, 3);
        // v1 at u1 reaches u2 (o1) first, v3 at u5 reaches u6 (o2) first
        assert_eq!(g.weight(0, 0), 3.0);
        assert_eq!(g.weight(2, 0), 7200.0);
        assert_eq!(g.weight(1, 2), 0.0);
    }

    #[test]
    fn unreachable_vehicle_has_omega_row() {
        let mut b = crate::roadnet::NetworkBuilder::new();
        b.node(0, 0.0, 0.0).node(1, 0.0, 0.01).node(2, 0.0, 0.02);
        b.edge_constant(0, 0, 1, 5.0).edge_constant(1, 1, 0, 5.0).edge_constant(2, 1, 2, 5.0);
        let net = b.build().unwrap();
        let model = CostModel::new(&net, Limits::default());
        let orders = [
            Order::new(crate::OrderId(1), NodeId(0), NodeId(1), 0.0, 1, 0.0).unwrap(),
            Order::new(crate::OrderId(2), NodeId(1), NodeId(0), 0.0, 1, 0.0).unwrap(),
        ];
        let batches = singleton_batches(&model, &orders, 0.0);
        let stuck = Vehicle::idle(VehicleId(1), NodeId(2));
        let g = build_sparsified(&model, &batches, &[stuck], 1, 0.0, 0.5);
        assert_eq!(g.evaluations, 0);
        assert_eq!((g.weight(0, 0), g.weight(1, 0)), (7200.0, 7200.0));
    }
}
