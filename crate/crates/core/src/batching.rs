//! Order batching by agglomerative clustering of an order graph.
//!
//! Each batch is costed as if delivered by its own vehicle standing at the
//! plan's first stop at the window time, so a singleton costs nothing and a
//! merge can only add cost.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use crate::costmodel::{CostModel, Order, OrderId, RoutePlan, Stop, StopKind};
use crate::roadnet::{NodeId, ReverseTree};

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub id: usize,
    pub orders: Vec<Order>,
    pub plan: RoutePlan,
    pub cost: f64,
    pub first_pickup: NodeId,
}

impl Batch {
    pub fn items(&self) -> u32 {
        self.orders.iter().map(|o| o.items).sum()
    }

    pub fn order_ids(&self) -> Vec<OrderId> {
        self.orders.iter().map(|o| o.id).collect()
    }
}

/// Total-ordered float for heap keys.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Batching cost evaluation at a fixed window time.
#[derive(Clone, Copy)]
pub struct Batcher<'a> {
    pub model: CostModel<'a>,
    pub t: f64,
}

impl<'a> Batcher<'a> {
    pub fn new(model: CostModel<'a>, t: f64) -> Self {
        Self { model, t }
    }

    fn fits(&self, orders: usize, items: u32) -> bool {
        orders <= self.model.limits.max_orders && items <= self.model.limits.max_items
    }

    fn member(&self, o: &Order) -> Member {
        let age = (self.t - o.request_time).max(0.0);
        Member {
            pickup: o.restaurant,
            dropoff: o.customer,
            to_pickup: self.model.net.tree_to(o.restaurant, self.t),
            to_dropoff: self.model.net.tree_to(o.customer, self.t),
            age,
            prep: o.prep_time,
            ready: o.prep_time - age,
        }
    }

    /// Cheapest plan for `orders` from a free start, with its summed extra
    /// delivery time. Ties go to the shorter plan, then to the smaller stop
    /// sequence. `None` if over capacity or unreachable.
    pub fn plan(&self, orders: &[Order]) -> Option<(RoutePlan, f64)> {
        let items = orders.iter().map(|o| o.items).sum();
        if orders.is_empty() || !self.fits(orders.len(), items) {
            return None;
        }
        let mut sorted: Vec<&Order> = orders.iter().collect();
        sorted.sort_by_key(|o| o.id);
        let members: Vec<Member> = sorted.iter().map(|o| self.member(o)).collect();
        let refs: Vec<&Member> = members.iter().collect();
        let mut scratch = Scratch::default();
        let (cost, length) = scratch.search(&refs)?;
        let n = 2 * refs.len();
        let stop = |i: usize| {
            let o = sorted[i / 2];
            if i % 2 == 0 {
                Stop { order: o.id, kind: StopKind::Pickup, node: o.restaurant }
            } else {
                Stop { order: o.id, kind: StopKind::Dropoff, node: o.customer }
            }
        };
        let seq = &scratch.best_seq;
        let legs = seq.iter().enumerate().map(|(k, &j)| if k == 0 { 0.0 } else { scratch.legs[seq[k - 1] * n + j] }).collect();
        Some((RoutePlan { stops: seq.iter().map(|&i| stop(i)).collect(), legs, length }, cost))
    }

    pub fn singleton(&self, id: usize, order: Order) -> Option<Batch> {
        self.make(id, vec![order])
    }

    fn make(&self, id: usize, mut orders: Vec<Order>) -> Option<Batch> {
        orders.sort_by_key(|o| o.id);
        let (plan, cost) = self.plan(&orders)?;
        let first_pickup = plan.first_pickup()?;
        Some(Batch { id, orders, plan, cost, first_pickup })
    }

    /// Cost increase of serving both batches with one plan. `None` when the
    /// union breaks capacity or has no feasible plan.
    pub fn pair_weight(&self, a: &Batch, b: &Batch) -> Option<f64> {
        if !self.fits(a.orders.len() + b.orders.len(), a.items() + b.items()) {
            return None;
        }
        let union: Vec<Order> = a.orders.iter().chain(&b.orders).cloned().collect();
        let (_, cost) = self.plan(&union)?;
        Some(cost - (a.cost + b.cost))
    }

    /// Singleton batches and all feasible pair weights.
    pub fn build_order_graph(&self, orders: &[Order]) -> OrderGraph {
        let mut unplannable = Vec::new();
        let batches: Vec<Option<Batch>> = orders
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let b = self.singleton(i, o.clone());
                if b.is_none() {
                    unplannable.push(o.id);
                }
                b
            })
            .collect();
        let mut edges = BTreeMap::new();
        for i in 0..batches.len() {
            let Some(a) = &batches[i] else { continue };
            for j in i + 1..batches.len() {
                let Some(b) = &batches[j] else { continue };
                if let Some(w) = self.pair_weight(a, b) {
                    edges.insert((i, j), w);
                }
            }
        }
        let total_cost = batches.iter().flatten().map(|b| b.cost).sum();
        let live = batches.iter().flatten().count();
        OrderGraph { batches, edges, total_cost, live, unplannable }
    }

    /// Merge the cheapest pair until the mean batch cost exceeds `eta` or no
    /// edge is left.
    ///
    /// After a merge the new pair weights start as lower bounds and are only
    /// planned exactly once they reach the top of the heap. The bound uses
    /// that restricting a plan to a subset of its orders never delays them,
    /// so a union costs at least any of its order pairs.
    pub fn cluster(&self, orders: &[Order], eta: f64) -> Clustering {
        let n = orders.len();
        let members: Vec<Member> = orders.iter().map(|o| self.member(o)).collect();
        let mut scratch = Scratch::default();
        let mut unplannable = Vec::new();
        let mut slots: Vec<Option<Slot>> = Vec::with_capacity(n);
        for (i, o) in orders.iter().enumerate() {
            let cost = if self.fits(1, o.items) { scratch.search(&[&members[i]]).map(|(c, _)| c) } else { None };
            match cost {
                Some(cost) => slots.push(Some(Slot { members: vec![i], items: o.items, cost })),
                None => {
                    unplannable.push(o.id);
                    slots.push(None);
                }
            }
        }
        let mut generation = vec![0u32; n];
        let mut pair_cost = vec![f64::INFINITY; n * n];
        let mut entries = Vec::new();
        for i in 0..n {
            let Some(a) = &slots[i] else { continue };
            for j in i + 1..n {
                let Some(b) = &slots[j] else { continue };
                if !self.fits(2, a.items + b.items) {
                    continue;
                }
                let pair = ordered_pair(orders, &members, i, j);
                if let Some((cost, _)) = scratch.search(&pair) {
                    pair_cost[i * n + j] = cost;
                    pair_cost[j * n + i] = cost;
                    entries.push(Reverse(Entry { key: Key(cost - (a.cost + b.cost)), i, j, exact: true, gi: 0, gj: 0 }));
                }
            }
        }
        let mut heap = BinaryHeap::from(entries);
        let mut live = slots.iter().flatten().count();
        let mut total_cost: f64 = slots.iter().flatten().map(|s| s.cost).sum();
        let mut avg_trace = vec![avg_cost(total_cost, live)];
        let mut merges = 0;
        let mut union = Vec::new();
        loop {
            if live == 0 || avg_cost(total_cost, live) > eta {
                break;
            }
            let Some(Reverse(e)) = heap.pop() else { break };
            let (i, j) = (e.i, e.j);
            if slots[i].is_none() || slots[j].is_none() || generation[i] != e.gi || generation[j] != e.gj {
                continue;
            }
            let (a, b) = (slots[i].as_ref().unwrap(), slots[j].as_ref().unwrap());
            union.clear();
            union.extend(a.members.iter().chain(&b.members).copied());
            union.sort_by_key(|&k| orders[k].id);
            let refs: Vec<&Member> = union.iter().map(|&k| &members[k]).collect();
            if !e.exact {
                if let Some((cost, _)) = scratch.search(&refs) {
                    let key = Key(cost - (a.cost + b.cost));
                    heap.push(Reverse(Entry { key, exact: true, ..e }));
                }
                continue;
            }
            let w = e.key.0;
            let (cost, _) = scratch.search(&refs).expect("edge has a plan");
            let items = a.items + b.items;
            slots[j] = None;
            slots[i] = Some(Slot { members: union.clone(), items, cost });
            generation[i] += 1;
            live -= 1;
            total_cost += w;
            merges += 1;
            let merged = slots[i].as_ref().unwrap();
            for (k, other) in slots.iter().enumerate() {
                let Some(other) = other else { continue };
                if k == i || !self.fits(merged.members.len() + other.members.len(), merged.items + other.items) {
                    continue;
                }
                let mut widest = 0.0f64;
                for &x in &merged.members {
                    for &y in &other.members {
                        widest = widest.max(pair_cost[x * n + y]);
                    }
                }
                if widest.is_infinite() {
                    continue;
                }
                let bound = (widest - merged.cost - other.cost).max(0.0);
                // keep the bound below the exact weight despite rounding
                let bound = bound - 1e-9 * (1.0 + bound + merged.cost + other.cost);
                let (lo, hi) = (i.min(k), i.max(k));
                heap.push(Reverse(Entry {
                    key: Key(bound),
                    i: lo,
                    j: hi,
                    exact: false,
                    gi: generation[lo],
                    gj: generation[hi],
                }));
            }
            avg_trace.push(avg_cost(total_cost, live));
        }
        let batches = slots
            .into_iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let s = s?;
                let group = s.members.iter().map(|&k| orders[k].clone()).collect();
                Some(self.make(i, group).expect("live batch has a plan"))
            })
            .collect();
        Clustering { batches, unplannable, total_cost, avg_trace, merges }
    }
}

/// Orders `i` and `j` in order id order.
fn ordered_pair<'m>(orders: &[Order], members: &'m [Member], i: usize, j: usize) -> [&'m Member; 2] {
    if orders[i].id <= orders[j].id {
        [&members[i], &members[j]]
    } else {
        [&members[j], &members[i]]
    }
}

/// A live cluster: order indices sorted by id, item count and plan cost.
struct Slot {
    members: Vec<usize>,
    items: u32,
    cost: f64,
}

/// Heap entry for a candidate merge. Inexact keys are lower bounds; the
/// generations detect slots changed since the entry was pushed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    key: Key,
    i: usize,
    j: usize,
    exact: bool,
    gi: u32,
    gj: u32,
}

/// Batches (by slot; merged-away slots are empty) and live pair weights.
#[derive(Clone, Debug)]
pub struct OrderGraph {
    pub batches: Vec<Option<Batch>>,
    pub edges: BTreeMap<(usize, usize), f64>,
    pub total_cost: f64,
    live: usize,
    /// Orders with no feasible single-order plan (over capacity or
    /// unreachable customer); they get no batch.
    pub unplannable: Vec<OrderId>,
}

impl OrderGraph {
    pub fn live(&self) -> usize {
        self.live
    }

    /// Mean batch cost; 0 for an empty graph.
    pub fn avg_cost(&self) -> f64 {
        avg_cost(self.total_cost, self.live())
    }
}

pub fn avg_cost(total: f64, batches: usize) -> f64 {
    if batches == 0 {
        0.0
    } else {
        total / batches as f64
    }
}

#[derive(Clone, Debug)]
pub struct Clustering {
    pub batches: Vec<Batch>,
    pub unplannable: Vec<OrderId>,
    /// Sum of batch costs, maintained by adding each merge's pair weight.
    pub total_cost: f64,
    /// Mean batch cost before the first merge and after every merge.
    pub avg_trace: Vec<f64>,
    pub merges: usize,
}

/// Per-order inputs of the plan search.
struct Member {
    pickup: NodeId,
    dropoff: NodeId,
    to_pickup: Arc<ReverseTree>,
    to_dropoff: Arc<ReverseTree>,
    age: f64,
    prep: f64,
    /// Offset from the plan start at which the food is ready.
    ready: f64,
}

/// Per-order clock data for a batch plan that starts at its first stop.
#[derive(Clone, Copy)]
struct Timing {
    age: f64,
    ready: f64,
    /// Delivery time if served alone from the restaurant.
    alone: f64,
}

/// Buffers for the depth-first walk over stop sequences in
/// `(order id, kind)` order, keeping the cheapest and then shortest one.
#[derive(Default)]
struct Scratch {
    legs: Vec<f64>,
    timing: Vec<Timing>,
    used: Vec<bool>,
    seq: Vec<usize>,
    best: Option<(f64, f64)>,
    best_seq: Vec<usize>,
}

impl Scratch {
    /// Best `(cost, length)` over `members`, which must be sorted by order
    /// id; the sequence is left in `best_seq`.
    fn search(&mut self, members: &[&Member]) -> Option<(f64, f64)> {
        let n = 2 * members.len();
        let node = |i: usize| if i % 2 == 0 { members[i / 2].pickup } else { members[i / 2].dropoff };
        let tree = |i: usize| if i % 2 == 0 { &members[i / 2].to_pickup } else { &members[i / 2].to_dropoff };
        self.legs.clear();
        for a in 0..n {
            for b in 0..n {
                let leg = if node(a) == node(b) { 0.0 } else { tree(b).dist[node(a).index()] };
                self.legs.push(leg);
            }
        }
        self.timing.clear();
        for (k, m) in members.iter().enumerate() {
            let alone = m.age.max(m.prep) + self.legs[2 * k * n + 2 * k + 1];
            self.timing.push(Timing { age: m.age, ready: m.ready, alone });
        }
        self.used.clear();
        self.used.resize(n, false);
        self.seq.clear();
        self.best = None;
        self.descend(n, usize::MAX, 0.0, 0.0, 0.0);
        self.best
    }

    fn descend(&mut self, n: usize, last: usize, clock: f64, length: f64, cost: f64) {
        // cost and length only grow along a sequence
        if let Some((c, l)) = self.best {
            if cost > c || (cost == c && length >= l) {
                return;
            }
        }
        if self.seq.len() == n {
            self.best = Some((cost, length));
            self.best_seq.clone_from(&self.seq);
            return;
        }
        for i in 0..n {
            // each order's pickup sits right before its dropoff
            let pickup = i % 2 == 0;
            if self.used[i] || (!pickup && !self.used[i - 1]) {
                continue;
            }
            let leg = if last == usize::MAX { 0.0 } else { self.legs[last * n + i] };
            if !leg.is_finite() {
                continue;
            }
            let tm = self.timing[i / 2];
            let (clock, cost) = if pickup {
                ((clock + leg).max(tm.ready), cost)
            } else {
                (clock + leg, cost + (tm.age + clock + leg) - tm.alone)
            };
            self.used[i] = true;
            self.seq.push(i);
            self.descend(n, i, clock, length + leg, cost);
            self.seq.pop();
            self.used[i] = false;
        }
    }
}

impl<'a> CostModel<'a> {
    /// Every precedence-respecting plan over `orders` starting at its first
    /// stop. Each plan's first leg is 0.
    pub fn for_each_free_plan(&self, orders: &[Order], t: f64, mut visit: impl FnMut(&RoutePlan)) {
        let mut stops: Vec<crate::costmodel::Stop> = orders
            .iter()
            .flat_map(|o| {
                [
                    crate::costmodel::Stop { order: o.id, kind: StopKind::Pickup, node: o.restaurant },
                    crate::costmodel::Stop { order: o.id, kind: StopKind::Dropoff, node: o.customer },
                ]
            })
            .collect();
        stops.sort_by_key(|s| (s.order, s.kind));
        let trees: Vec<_> = stops.iter().map(|s| self.net.tree_to(s.node, t)).collect();
        let leg = |from: usize, to: usize| {
            if stops[from].node == stops[to].node {
                0.0
            } else {
                trees[to].dist[stops[from].node.index()]
            }
        };
        let n = stops.len();
        let mut used = vec![false; n];
        let mut seq: Vec<usize> = Vec::with_capacity(n);
        fn rec(
            n: usize,
            stops: &[crate::costmodel::Stop],
            used: &mut [bool],
            seq: &mut Vec<usize>,
            leg: &dyn Fn(usize, usize) -> f64,
            visit: &mut dyn FnMut(&RoutePlan),
        ) {
            if seq.len() == n {
                let legs: Vec<f64> =
                    seq.iter().enumerate().map(|(k, &j)| if k == 0 { 0.0 } else { leg(seq[k - 1], j) }).collect();
                let plan = RoutePlan {
                    stops: seq.iter().map(|&i| stops[i]).collect(),
                    length: legs.iter().sum(),
                    legs,
                };
                visit(&plan);
                return;
            }
            for i in 0..n {
                // each order's pickup sits right before its dropoff after sorting
                let blocked = stops[i].kind == StopKind::Dropoff && !used[i - 1];
                if used[i] || blocked {
                    continue;
                }
                used[i] = true;
                seq.push(i);
                rec(n, stops, used, seq, leg, visit);
                seq.pop();
                used[i] = false;
            }
        }
        rec(n, &stops, &mut used, &mut seq, &leg, &mut visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costmodel::Limits;
    use crate::roadnet::{NetworkBuilder, RoadNetwork};

    #[test]
    fn search_matches_plain_enumeration() {
        use rand::{Rng, SeedableRng};
        let spec = crate::workload::WorkloadSpec { node_count: 36, vehicle_count: 0, seed: 2, ..Default::default() };
        let net = crate::workload::generate(&spec).unwrap().network;
        let model = CostModel::new(&net, Limits::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for round in 0..300 {
            let t = 180.0 * rng.random_range(1..480) as f64;
            let orders: Vec<Order> = (0..rng.random_range(1..=3))
                .map(|k| {
                    let r = rng.random_range(0..36u32);
                    let c = (r + rng.random_range(1..36u32)) % 36;
                    let placed = t - rng.random_range(0.0..600.0);
                    let prep = rng.random_range(0.0..900.0);
                    Order::new(OrderId(10 * round + k), NodeId(r), NodeId(c), placed, 1, prep).unwrap()
                })
                .collect();
            let mut reference: Option<(f64, RoutePlan)> = None;
            model.for_each_free_plan(&orders, t, |plan| {
                if !plan.is_feasible() {
                    return;
                }
                let cost: f64 = model.fresh_estimates(plan, &orders, t).iter().map(|e| e.xdt()).sum();
                let better = match &reference {
                    None => true,
                    Some((c, p)) => cost < *c || (cost == *c && plan.length < p.length),
                };
                if better {
                    reference = Some((cost, plan.clone()));
                }
            });
            let (plan, cost) = Batcher::new(model, t).plan(&orders).unwrap();
            let (ref_cost, ref_plan) = reference.unwrap();
            assert_eq!((cost, &plan), (ref_cost, &ref_plan));
        }
    }

    /// Merges by recomputing every affected pair weight straight away.
    fn cluster_eagerly(b: &Batcher, orders: &[Order], eta: f64) -> Clustering {
        let mut g = b.build_order_graph(orders);
        let mut heap: BinaryHeap<Reverse<(Key, usize, usize)>> =
            g.edges.iter().map(|(&(i, j), &w)| Reverse((Key(w), i, j))).collect();
        let mut avg_trace = vec![g.avg_cost()];
        let mut merges = 0;
        while g.live() > 0 && g.avg_cost() <= eta {
            let Some(Reverse((Key(w), i, j))) = heap.pop() else { break };
            if g.edges.get(&(i, j)) != Some(&w) {
                continue;
            }
            let (x, y) = (g.batches[i].as_ref().unwrap(), g.batches[j].as_ref().unwrap());
            let merged = b.make(i, x.orders.iter().chain(&y.orders).cloned().collect()).unwrap();
            g.edges.retain(|&(p, q), _| ![p, q].iter().any(|s| *s == i || *s == j));
            g.batches[j] = None;
            g.batches[i] = Some(merged);
            g.live -= 1;
            g.total_cost += w;
            merges += 1;
            let merged = g.batches[i].as_ref().unwrap();
            for (k, other) in g.batches.iter().enumerate() {
                let Some(other) = other.as_ref().filter(|_| k != i) else { continue };
                if let Some(w) = b.pair_weight(merged, other) {
                    g.edges.insert((i.min(k), i.max(k)), w);
                    heap.push(Reverse((Key(w), i.min(k), i.max(k))));
                }
            }
            avg_trace.push(g.avg_cost());
        }
        Clustering { batches: g.batches.into_iter().flatten().collect(), unplannable: g.unplannable, total_cost: g.total_cost, avg_trace, merges }
    }

    #[test]
    fn deferred_weights_merge_like_eager_recomputation() {
        use rand::{Rng, SeedableRng};
        let spec = crate::workload::WorkloadSpec { node_count: 64, vehicle_count: 0, seed: 4, ..Default::default() };
        let net = crate::workload::generate(&spec).unwrap().network;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for round in 0..60 {
            let limits = Limits { max_orders: rng.random_range(2..=4), max_items: rng.random_range(3..=10), ..Limits::default() };
            let model = CostModel::new(&net, limits);
            let t = 180.0 * rng.random_range(1..480) as f64;
            let orders: Vec<Order> = (0..rng.random_range(2..40))
                .map(|k| {
                    let r = rng.random_range(0..8u32);
                    let c = (r + rng.random_range(1..64u32)) % 64;
                    let placed = t - rng.random_range(0..600) as f64;
                    let prep = rng.random_range(0..900) as f64;
                    Order::new(OrderId(1000 * round + 7 * k % 40), NodeId(r), NodeId(c), placed, rng.random_range(1..4), prep).unwrap()
                })
                .collect();
            let eta = [0.0, 30.0, 120.0, f64::INFINITY][round as usize % 4];
            let b = Batcher::new(model, t);
            let (fast, slow) = (b.cluster(&orders, eta), cluster_eagerly(&b, &orders, eta));
            assert_eq!(fast.batches, slow.batches);
            assert_eq!((fast.total_cost, &fast.avg_trace, fast.merges), (slow.total_cost, &slow.avg_trace, slow.merges));
            assert_eq!(fast.unplannable, slow.unplannable);
        }
    }

    /// Restaurant 0 with an east arm 0-1-2-3 and a west arm 0-4-5, 10 s per hop.
    fn star() -> RoadNetwork {
        let mut b = NetworkBuilder::new();
        b.node(0, 0.0, 0.0);
        for (id, lon) in [(1, 0.01), (2, 0.02), (3, 0.03), (4, -0.01), (5, -0.02)] {
            b.node(id, 0.0, lon);
        }
        let links = [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5)];
        for (k, (a, c)) in links.into_iter().enumerate() {
            b.edge_constant(2 * k as u64, a, c, 10.0);
            b.edge_constant(2 * k as u64 + 1, c, a, 10.0);
        }
        b.build().unwrap()
    }

    fn order(net: &RoadNetwork, id: u64, customer: u64) -> Order {
        let r = net.node_by_external(0).unwrap();
        let c = net.node_by_external(customer).unwrap();
        Order::new(OrderId(id), r, c, 0.0, 1, 0.0).unwrap()
    }

    #[test]
    fn singleton_costs_nothing() {
        let net = star();
        let b = Batcher::new(CostModel::new(&net, Limits::default()), 0.0);
        let s = b.singleton(0, order(&net, 1, 3)).unwrap();
        assert_eq!(s.cost, 0.0);
        assert_eq!(s.plan.length, 30.0);
        assert_eq!(s.first_pickup, net.node_by_external(0).unwrap());
    }

    #[test]
    fn pair_weights_on_the_star() {
        let net = star();
        let b = Batcher::new(CostModel::new(&net, Limits::default()), 0.0);
        let east1 = b.singleton(0, order(&net, 1, 1)).unwrap();
        let east3 = b.singleton(1, order(&net, 2, 3)).unwrap();
        let west1 = b.singleton(2, order(&net, 3, 4)).unwrap();
        // same direction: drop the nearer customer on the way
        assert_eq!(b.pair_weight(&east1, &east3), Some(0.0));
        // opposite directions: the second customer waits for a 20 s detour
        assert_eq!(b.pair_weight(&east1, &west1), Some(20.0));
    }

    #[test]
    fn pair_over_capacity_has_no_edge() {
        let net = star();
        let limits = Limits { max_orders: 1, ..Limits::default() };
        let b = Batcher::new(CostModel::new(&net, limits), 0.0);
        let x = b.singleton(0, order(&net, 1, 1)).unwrap();
        let y = b.singleton(1, order(&net, 2, 2)).unwrap();
        assert_eq!(b.pair_weight(&x, &y), None);
    }

    #[test]
    fn graph_shape() {
        let net = star();
        let b = Batcher::new(CostModel::new(&net, Limits::default()), 0.0);
        let one = b.build_order_graph(&[order(&net, 1, 1)]);
        assert_eq!((one.live(), one.edges.len()), (1, 0));
        let four: Vec<_> = (1..=4).map(|i| order(&net, i, i)).collect();
        let g = b.build_order_graph(&four);
        assert_eq!(g.edges.len(), 6);
        assert_eq!(g.avg_cost(), 0.0);
    }

    #[test]
    fn avg_cost_arithmetic() {
        assert_eq!(avg_cost(4.0, 3), 4.0 / 3.0);
        assert_eq!(avg_cost(0.0, 5), 0.0);
    }

    fn five(net: &RoadNetwork) -> Vec<Order> {
        // A, B, C east at 10, 20, 30 s; D, E west at 10, 20 s
        vec![order(net, 1, 1), order(net, 2, 2), order(net, 3, 3), order(net, 4, 4), order(net, 5, 5)]
    }

    fn ids(c: &Clustering) -> Vec<Vec<u64>> {
        let mut v: Vec<Vec<u64>> = c.batches.iter().map(|b| b.orders.iter().map(|o| o.id.0).collect()).collect();
        v.sort();
        v
    }

    #[test]
    fn first_merge_absorbs_a_third_order() {
        let net = star();
        let b = Batcher::new(CostModel::new(&net, Limits::default()), 0.0);
        let c = b.cluster(&five(&net), f64::INFINITY);
        assert_eq!(ids(&c), vec![vec![1, 2, 3], vec![4, 5]]);
    }

    #[test]
    fn pairs_only_with_two_order_limit() {
        let net = star();
        let limits = Limits { max_orders: 2, ..Limits::default() };
        let b = Batcher::new(CostModel::new(&net, limits), 0.0);
        let c = b.cluster(&five(&net), f64::INFINITY);
        assert_eq!(ids(&c), vec![vec![1, 2], vec![3], vec![4, 5]]);
    }

    #[test]
    fn zero_eta_stops_after_first_costly_merge() {
        let net = star();
        let b = Batcher::new(CostModel::new(&net, Limits::default()), 0.0);
        // east 10 and west 10 cost 20 together
        let c = b.cluster(&[order(&net, 1, 1), order(&net, 2, 4)], 0.0);
        assert_eq!(c.merges, 1);
        assert_eq!(c.avg_trace, vec![0.0, 20.0]);
        let c = b.cluster(&[order(&net, 1, 1), order(&net, 2, 4), order(&net, 3, 2)], 0.0);
        // the free east merge keeps the mean at 0, so the west order joins too
        assert_eq!(c.avg_trace, vec![0.0, 0.0, 40.0]);
    }

    #[test]
    fn incremental_total_matches_recomputation() {
        let net = star();
        let b = Batcher::new(CostModel::new(&net, Limits::default()), 0.0);
        let c = b.cluster(&five(&net), f64::INFINITY);
        let fresh: f64 = c.batches.iter().map(|x| b.plan(&x.orders).unwrap().1).sum();
        assert_eq!(c.total_cost, fresh);
    }
}
