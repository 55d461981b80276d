//! Slow reference computations used to check the fast paths. Nothing here
//! calls into the Dijkstra memo, the plan enumerator or the matcher.

use crate::costmodel::{Order, OrderId, StopKind};
use crate::matching::CostMatrix;
use crate::roadnet::{slot_of, NodeId, RoadNetwork};

/// Single-source travel times under the weights of `slot(t)`, by
/// Bellman-Ford relaxation over the raw edge list.
pub fn bellman_ford(net: &RoadNetwork, source: NodeId, t: f64) -> Vec<f64> {
    let slot = slot_of(t);
    let mut dist = vec![f64::INFINITY; net.node_count()];
    dist[source.index()] = 0.0;
    for _ in 1..net.node_count().max(2) {
        let mut changed = false;
        for e in net.edges() {
            let d = dist[e.from.index()] + e.profile.in_slot(slot);
            if d < dist[e.to.index()] {
                dist[e.to.index()] = d;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Minimum over every injective assignment of the smaller side.
pub fn brute_force_assignment(m: &CostMatrix) -> f64 {
    let (small, large, transpose) =
        if m.rows() <= m.cols() { (m.rows(), m.cols(), false) } else { (m.cols(), m.rows(), true) };
    let cost = |a: usize, b: usize| if transpose { m.get(b, a) } else { m.get(a, b) };
    let mut used = vec![false; large];
    fn rec(
        i: usize,
        small: usize,
        used: &mut [bool],
        acc: f64,
        cost: &dyn Fn(usize, usize) -> f64,
        best: &mut f64,
    ) {
        if i == small {
            *best = best.min(acc);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                rec(i + 1, small, used, acc + cost(i, j), cost, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, small, &mut used, 0.0, &cost, &mut best);
    if small == 0 {
        0.0
    } else {
        best
    }
}

/// Every permutation of `items`, in no particular order.
fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

/// Optimal plan found by trying every permutation of all stops.
#[derive(Clone, Debug, PartialEq)]
pub struct BrutePlan {
    pub length: f64,
    pub stops: Vec<(OrderId, StopKind, NodeId)>,
    /// Travel time from the start to each stop.
    pub offsets: Vec<f64>,
}

/// Shortest valid stop sequence, ties broken by the smallest
/// `(order id, kind)` sequence. `None` when nothing is reachable.
pub fn brute_force_plan(
    net: &RoadNetwork,
    start: NodeId,
    carried: &[Order],
    pending: &[Order],
    t: f64,
) -> Option<BrutePlan> {
    let mut stops: Vec<(OrderId, StopKind, NodeId)> = Vec::new();
    for o in carried {
        stops.push((o.id, StopKind::Dropoff, o.customer));
    }
    for o in pending {
        stops.push((o.id, StopKind::Pickup, o.restaurant));
        stops.push((o.id, StopKind::Dropoff, o.customer));
    }
    if stops.is_empty() {
        return Some(BrutePlan { length: 0.0, stops, offsets: Vec::new() });
    }
    let mut nodes: Vec<NodeId> = vec![start];
    nodes.extend(stops.iter().map(|s| s.2));
    let dist: Vec<Vec<f64>> = nodes.iter().map(|&n| bellman_ford(net, n, t)).collect();
    let mut best: Option<BrutePlan> = None;
    for perm in permutations(&(0..stops.len()).collect::<Vec<_>>()) {
        let valid = pending.iter().all(|o| {
            let p = perm.iter().position(|&i| stops[i].0 == o.id && stops[i].1 == StopKind::Pickup);
            let d = perm.iter().position(|&i| stops[i].0 == o.id && stops[i].1 == StopKind::Dropoff);
            p < d
        });
        if !valid {
            continue;
        }
        let mut at = 0usize;
        let mut clock = 0.0;
        let mut offsets = Vec::new();
        for &i in &perm {
            clock += dist[at][stops[i].2.index()];
            offsets.push(clock);
            at = i + 1;
        }
        let seq: Vec<_> = perm.iter().map(|&i| stops[i]).collect();
        let better = match &best {
            None => true,
            Some(b) => {
                clock < b.length
                    || (clock == b.length
                        && seq.iter().map(|s| (s.0, s.1)).lt(b.stops.iter().map(|s| (s.0, s.1))))
            }
        };
        if better {
            best = Some(BrutePlan { length: clock, stops: seq, offsets });
        }
    }
    best.filter(|b| b.length.is_finite())
}

/// Summed extra delivery time along [`brute_force_plan`], for a vehicle at
/// `start` at clock `start_clock`.
pub fn brute_force_set_cost(
    net: &RoadNetwork,
    start: NodeId,
    start_clock: f64,
    carried: &[Order],
    pending: &[Order],
    t: f64,
) -> f64 {
    let Some(plan) = brute_force_plan(net, start, carried, pending, t) else {
        return f64::INFINITY;
    };
    let sdt = |o: &Order| o.prep_time + bellman_ford(net, o.restaurant, o.request_time)[o.customer.index()];
    // walk the plan in absolute time, holding at each pickup until the food is ready
    let mut clock = start_clock;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (stop, &offset) in plan.stops.iter().zip(&plan.offsets) {
        clock += offset - prev;
        prev = offset;
        let o = carried.iter().chain(pending).find(|o| o.id == stop.0).unwrap();
        let placed = o.request_time.min(start_clock);
        match stop.1 {
            StopKind::Pickup => clock = clock.max(placed + o.prep_time),
            StopKind::Dropoff => total += clock - placed - sdt(o),
        }
    }
    total
}

/// Travel time of the k-th closest of `targets` from `source` (ties
/// included), by a full sort of Bellman-Ford distances.
pub fn kth_closest_distance(net: &RoadNetwork, source: NodeId, targets: &[NodeId], k: usize, t: f64) -> f64 {
    let dist = bellman_ford(net, source, t);
    let mut d: Vec<f64> = targets.iter().map(|n| dist[n.index()]).collect();
    d.sort_by(f64::total_cmp);
    d.get(k.saturating_sub(1)).copied().unwrap_or(f64::INFINITY)
}
