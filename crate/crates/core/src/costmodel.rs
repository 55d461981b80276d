//! Orders, vehicles, route plans and the delivery-time cost functions.
//!
//! Times passed around here are absolute clock values in seconds unless a
//! name says otherwise (`first_mile`, `last_mile` and leg times are
//! durations).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadnet::{NodeId, RoadNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderId(pub u64);

impl fmt::Display for OrderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u64);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("order set exceeds vehicle capacity ({orders} orders, {items} items)")]
    CapacityExceeded { orders: usize, items: u32 },
    #[error("invalid order {id}: {reason}")]
    InvalidOrder { id: OrderId, reason: &'static str },
    #[error("negative extra delivery time {0}")]
    NegativeExtraTime(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Order {
    pub id: OrderId,
    pub restaurant: NodeId,
    pub customer: NodeId,
    pub request_time: f64,
    pub items: u32,
    pub prep_time: f64,
}

impl Order {
    pub fn new(
        id: OrderId,
        restaurant: NodeId,
        customer: NodeId,
        request_time: f64,
        items: u32,
        prep_time: f64,
    ) -> Result<Self, CostError> {
        if restaurant == customer {
            return Err(CostError::InvalidOrder { id, reason: "restaurant and customer coincide" });
        }
        if items == 0 {
            return Err(CostError::InvalidOrder { id, reason: "an order carries at least one item" });
        }
        if !(prep_time >= 0.0 && prep_time.is_finite()) {
            return Err(CostError::InvalidOrder { id, reason: "preparation time must be finite and >= 0" });
        }
        if !request_time.is_finite() {
            return Err(CostError::InvalidOrder { id, reason: "request time must be finite" });
        }
        Ok(Self {
            id,
            restaurant,
            customer,
            request_time: crate::roadnet::quantize(request_time),
            items,
            prep_time: crate::roadnet::quantize(prep_time),
        })
    }

    /// Clock at which the food is ready for pickup.
    pub fn ready_at(&self) -> f64 {
        self.request_time + self.prep_time
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stop {
    pub order: OrderId,
    pub kind: StopKind,
    pub node: NodeId,
}

impl Stop {
    fn key(&self) -> (OrderId, StopKind) {
        (self.order, self.kind)
    }
}

/// Ordered pickup/dropoff sequence. `legs[i]` is the travel time into
/// `stops[i]` from the previous stop (or the start node for `i == 0`).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RoutePlan {
    pub stops: Vec<Stop>,
    pub legs: Vec<f64>,
    pub length: f64,
}

impl RoutePlan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn infeasible() -> Self {
        Self { stops: Vec::new(), legs: Vec::new(), length: f64::INFINITY }
    }

    pub fn is_feasible(&self) -> bool {
        self.length.is_finite()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    /// Travel time from the start to each stop.
    pub fn offsets(&self) -> Vec<f64> {
        self.legs
            .iter()
            .scan(0.0, |acc, leg| {
                *acc += leg;
                Some(*acc)
            })
            .collect()
    }

    pub fn first_pickup(&self) -> Option<NodeId> {
        self.stops.iter().find(|s| s.kind == StopKind::Pickup).map(|s| s.node)
    }

    /// Every order's pickup precedes its dropoff; orders that only have a
    /// dropoff are allowed (already carried).
    pub fn respects_precedence(&self) -> bool {
        let mut seen_drop = std::collections::HashSet::new();
        for s in &self.stops {
            match s.kind {
                StopKind::Pickup => {
                    if seen_drop.contains(&s.order) {
                        return false;
                    }
                }
                StopKind::Dropoff => {
                    if !seen_drop.insert(s.order) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Operational limits shared by every policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_orders: usize,
    pub max_items: u32,
    /// Penalty weight for infeasible or rejected assignments.
    pub omega: f64,
    /// Longest admissible travel time from a vehicle to a batch's first pickup.
    pub service_cap: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_orders: 3, max_items: 10, omega: 7200.0, service_cap: 2700.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Node the vehicle is at, or will reach next if it is mid-edge.
    pub location: NodeId,
    /// Next stop of the route plan being followed.
    pub dest: Option<NodeId>,
    /// Picked-up orders.
    pub carried: Vec<Order>,
    /// Assigned but not yet picked up.
    pub committed: Vec<Order>,
    pub route: RoutePlan,
    /// Clock at which the vehicle is at `location`.
    pub ready_at: f64,
}

impl Vehicle {
    pub fn idle(id: VehicleId, location: NodeId) -> Self {
        Self {
            id,
            location,
            dest: None,
            carried: Vec::new(),
            committed: Vec::new(),
            route: RoutePlan::empty(),
            ready_at: 0.0,
        }
    }

    pub fn order_load(&self) -> usize {
        self.carried.len() + self.committed.len()
    }

    pub fn item_load(&self) -> u32 {
        self.carried.iter().chain(&self.committed).map(|o| o.items).sum()
    }

    pub fn can_take(&self, orders: usize, items: u32, limits: &Limits) -> bool {
        self.order_load() + orders <= limits.max_orders && self.item_load() + items <= limits.max_items
    }
}

/// Outcome of one assignment round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AssignmentOutcome {
    /// Every order of the round with its vehicle, or `None` when rejected
    /// for this round.
    pub decisions: Vec<(OrderId, Option<VehicleId>)>,
    /// Sum of the marginal costs of the committed assignments.
    pub assigned_cost: f64,
    pub assignment_time: f64,
}

impl AssignmentOutcome {
    pub fn assigned(&self) -> impl Iterator<Item = (OrderId, VehicleId)> + '_ {
        self.decisions.iter().filter_map(|&(o, v)| v.map(|v| (o, v)))
    }

    pub fn unassigned(&self) -> impl Iterator<Item = OrderId> + '_ {
        self.decisions.iter().filter(|(_, v)| v.is_none()).map(|&(o, _)| o)
    }

    pub fn vehicle_of(&self, order: OrderId) -> Option<VehicleId> {
        self.decisions.iter().find(|(o, _)| *o == order).and_then(|(_, v)| *v)
    }
}

/// `max(assignment_time + first_mile, prep_time) + last_mile`.
pub fn expected_delivery_time(assignment_time: f64, first_mile: f64, prep_time: f64, last_mile: f64) -> f64 {
    (assignment_time + first_mile).max(prep_time) + last_mile
}

/// Preparation time plus the quickest restaurant-to-customer time at the
/// request time.
pub fn shortest_delivery_time(net: &RoadNetwork, order: &Order) -> f64 {
    order.prep_time + net.sp(order.restaurant, order.customer, order.request_time)
}

pub fn extra_delivery_time(edt: f64, sdt: f64) -> Result<f64, CostError> {
    let xdt = edt - sdt;
    if xdt < 0.0 {
        return Err(CostError::NegativeExtraTime(xdt));
    }
    Ok(xdt)
}

/// Per-order timing along a route plan.
#[derive(Clone, Debug, PartialEq)]
pub struct DeliveryEstimate {
    pub order: OrderId,
    pub first_mile: f64,
    pub last_mile: f64,
    pub edt: f64,
    pub sdt: f64,
}

impl DeliveryEstimate {
    pub fn xdt(&self) -> f64 {
        self.edt - self.sdt
    }
}

/// Walks `plan` from offset 0. A vehicle reaching a pickup before the food
/// is ready waits there, which delays every later stop. With one pickup
/// this reduces to [`expected_delivery_time`]. `elapsed` is each order's age
/// at offset 0.
fn timeline(
    plan: &RoutePlan,
    carried: &[Order],
    pending: &[Order],
    elapsed: impl Fn(&Order) -> f64,
    sdt: impl Fn(&Order) -> f64,
) -> Vec<DeliveryEstimate> {
    let find = |id: OrderId| {
        carried.iter().chain(pending).find(|o| o.id == id).expect("plan stop belongs to a listed order")
    };
    let mut clock = 0.0;
    let mut times: Vec<(OrderId, f64, f64, f64)> = Vec::with_capacity(carried.len() + pending.len());
    for (stop, leg) in plan.stops.iter().zip(&plan.legs) {
        clock += leg;
        let o = find(stop.order);
        match stop.kind {
            StopKind::Pickup => {
                let arrive = clock;
                clock = clock.max(o.prep_time - elapsed(o));
                times.push((o.id, arrive, clock, f64::NAN));
            }
            StopKind::Dropoff => match times.iter_mut().find(|x| x.0 == o.id) {
                Some(x) => x.3 = clock,
                None => times.push((o.id, 0.0, 0.0, clock)),
            },
        }
    }
    carried
        .iter()
        .chain(pending)
        .map(|o| {
            let &(_, arrive, depart, drop) = times.iter().find(|x| x.0 == o.id).expect("plan covers every order");
            DeliveryEstimate {
                order: o.id,
                first_mile: arrive,
                last_mile: drop - depart,
                edt: elapsed(o) + drop,
                sdt: sdt(o),
            }
        })
        .collect()
}

/// Candidate stop during plan enumeration.
#[derive(Clone, Copy)]
struct Candidate {
    stop: Stop,
    /// Index of the pickup candidate that must precede this dropoff.
    requires: Option<usize>,
}

/// Shortest precedence-respecting stop order; among equally short ones the
/// lexicographically smallest by `(order id, kind)`. Candidates must be
/// sorted by that key.
///
/// Nearer stops are tried first and a branch is cut once its length plus
/// the cheapest way into every remaining stop exceeds the best found.
fn shortest_sequence(cands: &[Candidate], table: &LegTable) -> (f64, Vec<usize>) {
    struct Walk<'w> {
        cands: &'w [Candidate],
        table: &'w LegTable,
        /// Cheapest finite leg into each stop, 0 if there is none.
        into: Vec<f64>,
        used: Vec<bool>,
        seq: Vec<usize>,
        children: Vec<Vec<(f64, usize)>>,
        best: Option<(f64, Vec<usize>)>,
    }
    impl Walk<'_> {
        fn rec(&mut self, length: f64, rest: f64) {
            if let Some((b, _)) = &self.best {
                if length > *b || length + rest > *b + 1e-9 * (1.0 + b.abs()) {
                    return;
                }
            }
            let depth = self.seq.len();
            if depth == self.cands.len() {
                let better = match &self.best {
                    None => true,
                    Some((b, seq)) => length < *b || (length == *b && self.seq < *seq),
                };
                if better {
                    self.best = Some((length, self.seq.clone()));
                }
                return;
            }
            let mut children = std::mem::take(&mut self.children[depth]);
            children.clear();
            for i in 0..self.cands.len() {
                if self.used[i] || self.cands[i].requires.is_some_and(|p| !self.used[p]) {
                    continue;
                }
                let leg = match self.seq.last() {
                    None => self.table.from_start[i],
                    Some(&prev) => self.table.between[prev][i],
                };
                children.push((leg, i));
            }
            children.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(leg, i) in &children {
                self.used[i] = true;
                self.seq.push(i);
                self.rec(length + leg, (rest - self.into[i]).max(0.0));
                self.seq.pop();
                self.used[i] = false;
            }
            self.children[depth] = children;
        }
    }
    let n = cands.len();
    let into: Vec<f64> = (0..n)
        .map(|j| {
            let best = (0..n).filter(|&i| i != j).map(|i| table.between[i][j]).fold(table.from_start[j], f64::min);
            if best.is_finite() {
                best
            } else {
                0.0
            }
        })
        .collect();
    let rest = into.iter().sum();
    let mut walk = Walk {
        cands,
        table,
        into,
        used: vec![false; n],
        seq: Vec::with_capacity(n),
        children: vec![Vec::with_capacity(n); n],
        best: None,
    };
    walk.rec(0.0, rest);
    walk.best.expect("at least one sequence")
}

fn candidates(carried: &[Order], pending: &[Order]) -> Vec<Candidate> {
    let mut stops: Vec<(Stop, bool)> = carried
        .iter()
        .map(|o| (Stop { order: o.id, kind: StopKind::Dropoff, node: o.customer }, true))
        .chain(pending.iter().flat_map(|o| {
            [
                (Stop { order: o.id, kind: StopKind::Pickup, node: o.restaurant }, false),
                (Stop { order: o.id, kind: StopKind::Dropoff, node: o.customer }, false),
            ]
        }))
        .collect();
    stops.sort_by_key(|(s, _)| s.key());
    let mut out: Vec<Candidate> = Vec::with_capacity(stops.len());
    for (stop, carried) in stops {
        let requires = if stop.kind == StopKind::Dropoff && !carried {
            out.iter().position(|c| c.stop.order == stop.order && c.stop.kind == StopKind::Pickup)
        } else {
            None
        };
        out.push(Candidate { stop, requires });
    }
    out
}

/// Pairwise travel times among the start node and candidate stops.
struct LegTable {
    /// `from_start[j]`: start to candidate j.
    from_start: Vec<f64>,
    /// `between[i][j]`: candidate i to candidate j.
    between: Vec<Vec<f64>>,
}

impl LegTable {
    fn new(net: &RoadNetwork, start: Option<NodeId>, cands: &[Candidate], t: f64) -> Self {
        let trees: Vec<_> = cands.iter().map(|c| net.tree_to(c.stop.node, t)).collect();
        let dist = |from: NodeId, j: usize| {
            if from == cands[j].stop.node {
                0.0
            } else {
                trees[j].dist[from.index()]
            }
        };
        let from_start = match start {
            Some(s) => (0..cands.len()).map(|j| dist(s, j)).collect(),
            None => vec![0.0; cands.len()],
        };
        let between = cands
            .iter()
            .map(|ci| (0..cands.len()).map(|j| dist(ci.stop.node, j)).collect())
            .collect();
        Self { from_start, between }
    }

    fn legs(&self, seq: &[usize]) -> Vec<f64> {
        seq.iter()
            .enumerate()
            .map(|(k, &j)| if k == 0 { self.from_start[j] } else { self.between[seq[k - 1]][j] })
            .collect()
    }
}

fn plan_from(cands: &[Candidate], seq: &[usize], legs: Vec<f64>) -> RoutePlan {
    let length = legs.iter().sum();
    RoutePlan { stops: seq.iter().map(|&i| cands[i].stop).collect(), legs, length }
}

/// Cost evaluation against a network under fixed operational limits.
#[derive(Clone, Copy)]
pub struct CostModel<'a> {
    pub net: &'a RoadNetwork,
    pub limits: Limits,
}

impl<'a> CostModel<'a> {
    pub fn new(net: &'a RoadNetwork, limits: Limits) -> Self {
        Self { net, limits }
    }

    fn check_capacity(&self, carried: &[Order], pending: &[Order]) -> Result<(), CostError> {
        let orders = carried.len() + pending.len();
        let items: u32 = carried.iter().chain(pending).map(|o| o.items).sum();
        if orders > self.limits.max_orders || items > self.limits.max_items {
            return Err(CostError::CapacityExceeded { orders, items });
        }
        Ok(())
    }

    /// Minimum-length plan from `start` delivering `carried` (dropoff only)
    /// and `pending` (pickup then dropoff), by exhaustive enumeration. Ties
    /// go to the lexicographically smallest stop sequence. An unreachable
    /// leg makes the result infeasible.
    pub fn quickest_route_plan(
        &self,
        start: NodeId,
        carried: &[Order],
        pending: &[Order],
        t: f64,
    ) -> Result<RoutePlan, CostError> {
        self.check_capacity(carried, pending)?;
        let cands = candidates(carried, pending);
        if cands.is_empty() {
            return Ok(RoutePlan::empty());
        }
        let table = LegTable::new(self.net, Some(start), &cands, t);
        let (length, seq) = shortest_sequence(&cands, &table);
        if !length.is_finite() {
            return Ok(RoutePlan::infeasible());
        }
        Ok(plan_from(&cands, &seq, table.legs(&seq)))
    }

    /// Timing of every order along `plan` for a vehicle at the plan start at
    /// clock `start_clock`. `sdt` supplies each order's shortest delivery time.
    pub fn estimates_with(
        &self,
        plan: &RoutePlan,
        start_clock: f64,
        carried: &[Order],
        pending: &[Order],
        sdt: impl Fn(&Order) -> f64,
    ) -> Vec<DeliveryEstimate> {
        timeline(plan, carried, pending, |o| (start_clock - o.request_time).max(0.0), sdt)
    }

    /// Timing of a batch plan started at its first stop at clock `t`,
    /// measured against each order being served alone from its restaurant
    /// starting at `t`. A singleton batch costs 0.
    pub fn fresh_estimates(&self, plan: &RoutePlan, orders: &[Order], t: f64) -> Vec<DeliveryEstimate> {
        let age = |o: &Order| (t - o.request_time).max(0.0);
        timeline(plan, &[], orders, age, |o| age(o).max(o.prep_time) + self.net.sp(o.restaurant, o.customer, t))
    }

    pub fn estimates(
        &self,
        plan: &RoutePlan,
        start_clock: f64,
        carried: &[Order],
        pending: &[Order],
    ) -> Vec<DeliveryEstimate> {
        self.estimates_with(plan, start_clock, carried, pending, |o| {
            shortest_delivery_time(self.net, o)
        })
    }

    /// Summed extra delivery time of `vehicle.carried` plus `pending` when
    /// the vehicle follows its quickest plan from clock `t`. Infeasible sets
    /// cost infinity; the empty set costs 0.
    pub fn set_cost(&self, vehicle: &Vehicle, pending: &[Order], t: f64) -> f64 {
        if vehicle.carried.is_empty() && pending.is_empty() {
            return 0.0;
        }
        let plan = match self.quickest_route_plan(vehicle.location, &vehicle.carried, pending, t) {
            Ok(plan) if plan.is_feasible() => plan,
            _ => return f64::INFINITY,
        };
        let start_clock = t.max(vehicle.ready_at);
        self.estimates(&plan, start_clock, &vehicle.carried, pending)
            .iter()
            .map(DeliveryEstimate::xdt)
            .sum()
    }

    /// Cost of the vehicle's current obligations (carried and committed).
    pub fn current_cost(&self, vehicle: &Vehicle, t: f64) -> f64 {
        self.set_cost(vehicle, &vehicle.committed, t)
    }

    /// Increase in the vehicle's summed extra delivery time from adding
    /// `batch`, capped at omega. Capacity violations and first pickups
    /// beyond the service cap cost omega.
    pub fn marginal_cost(&self, batch: &[Order], first_pickup: NodeId, vehicle: &Vehicle, t: f64) -> f64 {
        let base = self.current_cost(vehicle, t);
        self.marginal_cost_from(base, batch, first_pickup, vehicle, t)
    }

    /// [`marginal_cost`](Self::marginal_cost) with the vehicle's current
    /// cost precomputed.
    pub fn marginal_cost_from(
        &self,
        base: f64,
        batch: &[Order],
        first_pickup: NodeId,
        vehicle: &Vehicle,
        t: f64,
    ) -> f64 {
        let omega = self.limits.omega;
        let items = batch.iter().map(|o| o.items).sum();
        if batch.is_empty() {
            return 0.0;
        }
        if !vehicle.can_take(batch.len(), items, &self.limits) {
            return omega;
        }
        if self.net.sp(vehicle.location, first_pickup, t) > self.limits.service_cap {
            return omega;
        }
        let mut pending = vehicle.committed.clone();
        pending.extend_from_slice(batch);
        let with = self.set_cost(vehicle, &pending, t);
        if !(with.is_finite() && base.is_finite()) {
            return omega;
        }
        // A longer order set can reshuffle the quickest plan of the existing
        // obligations into a cheaper one; the increase never goes below 0.
        (with - base).clamp(0.0, omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roadnet::NetworkBuilder;

    /// Path graph 0 - 1 - 2 - 3 with unit-ish weights in both directions.
    fn line() -> RoadNetwork {
        let mut b = NetworkBuilder::new();
        for i in 0..4u64 {
            b.node(i, 0.0, i as f64 * 0.01);
        }
        let w = [3.0, 4.0, 5.0];
        for i in 0..3u64 {
            b.edge_constant(2 * i, i, i + 1, w[i as usize]);
            b.edge_constant(2 * i + 1, i + 1, i, w[i as usize]);
        }
        b.build().unwrap()
    }

    fn order(id: u64, r: u32, c: u32, prep: f64) -> Order {
        Order::new(OrderId(id), NodeId(r), NodeId(c), 0.0, 1, prep).unwrap()
    }

    #[test]
    fn order_invariants() {
        assert!(Order::new(OrderId(1), NodeId(0), NodeId(0), 0.0, 1, 300.0).is_err());
        assert!(Order::new(OrderId(1), NodeId(0), NodeId(1), 0.0, 0, 0.0).is_err());
        assert!(Order::new(OrderId(1), NodeId(0), NodeId(1), 0.0, 1, -1.0).is_err());
    }

    #[test]
    fn edt_formula() {
        assert_eq!(expected_delivery_time(0.0, 8.0, 5.0, 13.0), 21.0);
        assert_eq!(expected_delivery_time(0.0, 4.0, 5.0, 7.0), 12.0);
        assert_eq!(expected_delivery_time(0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn xdt_rejects_negative() {
        assert_eq!(extra_delivery_time(21.0, 18.0).unwrap(), 3.0);
        assert_eq!(extra_delivery_time(12.0, 12.0).unwrap(), 0.0);
        assert!(matches!(extra_delivery_time(1.0, 2.0), Err(CostError::NegativeExtraTime(_))));
    }

    #[test]
    fn sdt_is_prep_plus_quickest_path() {
        let net = line();
        assert_eq!(shortest_delivery_time(&net, &order(1, 0, 2, 0.0)), 7.0);
        assert_eq!(shortest_delivery_time(&net, &order(1, 0, 2, 300.0)), 307.0);
    }

    #[test]
    fn single_order_plan_from_restaurant() {
        let net = line();
        let model = CostModel::new(&net, Limits::default());
        let o = order(1, 1, 3, 0.0);
        let plan = model.quickest_route_plan(NodeId(1), &[], &[o], 0.0).unwrap();
        assert_eq!(plan.length, 9.0);
        assert_eq!(plan.stops.len(), 2);
        assert_eq!(plan.stops[0].kind, StopKind::Pickup);
        assert_eq!(plan.legs, vec![0.0, 9.0]);
    }

    #[test]
    fn capacity_and_unreachable() {
        let mut b = NetworkBuilder::new();
        b.node(0, 0.0, 0.0).node(1, 0.0, 0.01).node(2, 0.0, 0.02);
        b.edge_constant(0, 0, 1, 1.0).edge_constant(1, 2, 1, 1.0);
        let net = b.build().unwrap();
        let model = CostModel::new(&net, Limits::default());
        let orders: Vec<_> = (0..4).map(|i| order(i, 0, 1, 0.0)).collect();
        assert!(matches!(
            model.quickest_route_plan(NodeId(0), &[], &orders, 0.0),
            Err(CostError::CapacityExceeded { orders: 4, .. })
        ));
        let plan = model.quickest_route_plan(NodeId(0), &[], &[order(9, 0, 2, 0.0)], 0.0).unwrap();
        assert!(!plan.is_feasible());
    }

    #[test]
    fn ties_break_lexicographically() {
        let net = line();
        let model = CostModel::new(&net, Limits::default());
        // two identical orders: four plans share the minimum length 12
        let a = order(1, 0, 3, 0.0);
        let b = order(2, 0, 3, 0.0);
        let plan = model.quickest_route_plan(NodeId(0), &[], &[b.clone(), a.clone()], 0.0).unwrap();
        let keys: Vec<_> = plan.stops.iter().map(|s| (s.order.0, s.kind)).collect();
        assert_eq!(
            keys,
            vec![(1, StopKind::Pickup), (2, StopKind::Pickup), (1, StopKind::Dropoff), (2, StopKind::Dropoff)]
        );
        assert_eq!(plan.length, 12.0);
        assert!(plan.respects_precedence());
    }

    #[test]
    fn carried_orders_only_need_a_dropoff() {
        let net = line();
        let model = CostModel::new(&net, Limits::default());
        let carried = order(1, 0, 3, 0.0);
        let plan = model.quickest_route_plan(NodeId(1), &[carried], &[], 0.0).unwrap();
        assert_eq!(plan.stops.len(), 1);
        assert_eq!(plan.length, 9.0);
    }

    #[test]
    fn empty_set_costs_nothing() {
        let net = line();
        let model = CostModel::new(&net, Limits::default());
        let v = Vehicle::idle(VehicleId(1), NodeId(0));
        assert_eq!(model.set_cost(&v, &[], 0.0), 0.0);
        assert_eq!(model.marginal_cost(&[], NodeId(0), &v, 0.0), 0.0);
    }

    #[test]
    fn marginal_cost_respects_limits() {
        let net = line();
        let limits = Limits { service_cap: 6.0, ..Limits::default() };
        let model = CostModel::new(&net, limits);
        let mut full = Vehicle::idle(VehicleId(1), NodeId(0));
        full.committed = (0..3).map(|i| order(10 + i, 0, 1, 0.0)).collect();
        let o = order(1, 0, 1, 0.0);
        assert_eq!(model.marginal_cost(&[o.clone()], NodeId(0), &full, 0.0), 7200.0);
        // first pickup 12 s away with a 6 s cap
        let far = Vehicle::idle(VehicleId(2), NodeId(3));
        assert_eq!(model.marginal_cost(&[o.clone()], NodeId(0), &far, 0.0), 7200.0);
        let near = Vehicle::idle(VehicleId(3), NodeId(1));
        assert_eq!(model.marginal_cost(&[o], NodeId(0), &near, 0.0), 3.0);
    }

    #[test]
    fn worked_example_first_and_last_mile() {
        let ex = crate::fixtures::worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let o1 = ex.order(1).clone();
        let plan = model.quickest_route_plan(ex.node(1), &[], &[o1.clone()], 0.0).unwrap();
        assert_eq!(plan.length, 21.0);
        let est = &model.estimates(&plan, 0.0, &[], &[o1])[0];
        assert_eq!((est.first_mile, est.last_mile, est.edt, est.sdt), (8.0, 13.0, 21.0, 18.0));
        assert_eq!(extra_delivery_time(est.edt, est.sdt).unwrap(), 3.0);

        let o2 = ex.order(2).clone();
        let plan = model.quickest_route_plan(ex.node(4), &[], &[o2.clone()], 0.0).unwrap();
        let est = &model.estimates(&plan, 0.0, &[], &[o2])[0];
        assert_eq!((est.edt, est.xdt()), (12.0, 0.0));
    }

    #[test]
    fn worked_example_cost_table() {
        let ex = crate::fixtures::worked_example();
        let model = CostModel::new(&ex.net, Limits::default());
        let expected = [[3.0, 2.0, 11.0], [14.0, 0.0, 0.0], [3.0, 2.0, 11.0]];
        for (oi, row) in expected.iter().enumerate() {
            let o = ex.order(oi as u64 + 1);
            for (vi, &want) in row.iter().enumerate() {
                let v = ex.vehicle(vi as u64 + 1);
                assert_eq!(model.marginal_cost(std::slice::from_ref(o), o.restaurant, v, 0.0), want, "o{} v{}", oi + 1, vi + 1);
            }
        }
        let v1 = ex.vehicle(1);
        assert_eq!(model.set_cost(v1, &[], 0.0), 0.0);
        assert_eq!(model.set_cost(v1, &[ex.order(1).clone()], 0.0), 3.0);
    }

    #[test]
    fn pruned_search_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let spec = crate::workload::WorkloadSpec {
            node_count: 40,
            topology: crate::workload::Topology::RandomGeometric,
            vehicle_count: 0,
            seed: 6,
            ..Default::default()
        };
        let net = crate::workload::generate(&spec).unwrap().network;
        let model = CostModel::new(&net, Limits { max_orders: 4, ..Limits::default() });
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for round in 0..300 {
            let t = 3600.0 * rng.random_range(0..24) as f64;
            let mut orders: Vec<Order> = (0..rng.random_range(1..=4))
                .map(|k| {
                    let r = rng.random_range(0..40u32);
                    let c = (r + rng.random_range(1..40u32)) % 40;
                    // few distinct nodes so that equal lengths are common
                    let (r, c) = if round % 2 == 0 { (r % 5, c % 5) } else { (r, c) };
                    let c = if r == c { (c + 1) % 40 } else { c };
                    Order::new(OrderId(rng.random_range(0..1000) * 10 + k), NodeId(r), NodeId(c), 0.0, 1, 0.0).unwrap()
                })
                .collect();
            let carried: Vec<Order> = orders.drain(..rng.random_range(0..orders.len())).collect();
            let start = NodeId(rng.random_range(0..40));
            let plan = model.quickest_route_plan(start, &carried, &orders, t).unwrap();
            let brute = crate::oracle::brute_force_plan(&net, start, &carried, &orders, t).unwrap();
            assert_eq!(plan.length, brute.length);
            let stops: Vec<_> = plan.stops.iter().map(|s| (s.order, s.kind, s.node)).collect();
            assert_eq!(stops, brute.stops);
        }
    }
}
