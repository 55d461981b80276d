//! Windowed fleet simulation: orders and vehicles accumulate over fixed
//! windows, a policy assigns them at each window boundary, and vehicles then
//! drive their route plans until the next boundary.

pub mod io;
pub mod metrics;
pub mod policy;

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::costmodel::{AssignmentOutcome, CostError, CostModel, Limits, Order, OrderId, StopKind, Vehicle, VehicleId};
use crate::roadnet::{EdgeId, RoadNetwork};

pub use io::VehicleArrival;
pub use metrics::{LedgerRow, OrderStatus, SimulationMetrics};
pub use policy::{FoodMatchParams, Policy};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{file} line {line}: {message}")]
    Parse { file: &'static str, line: usize, message: String },
    #[error("record {line}: unknown node {node}")]
    UnknownNode { line: usize, node: u64 },
    #[error("{stream} stream not sorted by time at record {index}")]
    Unsorted { stream: &'static str, index: usize },
    #[error("order {0} references a node outside the network")]
    OrderOffNetwork(OrderId),
    #[error("vehicle {0} starts outside the network")]
    VehicleOffNetwork(VehicleId),
    #[error("duplicate order id {0}")]
    DuplicateOrder(OrderId),
    #[error("duplicate vehicle id {0}")]
    DuplicateVehicle(VehicleId),
    #[error(transparent)]
    Order(#[from] CostError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Window length, seconds.
    pub delta: f64,
    pub omega: f64,
    pub max_o: usize,
    pub max_i: u32,
    pub eta: f64,
    pub gamma: f64,
    pub k_factor: f64,
    /// Unassigned orders older than this are rejected, seconds.
    pub reject_after: f64,
    /// Longest admissible drive to a first pickup, seconds.
    pub service_cap: f64,
    pub policy: Policy,
    /// Seed for sampled preparation times.
    pub rng_seed: u64,
    /// Last window boundary; defaults to four hours after the last order.
    pub horizon: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            delta: 180.0,
            omega: 7200.0,
            max_o: 3,
            max_i: 10,
            eta: 60.0,
            gamma: 0.5,
            k_factor: 200.0,
            reject_after: 1800.0,
            service_cap: 2700.0,
            policy: Policy::FoodMatch,
            rng_seed: 0,
            horizon: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("delta", self.delta),
            ("omega", self.omega),
            ("k_factor", self.k_factor),
            ("reject_after", self.reject_after),
            ("service_cap", self.service_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_o == 0 || self.max_i == 0 {
            return Err(SimError::Config("capacities must be at least 1".into()));
        }
        if !(self.eta >= 0.0) {
            return Err(SimError::Config(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(SimError::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits { max_orders: self.max_o, max_items: self.max_i, omega: self.omega, service_cap: self.service_cap }
    }

    pub fn params(&self) -> FoodMatchParams {
        FoodMatchParams { eta: self.eta, gamma: self.gamma, k_factor: self.k_factor }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Stage {
    Unassigned,
    Committed,
    Carried,
    Delivered(f64),
    Rejected,
}

#[derive(Clone, Debug)]
struct OrderState {
    order: Order,
    stage: Stage,
    /// Current or most recent vehicle.
    vehicle: Option<VehicleId>,
    sdt: f64,
}

#[derive(Clone, Debug)]
struct SimVehicle {
    v: Vehicle,
    /// Remaining edges to the next stop.
    path: VecDeque<EdgeId>,
    /// Clock at which the current leg started; its edges use that slot.
    leg_start: f64,
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub metrics: SimulationMetrics,
    pub ledger: Vec<LedgerRow>,
}

/// Inputs of one assignment round.
pub struct WindowView<'w> {
    pub orders: &'w [Order],
    pub vehicles: &'w [Vehicle],
    pub clock: f64,
    pub runtime: f64,
}

pub struct Simulation<'a> {
    config: SimConfig,
    net: &'a RoadNetwork,
    model: CostModel<'a>,
    orders: Vec<OrderState>,
    order_index: HashMap<OrderId, usize>,
    arrivals: Vec<VehicleArrival>,
    next_order: usize,
    next_vehicle: usize,
    fleet: Vec<SimVehicle>,
    vehicle_index: HashMap<VehicleId, usize>,
    /// Unassigned orders by index.
    pool: Vec<usize>,
    clock: f64,
    horizon: f64,
    load: metrics::LoadDistance,
    wait: f64,
    runtimes: Vec<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        config: SimConfig,
        net: &'a RoadNetwork,
        orders: &[Order],
        vehicles: &[VehicleArrival],
    ) -> Result<Self, SimError> {
        config.validate()?;
        if let Some(i) = orders.windows(2).position(|w| w[1].request_time < w[0].request_time) {
            return Err(SimError::Unsorted { stream: "order", index: i + 2 });
        }
        if let Some(i) = vehicles.windows(2).position(|w| w[1].appear_time < w[0].appear_time) {
            return Err(SimError::Unsorted { stream: "vehicle", index: i + 2 });
        }
        let mut order_index = HashMap::with_capacity(orders.len());
        let mut states = Vec::with_capacity(orders.len());
        for (i, o) in orders.iter().enumerate() {
            if !(net.contains(o.restaurant) && net.contains(o.customer)) {
                return Err(SimError::OrderOffNetwork(o.id));
            }
            if order_index.insert(o.id, i).is_some() {
                return Err(SimError::DuplicateOrder(o.id));
            }
            let sdt = crate::costmodel::shortest_delivery_time(net, o);
            states.push(OrderState { order: o.clone(), stage: Stage::Unassigned, vehicle: None, sdt });
        }
        let mut seen = std::collections::HashSet::new();
        for v in vehicles {
            if !net.contains(v.start) {
                return Err(SimError::VehicleOffNetwork(v.id));
            }
            if !seen.insert(v.id) {
                return Err(SimError::DuplicateVehicle(v.id));
            }
        }
        let first = orders
            .first()
            .map(|o| o.request_time)
            .into_iter()
            .chain(vehicles.first().map(|v| v.appear_time))
            .fold(f64::INFINITY, f64::min);
        let clock = if first.is_finite() { (first / config.delta).floor() * config.delta } else { 0.0 };
        let horizon = config.horizon.unwrap_or_else(|| orders.last().map_or(clock, |o| o.request_time) + 4.0 * 3600.0);
        Ok(Self {
            model: CostModel::new(net, config.limits()),
            config,
            net,
            orders: states,
            order_index,
            arrivals: vehicles.to_vec(),
            next_order: 0,
            next_vehicle: 0,
            fleet: Vec::new(),
            vehicle_index: HashMap::new(),
            pool: Vec::new(),
            clock,
            horizon,
            load: Default::default(),
            wait: 0.0,
            runtimes: Vec::new(),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &Vehicle> {
        self.fleet.iter().map(|s| &s.v)
    }

    fn admit(&mut self) {
        while let Some(a) = self.arrivals.get(self.next_vehicle).filter(|a| a.appear_time <= self.clock) {
            let mut v = Vehicle::idle(a.id, a.start);
            v.ready_at = a.appear_time;
            self.vehicle_index.insert(a.id, self.fleet.len());
            self.fleet.push(SimVehicle { v, path: VecDeque::new(), leg_start: a.appear_time });
            self.next_vehicle += 1;
        }
        while self.orders.get(self.next_order).is_some_and(|o| o.order.request_time <= self.clock) {
            self.pool.push(self.next_order);
            self.next_order += 1;
        }
    }

    /// Orders and vehicles open for assignment this window. Under FoodMatch
    /// every assigned-but-unpicked order is first detached from its vehicle
    /// and joins the pool.
    pub fn collect_window(&mut self) -> (Vec<Order>, Vec<Vehicle>) {
        self.admit();
        let reshuffle = self.config.policy == Policy::FoodMatch;
        if reshuffle {
            for sv in &mut self.fleet {
                for o in sv.v.committed.drain(..) {
                    let i = self.order_index[&o.id];
                    self.orders[i].stage = Stage::Unassigned;
                    self.pool.push(i);
                }
            }
        }
        self.pool.sort_unstable_by_key(|&i| self.orders[i].order.id);
        let orders = self.pool.iter().map(|&i| self.orders[i].order.clone()).collect();
        let limits = self.config.limits();
        let vehicles = self.fleet.iter().filter(|sv| sv.v.can_take(1, 1, &limits)).map(|sv| sv.v.clone()).collect();
        (orders, vehicles)
    }

    /// Apply a window's decisions. Under FoodMatch, reshuffled orders left
    /// unmatched first go back to their previous vehicle when it still has
    /// room. A vehicle then takes its new orders only if all of them fit.
    pub fn commit(&mut self, outcome: &AssignmentOutcome) {
        let limits = self.config.limits();
        let reshuffle = self.config.policy == Policy::FoodMatch;
        let mut touched: Vec<usize> = Vec::new();
        let mut pool = Vec::new();
        let mut fresh: Vec<(usize, Vec<usize>)> = Vec::new();
        for &(oid, vid) in &outcome.decisions {
            let i = self.order_index[&oid];
            match vid.and_then(|v| self.vehicle_index.get(&v).copied()) {
                Some(vi) => match fresh.iter_mut().find(|(v, _)| *v == vi) {
                    Some((_, list)) => list.push(i),
                    None => fresh.push((vi, vec![i])),
                },
                None => {
                    let previous = self.orders[i].vehicle.and_then(|v| self.vehicle_index.get(&v).copied());
                    match previous {
                        Some(vi) if reshuffle && self.fleet[vi].v.can_take(1, self.orders[i].order.items, &limits) => {
                            self.fleet[vi].v.committed.push(self.orders[i].order.clone());
                            self.orders[i].stage = Stage::Committed;
                            touched.push(vi);
                        }
                        _ => pool.push(i),
                    }
                }
            }
        }
        for (vi, list) in fresh {
            let items = list.iter().map(|&i| self.orders[i].order.items).sum();
            if !self.fleet[vi].v.can_take(list.len(), items, &limits) {
                pool.extend(list);
                continue;
            }
            for i in list {
                self.fleet[vi].v.committed.push(self.orders[i].order.clone());
                self.orders[i].stage = Stage::Committed;
                self.orders[i].vehicle = Some(self.fleet[vi].v.id);
            }
            touched.push(vi);
        }
        if reshuffle {
            // detached vehicles need a fresh plan even if nothing came back
            touched.extend(0..self.fleet.len());
        }
        touched.sort_unstable();
        touched.dedup();
        for vi in touched {
            pool.extend(self.replan(vi));
        }
        pool.sort_unstable_by_key(|&i| self.orders[i].order.id);
        self.pool = pool;
    }

    /// Recompute a vehicle's route over its obligations. If no feasible plan
    /// exists the committed orders are released and returned.
    fn replan(&mut self, vi: usize) -> Vec<usize> {
        let clock = self.clock;
        let sv = &mut self.fleet[vi];
        sv.v.ready_at = sv.v.ready_at.max(clock);
        let plan = self.model.quickest_route_plan(sv.v.location, &sv.v.carried, &sv.v.committed, clock);
        let released = match plan {
            Ok(plan) if plan.is_feasible() => {
                sv.v.route = plan;
                Vec::new()
            }
            _ => {
                let dropped: Vec<usize> = sv.v.committed.drain(..).map(|o| self.order_index[&o.id]).collect();
                sv.v.route = self
                    .model
                    .quickest_route_plan(sv.v.location, &sv.v.carried, &[], clock)
                    .unwrap_or_else(|_| crate::costmodel::RoutePlan::empty());
                for &i in &dropped {
                    self.orders[i].stage = Stage::Unassigned;
                }
                dropped
            }
        };
        sv.v.dest = sv.v.route.stops.first().map(|s| s.node);
        sv.path.clear();
        released
    }

    /// Reject pool orders that have waited longer than allowed.
    fn reject_stale(&mut self) {
        let (clock, limit) = (self.clock, self.config.reject_after);
        let orders = &mut self.orders;
        self.pool.retain(|&i| {
            if clock - orders[i].order.request_time > limit {
                orders[i].stage = Stage::Rejected;
                false
            } else {
                true
            }
        });
    }

    /// Drive every vehicle along its plan for `dt` seconds.
    pub fn advance_vehicles(&mut self, dt: f64) {
        let until = self.clock + dt;
        for vi in 0..self.fleet.len() {
            self.advance_one(vi, until);
        }
        self.clock = until;
    }

    fn advance_one(&mut self, vi: usize, until: f64) {
        let net = self.net;
        loop {
            let sv = &mut self.fleet[vi];
            if sv.v.ready_at > until {
                return;
            }
            while let Some(stop) = sv.v.route.stops.first().copied().filter(|s| s.node == sv.v.location) {
                sv.v.route.stops.remove(0);
                sv.v.route.legs.remove(0);
                sv.path.clear();
                let i = self.order_index[&stop.order];
                match stop.kind {
                    StopKind::Pickup => {
                        let food = self.orders[i].order.ready_at();
                        if food > sv.v.ready_at {
                            self.wait += food - sv.v.ready_at;
                            sv.v.ready_at = food;
                        }
                        let pos = sv.v.committed.iter().position(|o| o.id == stop.order).expect("committed order");
                        let o = sv.v.committed.remove(pos);
                        sv.v.carried.push(o);
                        self.orders[i].stage = Stage::Carried;
                    }
                    StopKind::Dropoff => {
                        let pos = sv.v.carried.iter().position(|o| o.id == stop.order).expect("carried order");
                        sv.v.carried.remove(pos);
                        self.orders[i].stage = Stage::Delivered(sv.v.ready_at);
                    }
                }
            }
            sv.v.dest = sv.v.route.stops.first().map(|s| s.node);
            let Some(target) = sv.v.dest else {
                sv.v.route.length = 0.0;
                return;
            };
            if sv.v.ready_at > until {
                return;
            }
            if sv.path.is_empty() {
                let path = net.path(sv.v.location, target, sv.v.ready_at).expect("planned stop is reachable");
                sv.path = path.into();
                sv.leg_start = sv.v.ready_at;
            }
            let e = sv.path.pop_front().expect("nonempty path");
            let edge = &net.edges()[e.index()];
            sv.v.ready_at += edge.profile.at(sv.leg_start);
            sv.v.location = edge.to;
            self.load.add(edge.length_km, sv.v.carried.len());
        }
    }

    fn done(&self) -> bool {
        self.next_order == self.orders.len()
            && self.next_vehicle == self.arrivals.len()
            && self.orders.iter().all(|o| matches!(o.stage, Stage::Delivered(_) | Stage::Rejected))
    }

    /// One window: collect, assign, commit, reject, then drive for `delta`.
    pub fn step(&mut self) -> AssignmentOutcome {
        self.step_with(|_| {})
    }

    /// As [`Simulation::step`], handing the window's inputs and assignment
    /// runtime to `inspect` before they are committed.
    pub fn step_with(&mut self, inspect: impl FnOnce(&WindowView<'_>)) -> AssignmentOutcome {
        let (orders, vehicles) = self.collect_window();
        let started = Instant::now();
        let outcome = if orders.is_empty() {
            AssignmentOutcome { assignment_time: self.clock, ..Default::default() }
        } else {
            policy::assign(self.config.policy, &self.model, &orders, &vehicles, self.clock, &self.config.params())
        };
        let runtime = started.elapsed().as_secs_f64();
        self.runtimes.push(runtime);
        inspect(&WindowView { orders: &orders, vehicles: &vehicles, clock: self.clock, runtime });
        self.commit(&outcome);
        self.reject_stale();
        self.advance_vehicles(self.config.delta);
        outcome
    }

    /// True once the horizon is passed or every order is settled.
    pub fn finished(&self) -> bool {
        self.clock > self.horizon || self.done()
    }

    pub fn run(mut self) -> SimOutput {
        while !self.finished() {
            self.step();
        }
        self.finish()
    }

    pub fn finish(self) -> SimOutput {
        let mut m = SimulationMetrics { injected: self.orders.len(), ..Default::default() };
        let mut ledger = Vec::with_capacity(self.orders.len());
        for s in &self.orders {
            let (status, edt) = match s.stage {
                Stage::Delivered(at) => (OrderStatus::Delivered, Some(at - s.order.request_time)),
                Stage::Rejected => (OrderStatus::Rejected, None),
                _ => (OrderStatus::InFlight, None),
            };
            let xdt = edt.map(|e| e - s.sdt);
            match status {
                OrderStatus::Delivered => {
                    m.delivered += 1;
                    m.total_xdt += xdt.unwrap_or(0.0);
                }
                OrderStatus::Rejected => m.rejected += 1,
                OrderStatus::InFlight => m.in_flight += 1,
            }
            let vehicle = if status == OrderStatus::Rejected { None } else { s.vehicle };
            ledger.push(LedgerRow { order: s.order.id, status, vehicle, edt, sdt: s.sdt, xdt });
        }
        ledger.sort_by_key(|r| r.order);
        m.objective = m.total_xdt + self.config.omega * m.rejected as f64;
        m.orders_per_km = self.load.orders_per_km();
        m.distance_km = self.load.total;
        m.total_wait = self.wait;
        m.windows = self.runtimes.len();
        m.overflown_windows = self.runtimes.iter().filter(|&&r| r > self.config.delta).count();
        m.per_window_runtime = self.runtimes;
        SimOutput { metrics: m, ledger }
    }
}

/// Simulate `orders` (sorted by request time) against `vehicles` (sorted by
/// appearance time) under `config`.
pub fn run(
    config: &SimConfig,
    net: &RoadNetwork,
    orders: &[Order],
    vehicles: &[VehicleArrival],
) -> Result<SimOutput, SimError> {
    Ok(Simulation::new(config.clone(), net, orders, vehicles)?.run())
}
