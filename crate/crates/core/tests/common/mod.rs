#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dispatch_core::roadnet::NetworkBuilder;
use dispatch_core::workload::{generate, Topology, WorkloadSpec};
use dispatch_core::{NodeId, Order, OrderId, RoadNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generated city of at most 50 nodes with hourly profiles.
pub fn city(rng: &mut ChaCha8Rng) -> RoadNetwork {
    let spec = WorkloadSpec {
        node_count: rng.random_range(9..=50),
        topology: if rng.random_bool(0.5) { Topology::Grid } else { Topology::RandomGeometric },
        restaurant_fraction: 0.2,
        vehicle_count: 0,
        seed: rng.random(),
        ..WorkloadSpec::default()
    };
    generate(&spec).expect("city").network
}

/// Two-way grid with one travel time per edge all day.
pub fn constant_grid(rng: &mut ChaCha8Rng, side: u64) -> RoadNetwork {
    let mut b = NetworkBuilder::new();
    for i in 0..side * side {
        b.node(i, (i / side) as f64 * 0.002, (i % side) as f64 * 0.002);
    }
    let mut e = 0;
    for i in 0..side * side {
        let (r, c) = (i / side, i % side);
        let mut link = |j: u64| {
            b.edge_constant(e, i, j, rng.random_range(10..60) as f64);
            b.edge_constant(e + 1, j, i, rng.random_range(10..60) as f64);
            e += 2;
        };
        if c + 1 < side {
            link(i + 1);
        }
        if r + 1 < side {
            link(i + side);
        }
    }
    b.build().expect("grid")
}

pub fn order(rng: &mut ChaCha8Rng, net: &RoadNetwork, id: u64, placed: f64) -> Order {
    let n = net.node_count() as u32;
    let r = rng.random_range(0..n);
    let c = (r + rng.random_range(1..n)) % n;
    Order::new(OrderId(id), NodeId(r), NodeId(c), placed, rng.random_range(1..=3), rng.random_range(0..900) as f64)
        .expect("order")
}

/// `count` orders placed in the ten minutes before `t`.
pub fn orders(rng: &mut ChaCha8Rng, net: &RoadNetwork, count: usize, t: f64) -> Vec<Order> {
    (0..count)
        .map(|k| {
            let placed = t - rng.random_range(0..600) as f64;
            order(rng, net, k as u64, placed)
        })
        .collect()
}

pub fn node(rng: &mut ChaCha8Rng, net: &RoadNetwork) -> NodeId {
    NodeId(rng.random_range(0..net.node_count() as u32))
}

pub fn clock(rng: &mut ChaCha8Rng) -> f64 {
    3600.0 * rng.random_range(0..24) as f64 + rng.random_range(0..3600) as f64
}

/// Vehicle with up to two carried and one committed order, possibly still
/// busy until shortly after `t`.
pub fn vehicle(rng: &mut ChaCha8Rng, net: &RoadNetwork, id: u64, t: f64) -> dispatch_core::Vehicle {
    let mut v = dispatch_core::Vehicle::idle(dispatch_core::VehicleId(id), node(rng, net));
    let held = rng.random_range(0..=2);
    for k in 0..held {
        let placed = t - rng.random_range(0..1200) as f64;
        v.carried.push(order(rng, net, 1000 + 10 * id + k, placed));
    }
    if rng.random_bool(0.3) {
        let placed = t - rng.random_range(0..600) as f64;
        v.committed.push(order(rng, net, 1005 + 10 * id, placed));
    }
    v.ready_at = t + rng.random_range(0..120) as f64;
    if let Some(o) = v.carried.first() {
        v.dest = Some(o.customer);
    }
    v
}
