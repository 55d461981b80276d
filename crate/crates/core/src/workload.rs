//! Synthetic cities and demand: a road network, a restaurant preparation
//! model, an order stream and a vehicle stream, all drawn from one seed.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::costmodel::{Order, VehicleId};
use crate::roadnet::{haversine_km, slot_of, write_network, LatLon, NetworkBuilder, NetworkError, NodeId, RoadNetwork, SLOTS, SLOT_SECONDS};
use crate::simulator::io::{resolve_orders, write_orders, write_restaurant_model, write_vehicles, OrderRow, PrepModel};
use crate::simulator::{SimError, VehicleArrival};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("infeasible workload: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Stream(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Grid,
    RandomGeometric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub node_count: usize,
    pub topology: Topology,
    pub restaurant_fraction: f64,
    /// Expected orders per hour for each hour of the day.
    pub order_rate_per_slot: [f64; SLOTS],
    pub vehicle_count: usize,
    pub vehicle_appear_time: f64,
    /// Per-restaurant mean preparation time is drawn from this range, seconds.
    pub prep_mu: (f64, f64),
    pub prep_sigma: (f64, f64),
    /// Distance between neighbouring grid nodes, metres.
    pub spacing_m: f64,
    pub speed_kmh: f64,
    /// Customers lie within this travel time of their restaurant, seconds.
    pub customer_radius: f64,
    pub service_cap: f64,
    /// Restaurant popularity follows `1 / rank^popularity_skew`; 0 is uniform.
    pub popularity_skew: f64,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            node_count: 400,
            topology: Topology::Grid,
            restaurant_fraction: 0.05,
            order_rate_per_slot: peak_profile(50.0),
            vehicle_count: 50,
            vehicle_appear_time: 0.0,
            prep_mu: (300.0, 900.0),
            prep_sigma: (60.0, 180.0),
            spacing_m: 200.0,
            speed_kmh: 20.0,
            customer_radius: 1200.0,
            service_cap: 2700.0,
            popularity_skew: 1.0,
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: &str| Err(WorkloadError::Infeasible(m.to_string()));
        if self.node_count < 2 {
            return bad("at least two nodes are needed");
        }
        if !(self.restaurant_fraction > 0.0 && self.restaurant_fraction <= 1.0) {
            return bad("restaurant fraction must lie in (0, 1]");
        }
        if self.restaurant_count() == 0 {
            return bad("no restaurants");
        }
        if self.order_rate_per_slot.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("order rates must be finite and >= 0");
        }
        if !(self.popularity_skew >= 0.0 && self.popularity_skew.is_finite()) {
            return bad("popularity skew must be finite and >= 0");
        }
        if !(self.spacing_m > 0.0 && self.speed_kmh > 0.0 && self.customer_radius > 0.0 && self.service_cap > 0.0) {
            return bad("spacing, speed, customer radius and service cap must be positive");
        }
        if !(self.prep_mu.0 >= 0.0 && self.prep_mu.0 <= self.prep_mu.1)
            || !(self.prep_sigma.0 >= 0.0 && self.prep_sigma.0 <= self.prep_sigma.1)
        {
            return bad("preparation ranges must be ordered and nonnegative");
        }
        Ok(())
    }

    pub fn restaurant_count(&self) -> usize {
        (self.restaurant_fraction * self.node_count as f64).round() as usize
    }

    pub fn expected_orders(&self) -> f64 {
        self.order_rate_per_slot.iter().sum()
    }
}

/// Hourly rates with a lunch and a dinner peak, scaled so the day averages
/// `mean_per_hour`.
pub fn peak_profile(mean_per_hour: f64) -> [f64; SLOTS] {
    const SHAPE: [f64; SLOTS] = [
        0.2, 0.1, 0.05, 0.05, 0.05, 0.1, 0.3, 0.5, 0.8, 0.9, 1.0, 1.6, 2.6, 2.4, 1.4, 0.9, 0.9, 1.1, 1.8, 2.8, 3.0,
        2.2, 1.2, 0.5,
    ];
    let total: f64 = SHAPE.iter().sum();
    SHAPE.map(|w| w / total * mean_per_hour * SLOTS as f64)
}

/// Travel-time multiplier per hour: slower at the morning, lunch and
/// evening rush.
const CONGESTION: [f64; SLOTS] = [
    0.85, 0.8, 0.8, 0.8, 0.85, 0.9, 1.0, 1.2, 1.35, 1.25, 1.1, 1.15, 1.3, 1.25, 1.1, 1.1, 1.15, 1.3, 1.45, 1.5, 1.35,
    1.15, 1.0, 0.9,
];

const BASE_LAT: f64 = 12.97;
const BASE_LON: f64 = 77.59;
const METRES_PER_DEGREE: f64 = 111_320.0;

#[derive(Debug)]
pub struct Workload {
    pub network: RoadNetwork,
    pub restaurants: PrepModel,
    pub orders: Vec<OrderRow>,
    /// `(vehicle id, appear time, start node id)`.
    pub vehicles: Vec<(u64, f64, u64)>,
}

impl Workload {
    pub fn network_text(&self) -> String {
        write_network(&self.network)
    }

    pub fn orders_text(&self) -> String {
        write_orders(&self.orders)
    }

    pub fn vehicles_text(&self) -> String {
        write_vehicles(&self.vehicles)
    }

    pub fn restaurants_text(&self) -> String {
        write_restaurant_model(&self.restaurants)
    }

    /// Orders with preparation times drawn under `seed`.
    pub fn resolve_orders(&self, seed: u64) -> Result<Vec<Order>, SimError> {
        resolve_orders(&self.orders, &self.network, &self.restaurants, seed)
    }

    pub fn vehicle_arrivals(&self) -> Vec<VehicleArrival> {
        self.vehicles
            .iter()
            .map(|&(id, t, node)| VehicleArrival {
                id: VehicleId(id),
                appear_time: t,
                start: self.network.node_by_external(node).expect("generated node"),
            })
            .collect()
    }

    /// The first `count` vehicles of the stream.
    pub fn fleet_prefix(&self, count: usize) -> Vec<VehicleArrival> {
        let mut v = self.vehicle_arrivals();
        v.truncate(count);
        v
    }
}

fn positions(spec: &WorkloadSpec, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = spec.node_count;
    let cols = (n as f64).sqrt().ceil() as usize;
    let step = spec.spacing_m;
    match spec.topology {
        Topology::Grid => (0..n).map(|i| ((i / cols) as f64 * step, (i % cols) as f64 * step)).collect(),
        Topology::RandomGeometric => {
            let side = cols as f64 * step;
            (0..n).map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side))).collect()
        }
    }
}

fn links(spec: &WorkloadSpec, xy: &[(f64, f64)]) -> Vec<(usize, usize)> {
    let n = xy.len();
    let cols = (n as f64).sqrt().ceil() as usize;
    let mut out = Vec::new();
    match spec.topology {
        Topology::Grid => {
            for i in 0..n {
                if (i + 1) % cols != 0 && i + 1 < n {
                    out.push((i, i + 1));
                }
                if i + cols < n {
                    out.push((i, i + cols));
                }
            }
        }
        Topology::RandomGeometric => {
            let d2 = |a: usize, b: usize| (xy[a].0 - xy[b].0).powi(2) + (xy[a].1 - xy[b].1).powi(2);
            let mut seen = std::collections::HashSet::new();
            for i in 0..n {
                let mut near: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                let by = |a: &usize, b: &usize| d2(i, *a).total_cmp(&d2(i, *b)).then(a.cmp(b));
                if near.len() > 4 {
                    near.select_nth_unstable_by(4, by);
                    near.truncate(4);
                }
                near.sort_by(by);
                for &j in near.iter().take(4) {
                    if seen.insert((i.min(j), i.max(j))) {
                        out.push((i.min(j), i.max(j)));
                    }
                }
            }
            // join components by their closest node pair until one remains
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], mut x: usize) -> usize {
                while p[x] != x {
                    p[x] = p[p[x]];
                    x = p[x];
                }
                x
            }
            for &(a, b) in &out {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
            loop {
                let root = find(&mut parent, 0);
                let inside: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == root).collect();
                if inside.len() == n {
                    break;
                }
                let mut best = (f64::INFINITY, 0, 0);
                for &a in &inside {
                    for b in 0..n {
                        if find(&mut parent, b) != root && d2(a, b) < best.0 {
                            best = (d2(a, b), a, b);
                        }
                    }
                }
                let (_, a, b) = best;
                out.push((a.min(b), a.max(b)));
                let rb = find(&mut parent, b);
                parent[rb] = root;
            }
        }
    }
    out
}

fn build_network(spec: &WorkloadSpec, rng: &mut ChaCha8Rng) -> Result<RoadNetwork, WorkloadError> {
    let xy = positions(spec, rng);
    let lon_scale = METRES_PER_DEGREE * BASE_LAT.to_radians().cos();
    let deg: Vec<(f64, f64)> =
        xy.iter().map(|&(y, x)| (BASE_LAT + y / METRES_PER_DEGREE, BASE_LON + x / lon_scale)).collect();
    let mut b = NetworkBuilder::new();
    for (i, &(lat, lon)) in deg.iter().enumerate() {
        b.node(i as u64 + 1, lat, lon);
    }
    let mut edge_id = 1;
    for (a, c) in links(spec, &xy) {
        let km = haversine_km(LatLon::from_degrees(deg[a].0, deg[a].1), LatLon::from_degrees(deg[c].0, deg[c].1));
        let free_flow = (km / spec.speed_kmh * 3600.0).max(1.0);
        for (from, to) in [(a, c), (c, a)] {
            let jitter = rng.random_range(0.9..1.2);
            let weights = CONGESTION.iter().map(|f| free_flow * f * jitter * rng.random_range(0.97..1.03)).collect();
            b.edge(edge_id, from as u64 + 1, to as u64 + 1, weights);
            edge_id += 1;
        }
    }
    Ok(b.build()?)
}

fn restaurant_model(spec: &WorkloadSpec, restaurants: &[NodeId], net: &RoadNetwork, rng: &mut ChaCha8Rng) -> PrepModel {
    let mut model = PrepModel::default();
    for &r in restaurants {
        let mu = rng.random_range(spec.prep_mu.0..=spec.prep_mu.1);
        let sigma = rng.random_range(spec.prep_sigma.0..=spec.prep_sigma.1);
        for slot in 0..SLOTS {
            // kitchens slow down when busy
            let busy = 1.0 + 0.1 * (spec.order_rate_per_slot[slot] / spec.expected_orders().max(1.0) * SLOTS as f64 - 1.0).max(0.0);
            model.insert(net.external_id(r), slot, (mu * busy).round(), sigma.round());
        }
    }
    model
}

pub fn generate(spec: &WorkloadSpec) -> Result<Workload, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let network = build_network(spec, &mut rng)?;
    let n = network.node_count();

    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..spec.restaurant_count().min(n) {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    let mut restaurants: Vec<NodeId> = all[..spec.restaurant_count().min(n)].iter().map(|&i| NodeId(i as u32)).collect();
    restaurants.sort();
    let prep = restaurant_model(spec, &restaurants, &network, &mut rng);

    let total = spec.expected_orders().round() as usize;
    let mut times: Vec<f64> = if total == 0 {
        Vec::new()
    } else {
        let slots = WeightedIndex::new(spec.order_rate_per_slot).map_err(|e| WorkloadError::Infeasible(e.to_string()))?;
        (0..total)
            .map(|_| {
                let s = slots.sample(&mut rng) as f64;
                crate::roadnet::quantize(s * SLOT_SECONDS + rng.random_range(0.0..SLOT_SECONDS))
            })
            .collect()
    };
    times.sort_by(f64::total_cmp);

    // a few kitchens take most of the orders
    let zipf: Vec<f64> = (0..restaurants.len()).map(|i| 1.0 / (i as f64 + 1.0).powf(spec.popularity_skew)).collect();
    let mut ranks: Vec<usize> = (0..restaurants.len()).collect();
    for i in (1..ranks.len()).rev() {
        ranks.swap(i, rng.random_range(0..=i));
    }
    let weights: Vec<f64> = ranks.iter().map(|&r| zipf[r]).collect();
    let popularity = WeightedIndex::new(&weights).map_err(|e| WorkloadError::Infeasible(e.to_string()))?;
    let radius = spec.customer_radius.min(spec.service_cap);
    let mut reach: HashMap<(NodeId, usize), Vec<NodeId>> = HashMap::new();
    let mut orders = Vec::with_capacity(total);
    for (k, &t) in times.iter().enumerate() {
        let r = restaurants[popularity.sample(&mut rng)];
        let near = reach.entry((r, slot_of(t))).or_insert_with(|| {
            let d = network.distances_from(r, t, radius);
            (0..n).filter(|&i| i != r.index() && d[i] < radius).map(|i| NodeId(i as u32)).collect()
        });
        if near.is_empty() {
            return Err(WorkloadError::Infeasible(format!("restaurant {} reaches no customer", network.external_id(r))));
        }
        let c = near[rng.random_range(0..near.len())];
        let items = match rng.random_range(0..20) {
            0..12 => 1,
            12..17 => 2,
            _ => 3,
        };
        orders.push(OrderRow {
            id: k as u64 + 1,
            request_time: t,
            restaurant: network.external_id(r),
            customer: network.external_id(c),
            items,
            prep_time: None,
        });
    }

    let vehicles = (0..spec.vehicle_count)
        .map(|i| (i as u64 + 1, spec.vehicle_appear_time, network.external_id(NodeId(rng.random_range(0..n) as u32))))
        .collect();
    Ok(Workload { network, restaurants: prep, orders, vehicles })
}
