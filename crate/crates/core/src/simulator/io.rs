//! Order, vehicle and restaurant-model stream files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SimError;
use crate::costmodel::{Order, OrderId, VehicleId};
use crate::roadnet::{slot_of, NodeId, RoadNetwork, SLOTS};

/// Order stream record before node ids are resolved. `prep_time` is `None`
/// when the file says `-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderRow {
    pub id: u64,
    pub request_time: f64,
    pub restaurant: u64,
    pub customer: u64,
    pub items: u32,
    pub prep_time: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleArrival {
    pub id: VehicleId,
    pub appear_time: f64,
    pub start: NodeId,
}

/// Per-restaurant, per-hour Gaussian preparation times.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PrepModel {
    params: HashMap<(u64, usize), (f64, f64)>,
}

/// Used for restaurants or hours the model does not cover.
pub const FALLBACK_PREP: (f64, f64) = (600.0, 180.0);

impl PrepModel {
    pub fn insert(&mut self, restaurant: u64, slot: usize, mu: f64, sigma: f64) {
        self.params.insert((restaurant, slot), (mu, sigma));
    }

    pub fn get(&self, restaurant: u64, slot: usize) -> Option<(f64, f64)> {
        self.params.get(&(restaurant, slot)).copied()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Draw from `N(mu, sigma)` conditioned on a nonnegative result.
    pub fn sample(&self, restaurant: u64, t: f64, rng: &mut ChaCha8Rng) -> f64 {
        let (mu, sigma) = self.get(restaurant, slot_of(t)).unwrap_or(FALLBACK_PREP);
        if sigma <= 0.0 {
            return mu.max(0.0);
        }
        let normal = Normal::new(mu, sigma).expect("finite sigma");
        for _ in 0..64 {
            let x = normal.sample(rng);
            if x >= 0.0 {
                return x;
            }
        }
        0.0
    }

    /// Rows sorted by restaurant then slot.
    pub fn rows(&self) -> Vec<(u64, usize, f64, f64)> {
        let mut rows: Vec<_> = self.params.iter().map(|(&(r, s), &(m, sd))| (r, s, m, sd)).collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        rows
    }
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split_whitespace().collect()))
}

fn field<T: FromStr>(file: &'static str, line: usize, fields: &[&str], idx: usize, what: &str) -> Result<T, SimError> {
    fields
        .get(idx)
        .ok_or_else(|| SimError::Parse { file, line, message: format!("missing {what}") })?
        .parse()
        .map_err(|_| SimError::Parse { file, line, message: format!("bad {what} {:?}", fields[idx]) })
}

fn arity(file: &'static str, line: usize, fields: &[&str], n: usize) -> Result<(), SimError> {
    if fields.len() != n {
        return Err(SimError::Parse { file, line, message: format!("expected {n} fields, found {}", fields.len()) });
    }
    Ok(())
}

pub fn parse_orders(text: &str) -> Result<Vec<OrderRow>, SimError> {
    const F: &str = "orders";
    records(text)
        .map(|(line, f)| {
            arity(F, line, &f, 6)?;
            let prep: f64 = field(F, line, &f, 5, "prep time")?;
            let prep_time = if prep == -1.0 {
                None
            } else if prep >= 0.0 {
                Some(prep)
            } else {
                return Err(SimError::Parse { file: F, line, message: format!("bad prep time {prep}") });
            };
            Ok(OrderRow {
                id: field(F, line, &f, 0, "order id")?,
                request_time: field(F, line, &f, 1, "request time")?,
                restaurant: field(F, line, &f, 2, "restaurant node")?,
                customer: field(F, line, &f, 3, "customer node")?,
                items: field(F, line, &f, 4, "item count")?,
                prep_time,
            })
        })
        .collect()
}

pub fn parse_vehicles(text: &str, net: &RoadNetwork) -> Result<Vec<VehicleArrival>, SimError> {
    const F: &str = "vehicles";
    records(text)
        .map(|(line, f)| {
            arity(F, line, &f, 3)?;
            let node: u64 = field(F, line, &f, 2, "start node")?;
            Ok(VehicleArrival {
                id: VehicleId(field(F, line, &f, 0, "vehicle id")?),
                appear_time: field(F, line, &f, 1, "appear time")?,
                start: net.node_by_external(node).ok_or(SimError::UnknownNode { line, node })?,
            })
        })
        .collect()
}

pub fn parse_restaurant_model(text: &str) -> Result<PrepModel, SimError> {
    const F: &str = "restaurants";
    let mut model = PrepModel::default();
    for (line, f) in records(text) {
        arity(F, line, &f, 4)?;
        let slot: usize = field(F, line, &f, 1, "slot")?;
        let mu: f64 = field(F, line, &f, 2, "mean")?;
        let sigma: f64 = field(F, line, &f, 3, "deviation")?;
        if slot >= SLOTS || !mu.is_finite() || !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(SimError::Parse { file: F, line, message: "slot must be < 24, mean finite, deviation >= 0".into() });
        }
        model.insert(field(F, line, &f, 0, "restaurant node")?, slot, mu, sigma);
    }
    Ok(model)
}

/// Resolve node ids and fill missing preparation times from `model`, drawing
/// in file order from a generator seeded with `seed`.
pub fn resolve_orders(rows: &[OrderRow], net: &RoadNetwork, model: &PrepModel, seed: u64) -> Result<Vec<Order>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let node = |n: u64| net.node_by_external(n).ok_or(SimError::UnknownNode { line: i + 1, node: n });
            let (restaurant, customer) = (node(r.restaurant)?, node(r.customer)?);
            let prep = r.prep_time.unwrap_or_else(|| model.sample(r.restaurant, r.request_time, &mut rng));
            Ok(Order::new(OrderId(r.id), restaurant, customer, r.request_time, r.items, prep)?)
        })
        .collect()
}

pub fn write_orders(rows: &[OrderRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let prep = r.prep_time.map_or("-1".to_string(), |p| format!("{p}"));
        let _ = writeln!(s, "{} {} {} {} {} {}", r.id, r.request_time, r.restaurant, r.customer, r.items, prep);
    }
    s
}

pub fn write_vehicles(vehicles: &[(u64, f64, u64)]) -> String {
    let mut s = String::new();
    for (id, t, node) in vehicles {
        let _ = writeln!(s, "{id} {t} {node}");
    }
    s
}

pub fn write_restaurant_model(model: &PrepModel) -> String {
    let mut s = String::new();
    for (r, slot, mu, sigma) in model.rows() {
        let _ = writeln!(s, "{r} {slot} {mu} {sigma}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::worked_example;

    #[test]
    fn order_rows_round_trip() {
        let rows = vec![
            OrderRow { id: 1, request_time: 10.5, restaurant: 2, customer: 7, items: 1, prep_time: Some(5.0) },
            OrderRow { id: 2, request_time: 11.0, restaurant: 6, customer: 9, items: 2, prep_time: None },
        ];
        assert_eq!(parse_orders(&write_orders(&rows)).unwrap(), rows);
    }

    #[test]
    fn bad_records() {
        assert!(matches!(parse_orders("1 0 2 7 1"), Err(SimError::Parse { line: 1, .. })));
        assert!(matches!(parse_orders("# c\n1 0 2 7 x 5"), Err(SimError::Parse { line: 2, .. })));
        assert!(parse_orders("1 0 2 7 1 -3").is_err());
        let ex = worked_example();
        assert!(matches!(parse_vehicles("1 0 99", &ex.net), Err(SimError::UnknownNode { node: 99, .. })));
    }

    #[test]
    fn unknown_order_node() {
        let ex = worked_example();
        let rows = parse_orders("1 0 2 42 1 5").unwrap();
        assert!(matches!(resolve_orders(&rows, &ex.net, &PrepModel::default(), 0), Err(SimError::UnknownNode { node: 42, .. })));
    }

    #[test]
    fn sampled_prep_is_seeded_and_nonnegative() {
        let ex = worked_example();
        let mut model = PrepModel::default();
        model.insert(2, 0, 10.0, 50.0);
        let rows: Vec<_> = (0..50)
            .map(|i| OrderRow { id: i, request_time: 0.0, restaurant: 2, customer: 7, items: 1, prep_time: None })
            .collect();
        let a = resolve_orders(&rows, &ex.net, &model, 9).unwrap();
        let b = resolve_orders(&rows, &ex.net, &model, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|o| o.prep_time >= 0.0));
        let text = write_restaurant_model(&model);
        assert_eq!(parse_restaurant_model(&text).unwrap(), model);
    }
}
