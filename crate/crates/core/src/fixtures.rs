//! Small hand-built instances shared by tests and the `oracle` command.

use crate::costmodel::{Order, OrderId, Vehicle, VehicleId};
use crate::roadnet::{NetworkBuilder, NodeId, RoadNetwork};

/// Nine-node city with three orders and three idle vehicles.
///
/// ```text
/// u1 -8- u2 -5- u3 -8- u7 -5- u8
///         |
///         7
///         |
///         u4
///         |
///         4
///         |
/// u5 -5- u6 -7- u9
/// ```
///
/// Orders (all requested at 0, one item each): o1 u2->u7 prep 5,
/// o2 u6->u9 prep 5, o3 u3->u8 prep 10. Vehicles: v1 at u1, v2 at u4,
/// v3 at u5.
pub struct WorkedExample {
    pub net: RoadNetwork,
    pub orders: Vec<Order>,
    pub vehicles: Vec<Vehicle>,
}

impl WorkedExample {
    pub fn node(&self, external: u64) -> NodeId {
        self.net.node_by_external(external).expect("fixture node")
    }

    pub fn order(&self, id: u64) -> &Order {
        self.orders.iter().find(|o| o.id == OrderId(id)).expect("fixture order")
    }

    pub fn vehicle(&self, id: u64) -> &Vehicle {
        self.vehicles.iter().find(|v| v.id == VehicleId(id)).expect("fixture vehicle")
    }
}

pub fn worked_example() -> WorkedExample {
    let mut b = NetworkBuilder::new();
    let coords = [
        (1, 0.00, 0.00),
        (2, 0.00, 0.01),
        (3, 0.00, 0.02),
        (4, -0.01, 0.01),
        (5, -0.02, 0.00),
        (6, -0.02, 0.01),
        (7, 0.00, 0.03),
        (8, 0.00, 0.04),
        (9, -0.02, 0.02),
    ];
    for (id, lat, lon) in coords {
        b.node(id, lat, lon);
    }
    let links = [(1, 2, 8.0), (2, 3, 5.0), (3, 7, 8.0), (7, 8, 5.0), (4, 2, 7.0), (4, 6, 4.0), (6, 9, 7.0), (5, 6, 5.0)];
    for (k, (a, c, w)) in links.into_iter().enumerate() {
        b.edge_constant(2 * k as u64, a, c, w);
        b.edge_constant(2 * k as u64 + 1, c, a, w);
    }
    let net = b.build().expect("fixture network");
    let n = |id: u64| net.node_by_external(id).expect("fixture node");
    let orders = vec![
        Order::new(OrderId(1), n(2), n(7), 0.0, 1, 5.0).expect("o1"),
        Order::new(OrderId(2), n(6), n(9), 0.0, 1, 5.0).expect("o2"),
        Order::new(OrderId(3), n(3), n(8), 0.0, 1, 10.0).expect("o3"),
    ];
    let vehicles = vec![
        Vehicle::idle(VehicleId(1), n(1)),
        Vehicle::idle(VehicleId(2), n(4)),
        Vehicle::idle(VehicleId(3), n(5)),
    ];
    WorkedExample { net, orders, vehicles }
}
