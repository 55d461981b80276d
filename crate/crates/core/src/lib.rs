//! Food-delivery dispatch: road network, delivery-time costs, order
//! batching, bipartite assignment and a windowed simulator.

pub mod baselines;
pub mod batching;
pub mod costmodel;
pub mod fixtures;
pub mod foodgraph;
pub mod matching;
pub mod oracle;
pub mod roadnet;
pub mod simulator;
pub mod workload;

pub use costmodel::{CostError, CostModel, Limits, Order, OrderId, RoutePlan, Stop, StopKind, Vehicle, VehicleId};
pub use roadnet::{NetworkError, NodeId, RoadNetwork};
