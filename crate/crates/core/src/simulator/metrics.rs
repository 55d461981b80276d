use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::costmodel::{OrderId, VehicleId};

/// Aggregate outcome of one simulation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetrics {
    pub injected: usize,
    pub delivered: usize,
    pub rejected: usize,
    pub in_flight: usize,
    /// Summed extra delivery time of delivered orders, seconds.
    pub total_xdt: f64,
    /// `total_xdt` plus omega per rejected order.
    pub objective: f64,
    pub orders_per_km: f64,
    /// Summed vehicle idle time waiting for food, seconds.
    pub total_wait: f64,
    pub distance_km: f64,
    pub windows: usize,
    /// Windows whose assignment step took longer than the window itself.
    /// This and the runtimes are wall-clock figures, so they are left out
    /// of the serialized record to keep it reproducible.
    #[serde(skip)]
    pub overflown_windows: usize,
    /// Wall-clock seconds spent in the assignment step of each window.
    #[serde(skip)]
    pub per_window_runtime: Vec<f64>,
}

impl SimulationMetrics {
    pub fn mean_xdt(&self) -> f64 {
        if self.delivered == 0 {
            0.0
        } else {
            self.total_xdt / self.delivered as f64
        }
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.injected == 0 {
            0.0
        } else {
            self.rejected as f64 / self.injected as f64
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metrics serialize")
    }

    /// One runtime per line, in window order.
    pub fn runtimes_text(&self) -> String {
        self.per_window_runtime.iter().fold(String::new(), |mut s, r| {
            let _ = writeln!(s, "{r:.6}");
            s
        })
    }
}

/// Running distance totals for the load-weighted orders-per-km figure.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoadDistance {
    pub weighted: f64,
    pub total: f64,
}

impl LoadDistance {
    pub fn add(&mut self, km: f64, load: usize) {
        self.weighted += km * load as f64;
        self.total += km;
    }

    /// `sum(k * D_k) / sum(D_k)`; 0 when nothing was driven.
    pub fn orders_per_km(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.weighted / self.total
        }
    }
}

/// Orders-per-km of a sequence of `(km, orders on board)` legs.
pub fn orders_per_km(legs: &[(f64, usize)]) -> f64 {
    let mut acc = LoadDistance::default();
    for &(km, load) in legs {
        acc.add(km, load);
    }
    acc.orders_per_km()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderStatus {
    Delivered,
    Rejected,
    InFlight,
}

impl OrderStatus {
    fn label(self) -> &'static str {
        match self {
            OrderStatus::Delivered => "delivered",
            OrderStatus::Rejected => "rejected",
            OrderStatus::InFlight => "in_flight",
        }
    }
}

/// Final state of one order. Delivery figures are durations from the
/// request time and are present only for delivered orders.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub order: OrderId,
    pub status: OrderStatus,
    pub vehicle: Option<VehicleId>,
    pub edt: Option<f64>,
    pub sdt: f64,
    pub xdt: Option<f64>,
}

/// `order_id status assigned_vehicle edt sdt xdt`, `-` for absent values.
pub fn ledger_text(rows: &[LedgerRow]) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{} {} {} {} {:.3} {}",
            r.order,
            r.status.label(),
            r.vehicle.map_or("-".to_string(), |v| v.to_string()),
            opt(r.edt),
            r.sdt,
            opt(r.xdt)
        );
    }
    s
}
